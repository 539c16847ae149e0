#include <doctest.h>

#include <cmath>

#include "ssnn/plif.hpp"
#include "ssnn/rng.hpp"

using namespace ssnn;

namespace {
PlifParams tau2() {
    PlifParams p;
    p.tau_param = 0.0; // logistic(0) = 0.5 -> tau = 2
    p.v_rest = 0.0;
    p.v_threshold = 1.0;
    p.gamma = 1.0;
    return p;
}
} // namespace

TEST_CASE("plif_step hand-evaluated examples") {
    const PlifParams p = tau2();
    CHECK(p.tau() == doctest::Approx(2.0));

    SUBCASE("zero dynamics") {
        const auto r = plif_step_value(0.0, 0.0, p);
        CHECK(r.v_pre == 0.0);
        CHECK(r.spike == 0.0);
        CHECK(r.z == -1.0);
    }
    SUBCASE("subthreshold charge") {
        const auto r = plif_step_value(0.0, 1.0, p);
        CHECK(r.v_pre == doctest::Approx(0.5));
        CHECK(r.z == doctest::Approx(-0.5));
        CHECK(r.spike == 0.0);
        CHECK(r.v_post == doctest::Approx(0.5)); // no reset without a spike
    }
    SUBCASE("firing and soft reset") {
        const auto r = plif_step_value(0.0, 4.0, p);
        CHECK(r.v_pre == doctest::Approx(2.0));
        CHECK(r.z == doctest::Approx(1.0));
        CHECK(r.spike == 1.0);
        CHECK(r.v_post == doctest::Approx(1.0)); // 2 - threshold
    }
}

TEST_CASE("threshold compare is strict: o=1 iff v_pre > V") {
    const PlifParams p = tau2();
    // v_pre exactly at threshold: z == 0, no spike
    const auto at = plif_step_value(0.0, 2.0, p); // v_pre = 1.0 = V
    CHECK(at.z == doctest::Approx(0.0));
    CHECK(at.spike == 0.0);
    const auto above = plif_step_value(0.0, 2.0 + 1e-9, p);
    CHECK(above.spike == 1.0);
}

TEST_CASE("binary-spike property over 10^4 random elements") {
    Rng rng(31);
    Tensor state({10000});
    Tensor input({10000});
    for (std::size_t i = 0; i < input.size(); ++i) {
        state[i] = rng.uniform(-2.0, 2.0);
        input[i] = rng.uniform(-5.0, 5.0);
    }
    PlifParams p = tau2();
    p.v_threshold = 0.7;
    Tensor v_pre, spikes, z;
    plif_step(state, input, p, v_pre, spikes, z);
    for (std::size_t i = 0; i < spikes.size(); ++i) {
        CHECK((spikes[i] == 0.0 || spikes[i] == 1.0));
        // soft-reset consistency
        if (spikes[i] == 1.0)
            CHECK(state[i] == doctest::Approx(v_pre[i] - p.v_threshold));
        else
            CHECK(state[i] == v_pre[i]);
        // strict threshold semantics
        CHECK((spikes[i] == 1.0) == (v_pre[i] > p.v_threshold));
    }
}

TEST_CASE("leak contracts the membrane toward rest with zero input") {
    Rng rng(17);
    for (int i = 0; i < 100; ++i) {
        PlifParams p = tau2();
        p.tau_param = rng.uniform(-3.0, 3.0);
        p.v_threshold = 100.0; // keep it silent
        double v = rng.uniform(-0.9, 0.9);
        if (v == 0.0) continue;
        for (int t = 0; t < 5; ++t) {
            const auto r = plif_step_value(v, 0.0, p);
            CHECK(std::abs(r.v_post) < std::abs(v));
            v = r.v_post;
        }
    }
}

TEST_CASE("effective tau is always greater than 1") {
    for (double a : {-50.0, -3.0, 0.0, 3.0, 50.0}) {
        PlifParams p = tau2();
        p.tau_param = a;
        CHECK(p.tau() > 1.0);
        CHECK(p.leak() > 0.0);
        CHECK(p.leak() < 1.0);
    }
}

TEST_CASE("surrogate derivative (triangular)") {
    CHECK(surrogate_derivative(0.0, 1.0) == 1.0);
    CHECK(surrogate_derivative(1.0, 2.0) == 0.0);
    CHECK(surrogate_derivative(-1.0, 2.0) == 0.0);
    CHECK(surrogate_derivative(0.5, 2.0) == doctest::Approx(1.0));
    CHECK(surrogate_derivative(-0.25, 4.0) == doctest::Approx(3.0));
    CHECK(surrogate_derivative(7.0, 1.0) == 0.0);
    CHECK(surrogate_derivative(0.3, 0.0) == 0.0); // gamma = 0 kills the gradient
}

TEST_CASE("smooth spike mode integrates the surrogate") {
    // S' == surrogate by central differences
    for (double z : {-0.9, -0.4, 0.2, 0.7}) {
        const double h = 1e-6;
        const double fd =
            (spike_value(z + h, 1.5, SpikeMode::Smooth) - spike_value(z - h, 1.5, SpikeMode::Smooth)) /
            (2 * h);
        CHECK(fd == doctest::Approx(surrogate_derivative(z, 1.5)).epsilon(1e-5));
    }
    CHECK(spike_value(-1.0, 1.0, SpikeMode::Smooth) == 0.0);
    CHECK(spike_value(1.0, 1.0, SpikeMode::Smooth) == 1.0);
    CHECK(spike_value(5.0, 1.0, SpikeMode::Smooth) == 1.0);
}

TEST_CASE("plif_step validates its contract") {
    PlifParams p = tau2();
    Tensor state({3}), input({2}), a, b, c;
    CHECK_THROWS_AS(plif_step(state, input, p, a, b, c), std::invalid_argument);
    Tensor input3({3});
    input3[0] = std::nan("");
    CHECK_THROWS_AS(plif_step(state, input3, p, a, b, c), std::domain_error);
    PlifParams bad = p;
    bad.v_threshold = bad.v_rest; // threshold must exceed rest
    Tensor ok({3});
    CHECK_THROWS_AS(plif_step(state, ok, bad, a, b, c), std::invalid_argument);
}
