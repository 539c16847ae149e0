#include <doctest.h>

#include <cstring>

#include "helpers.hpp"
#include "ssnn/train.hpp"

using namespace ssnn;
using namespace ssnn::test;

TEST_CASE("mse loss on one-hot targets") {
    SUBCASE("perfect prediction") {
        Tensor s({3});
        s[1] = 1.0;
        CHECK(compute_loss({s}, {1}) == 0.0);
    }
    SUBCASE("all-zero scores give 1/C") {
        Tensor s({4});
        CHECK(compute_loss({s}, {2}) == doctest::Approx(0.25));
        Tensor s10({10});
        CHECK(compute_loss({s10}, {0}) == doctest::Approx(0.1));
    }
    SUBCASE("batch mean semantics") {
        Tensor a({2});
        a[0] = 1.0; // loss 0 for label 0
        Tensor b({2});
        // b: scores 0 -> loss 1/2 for any label
        const double la = compute_loss({a}, {0});
        const double lb = compute_loss({b}, {1});
        CHECK(compute_loss({a, b}, {0, 1}) == doctest::Approx((la + lb) / 2.0));
    }
    SUBCASE("empty batch is a configuration error") {
        CHECK_THROWS_AS(compute_loss({}, {}), std::invalid_argument);
    }
    SUBCASE("label out of range") {
        Tensor s({2});
        CHECK_THROWS_AS(compute_loss({s}, {2}), std::invalid_argument);
    }
}

TEST_CASE("apply_updates arithmetic, clamp and rejection") {
    NetworkSpec spec = toy_fc_spec();
    NetworkParams params = init_params(spec, 1);
    GradientBundle g = GradientBundle::zeros_like(params);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;

    SUBCASE("zero gradient leaves parameters bit-identical") {
        const NetworkParams before = params;
        apply_updates(spec, params, g, cfg);
        for (std::size_t li = 0; li < params.weight.size(); ++li)
            CHECK(std::memcmp(params.weight[li].data(), before.weight[li].data(),
                              params.weight[li].size() * sizeof(double)) == 0);
    }
    SUBCASE("update locality: only coordinates with nonzero gradients move") {
        const NetworkParams before = params;
        g.weight[0][3] = 1.0;
        apply_updates(spec, params, g, cfg);
        for (std::size_t k = 0; k < params.weight[0].size(); ++k) {
            if (k == 3)
                CHECK(params.weight[0][k] == doctest::Approx(before.weight[0][k] - 0.1));
            else
                CHECK(params.weight[0][k] == before.weight[0][k]);
        }
        CHECK(std::memcmp(params.weight[2].data(), before.weight[2].data(),
                          params.weight[2].size() * sizeof(double)) == 0);
    }
    SUBCASE("threshold step follows the update rule") {
        g.v_threshold[1] = 0.5;
        cfg.optimize_threshold = true;
        params.v_threshold[1] = 1.0;
        apply_updates(spec, params, g, cfg);
        CHECK(params.v_threshold[1] == doctest::Approx(0.95));
    }
    SUBCASE("threshold clamps at v_rest + 1e-3") {
        g.v_threshold[1] = 100.0;
        cfg.optimize_threshold = true;
        params.v_threshold[1] = 0.001;
        apply_updates(spec, params, g, cfg);
        CHECK(params.v_threshold[1] == doctest::Approx(1e-3)); // v_rest = 0
    }
    SUBCASE("thresholds never move when optimization is off") {
        g.v_threshold[1] = 123.0;
        g.v_threshold[3] = -9.0;
        cfg.optimize_threshold = false;
        const double v1 = params.v_threshold[1];
        const double v3 = params.v_threshold[3];
        apply_updates(spec, params, g, cfg);
        CHECK(params.v_threshold[1] == v1);
        CHECK(params.v_threshold[3] == v3);
    }
    SUBCASE("non-finite gradient rejects the whole update") {
        const NetworkParams before = params;
        g.weight[0][0] = std::nan("");
        CHECK_THROWS_AS(apply_updates(spec, params, g, cfg), std::domain_error);
        CHECK(std::memcmp(params.weight[0].data(), before.weight[0].data(),
                          params.weight[0].size() * sizeof(double)) == 0);
    }
}

TEST_CASE("thresholds stay bit-identical over whole epochs when not optimized") {
    NetworkSpec spec = toy_fc_spec();
    NetworkParams params = init_params(spec, 3);
    const Dataset train = toy_two_class(8, 10);
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.optimize_threshold = false;
    std::vector<double> before = params.v_threshold;
    fit(spec, params, train, nullptr, cfg);
    for (std::size_t li = 0; li < before.size(); ++li)
        CHECK(std::memcmp(&params.v_threshold[li], &before[li], sizeof(double)) == 0);
}

TEST_CASE("training cuts the loss in half on a separable toy set (9 of 10 seeds)") {
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        NetworkSpec spec = toy_fc_spec();
        NetworkParams params = init_params(spec, seed);
        const Dataset train = toy_two_class(16, seed * 100);
        TrainConfig cfg;
        cfg.learning_rate = 1.0;
        cfg.epochs = 50;
        cfg.batch_size = 8;
        cfg.rng_seed = seed;
        const FitResult res = fit(spec, params, train, nullptr, cfg);
        const double first = res.history.front().loss;
        const double last = res.history.back().loss;
        if (last <= 0.5 * first) ++ok;
    }
    CHECK(ok >= 9);
}

TEST_CASE("backward validates trace/spec consistency") {
    NetworkSpec spec = toy_fc_spec();
    NetworkParams params = init_params(spec, 1);
    const Dataset train = toy_two_class(1, 4);
    const ForwardResult r = forward_image(spec, params, train.images[0]);
    NetworkSpec other = toy_fc_spec(/*hidden=*/8, /*time_steps=*/6);
    CHECK_THROWS_AS(backward_sample(other, init_params(other, 1), r.state, 0),
                    std::invalid_argument);
    CHECK_NOTHROW(backward_sample(spec, params, r.state, 0));
}

TEST_CASE("gamma of zero silences every gradient through spiking layers") {
    NetworkSpec spec = toy_fc_spec();
    for (std::size_t li : spec.spiking_layers()) spec.layers[li].plif.gamma = 0.0;
    NetworkParams params = init_params(spec, 2);
    Rng rng(6);
    randomize_weights(params, rng);
    const Dataset train = toy_two_class(1, 5);
    const ForwardResult r = forward_image(spec, params, train.images[0]);
    const GradientBundle g = backward_sample(spec, params, r.state, train.labels[0]);
    for (const Tensor& w : g.weight)
        for (std::size_t k = 0; k < w.size(); ++k) CHECK(w[k] == 0.0);
    for (double v : g.v_threshold) CHECK(v == 0.0);
    for (double v : g.tau_param) CHECK(v == 0.0);
}

TEST_CASE("saturated surrogate (all |z| >= 1) gives zero threshold gradients") {
    NetworkSpec spec;
    spec.input = {1, 1, 2};
    spec.time_steps = 3;
    spec.classes = 2;
    spec.layers.push_back(LayerSpec::fully_connected(2, 2));
    spec.layers.push_back(LayerSpec::spiking({}));
    NetworkParams params = init_params(spec, 1);
    params.weight[0].fill(-8.0); // strongly negative drive: z stays below -1
    Tensor img({1, 1, 2});
    img[0] = 1.0;
    img[1] = 1.0;
    const ForwardResult r = forward_image(spec, params, img);
    for (std::size_t t = 0; t < spec.time_steps; ++t)
        for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(r.state.layers[1].z[t][i]) >= 1.0);
    const GradientBundle g = backward_sample(spec, params, r.state, 0);
    for (double v : g.v_threshold) CHECK(v == 0.0);
    for (const Tensor& w : g.weight)
        for (std::size_t k = 0; k < w.size(); ++k) CHECK(w[k] == 0.0);
}
