#include <doctest.h>

#include "gradcheck_common.hpp"

using namespace ssnn;
using namespace ssnn::test;

TEST_CASE("one-neuron T=2 threshold gradient matches finite differences to 1e-4") {
    NetworkSpec spec;
    spec.input = {1, 1, 1};
    spec.time_steps = 2;
    spec.classes = 1;
    spec.layers.push_back(LayerSpec::fully_connected(1, 1));
    spec.layers.push_back(LayerSpec::spiking({}));
    NetworkParams params = init_params(spec, 1);
    params.weight[0][0] = 0.8;
    params.v_threshold[1] = 0.9;
    Tensor img({1, 1, 1});
    img[0] = 1.0;

    // both step z values sit inside (-1, 0), away from every kink
    ForwardOptions o;
    o.mode = SpikeMode::Smooth;
    o.record_trace = true;
    const ForwardResult fr = forward_image(spec, params, img, o);
    REQUIRE(away_from_kinks(spec, fr.state, 1e-3));
    const GradientBundle g = backward_sample(spec, params, fr.state, 0);

    const double h = 1e-5;
    double* vth = &params.v_threshold[1];
    const double keep = *vth;
    *vth = keep + h;
    const double up = smooth_loss(spec, params, img, 0);
    *vth = keep - h;
    const double dn = smooth_loss(spec, params, img, 0);
    *vth = keep;
    const double fd = (up - dn) / (2 * h);
    REQUIRE(std::abs(fd) > 1e-8);
    CHECK(std::abs(g.v_threshold[1] - fd) <= 1e-4 * std::abs(fd));
}

TEST_CASE("every gradient component matches central differences on random tiny nets") {
    Rng rng(20250810);
    GradCheckStats stats;
    int done = 0;
    while (done < 12) {
        NetworkSpec spec;
        NetworkParams params;
        Tensor img;
        int label = 0;
        REQUIRE(sample_kink_free_case(rng, spec, params, img, label, /*allow_conv=*/done % 3 == 0));
        CHECK(gradcheck_net(spec, params, img, label, 1e-3, 1e-6, &stats));
        ++done;
    }
    CHECK(stats.checked > 200);
    INFO("worst rel err ", stats.worst_rel, " at ", stats.worst_where);
    CHECK(stats.worst_rel < 1e-3);
}

TEST_CASE("hard and smooth forwards agree when no z is inside the surrogate support") {
    // with every |z| > 1 the smooth spike equals the hard step exactly
    NetworkSpec spec;
    spec.input = {1, 1, 2};
    spec.time_steps = 3;
    spec.classes = 2;
    spec.layers.push_back(LayerSpec::fully_connected(2, 2));
    spec.layers.push_back(LayerSpec::spiking({}));
    NetworkParams params = init_params(spec, 1);
    params.weight[0].at2(0, 0) = 9.0;
    params.weight[0].at2(0, 1) = 9.0;
    params.weight[0].at2(1, 0) = -9.0;
    params.weight[0].at2(1, 1) = -9.0;
    Tensor img({1, 1, 2});
    img[0] = 1.0;
    img[1] = 1.0;
    ForwardOptions hard, smooth;
    smooth.mode = SpikeMode::Smooth;
    const ForwardResult a = forward_image(spec, params, img, hard);
    const ForwardResult b = forward_image(spec, params, img, smooth);
    CHECK(a.scores[0] == b.scores[0]);
    CHECK(a.scores[1] == b.scores[1]);
}
