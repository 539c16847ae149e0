#ifndef SSNN_TEST_GRADCHECK_COMMON_HPP
#define SSNN_TEST_GRADCHECK_COMMON_HPP

#include <cmath>
#include <string>

#include "helpers.hpp"
#include "ssnn/train.hpp"

namespace ssnn::test {

// Loss of the smooth-spike forward as a plain function of the parameters.
// Central differences of this function are the gradient oracle.
inline double smooth_loss(const NetworkSpec& spec, const NetworkParams& params, const Tensor& img,
                          int label) {
    ForwardOptions o;
    o.mode = SpikeMode::Smooth;
    o.record_trace = false;
    return sample_loss(forward_image(spec, params, img, o).scores, label);
}

// The surrogate integral has corners at z in {-1, 0, 1}; finite differences
// are only trustworthy away from them (and away from pooling ties).
inline bool away_from_kinks(const NetworkSpec& spec, const NetworkState& state, double margin) {
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        if (spec.layers[li].kind == LayerKind::Spiking) {
            for (const Tensor& zt : state.layers[li].z)
                for (std::size_t i = 0; i < zt.size(); ++i) {
                    const double z = zt[i];
                    if (std::abs(z) < margin || std::abs(z - 1.0) < margin ||
                        std::abs(z + 1.0) < margin)
                        return false;
                }
        }
    }
    return true;
}

struct GradCheckStats {
    double worst_rel = 0.0;
    std::string worst_where;
    std::size_t checked = 0;
};

// Central-difference comparison of every GradientBundle component.
// rel_tol with an absolute floor; returns false on the first real miss.
inline bool gradcheck_net(const NetworkSpec& spec, NetworkParams& params, const Tensor& img,
                          int label, double rel_tol, double abs_floor, GradCheckStats* stats,
                          double step = 1e-5) {
    ForwardOptions o;
    o.mode = SpikeMode::Smooth;
    o.record_trace = true;
    const ForwardResult fr = forward_image(spec, params, img, o);
    const GradientBundle g = backward_sample(spec, params, fr.state, label);

    auto check_one = [&](double* p, double got, const std::string& where) {
        const double keep = *p;
        const double h = step * std::max(1.0, std::abs(keep));
        *p = keep + h;
        const double up = smooth_loss(spec, params, img, label);
        *p = keep - h;
        const double dn = smooth_loss(spec, params, img, label);
        *p = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double err = std::abs(got - fd);
        const double rel = err / std::max({std::abs(got), std::abs(fd), abs_floor});
        if (stats) {
            ++stats->checked;
            if (rel > stats->worst_rel) {
                stats->worst_rel = rel;
                stats->worst_where = where;
            }
        }
        return err <= std::max(abs_floor, rel_tol * std::max(std::abs(got), std::abs(fd)));
    };

    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        for (std::size_t k = 0; k < params.weight[li].size(); ++k)
            if (!check_one(&params.weight[li][k], g.weight[li][k],
                           "w" + std::to_string(li) + "[" + std::to_string(k) + "]"))
                return false;
        for (std::size_t k = 0; k < params.scale[li].size(); ++k)
            if (!check_one(&params.scale[li][k], g.scale[li][k], "scale" + std::to_string(li)))
                return false;
        for (std::size_t k = 0; k < params.shift[li].size(); ++k)
            if (!check_one(&params.shift[li][k], g.shift[li][k], "shift" + std::to_string(li)))
                return false;
        if (spec.layers[li].kind == LayerKind::Spiking) {
            if (!check_one(&params.tau_param[li], g.tau_param[li], "tau" + std::to_string(li)))
                return false;
            if (!check_one(&params.v_threshold[li], g.v_threshold[li], "vth" + std::to_string(li)))
                return false;
        }
    }
    return true;
}

// Random tiny net + input whose smooth trace stays away from kinks.
inline bool sample_kink_free_case(Rng& rng, NetworkSpec& spec, NetworkParams& params, Tensor& img,
                                  int& label, bool allow_conv, double margin = 1e-3) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        spec = random_small_spec(rng, allow_conv, /*allow_affine=*/true);
        params = init_params(spec, rng.next_u64());
        randomize_weights(params, rng, 1.2);
        for (std::size_t li : spec.spiking_layers()) {
            params.v_threshold[li] = rng.uniform(0.6, 1.4);
            params.tau_param[li] = rng.uniform(-1.0, 1.0);
        }
        img = random_image(spec, rng);
        label = static_cast<int>(rng.below(spec.classes));
        ForwardOptions o;
        o.mode = SpikeMode::Smooth;
        const ForwardResult fr = forward_image(spec, params, img, o);
        if (away_from_kinks(spec, fr.state, margin)) return true;
    }
    return false;
}

} // namespace ssnn::test

#endif
