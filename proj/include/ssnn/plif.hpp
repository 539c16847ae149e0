#ifndef SSNN_PLIF_HPP
#define SSNN_PLIF_HPP

#include <cmath>
#include <stdexcept>

#include "ssnn/tensor.hpp"

namespace ssnn {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Parametric LIF neuron parameters. The time constant is learned through
// tau_param: tau = 1 / logistic(tau_param), so the leak 1/tau always stays in
// (0, 1) regardless of where the optimizer drives the raw parameter.
struct PlifParams {
    double tau_param = 0.0; // logistic(0) = 0.5  ->  tau = 2
    double v_rest = 0.0;
    double v_threshold = 1.0;
    double gamma = 1.0; // peak of the triangular surrogate

    double leak() const { return logistic(tau_param); } // 1/tau
    double tau() const { return 1.0 / leak(); }

    void validate() const {
        if (!(gamma >= 0.0)) throw std::invalid_argument("PlifParams: gamma must be >= 0");
        if (!(v_threshold > v_rest))
            throw std::invalid_argument("PlifParams: v_threshold must exceed v_rest");
        if (!std::isfinite(tau_param) || !std::isfinite(v_rest) || !std::isfinite(v_threshold))
            throw std::invalid_argument("PlifParams: non-finite parameter");
    }
};

// Triangular surrogate for the spike derivative: gamma * max(0, 1 - |z|).
inline double surrogate_derivative(double z, double gamma) {
    const double t = 1.0 - std::abs(z);
    return t > 0.0 ? gamma * t : 0.0;
}

void surrogate_derivative(const Tensor& z, double gamma, Tensor& out);

// How spikes are produced from z = v/V - 1.
//  Hard:   the step function, o in {0, 1}; this is the simulator.
//  Smooth: the integral of the triangular surrogate, used only by gradient
//          tests so that finite differences of the loss are well defined.
enum class SpikeMode { Hard, Smooth };

inline double spike_value(double z, double gamma, SpikeMode mode) {
    if (mode == SpikeMode::Hard) return z > 0.0 ? 1.0 : 0.0;
    if (z <= -1.0) return 0.0;
    if (z <= 0.0) {
        const double t = z + 1.0;
        return gamma * 0.5 * t * t;
    }
    if (z <= 1.0) {
        const double t = 1.0 - z;
        return gamma * (1.0 - 0.5 * t * t);
    }
    return gamma;
}

struct PlifStepResult {
    // v_pre is the charged membrane used for the threshold compare; v_post is
    // what carries to the next step (soft reset already applied).
    double v_pre = 0.0;
    double z = 0.0;
    double spike = 0.0;
    double v_post = 0.0;
};

// One membrane update:
//   v_pre = v + (1/tau) * (x - (v - v_rest))
//   z     = v_pre / V - 1,  o = [z > 0]
//   v_post = v_pre - V * o
inline PlifStepResult plif_step_value(double v, double x, const PlifParams& p,
                                      SpikeMode mode = SpikeMode::Hard) {
    PlifStepResult r;
    const double lam = p.leak();
    r.v_pre = v + lam * (x - (v - p.v_rest));
    r.z = r.v_pre / p.v_threshold - 1.0;
    r.spike = spike_value(r.z, p.gamma, mode);
    r.v_post = r.v_pre - p.v_threshold * r.spike;
    return r;
}

// Tensor form. state is the carried membrane (updated in place to v_post);
// v_pre, spikes and z are written for the backward pass.
void plif_step(Tensor& state, const Tensor& input_current, const PlifParams& params,
               Tensor& v_pre, Tensor& spikes, Tensor& z, SpikeMode mode = SpikeMode::Hard);

} // namespace ssnn

#endif
