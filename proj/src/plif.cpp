#include "ssnn/plif.hpp"

namespace ssnn {

void surrogate_derivative(const Tensor& z, double gamma, Tensor& out) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("surrogate_derivative: gamma must be >= 0");
    if (!out.same_shape(z)) out = Tensor(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = surrogate_derivative(z[i], gamma);
}

void plif_step(Tensor& state, const Tensor& input_current, const PlifParams& params,
               Tensor& v_pre, Tensor& spikes, Tensor& z, SpikeMode mode) {
    require_same_shape(state, input_current, "plif_step");
    params.validate();
    if (!v_pre.same_shape(state)) v_pre = Tensor(state.shape());
    if (!spikes.same_shape(state)) spikes = Tensor(state.shape());
    if (!z.same_shape(state)) z = Tensor(state.shape());

    const double lam = params.leak();
    const double vth = params.v_threshold;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double x = input_current[i];
        if (!std::isfinite(x)) throw std::domain_error("plif_step: non-finite input current");
        const double vp = state[i] + lam * (x - (state[i] - params.v_rest));
        const double zz = vp / vth - 1.0;
        const double o = spike_value(zz, params.gamma, mode);
        v_pre[i] = vp;
        z[i] = zz;
        spikes[i] = o;
        state[i] = vp - vth * o;
    }
}

} // namespace ssnn
