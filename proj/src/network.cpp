#include "ssnn/network.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssnn {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::Convolution: return "conv";
    case LayerKind::FullyConnected: return "fc";
    case LayerKind::Pooling: return "pool";
    case LayerKind::Spiking: return "plif";
    case LayerKind::Dropout: return "dropout";
    }
    return "?";
}

std::string Shape3::str() const {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

LayerSpec LayerSpec::convolution(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                                 std::size_t stride, std::size_t pad, bool affine) {
    LayerSpec l;
    l.kind = LayerKind::Convolution;
    l.in_channels = in_ch;
    l.out_channels = out_ch;
    l.kernel = kernel;
    l.stride = stride;
    l.pad = pad;
    l.affine = affine;
    return l;
}

LayerSpec LayerSpec::fully_connected(std::size_t in, std::size_t out, bool affine) {
    LayerSpec l;
    l.kind = LayerKind::FullyConnected;
    l.fc_in = in;
    l.fc_out = out;
    l.affine = affine;
    return l;
}

LayerSpec LayerSpec::pooling(std::size_t kernel) {
    LayerSpec l;
    l.kind = LayerKind::Pooling;
    l.pool_kernel = kernel;
    return l;
}

LayerSpec LayerSpec::spiking(PlifParams p) {
    LayerSpec l;
    l.kind = LayerKind::Spiking;
    l.plif = p;
    return l;
}

LayerSpec LayerSpec::dropout(double rate) {
    LayerSpec l;
    l.kind = LayerKind::Dropout;
    l.dropout_rate = rate;
    return l;
}

static Shape3 layer_output_shape(const LayerSpec& l, const Shape3& in, std::size_t index) {
    const std::string where = "layer " + std::to_string(index) + " (" +
                              layer_kind_name(l.kind) + ")";
    switch (l.kind) {
    case LayerKind::Convolution: {
        if (l.in_channels != in.c)
            throw std::invalid_argument(where + ": expects " + std::to_string(l.in_channels) +
                                        " input channels, got shape " + in.str());
        if (l.kernel == 0 || l.stride == 0)
            throw std::invalid_argument(where + ": kernel and stride must be positive");
        const std::size_t eh = in.h + 2 * l.pad;
        const std::size_t ew = in.w + 2 * l.pad;
        if (eh < l.kernel || ew < l.kernel)
            throw std::invalid_argument(where + ": kernel larger than padded input " + in.str());
        return {l.out_channels, (eh - l.kernel) / l.stride + 1, (ew - l.kernel) / l.stride + 1};
    }
    case LayerKind::FullyConnected:
        if (l.fc_in != in.count())
            throw std::invalid_argument(where + ": expects " + std::to_string(l.fc_in) +
                                        " inputs, got shape " + in.str() + " (" +
                                        std::to_string(in.count()) + ")");
        return {l.fc_out, 1, 1};
    case LayerKind::Pooling:
        if (l.pool_kernel == 0 || in.h % l.pool_kernel || in.w % l.pool_kernel)
            throw std::invalid_argument(where + ": kernel must divide input " + in.str());
        return {in.c, in.h / l.pool_kernel, in.w / l.pool_kernel};
    case LayerKind::Spiking:
        l.plif.validate();
        return in;
    case LayerKind::Dropout:
        if (!(l.dropout_rate >= 0.0 && l.dropout_rate < 1.0))
            throw std::invalid_argument(where + ": rate must lie in [0, 1)");
        return in;
    }
    throw std::logic_error("unreachable");
}

std::vector<Shape3> NetworkSpec::shape_chain() const {
    std::vector<Shape3> chain;
    chain.reserve(layers.size() + 1);
    chain.push_back(input);
    Shape3 cur = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        cur = layer_output_shape(layers[i], cur, i);
        chain.push_back(cur);
    }
    return chain;
}

Shape3 NetworkSpec::output_shape() const { return shape_chain().back(); }

void NetworkSpec::validate() const {
    if (time_steps == 0) throw std::invalid_argument("network: time_steps must be positive");
    if (input.count() == 0) throw std::invalid_argument("network: empty input shape");
    if (layers.empty()) throw std::invalid_argument("network: no layers");
    const auto chain = shape_chain(); // throws on any composition mismatch
    (void)chain;
    const std::size_t fin = final_spiking_layer();
    const std::size_t width = shape_chain()[fin + 1].count();
    if (classes == 0) throw std::invalid_argument("network: classes must be positive");
    if (width % classes != 0)
        throw std::invalid_argument("network: final spiking width " + std::to_string(width) +
                                    " not divisible by " + std::to_string(classes) + " classes");
}

std::size_t NetworkSpec::final_spiking_layer() const {
    for (std::size_t i = layers.size(); i-- > 0;)
        if (layers[i].kind == LayerKind::Spiking) return i;
    throw std::invalid_argument("network: readout requires at least one spiking layer");
}

std::size_t NetworkSpec::vote_group() const {
    return shape_chain()[final_spiking_layer() + 1].count() / classes;
}

std::vector<std::size_t> NetworkSpec::spiking_layers() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].kind == LayerKind::Spiking) out.push_back(i);
    return out;
}

std::vector<std::size_t> NetworkSpec::weight_layers() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].has_weights()) out.push_back(i);
    return out;
}

void NetworkSpec::weight_matrix_dims(std::size_t layer, std::size_t& rows,
                                     std::size_t& cols) const {
    const LayerSpec& l = layers.at(layer);
    if (l.kind == LayerKind::Convolution) {
        rows = l.out_channels;
        cols = l.in_channels * l.kernel * l.kernel;
    } else if (l.kind == LayerKind::FullyConnected) {
        rows = l.fc_out;
        cols = l.fc_in;
    } else {
        throw std::invalid_argument("weight_matrix_dims: layer has no weights");
    }
}

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    NetworkParams p;
    const std::size_t L = spec.layers.size();
    p.weight.resize(L);
    p.scale.resize(L);
    p.shift.resize(L);
    p.tau_param.assign(L, 0.0);
    p.v_threshold.assign(L, 1.0);
    for (std::size_t i = 0; i < L; ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.has_weights()) {
            std::size_t rows = 0, cols = 0;
            spec.weight_matrix_dims(i, rows, cols);
            p.weight[i] = Tensor({rows, cols});
            const double bound = std::sqrt(6.0 / static_cast<double>(cols));
            for (std::size_t k = 0; k < p.weight[i].size(); ++k)
                p.weight[i][k] = rng.uniform(-bound, bound);
            if (l.affine) {
                p.scale[i] = Tensor({rows});
                p.shift[i] = Tensor({rows});
                p.scale[i].fill(1.0);
            }
        } else if (l.kind == LayerKind::Spiking) {
            p.tau_param[i] = l.plif.tau_param;
            p.v_threshold[i] = l.plif.v_threshold;
        }
    }
    return p;
}

Tensor im2col(const Tensor& input, const Shape3& in_shape, std::size_t kernel, std::size_t stride,
              std::size_t pad, std::size_t& out_h, std::size_t& out_w) {
    const std::size_t eh = in_shape.h + 2 * pad;
    const std::size_t ew = in_shape.w + 2 * pad;
    out_h = (eh - kernel) / stride + 1;
    out_w = (ew - kernel) / stride + 1;
    const std::size_t patch = in_shape.c * kernel * kernel;
    Tensor cols({out_h * out_w, patch});
    std::size_t pos = 0;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox, ++pos) {
            double* dst = cols.data() + pos * patch;
            std::size_t j = 0;
            for (std::size_t c = 0; c < in_shape.c; ++c) {
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    const std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
                    for (std::size_t kx = 0; kx < kernel; ++kx, ++j) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                  static_cast<std::ptrdiff_t>(pad);
                        if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(in_shape.h) ||
                            ix >= static_cast<std::ptrdiff_t>(in_shape.w)) {
                            dst[j] = 0.0;
                        } else {
                            dst[j] = input[(c * in_shape.h + static_cast<std::size_t>(iy)) *
                                               in_shape.w +
                                           static_cast<std::size_t>(ix)];
                        }
                    }
                }
            }
        }
    }
    return cols;
}

namespace {

void dense_contract(const Tensor& weight, const double* x, std::size_t cols, double* out,
                    std::size_t rows) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = weight.data() + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        out[r] = acc;
    }
}

struct RunContext {
    const NetworkSpec& spec;
    const NetworkParams& params;
    const ForwardOptions& opts;
    const std::vector<Shape3>& shapes;
    NetworkState* state; // null when trace not recorded
    std::vector<Tensor> membrane; // per spiking layer, carried across steps
};

// One layer at one time step: act is consumed and replaced by the output.
void apply_layer(RunContext& ctx, std::size_t li, std::size_t t, Tensor& act) {
    const LayerSpec& l = ctx.spec.layers[li];
    const Shape3& in_shape = ctx.shapes[li];
    const Shape3& out_shape = ctx.shapes[li + 1];
    LayerTrace* tr = ctx.state ? &ctx.state->layers[li] : nullptr;

    switch (l.kind) {
    case LayerKind::Convolution: {
        std::size_t oh = 0, ow = 0;
        Tensor cols = im2col(act, in_shape, l.kernel, l.stride, l.pad, oh, ow);
        const std::size_t positions = oh * ow;
        const std::size_t patch = l.in_channels * l.kernel * l.kernel;
        Tensor out({l.out_channels, oh, ow});
        const Tensor& W = ctx.params.weight[li];
        const bool hooked = ctx.opts.hook && ctx.opts.hook->wants(li);
        std::vector<double> col_out(l.out_channels);
        for (std::size_t pos = 0; pos < positions; ++pos) {
            const double* x = cols.data() + pos * patch;
            if (hooked)
                ctx.opts.hook->contract(li, W, x, patch, col_out.data(), l.out_channels);
            else
                dense_contract(W, x, patch, col_out.data(), l.out_channels);
            for (std::size_t oc = 0; oc < l.out_channels; ++oc)
                out[oc * positions + pos] = col_out[oc];
        }
        if (tr) tr->input[t] = std::move(cols);
        if (l.affine) {
            if (tr) tr->pre_act[t] = out;
            for (std::size_t oc = 0; oc < l.out_channels; ++oc) {
                const double s = ctx.params.scale[li][oc];
                const double b = ctx.params.shift[li][oc];
                double* row = out.data() + oc * positions;
                for (std::size_t pos = 0; pos < positions; ++pos) row[pos] = s * row[pos] + b;
            }
        }
        act = std::move(out);
        break;
    }
    case LayerKind::FullyConnected: {
        if (act.size() != l.fc_in)
            throw std::invalid_argument("fc: input size " + std::to_string(act.size()) +
                                        " != " + std::to_string(l.fc_in));
        Tensor out({l.fc_out});
        const Tensor& W = ctx.params.weight[li];
        if (ctx.opts.hook && ctx.opts.hook->wants(li))
            ctx.opts.hook->contract(li, W, act.data(), l.fc_in, out.data(), l.fc_out);
        else
            dense_contract(W, act.data(), l.fc_in, out.data(), l.fc_out);
        if (tr) tr->input[t] = std::move(act);
        if (l.affine) {
            if (tr) tr->pre_act[t] = out;
            for (std::size_t r = 0; r < l.fc_out; ++r)
                out[r] = ctx.params.scale[li][r] * out[r] + ctx.params.shift[li][r];
        }
        act = std::move(out);
        break;
    }
    case LayerKind::Pooling: {
        const std::size_t k = l.pool_kernel;
        Tensor out({out_shape.c, out_shape.h, out_shape.w});
        std::vector<std::uint32_t>* arg = nullptr;
        if (tr) {
            tr->pool_argmax[t].assign(out.size(), 0);
            arg = &tr->pool_argmax[t];
        }
        std::size_t oi = 0;
        for (std::size_t c = 0; c < out_shape.c; ++c) {
            for (std::size_t oy = 0; oy < out_shape.h; ++oy) {
                for (std::size_t ox = 0; ox < out_shape.w; ++ox, ++oi) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_i = 0;
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const std::size_t ii =
                                (c * in_shape.h + oy * k + ky) * in_shape.w + ox * k + kx;
                            if (act[ii] > best) {
                                best = act[ii];
                                best_i = ii;
                            }
                        }
                    }
                    out[oi] = best;
                    if (arg) (*arg)[oi] = static_cast<std::uint32_t>(best_i);
                }
            }
        }
        act = std::move(out);
        break;
    }
    case LayerKind::Spiking: {
        std::size_t si = 0;
        for (std::size_t j = 0; j < li; ++j)
            if (ctx.spec.layers[j].kind == LayerKind::Spiking) ++si;
        Tensor& v = ctx.membrane[si];
        PlifParams p = ctx.params.plif_at(ctx.spec, li);
        Tensor v_pre, spikes, z;
        plif_step(v, act, p, v_pre, spikes, z, ctx.opts.mode);
        if (tr) {
            tr->v_pre[t] = std::move(v_pre);
            tr->z[t] = std::move(z);
            tr->spikes[t] = spikes;
        }
        act = std::move(spikes);
        break;
    }
    case LayerKind::Dropout: {
        const Tensor* mask = nullptr;
        if (ctx.opts.dropout_masks && li < ctx.opts.dropout_masks->size() &&
            !(*ctx.opts.dropout_masks)[li].empty())
            mask = &(*ctx.opts.dropout_masks)[li];
        if (mask) {
            require_same_shape(act, *mask, "dropout");
            for (std::size_t i = 0; i < act.size(); ++i) act[i] *= (*mask)[i];
            if (tr && t == 0) tr->dropout_mask = *mask;
        }
        break;
    }
    }
}

ForwardResult run_forward(const NetworkSpec& spec, const NetworkParams& params,
                          const Tensor* image, const std::vector<Tensor>* spike_train,
                          const ForwardOptions& opts) {
    spec.validate();
    if (params.weight.size() != spec.layers.size())
        throw std::invalid_argument("forward: params do not match spec layer count");
    const auto shapes = spec.shape_chain();

    ForwardResult res;
    NetworkState* st = nullptr;
    if (opts.record_trace) {
        res.state.mode = opts.mode;
        res.state.layers.resize(spec.layers.size());
        for (std::size_t i = 0; i < spec.layers.size(); ++i) {
            LayerTrace& tr = res.state.layers[i];
            const LayerKind k = spec.layers[i].kind;
            if (spec.layers[i].has_weights()) {
                tr.input.resize(spec.time_steps);
                if (spec.layers[i].affine) tr.pre_act.resize(spec.time_steps);
            } else if (k == LayerKind::Spiking) {
                tr.v_pre.resize(spec.time_steps);
                tr.z.resize(spec.time_steps);
                tr.spikes.resize(spec.time_steps);
            } else if (k == LayerKind::Pooling) {
                tr.pool_argmax.resize(spec.time_steps);
            }
        }
        st = &res.state;
    }

    RunContext ctx{spec, params, opts, shapes, st, {}};
    // membranes start at the resting potential
    for (std::size_t li : spec.spiking_layers()) {
        Tensor v(std::vector<std::size_t>{shapes[li].count()});
        v.fill(spec.layers[li].plif.v_rest);
        ctx.membrane.push_back(std::move(v));
    }

    const std::size_t fin = spec.final_spiking_layer();
    const std::size_t out_width = shapes[fin + 1].count();
    const std::size_t group = out_width / spec.classes;
    Tensor scores({spec.classes});

    for (std::size_t t = 0; t < spec.time_steps; ++t) {
        Tensor act;
        if (image) {
            act = *image;
        } else {
            act = (*spike_train)[t];
        }
        Tensor after_final;
        for (std::size_t li = 0; li < spec.layers.size(); ++li) {
            apply_layer(ctx, li, t, act);
            if (li == fin) after_final = act;
        }
        for (std::size_t c = 0; c < spec.classes; ++c) {
            double s = 0.0;
            for (std::size_t g = 0; g < group; ++g) s += after_final[c * group + g];
            scores[c] += s;
        }
    }
    const double norm = 1.0 / (static_cast<double>(spec.time_steps) * static_cast<double>(group));
    for (std::size_t c = 0; c < spec.classes; ++c) scores[c] *= norm;

    res.scores = scores;
    if (st) st->scores = scores;
    return res;
}

} // namespace

ForwardResult forward_image(const NetworkSpec& spec, const NetworkParams& params,
                            const Tensor& image, const ForwardOptions& opts) {
    if (image.size() != spec.input.count())
        throw std::invalid_argument("forward: image size " + std::to_string(image.size()) +
                                    " != input " + spec.input.str());
    for (std::size_t i = 0; i < image.size(); ++i)
        if (!std::isfinite(image[i])) throw std::domain_error("forward: non-finite input");
    return run_forward(spec, params, &image, nullptr, opts);
}

ForwardResult forward_spikes(const NetworkSpec& spec, const NetworkParams& params,
                             const std::vector<Tensor>& spike_train, const ForwardOptions& opts) {
    if (spike_train.size() != spec.time_steps)
        throw std::invalid_argument("forward: spike train has " +
                                    std::to_string(spike_train.size()) + " steps, spec wants " +
                                    std::to_string(spec.time_steps));
    for (const Tensor& frame : spike_train) {
        if (frame.size() != spec.input.count())
            throw std::invalid_argument("forward: spike frame size mismatch");
        for (std::size_t i = 0; i < frame.size(); ++i)
            if (frame[i] != 0.0 && frame[i] != 1.0)
                throw std::invalid_argument("forward: input spikes must be 0 or 1");
    }
    return run_forward(spec, params, nullptr, &spike_train, opts);
}

std::size_t argmax_class(const Tensor& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

} // namespace ssnn
