#include "ssnn/train.hpp"

#include <cmath>
#include <stdexcept>

#include "ssnn/parallel.hpp"
#include "ssnn/rng.hpp"

namespace ssnn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("train config: gamma must be > 0");
    if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be positive");
}

GradientBundle GradientBundle::zeros_like(const NetworkParams& params) {
    GradientBundle g;
    const std::size_t L = params.weight.size();
    g.weight.resize(L);
    g.scale.resize(L);
    g.shift.resize(L);
    for (std::size_t i = 0; i < L; ++i) {
        if (!params.weight[i].empty()) g.weight[i] = Tensor(params.weight[i].shape());
        if (!params.scale[i].empty()) g.scale[i] = Tensor(params.scale[i].shape());
        if (!params.shift[i].empty()) g.shift[i] = Tensor(params.shift[i].shape());
    }
    g.tau_param.assign(L, 0.0);
    g.v_threshold.assign(L, 0.0);
    return g;
}

void GradientBundle::accumulate(const GradientBundle& other) {
    for (std::size_t i = 0; i < weight.size(); ++i) {
        for (std::size_t k = 0; k < weight[i].size(); ++k) weight[i][k] += other.weight[i][k];
        for (std::size_t k = 0; k < scale[i].size(); ++k) scale[i][k] += other.scale[i][k];
        for (std::size_t k = 0; k < shift[i].size(); ++k) shift[i][k] += other.shift[i][k];
        tau_param[i] += other.tau_param[i];
        v_threshold[i] += other.v_threshold[i];
    }
    loss += other.loss;
}

void GradientBundle::scale_by(double factor) {
    for (std::size_t i = 0; i < weight.size(); ++i) {
        for (std::size_t k = 0; k < weight[i].size(); ++k) weight[i][k] *= factor;
        for (std::size_t k = 0; k < scale[i].size(); ++k) scale[i][k] *= factor;
        for (std::size_t k = 0; k < shift[i].size(); ++k) shift[i][k] *= factor;
        tau_param[i] *= factor;
        v_threshold[i] *= factor;
    }
    loss *= factor;
}

bool GradientBundle::all_finite() const {
    auto ok = [](const Tensor& t) {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (!std::isfinite(t[i])) return false;
        return true;
    };
    for (std::size_t i = 0; i < weight.size(); ++i)
        if (!ok(weight[i]) || !ok(scale[i]) || !ok(shift[i]) || !std::isfinite(tau_param[i]) ||
            !std::isfinite(v_threshold[i]))
            return false;
    return std::isfinite(loss);
}

double sample_loss(const Tensor& scores, int label) {
    const std::size_t C = scores.size();
    if (label < 0 || static_cast<std::size_t>(label) >= C)
        throw std::invalid_argument("loss: label out of range");
    double acc = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        const double target = (static_cast<std::size_t>(label) == c) ? 1.0 : 0.0;
        const double d = scores[c] - target;
        acc += d * d;
    }
    return acc / static_cast<double>(C);
}

double compute_loss(const std::vector<Tensor>& scores, const std::vector<int>& labels) {
    if (scores.empty()) throw std::invalid_argument("loss: empty batch");
    if (scores.size() != labels.size())
        throw std::invalid_argument("loss: scores/labels count mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!scores[i].empty())
            for (std::size_t c = 0; c < scores[i].size(); ++c)
                if (!std::isfinite(scores[i][c]))
                    throw std::domain_error("loss: non-finite score");
        acc += sample_loss(scores[i], labels[i]);
    }
    return acc / static_cast<double>(scores.size());
}

namespace {

// scatter-add counterpart of im2col
void col2im_add(const Tensor& g_cols, const Shape3& in_shape, std::size_t kernel,
                std::size_t stride, std::size_t pad, std::size_t out_h, std::size_t out_w,
                Tensor& g_in) {
    const std::size_t patch = in_shape.c * kernel * kernel;
    std::size_t pos = 0;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox, ++pos) {
            const double* src = g_cols.data() + pos * patch;
            std::size_t j = 0;
            for (std::size_t c = 0; c < in_shape.c; ++c) {
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    const std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
                    for (std::size_t kx = 0; kx < kernel; ++kx, ++j) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                  static_cast<std::ptrdiff_t>(pad);
                        if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(in_shape.h) ||
                            ix >= static_cast<std::ptrdiff_t>(in_shape.w))
                            continue;
                        g_in[(c * in_shape.h + static_cast<std::size_t>(iy)) * in_shape.w +
                             static_cast<std::size_t>(ix)] += src[j];
                    }
                }
            }
        }
    }
}

void check_trace(const NetworkSpec& spec, const NetworkState& trace) {
    if (trace.layers.size() != spec.layers.size())
        throw std::invalid_argument("backward: trace/spec mismatch (layer count)");
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const LayerTrace& tr = trace.layers[i];
        if (l.has_weights() && tr.input.size() != spec.time_steps)
            throw std::invalid_argument("backward: trace/spec mismatch (weight layer inputs)");
        if (l.kind == LayerKind::Spiking &&
            (tr.v_pre.size() != spec.time_steps || tr.z.size() != spec.time_steps ||
             tr.spikes.size() != spec.time_steps))
            throw std::invalid_argument("backward: trace/spec mismatch (spiking records)");
        if (l.kind == LayerKind::Pooling && tr.pool_argmax.size() != spec.time_steps)
            throw std::invalid_argument("backward: trace/spec mismatch (pooling records)");
    }
}

} // namespace

GradientBundle backward_sample(const NetworkSpec& spec, const NetworkParams& params,
                               const NetworkState& trace, int label) {
    spec.validate();
    check_trace(spec, trace);
    const auto shapes = spec.shape_chain();
    const std::size_t L = spec.layers.size();
    const std::size_t T = spec.time_steps;
    const std::size_t fin = spec.final_spiking_layer();
    const std::size_t C = spec.classes;
    const std::size_t K = spec.vote_group();

    GradientBundle g = GradientBundle::zeros_like(params);
    g.loss = sample_loss(trace.scores, label);

    // dL/do at the readout layer, identical for every time step
    const std::size_t out_width = shapes[fin + 1].count();
    Tensor seed({out_width});
    const double norm = 2.0 / (static_cast<double>(C) * static_cast<double>(T) *
                               static_cast<double>(K));
    for (std::size_t u = 0; u < out_width; ++u) {
        const std::size_t cls = u / K;
        const double target = (static_cast<std::size_t>(label) == cls) ? 1.0 : 0.0;
        seed[u] = norm * (trace.scores[cls] - target);
    }

    // adjoint of v_post carried across time, one per spiking layer
    std::vector<Tensor> g_vpost(L);
    std::vector<double> g_leak(L, 0.0);

    for (std::size_t ti = T; ti-- > 0;) {
        Tensor g_act(std::vector<std::size_t>{shapes[L].count()});
        for (std::size_t li = L; li-- > 0;) {
            const LayerSpec& l = spec.layers[li];
            const LayerTrace& tr = trace.layers[li];
            if (li == fin)
                for (std::size_t u = 0; u < out_width; ++u) g_act[u] += seed[u];

            switch (l.kind) {
            case LayerKind::FullyConnected: {
                const Tensor& W = params.weight[li];
                const Tensor& x = tr.input[ti];
                Tensor g_pre = std::move(g_act);
                if (l.affine) {
                    const Tensor& pre = tr.pre_act[ti];
                    for (std::size_t r = 0; r < l.fc_out; ++r) {
                        g.scale[li][r] += g_pre[r] * pre[r];
                        g.shift[li][r] += g_pre[r];
                        g_pre[r] *= params.scale[li][r];
                    }
                }
                Tensor g_in({l.fc_in});
                for (std::size_t r = 0; r < l.fc_out; ++r) {
                    const double gr = g_pre[r];
                    if (gr == 0.0) continue;
                    double* gw = g.weight[li].data() + r * l.fc_in;
                    const double* wr = W.data() + r * l.fc_in;
                    for (std::size_t c = 0; c < l.fc_in; ++c) {
                        gw[c] += gr * x[c];
                        g_in[c] += gr * wr[c];
                    }
                }
                g_act = std::move(g_in);
                break;
            }
            case LayerKind::Convolution: {
                const Tensor& W = params.weight[li];
                const Tensor& cols = tr.input[ti];
                const Shape3& in_shape = shapes[li];
                const Shape3& out_shape = shapes[li + 1];
                const std::size_t positions = out_shape.h * out_shape.w;
                const std::size_t patch = l.in_channels * l.kernel * l.kernel;
                Tensor g_pre = std::move(g_act);
                if (l.affine) {
                    const Tensor& pre = tr.pre_act[ti];
                    for (std::size_t oc = 0; oc < l.out_channels; ++oc) {
                        const double s = params.scale[li][oc];
                        double gs = 0.0, gb = 0.0;
                        double* row = g_pre.data() + oc * positions;
                        const double* prer = pre.data() + oc * positions;
                        for (std::size_t pos = 0; pos < positions; ++pos) {
                            gs += row[pos] * prer[pos];
                            gb += row[pos];
                            row[pos] *= s;
                        }
                        g.scale[li][oc] += gs;
                        g.shift[li][oc] += gb;
                    }
                }
                Tensor g_cols({positions, patch});
                for (std::size_t oc = 0; oc < l.out_channels; ++oc) {
                    const double* grow = g_pre.data() + oc * positions;
                    const double* wrow = W.data() + oc * patch;
                    double* gwrow = g.weight[li].data() + oc * patch;
                    for (std::size_t pos = 0; pos < positions; ++pos) {
                        const double go = grow[pos];
                        if (go == 0.0) continue;
                        const double* xp = cols.data() + pos * patch;
                        double* gc = g_cols.data() + pos * patch;
                        for (std::size_t j = 0; j < patch; ++j) {
                            gwrow[j] += go * xp[j];
                            gc[j] += go * wrow[j];
                        }
                    }
                }
                Tensor g_in({in_shape.c, in_shape.h, in_shape.w});
                col2im_add(g_cols, in_shape, l.kernel, l.stride, l.pad, out_shape.h, out_shape.w,
                           g_in);
                g_act = std::move(g_in);
                break;
            }
            case LayerKind::Pooling: {
                const Shape3& in_shape = shapes[li];
                Tensor g_in(std::vector<std::size_t>{in_shape.count()});
                const auto& arg = tr.pool_argmax[ti];
                for (std::size_t oi = 0; oi < arg.size(); ++oi) g_in[arg[oi]] += g_act[oi];
                g_act = std::move(g_in);
                break;
            }
            case LayerKind::Dropout: {
                if (!tr.dropout_mask.empty())
                    for (std::size_t i = 0; i < g_act.size(); ++i) g_act[i] *= tr.dropout_mask[i];
                break;
            }
            case LayerKind::Spiking: {
                const double V = params.v_threshold[li];
                const double lam = logistic(params.tau_param[li]);
                const double gamma = l.plif.gamma;
                const double vrest = l.plif.v_rest;
                const Tensor& v_pre = tr.v_pre[ti];
                const Tensor& z = tr.z[ti];
                const Tensor& o = tr.spikes[ti];
                const std::size_t n = v_pre.size();
                if (g_vpost[li].empty()) g_vpost[li] = Tensor(std::vector<std::size_t>{n});
                Tensor& gv = g_vpost[li];
                Tensor g_in({n});
                Tensor gv_next({n});
                double dV = 0.0, dlam = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    // v_post = v_pre - V*o
                    const double go = g_act[i] - V * gv[i];
                    dV -= o[i] * gv[i];
                    double gvpre = gv[i];
                    // o = S(z), z = v_pre/V - 1
                    const double gz = go * surrogate_derivative(z[i], gamma);
                    gvpre += gz / V;
                    dV -= gz * v_pre[i] / (V * V);
                    // v_pre[t] = v_post[t-1] + lam*(x - (v_post[t-1] - vrest))
                    double v_prev = vrest;
                    if (ti > 0) v_prev = tr.v_pre[ti - 1][i] - V * tr.spikes[ti - 1][i];
                    dlam += (v_pre[i] - v_prev) / lam * gvpre;
                    g_in[i] = lam * gvpre;
                    gv_next[i] = (1.0 - lam) * gvpre;
                }
                g.v_threshold[li] += dV;
                g_leak[li] += dlam;
                gv = std::move(gv_next);
                g_act = std::move(g_in);
                break;
            }
            }
        }
    }

    for (std::size_t li = 0; li < L; ++li) {
        if (spec.layers[li].kind != LayerKind::Spiking) continue;
        const double lam = logistic(params.tau_param[li]);
        g.tau_param[li] = g_leak[li] * lam * (1.0 - lam);
    }
    return g;
}

GradientBundle backward(const NetworkSpec& spec, const NetworkParams& params,
                        const std::vector<NetworkState>& traces, const std::vector<int>& labels) {
    if (traces.empty()) throw std::invalid_argument("backward: empty batch");
    if (traces.size() != labels.size())
        throw std::invalid_argument("backward: traces/labels count mismatch");
    std::vector<GradientBundle> slots(traces.size());
    parallel_for(traces.size(), [&](std::size_t i) {
        slots[i] = backward_sample(spec, params, traces[i], labels[i]);
    });
    GradientBundle total = std::move(slots[0]);
    for (std::size_t i = 1; i < slots.size(); ++i) total.accumulate(slots[i]);
    total.scale_by(1.0 / static_cast<double>(traces.size()));
    if (!total.all_finite()) throw std::domain_error("backward: non-finite gradient");
    return total;
}

void apply_updates(const NetworkSpec& spec, NetworkParams& params, const GradientBundle& grads,
                   const TrainConfig& config) {
    config.validate();
    if (!grads.all_finite())
        throw std::domain_error("apply_updates: non-finite gradient, update rejected");
    const double lr = config.learning_rate;
    for (std::size_t li = 0; li < params.weight.size(); ++li) {
        for (std::size_t k = 0; k < params.weight[li].size(); ++k)
            params.weight[li][k] -= lr * grads.weight[li][k];
        for (std::size_t k = 0; k < params.scale[li].size(); ++k)
            params.scale[li][k] -= lr * grads.scale[li][k];
        for (std::size_t k = 0; k < params.shift[li].size(); ++k)
            params.shift[li][k] -= lr * grads.shift[li][k];
        if (spec.layers[li].kind == LayerKind::Spiking) {
            if (config.optimize_tau) params.tau_param[li] -= lr * grads.tau_param[li];
            if (config.optimize_threshold) {
                params.v_threshold[li] -= lr * grads.v_threshold[li];
                const double floor = spec.layers[li].plif.v_rest + kThresholdClampMargin;
                if (params.v_threshold[li] < floor) params.v_threshold[li] = floor;
            }
        }
    }
}

double evaluate_accuracy(const NetworkSpec& spec, const NetworkParams& params, const Dataset& data,
                         const ContractionHook* hook, std::vector<int>* predictions) {
    data.check();
    if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
    std::vector<int> preds(data.size());
    ForwardOptions opts;
    opts.record_trace = false;
    opts.hook = hook;
    parallel_for(data.size(), [&](std::size_t i) {
        const ForwardResult r = forward_image(spec, params, data.images[i], opts);
        preds[i] = static_cast<int>(argmax_class(r.scores));
    });
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (preds[i] == data.labels[i]) ++correct;
    if (predictions) *predictions = std::move(preds);
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

FitResult fit(const NetworkSpec& spec, NetworkParams& params, const Dataset& train,
              const Dataset* eval_set, const TrainConfig& config, const EpochCallback& on_epoch,
              const std::function<void(NetworkParams&)>& after_epoch,
              const std::function<double(const NetworkParams&)>& eval_override) {
    config.validate();
    train.check();
    if (train.empty()) throw std::invalid_argument("fit: empty training set");

    // the surrogate amplitude comes from the train config
    NetworkSpec local = spec;
    for (std::size_t li : local.spiking_layers()) local.layers[li].plif.gamma = config.gamma;
    local.validate();

    FitResult result;
    const std::size_t n = train.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    const bool any_dropout = [&] {
        for (const LayerSpec& l : local.layers)
            if (l.kind == LayerKind::Dropout && l.dropout_rate > 0.0) return true;
        return false;
    }();
    const auto shapes = local.shape_chain();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(config.rng_seed, 0xE50000ULL + epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t train_correct = 0;

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t bsz = std::min(config.batch_size, n - start);
            std::vector<GradientBundle> slots(bsz);
            std::vector<int> correct_flags(bsz, 0);

            // per-sample dropout masks, derived from (seed, epoch, batch, slot)
            std::vector<std::vector<Tensor>> masks;
            if (any_dropout) {
                masks.resize(bsz);
                for (std::size_t s = 0; s < bsz; ++s) {
                    masks[s].resize(local.layers.size());
                    Rng mrng(mix_seed(config.rng_seed,
                                      0xD0000000ULL + epoch * 1000003ULL + start * 131ULL + s));
                    for (std::size_t li = 0; li < local.layers.size(); ++li) {
                        const LayerSpec& l = local.layers[li];
                        if (l.kind != LayerKind::Dropout || l.dropout_rate <= 0.0) continue;
                        Tensor m(std::vector<std::size_t>{shapes[li].count()});
                        const double keep = 1.0 - l.dropout_rate;
                        for (std::size_t i = 0; i < m.size(); ++i)
                            m[i] = (mrng.uniform01() < keep) ? 1.0 / keep : 0.0;
                        masks[s][li] = std::move(m);
                    }
                }
            }

            parallel_for(bsz, [&](std::size_t s) {
                const std::size_t idx = order[start + s];
                ForwardOptions opts;
                opts.record_trace = true;
                if (any_dropout) opts.dropout_masks = &masks[s];
                const ForwardResult r = forward_image(local, params, train.images[idx], opts);
                slots[s] = backward_sample(local, params, r.state, train.labels[idx]);
                correct_flags[s] =
                    static_cast<int>(argmax_class(r.scores)) == train.labels[idx] ? 1 : 0;
            });

            GradientBundle total = std::move(slots[0]);
            for (std::size_t s = 1; s < bsz; ++s) total.accumulate(slots[s]);
            total.scale_by(1.0 / static_cast<double>(bsz));
            if (!total.all_finite()) throw std::domain_error("fit: non-finite gradient");
            loss_sum += total.loss * static_cast<double>(bsz);
            for (int f : correct_flags) train_correct += static_cast<std::size_t>(f);

            apply_updates(local, params, total, config);
        }

        if (after_epoch) after_epoch(params);

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = loss_sum / static_cast<double>(n);
        if (eval_override)
            stats.accuracy = eval_override(params);
        else if (eval_set)
            stats.accuracy = evaluate_accuracy(local, params, *eval_set);
        else
            stats.accuracy = static_cast<double>(train_correct) / static_cast<double>(n);
        for (std::size_t li : local.spiking_layers())
            stats.v_thresholds.push_back(params.v_threshold[li]);
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

} // namespace ssnn
