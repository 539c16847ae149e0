#ifndef SSNN_TRAIN_HPP
#define SSNN_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ssnn/dataset.hpp"
#include "ssnn/network.hpp"

namespace ssnn {

struct TrainConfig {
    double learning_rate = 0.5;
    std::size_t epochs = 1;      // 0 = evaluate only
    std::size_t batch_size = 32;
    double gamma = 1.0;          // surrogate amplitude applied to all spiking layers
    bool optimize_threshold = false;
    bool optimize_tau = true;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

// Gradients of the batch loss with respect to every live parameter.
struct GradientBundle {
    std::vector<Tensor> weight;
    std::vector<Tensor> scale;
    std::vector<Tensor> shift;
    std::vector<double> tau_param;
    std::vector<double> v_threshold;
    double loss = 0.0;

    static GradientBundle zeros_like(const NetworkParams& params);
    void accumulate(const GradientBundle& other);
    void scale_by(double factor);
    bool all_finite() const;
};

// Mean squared error between per-sample class scores and one-hot targets,
// averaged over batch and classes.
double compute_loss(const std::vector<Tensor>& scores, const std::vector<int>& labels);
double sample_loss(const Tensor& scores, int label);

// Reverse-mode gradients through the recorded trace. The trace must come from
// a forward over the same spec/params; gradients are exact adjoints of the
// smooth-spike forward, which is the surrogate-gradient rule when the trace
// was produced with hard spikes.
GradientBundle backward_sample(const NetworkSpec& spec, const NetworkParams& params,
                               const NetworkState& trace, int label);

// Batch version: averages per-sample gradients; loss is the batch loss.
GradientBundle backward(const NetworkSpec& spec, const NetworkParams& params,
                        const std::vector<NetworkState>& traces, const std::vector<int>& labels);

// Plain SGD step: p <- p - lr * g. Threshold voltages move only when
// optimize_threshold is set and are clamped to v_rest + 1e-3 afterwards.
// Non-finite gradients reject the whole update.
void apply_updates(const NetworkSpec& spec, NetworkParams& params, const GradientBundle& grads,
                   const TrainConfig& config);

inline constexpr double kThresholdClampMargin = 1e-3;

// Top-1 accuracy of the dense real-valued forward.
double evaluate_accuracy(const NetworkSpec& spec, const NetworkParams& params, const Dataset& data,
                         const ContractionHook* hook = nullptr,
                         std::vector<int>* predictions = nullptr);

struct EpochStats {
    std::size_t epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0; // eval-set accuracy when provided, else train-set
    std::vector<double> v_thresholds; // per spiking layer
};

using EpochCallback = std::function<void(const EpochStats&)>;

struct FitResult {
    std::vector<EpochStats> history;
};

// Mini-batch SGD with deterministic shuffling and gradient reduction.
// after_epoch (optional) runs right after the update of the last batch of an
// epoch, before evaluation; mitigation uses it to re-zero pruned weights.
FitResult fit(const NetworkSpec& spec, NetworkParams& params, const Dataset& train,
              const Dataset* eval_set, const TrainConfig& config,
              const EpochCallback& on_epoch = nullptr,
              const std::function<void(NetworkParams&)>& after_epoch = nullptr,
              const std::function<double(const NetworkParams&)>& eval_override = nullptr);

} // namespace ssnn

#endif
