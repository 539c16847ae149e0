#ifndef SSNN_NETWORK_HPP
#define SSNN_NETWORK_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssnn/plif.hpp"
#include "ssnn/rng.hpp"
#include "ssnn/tensor.hpp"

namespace ssnn {

enum class LayerKind { Convolution, FullyConnected, Pooling, Spiking, Dropout };

const char* layer_kind_name(LayerKind k);

struct Shape3 {
    std::size_t c = 1, h = 1, w = 1;
    std::size_t count() const { return c * h * w; }
    bool operator==(const Shape3&) const = default;
    std::string str() const;
};

struct LayerSpec {
    LayerKind kind = LayerKind::FullyConnected;

    // convolution
    std::size_t in_channels = 0, out_channels = 0;
    std::size_t kernel = 0, stride = 1, pad = 0;
    bool affine = false; // learned per-channel scale/shift after the contraction

    // fully connected
    std::size_t fc_in = 0, fc_out = 0;

    // pooling (max, stride == kernel)
    std::size_t pool_kernel = 0;

    // spiking
    PlifParams plif;

    // dropout
    double dropout_rate = 0.0;

    static LayerSpec convolution(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                                 std::size_t stride = 1, std::size_t pad = 0, bool affine = false);
    static LayerSpec fully_connected(std::size_t in, std::size_t out, bool affine = false);
    static LayerSpec pooling(std::size_t kernel);
    static LayerSpec spiking(PlifParams p);
    static LayerSpec dropout(double rate);

    bool has_weights() const {
        return kind == LayerKind::Convolution || kind == LayerKind::FullyConnected;
    }
};

// Structure of the network plus initial parameter values. Live parameter
// values (weights, tau_param, v_threshold) are carried by NetworkParams so
// that the spec stays immutable during training.
struct NetworkSpec {
    Shape3 input;
    std::vector<LayerSpec> layers;
    std::size_t time_steps = 0;
    std::size_t classes = 0; // readout groups of the final spiking layer

    void validate() const;

    // Shape entering layer l (index layers.size() gives the output shape).
    std::vector<Shape3> shape_chain() const;
    Shape3 output_shape() const;

    std::size_t final_spiking_layer() const;
    std::size_t vote_group() const; // final spiking width / classes

    std::vector<std::size_t> spiking_layers() const;
    std::vector<std::size_t> weight_layers() const;

    // rows x cols of a weight layer's matrix form (conv lowered via im2col)
    void weight_matrix_dims(std::size_t layer, std::size_t& rows, std::size_t& cols) const;
};

struct NetworkParams {
    std::vector<Tensor> weight;      // per layer; empty unless the layer has weights
    std::vector<Tensor> scale;       // per layer; affine only
    std::vector<Tensor> shift;       // per layer; affine only
    std::vector<double> tau_param;   // per layer; meaningful at spiking layers
    std::vector<double> v_threshold; // per layer; meaningful at spiking layers

    PlifParams plif_at(const NetworkSpec& spec, std::size_t layer) const {
        PlifParams p = spec.layers[layer].plif;
        p.tau_param = tau_param[layer];
        p.v_threshold = v_threshold[layer];
        return p;
    }
};

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

// Everything the backward pass needs, recorded per time step.
struct LayerTrace {
    std::vector<Tensor> input;     // weight layers: input activation
    std::vector<Tensor> pre_act;   // weight layers with affine: contraction result
    std::vector<Tensor> v_pre;     // spiking: charged membrane (pre reset)
    std::vector<Tensor> z;         // spiking
    std::vector<Tensor> spikes;    // spiking
    std::vector<std::vector<std::uint32_t>> pool_argmax; // pooling: winners
    Tensor dropout_mask;           // dropout: fixed across time steps
};

struct NetworkState {
    std::vector<LayerTrace> layers;
    Tensor scores; // [classes]
    SpikeMode mode = SpikeMode::Hard;
};

// Replaces the dense contraction of selected weight layers (the systolic
// path plugs in through this).
struct ContractionHook {
    virtual ~ContractionHook() = default;
    virtual bool wants(std::size_t layer) const = 0;
    // out[r] = sum over active inputs of W[r, c]; x has cols entries.
    virtual void contract(std::size_t layer, const Tensor& weight, const double* x,
                          std::size_t cols, double* out, std::size_t rows) const = 0;
};

struct ForwardOptions {
    SpikeMode mode = SpikeMode::Hard;
    bool record_trace = true;
    const ContractionHook* hook = nullptr;
    // per-layer dropout masks (pre-scaled); empty tensor = identity
    const std::vector<Tensor>* dropout_masks = nullptr;
};

struct ForwardResult {
    Tensor scores;
    NetworkState state;
};

// Constant-current input: the same frame is presented at every time step
// (the encoder block converts it to spikes).
ForwardResult forward_image(const NetworkSpec& spec, const NetworkParams& params,
                            const Tensor& image, const ForwardOptions& opts = {});

// Binary spike-train input, one frame per time step. Inputs must be 0/1.
ForwardResult forward_spikes(const NetworkSpec& spec, const NetworkParams& params,
                             const std::vector<Tensor>& spike_train,
                             const ForwardOptions& opts = {});

std::size_t argmax_class(const Tensor& scores);

// im2col lowering shared by the dense and systolic conv paths.
// Result is [positions, in_ch*k*k], one contiguous patch per position.
Tensor im2col(const Tensor& input, const Shape3& in_shape, std::size_t kernel, std::size_t stride,
              std::size_t pad, std::size_t& out_h, std::size_t& out_w);

} // namespace ssnn

#endif
