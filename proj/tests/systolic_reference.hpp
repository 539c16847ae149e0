#ifndef SSNN_TEST_SYSTOLIC_REFERENCE_HPP
#define SSNN_TEST_SYSTOLIC_REFERENCE_HPP

#include <cstdint>
#include <vector>

#include "ssnn/fixedpoint.hpp"
#include "ssnn/network.hpp"
#include "ssnn/systolic.hpp"

namespace ssnn::test {

// Independent dense reference for the array model: quantize, accumulate the
// spiking columns in a wrapping 32-bit word (plain loop, no PE walk, no
// injection), dequantize. Optionally zeroes a pruned coordinate set first.
inline std::vector<double> dense_quantized_reference(
    const Tensor& weights, std::size_t rows, std::size_t cols, const double* spikes,
    const FixedPointFormat& fmt,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>* pruned = nullptr) {
    Tensor w = weights;
    if (pruned)
        for (const auto& [r, c] : *pruned) w[r * cols + c] = 0.0;
    const QuantizedMatrix q = quantize_matrix(w, rows, cols, fmt);
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        std::uint32_t acc = 0;
        for (std::size_t c = 0; c < cols; ++c)
            if (spikes[c] == 1.0) acc += static_cast<std::uint32_t>(q.at(r, c));
        out[r] = static_cast<double>(static_cast<std::int32_t>(acc)) / fmt.scale();
    }
    return out;
}

// Contraction hook backed by the dense reference: quantized weights, plain
// accumulation, pruned coordinates zeroed. Used as the network-level oracle
// for the fault-free and bypass-equals-pruning checks.
class DenseReferenceHook : public ContractionHook {
public:
    DenseReferenceHook(const NetworkSpec& spec, const NetworkParams& params,
                       const FixedPointFormat& fmt, const PrunedIndices* pruned = nullptr)
        : fmt_(fmt) {
        on_array_ = on_array_layers(spec);
        qweights_.resize(spec.layers.size());
        for (std::size_t li : spec.weight_layers()) {
            std::size_t rows = 0, cols = 0;
            spec.weight_matrix_dims(li, rows, cols);
            Tensor w = params.weight[li];
            if (pruned && !pruned->by_layer[li].empty())
                for (const auto& [r, c] : pruned->by_layer[li]) w[r * cols + c] = 0.0;
            qweights_[li] = quantize_matrix(w, rows, cols, fmt);
        }
    }

    bool wants(std::size_t layer) const override {
        return layer < qweights_.size() && !qweights_[layer].words.empty();
    }

    void contract(std::size_t layer, const Tensor&, const double* x, std::size_t cols, double* out,
                  std::size_t rows) const override {
        const QuantizedMatrix& q = qweights_[layer];
        if (on_array_[layer]) {
            for (std::size_t r = 0; r < rows; ++r) {
                std::uint32_t acc = 0;
                for (std::size_t c = 0; c < cols; ++c)
                    if (x[c] == 1.0) acc += static_cast<std::uint32_t>(q.at(r, c));
                out[r] = static_cast<double>(static_cast<std::int32_t>(acc)) / fmt_.scale();
            }
        } else {
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < cols; ++c)
                    acc += static_cast<double>(q.at(r, c)) * x[c];
                out[r] = acc / fmt_.scale();
            }
        }
    }

private:
    FixedPointFormat fmt_;
    std::vector<QuantizedMatrix> qweights_;
    std::vector<char> on_array_;
};

} // namespace ssnn::test

#endif
