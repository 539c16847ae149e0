#ifndef SSNN_SYSTOLIC_HPP
#define SSNN_SYSTOLIC_HPP

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "ssnn/dataset.hpp"
#include "ssnn/fault.hpp"
#include "ssnn/fixedpoint.hpp"
#include "ssnn/network.hpp"

namespace ssnn {

// Deterministic weight-to-PE assignment: (out r, in c) -> (r mod N, c mod N).
// Identical for inference and for deriving pruning indices.
struct WeightMapping {
    int grid_size = 0;

    std::pair<int, int> pe_of(std::size_t r, std::size_t c) const {
        return {static_cast<int>(r % static_cast<std::size_t>(grid_size)),
                static_cast<int>(c % static_cast<std::size_t>(grid_size))};
    }
};

// Functional model of the N x N array: fixed-point format, defects, bypass.
struct PEGrid {
    int N = 0;
    FaultMap fault_map;
    FixedPointFormat format;
    std::vector<std::uint8_t> bypass; // N*N, row major

    PEGrid() = default;
    PEGrid(int n, FaultMap fm, FixedPointFormat f);

    bool bypassed(int row, int col) const {
        return bypass[static_cast<std::size_t>(row) * static_cast<std::size_t>(N) +
                      static_cast<std::size_t>(col)] != 0;
    }
    void set_bypass(int row, int col, bool value);
    void bypass_all_faulty();
    void validate() const; // bypass allowed only at faulty PEs
    WeightMapping mapping() const { return WeightMapping{N}; }
};

// Column accumulation for one layer: for each output row, quantized weights
// of spiking inputs are accumulated in ascending input order; every partial
// sum produced at a faulty PE is re-perturbed, bypassed PEs contribute
// nothing. Input must be strictly binary.
std::vector<double> faulty_linear(const QuantizedMatrix& weights, const double* spikes,
                                  std::size_t cols, const PEGrid& grid,
                                  const WeightMapping& mapping);

// Weight coordinates whose PE is faulty (pruning candidates), per layer.
// Only layers executed on the array are populated.
struct PrunedIndices {
    // aligned with spec.layers; empty vector for off-array layers
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> by_layer;
    std::vector<char> on_array;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& v : by_layer) n += v.size();
        return n;
    }
};

// Which weight layers run on the array: those whose time-step input is
// binary. The first contraction fed by the analog input frame runs off the
// array (the accumulator model is spike-gated).
std::vector<char> on_array_layers(const NetworkSpec& spec, bool analog_input = true);

PrunedIndices find_pruned_indices(const NetworkSpec& spec, const FaultMap& fault_map,
                                  const WeightMapping& mapping, bool analog_input = true);

void zero_pruned_weights(NetworkParams& params, const PrunedIndices& pruned);
double max_pruned_abs(const NetworkParams& params, const PrunedIndices& pruned);

// Contraction hook that routes every weight layer through the array model.
// On-array layers use gated int32 accumulation with fault injection; the
// analog encoder uses the same quantized weights with real accumulation.
class SystolicContext : public ContractionHook {
public:
    SystolicContext(const NetworkSpec& spec, const NetworkParams& params, const PEGrid& grid,
                    bool analog_input = true);

    bool wants(std::size_t layer) const override;
    void contract(std::size_t layer, const Tensor& weight, const double* x, std::size_t cols,
                  double* out, std::size_t rows) const override;

    const std::vector<char>& on_array() const { return on_array_; }
    const QuantizedMatrix& quantized(std::size_t layer) const { return qweights_[layer]; }

private:
    const PEGrid& grid_;
    WeightMapping mapping_;
    std::vector<QuantizedMatrix> qweights_;
    std::vector<char> on_array_;
};

struct InferenceResult {
    double accuracy = 0.0;
    std::vector<int> predictions;
};

// Top-1 accuracy of the network executed on the array model.
InferenceResult run_inference(const NetworkSpec& spec, const NetworkParams& params,
                              const PEGrid& grid, const Dataset& data);

} // namespace ssnn

#endif
