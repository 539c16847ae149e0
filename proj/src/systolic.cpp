#include "ssnn/systolic.hpp"

#include <stdexcept>

#include "ssnn/train.hpp"

namespace ssnn {

PEGrid::PEGrid(int n, FaultMap fm, FixedPointFormat f)
    : N(n), fault_map(std::move(fm)), format(f) {
    if (N <= 0) throw std::invalid_argument("PEGrid: size must be positive");
    if (!format.valid()) throw std::invalid_argument("PEGrid: bad fixed-point format");
    if (fault_map.grid_size() != N)
        throw std::invalid_argument("PEGrid: fault map is for a different grid size");
    bypass.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(N), 0);
}

void PEGrid::set_bypass(int row, int col, bool value) {
    if (row < 0 || row >= N || col < 0 || col >= N)
        throw std::invalid_argument("PEGrid: bypass coordinate out of range");
    if (value && !fault_map.pe_is_faulty(row, col))
        throw std::invalid_argument("PEGrid: bypassing a healthy PE is disallowed");
    bypass[static_cast<std::size_t>(row) * static_cast<std::size_t>(N) +
           static_cast<std::size_t>(col)] = value ? 1 : 0;
}

void PEGrid::bypass_all_faulty() {
    for (const StuckAtFault& f : fault_map.faults()) set_bypass(f.pe_row, f.pe_col, true);
}

void PEGrid::validate() const {
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c)
            if (bypassed(r, c) && !fault_map.pe_is_faulty(r, c))
                throw std::invalid_argument("PEGrid: bypass set on a healthy PE");
}

std::vector<double> faulty_linear(const QuantizedMatrix& weights, const double* spikes,
                                  std::size_t cols, const PEGrid& grid,
                                  const WeightMapping& mapping) {
    if (cols != weights.cols) throw std::invalid_argument("faulty_linear: input size mismatch");
    if (mapping.grid_size != grid.N)
        throw std::invalid_argument("faulty_linear: mapping/grid size mismatch");
    for (std::size_t c = 0; c < cols; ++c)
        if (spikes[c] != 0.0 && spikes[c] != 1.0)
            throw std::invalid_argument("faulty_linear: input must be binary spikes");

    const int N = grid.N;
    std::vector<double> out(weights.rows);
    const double inv_scale = 1.0 / grid.format.scale();

    for (std::size_t r = 0; r < weights.rows; ++r) {
        const int prow = static_cast<int>(r % static_cast<std::size_t>(N));
        const std::int32_t* wrow = weights.words.data() + r * weights.cols;
        std::uint32_t acc = 0;
        int pcol = 0;
        for (std::size_t c = 0; c < cols; ++c) {
            if (spikes[c] != 0.0) {
                if (!grid.bypassed(prow, pcol)) {
                    acc += static_cast<std::uint32_t>(wrow[c]);
                    if (const FaultMasks* m = grid.fault_map.masks_at(prow, pcol))
                        acc = static_cast<std::uint32_t>(
                            apply_masks(static_cast<std::int32_t>(acc), *m));
                }
            }
            if (++pcol == N) pcol = 0;
        }
        out[r] = static_cast<double>(static_cast<std::int32_t>(acc)) * inv_scale;
    }
    return out;
}

std::vector<char> on_array_layers(const NetworkSpec& spec, bool analog_input) {
    // A layer runs on the array iff the signal entering it is binary. Spiking
    // output is binary; max pooling and eval-mode dropout preserve it; any
    // contraction output is an analog current.
    std::vector<char> out(spec.layers.size(), 0);
    bool binary = !analog_input;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        switch (l.kind) {
        case LayerKind::Convolution:
        case LayerKind::FullyConnected:
            out[i] = binary ? 1 : 0;
            binary = false;
            break;
        case LayerKind::Spiking:
            binary = true;
            break;
        case LayerKind::Pooling:
        case LayerKind::Dropout:
            break;
        }
    }
    return out;
}

PrunedIndices find_pruned_indices(const NetworkSpec& spec, const FaultMap& fault_map,
                                  const WeightMapping& mapping, bool analog_input) {
    spec.validate();
    PrunedIndices pruned;
    pruned.on_array = on_array_layers(spec, analog_input);
    pruned.by_layer.resize(spec.layers.size());
    if (fault_map.fault_count() == 0) return pruned;
    const std::size_t n = static_cast<std::size_t>(mapping.grid_size);
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        if (!pruned.on_array[li] || !spec.layers[li].has_weights()) continue;
        std::size_t rows = 0, cols = 0;
        spec.weight_matrix_dims(li, rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            const int prow = static_cast<int>(r % n);
            for (std::size_t c = 0; c < cols; ++c) {
                if (fault_map.pe_is_faulty(prow, static_cast<int>(c % n)))
                    pruned.by_layer[li].emplace_back(static_cast<std::uint32_t>(r),
                                                     static_cast<std::uint32_t>(c));
            }
        }
    }
    return pruned;
}

void zero_pruned_weights(NetworkParams& params, const PrunedIndices& pruned) {
    for (std::size_t li = 0; li < pruned.by_layer.size(); ++li) {
        if (pruned.by_layer[li].empty()) continue;
        Tensor& W = params.weight[li];
        const std::size_t cols = W.shape()[1];
        for (const auto& [r, c] : pruned.by_layer[li]) W[r * cols + c] = 0.0;
    }
}

double max_pruned_abs(const NetworkParams& params, const PrunedIndices& pruned) {
    double worst = 0.0;
    for (std::size_t li = 0; li < pruned.by_layer.size(); ++li) {
        if (pruned.by_layer[li].empty()) continue;
        const Tensor& W = params.weight[li];
        const std::size_t cols = W.shape()[1];
        for (const auto& [r, c] : pruned.by_layer[li]) {
            const double a = std::abs(W[r * cols + c]);
            if (a > worst) worst = a;
        }
    }
    return worst;
}

SystolicContext::SystolicContext(const NetworkSpec& spec, const NetworkParams& params,
                                 const PEGrid& grid, bool analog_input)
    : grid_(grid), mapping_(grid.mapping()) {
    spec.validate();
    grid.validate();
    on_array_ = on_array_layers(spec, analog_input);
    qweights_.resize(spec.layers.size());
    for (std::size_t li : spec.weight_layers()) {
        std::size_t rows = 0, cols = 0;
        spec.weight_matrix_dims(li, rows, cols);
        qweights_[li] = quantize_matrix(params.weight[li], rows, cols, grid.format);
    }
}

bool SystolicContext::wants(std::size_t layer) const {
    return layer < qweights_.size() && !qweights_[layer].words.empty();
}

void SystolicContext::contract(std::size_t layer, const Tensor& /*weight*/, const double* x,
                               std::size_t cols, double* out, std::size_t rows) const {
    const QuantizedMatrix& q = qweights_[layer];
    if (rows != q.rows || cols != q.cols)
        throw std::invalid_argument("systolic contract: dimension mismatch");
    if (on_array_[layer]) {
        const std::vector<double> col = faulty_linear(q, x, cols, grid_, mapping_);
        for (std::size_t r = 0; r < rows; ++r) out[r] = col[r];
        return;
    }
    // analog encoder path: same stored weights, real accumulation, no faults
    const double inv_scale = 1.0 / grid_.format.scale();
    for (std::size_t r = 0; r < rows; ++r) {
        const std::int32_t* wrow = q.words.data() + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c)
            acc += static_cast<double>(wrow[c]) * x[c];
        out[r] = acc * inv_scale;
    }
}

InferenceResult run_inference(const NetworkSpec& spec, const NetworkParams& params,
                              const PEGrid& grid, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("run_inference: empty dataset");
    SystolicContext ctx(spec, params, grid);
    InferenceResult res;
    res.accuracy = evaluate_accuracy(spec, params, data, &ctx, &res.predictions);
    return res;
}

} // namespace ssnn
