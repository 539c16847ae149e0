#include "ssnn/fixedpoint.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssnn {

std::int32_t quantize_value(double w, const FixedPointFormat& fmt, bool* clamped) {
    if (!fmt.valid()) throw std::invalid_argument("quantize: fraction_bits out of [0, 31]");
    if (!std::isfinite(w)) throw std::invalid_argument("quantize: non-finite weight");
    // llround: round half away from zero, independent of the fenv rounding mode
    const long long q = std::llround(w * fmt.scale());
    const long long lo = std::numeric_limits<std::int32_t>::min();
    const long long hi = std::numeric_limits<std::int32_t>::max();
    if (q < lo) {
        if (clamped) *clamped = true;
        return static_cast<std::int32_t>(lo);
    }
    if (q > hi) {
        if (clamped) *clamped = true;
        return static_cast<std::int32_t>(hi);
    }
    if (clamped) *clamped = false;
    return static_cast<std::int32_t>(q);
}

QuantizedMatrix quantize_matrix(const Tensor& weights, std::size_t rows, std::size_t cols,
                                const FixedPointFormat& fmt) {
    if (weights.size() != rows * cols)
        throw std::invalid_argument("quantize_matrix: element count does not match rows*cols");
    QuantizedMatrix qm;
    qm.rows = rows;
    qm.cols = cols;
    qm.words.resize(rows * cols);
    qm.report.total = rows * cols;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        bool clamped = false;
        qm.words[i] = quantize_value(weights[i], fmt, &clamped);
        if (clamped) ++qm.report.clamped;
    }
    return qm;
}

} // namespace ssnn
