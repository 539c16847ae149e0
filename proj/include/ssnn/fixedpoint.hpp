#ifndef SSNN_FIXEDPOINT_HPP
#define SSNN_FIXEDPOINT_HPP

#include <cstdint>
#include <vector>

#include "ssnn/tensor.hpp"

namespace ssnn {

// Two's-complement Q-format on a 32-bit word. The word width is fixed by the
// accumulator model; only the binary point moves.
struct FixedPointFormat {
    int fraction_bits = 16;

    bool valid() const { return fraction_bits >= 0 && fraction_bits <= 31; }
    double scale() const { return static_cast<double>(1LL << fraction_bits); }
};

struct QuantizeReport {
    std::size_t total = 0;
    std::size_t clamped = 0; // values outside the representable range
};

std::int32_t quantize_value(double w, const FixedPointFormat& fmt, bool* clamped = nullptr);

inline double dequantize_value(std::int32_t q, const FixedPointFormat& fmt) {
    return static_cast<double>(q) / fmt.scale();
}

// Quantized matrix in the layer's (out, in) coordinates.
struct QuantizedMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int32_t> words;
    QuantizeReport report;

    std::int32_t at(std::size_t r, std::size_t c) const { return words[r * cols + c]; }
};

QuantizedMatrix quantize_matrix(const Tensor& weights, std::size_t rows, std::size_t cols,
                                const FixedPointFormat& fmt);

} // namespace ssnn

#endif
