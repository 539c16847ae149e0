#include <doctest.h>

#include <cmath>

#include "ssnn/fixedpoint.hpp"
#include "ssnn/rng.hpp"

using namespace ssnn;

TEST_CASE("quantize_value definitions") {
    const FixedPointFormat q16{16};
    CHECK(quantize_value(0.0, q16) == 0);
    CHECK(quantize_value(1.0, q16) == 65536);
    CHECK(quantize_value(-0.5, q16) == -32768);
    CHECK(dequantize_value(65536, q16) == 1.0);
    CHECK(dequantize_value(-32768, q16) == -0.5);
}

TEST_CASE("quantize round-trip error is at most half an lsb absent clamping") {
    const FixedPointFormat q16{16};
    Rng rng(5);
    const double bound = std::pow(2.0, -17); // 2^(-fraction_bits-1)
    for (int i = 0; i < 10000; ++i) {
        const double w = rng.uniform(-100.0, 100.0);
        bool clamped = false;
        const std::int32_t q = quantize_value(w, q16, &clamped);
        CHECK(!clamped);
        CHECK(std::abs(dequantize_value(q, q16) - w) <= bound + 1e-15);
    }
}

TEST_CASE("out-of-range values clamp and are reported") {
    const FixedPointFormat q16{16};
    bool clamped = false;
    CHECK(quantize_value(1e9, q16, &clamped) == 2147483647);
    CHECK(clamped);
    CHECK(quantize_value(-1e9, q16, &clamped) == -2147483647 - 1);
    CHECK(clamped);

    Tensor t({2, 2});
    t[0] = 1e9;
    t[1] = 0.25;
    t[2] = -1e9;
    t[3] = 0.0;
    const QuantizedMatrix qm = quantize_matrix(t, 2, 2, q16);
    CHECK(qm.report.total == 4);
    CHECK(qm.report.clamped == 2);
    CHECK(qm.at(0, 1) == 16384);
}

TEST_CASE("quantize rejects bad inputs") {
    CHECK_THROWS_AS(quantize_value(0.5, FixedPointFormat{32}), std::invalid_argument);
    CHECK_THROWS_AS(quantize_value(std::nan(""), FixedPointFormat{16}), std::invalid_argument);
    Tensor t({2});
    CHECK_THROWS_AS(quantize_matrix(t, 2, 2, FixedPointFormat{16}), std::invalid_argument);
}
