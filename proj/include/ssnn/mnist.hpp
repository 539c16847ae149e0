#ifndef SSNN_MNIST_HPP
#define SSNN_MNIST_HPP

#include <cstddef>
#include <optional>
#include <string>

#include "ssnn/dataset.hpp"

namespace ssnn {

// IDX ingestion (the MNIST container format). Pixels are scaled to [0, 1]
// and presented to the network as constant input current. Errors carry the
// byte offset at which the file stopped making sense.
Dataset load_mnist(const std::string& image_path, const std::string& label_path,
                   std::optional<std::size_t> subset = std::nullopt);

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

} // namespace ssnn

#endif
