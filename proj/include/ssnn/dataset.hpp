#ifndef SSNN_DATASET_HPP
#define SSNN_DATASET_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ssnn/tensor.hpp"

namespace ssnn {

// In-memory labelled dataset. Images are real-valued in [0, 1] and are fed
// to the network as constant input current over the time steps.
struct Dataset {
    std::vector<Tensor> images;
    std::vector<int> labels;

    std::size_t size() const { return images.size(); }
    bool empty() const { return images.empty(); }

    void check() const {
        if (images.size() != labels.size())
            throw std::invalid_argument("dataset: image/label count mismatch");
    }

    // First n samples, deterministic order.
    Dataset subset(std::size_t n) const {
        check();
        if (n >= size()) return *this;
        Dataset out;
        out.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n));
        out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
        return out;
    }
};

} // namespace ssnn

#endif
