#ifndef SSNN_TEST_HELPERS_HPP
#define SSNN_TEST_HELPERS_HPP

#include <vector>

#include "ssnn/dataset.hpp"
#include "ssnn/network.hpp"
#include "ssnn/rng.hpp"

namespace ssnn::test {

// Two linearly separable classes on a 4x4 frame: class 0 lights the left
// half, class 1 the right half, plus low-amplitude noise.
inline Dataset toy_two_class(std::size_t per_class, std::uint64_t seed) {
    Dataset d;
    Rng rng(seed);
    for (std::size_t i = 0; i < per_class * 2; ++i) {
        const int label = static_cast<int>(i % 2);
        Tensor img({1, 4, 4});
        for (std::size_t y = 0; y < 4; ++y) {
            for (std::size_t x = 0; x < 4; ++x) {
                const bool hot = label == 0 ? (x < 2) : (x >= 2);
                img[y * 4 + x] = (hot ? 0.9 : 0.05) + 0.05 * rng.uniform01();
            }
        }
        d.images.push_back(std::move(img));
        d.labels.push_back(label);
    }
    return d;
}

inline NetworkSpec toy_fc_spec(std::size_t hidden = 8, std::size_t time_steps = 4) {
    NetworkSpec spec;
    spec.input = {1, 4, 4};
    spec.time_steps = time_steps;
    spec.classes = 2;
    spec.layers.push_back(LayerSpec::fully_connected(16, hidden));
    spec.layers.push_back(LayerSpec::spiking({}));
    spec.layers.push_back(LayerSpec::fully_connected(hidden, 2));
    spec.layers.push_back(LayerSpec::spiking({}));
    return spec;
}

// Small random network for property tests: binary-spike friendly stack of
// fc/conv + spiking blocks with an optional pooling stage.
inline NetworkSpec random_small_spec(Rng& rng, bool allow_conv = true, bool allow_affine = false) {
    NetworkSpec spec;
    spec.time_steps = 2 + rng.below(3); // 2..4
    const bool with_conv = allow_conv && rng.below(2) == 0;
    if (with_conv) {
        const std::size_t side = 4 + rng.below(3); // 4..6
        const std::size_t ch = 1 + rng.below(2);
        spec.input = {ch, side, side};
        const std::size_t out_ch = 1 + rng.below(3);
        spec.layers.push_back(
            LayerSpec::convolution(ch, out_ch, 3, 1, rng.below(2), allow_affine && rng.below(2) == 0));
        spec.layers.push_back(LayerSpec::spiking({}));
        const Shape3 s = spec.shape_chain().back();
        if (s.h % 2 == 0 && rng.below(2) == 0) spec.layers.push_back(LayerSpec::pooling(2));
        const std::size_t flat = spec.shape_chain().back().count();
        const std::size_t classes = 2 + rng.below(2);
        spec.layers.push_back(LayerSpec::fully_connected(flat, classes));
        spec.layers.push_back(LayerSpec::spiking({}));
        spec.classes = classes;
    } else {
        const std::size_t in = 3 + rng.below(6);
        spec.input = {1, 1, in};
        const std::size_t hidden = 2 + rng.below(5);
        spec.layers.push_back(LayerSpec::fully_connected(in, hidden, allow_affine && rng.below(2) == 0));
        spec.layers.push_back(LayerSpec::spiking({}));
        const std::size_t classes = 2 + rng.below(2);
        spec.layers.push_back(LayerSpec::fully_connected(hidden, classes));
        spec.layers.push_back(LayerSpec::spiking({}));
        spec.classes = classes;
    }
    return spec;
}

inline Tensor random_image(const NetworkSpec& spec, Rng& rng) {
    Tensor img({spec.input.c, spec.input.h, spec.input.w});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform01();
    return img;
}

inline std::vector<Tensor> random_spike_train(const NetworkSpec& spec, Rng& rng,
                                              double rate = 0.5) {
    std::vector<Tensor> train;
    for (std::size_t t = 0; t < spec.time_steps; ++t) {
        Tensor frame({spec.input.c, spec.input.h, spec.input.w});
        for (std::size_t i = 0; i < frame.size(); ++i)
            frame[i] = rng.uniform01() < rate ? 1.0 : 0.0;
        train.push_back(std::move(frame));
    }
    return train;
}

inline void randomize_weights(NetworkParams& params, Rng& rng, double scale = 1.0) {
    for (Tensor& w : params.weight)
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, scale);
}

} // namespace ssnn::test

#endif
