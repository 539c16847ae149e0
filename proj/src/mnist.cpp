#include "ssnn/mnist.hpp"

#include <cstdint>
#include <fstream>
#include <vector>

namespace ssnn {

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path, std::size_t offset,
                        const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw std::runtime_error(path + ": truncated while reading " + what + " at byte offset " +
                                 std::to_string(offset));
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

std::size_t file_size(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return static_cast<std::size_t>(in.tellg());
}

} // namespace

Dataset load_mnist(const std::string& image_path, const std::string& label_path,
                   std::optional<std::size_t> subset) {
    std::ifstream img(image_path, std::ios::binary);
    if (!img) throw std::runtime_error("cannot open image file '" + image_path + "'");
    std::ifstream lab(label_path, std::ios::binary);
    if (!lab) throw std::runtime_error("cannot open label file '" + label_path + "'");

    const std::uint32_t img_magic = read_be32(img, image_path, 0, "magic");
    if (img_magic != kIdxImageMagic)
        throw std::runtime_error(image_path + ": bad magic at byte offset 0 (expected 0x00000803)");
    const std::uint32_t lab_magic = read_be32(lab, label_path, 0, "magic");
    if (lab_magic != kIdxLabelMagic)
        throw std::runtime_error(label_path + ": bad magic at byte offset 0 (expected 0x00000801)");

    const std::uint32_t img_count = read_be32(img, image_path, 4, "image count");
    const std::uint32_t rows = read_be32(img, image_path, 8, "row count");
    const std::uint32_t cols = read_be32(img, image_path, 12, "column count");
    const std::uint32_t lab_count = read_be32(lab, label_path, 4, "label count");

    if (img_count != lab_count)
        throw std::runtime_error("image file declares " + std::to_string(img_count) +
                                 " samples but label file declares " + std::to_string(lab_count));
    if (rows == 0 || cols == 0)
        throw std::runtime_error(image_path + ": zero image dimensions in header");

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    const std::size_t want_img_bytes = 16 + static_cast<std::size_t>(img_count) * pixels;
    const std::size_t have_img_bytes = file_size(image_path);
    if (have_img_bytes < want_img_bytes)
        throw std::runtime_error(image_path + ": expected " + std::to_string(want_img_bytes) +
                                 " bytes for " + std::to_string(img_count) + " images, file has " +
                                 std::to_string(have_img_bytes) + " (truncated at byte offset " +
                                 std::to_string(have_img_bytes) + ")");
    const std::size_t want_lab_bytes = 8 + static_cast<std::size_t>(lab_count);
    const std::size_t have_lab_bytes = file_size(label_path);
    if (have_lab_bytes < want_lab_bytes)
        throw std::runtime_error(label_path + ": expected " + std::to_string(want_lab_bytes) +
                                 " bytes for " + std::to_string(lab_count) + " labels, file has " +
                                 std::to_string(have_lab_bytes) + " (truncated at byte offset " +
                                 std::to_string(have_lab_bytes) + ")");

    const std::size_t take = subset ? std::min<std::size_t>(*subset, img_count)
                                    : static_cast<std::size_t>(img_count);

    Dataset data;
    data.images.reserve(take);
    data.labels.reserve(take);
    std::vector<unsigned char> buf(pixels);
    for (std::size_t i = 0; i < take; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
        if (!img)
            throw std::runtime_error(image_path + ": truncated image " + std::to_string(i) +
                                     " at byte offset " + std::to_string(16 + i * pixels));
        Tensor t({1, rows, cols});
        for (std::size_t p = 0; p < pixels; ++p)
            t[p] = static_cast<double>(buf[p]) / 255.0;
        data.images.push_back(std::move(t));

        char lbl = 0;
        lab.read(&lbl, 1);
        if (!lab)
            throw std::runtime_error(label_path + ": truncated label " + std::to_string(i) +
                                     " at byte offset " + std::to_string(8 + i));
        const int v = static_cast<int>(static_cast<unsigned char>(lbl));
        data.labels.push_back(v);
    }
    return data;
}

} // namespace ssnn
