#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sensim {

/// Grayscale image dataset in [0,1] with integer class labels.
struct Dataset {
    int count = 0;
    int height = 0;
    int width = 0;
    std::vector<float> images;       // count * height * width, row-major
    std::vector<std::uint8_t> labels;

    const float* image(int i) const { return images.data() + static_cast<std::size_t>(i) * height * width; }
};

namespace detail {

inline std::uint32_t read_be32(std::istream& in) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("truncated IDX header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | b[3];
}

}  // namespace detail

/// Parses the IDX image/label pair (magic 0x803 / 0x801, big-endian dims)
/// and normalizes pixel bytes to [0,1].
inline Dataset load_mnist(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img_in(images_path, std::ios::binary);
    if (!img_in) throw std::runtime_error("cannot open " + images_path);
    if (detail::read_be32(img_in) != 0x00000803u)
        throw std::runtime_error("bad IDX image magic in " + images_path);
    Dataset ds;
    ds.count = static_cast<int>(detail::read_be32(img_in));
    ds.height = static_cast<int>(detail::read_be32(img_in));
    ds.width = static_cast<int>(detail::read_be32(img_in));
    if (ds.count <= 0 || ds.height <= 0 || ds.width <= 0)
        throw std::runtime_error("bad IDX image dimensions in " + images_path);
    const std::size_t n = static_cast<std::size_t>(ds.count) * ds.height * ds.width;
    std::vector<std::uint8_t> raw(n);
    img_in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (!img_in) throw std::runtime_error("truncated IDX image data in " + images_path);
    ds.images.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.images[i] = raw[i] / 255.0f;

    std::ifstream lab_in(labels_path, std::ios::binary);
    if (!lab_in) throw std::runtime_error("cannot open " + labels_path);
    if (detail::read_be32(lab_in) != 0x00000801u)
        throw std::runtime_error("bad IDX label magic in " + labels_path);
    const int label_count = static_cast<int>(detail::read_be32(lab_in));
    if (label_count != ds.count)
        throw std::runtime_error("image/label count mismatch");
    ds.labels.resize(ds.count);
    lab_in.read(reinterpret_cast<char*>(ds.labels.data()), ds.count);
    if (!lab_in) throw std::runtime_error("truncated IDX label data in " + labels_path);
    for (std::uint8_t l : ds.labels)
        if (l > 9) throw std::runtime_error("label out of range [0, 10)");
    return ds;
}

/// First n samples of a dataset.
inline Dataset dataset_head(const Dataset& ds, int n) {
    if (n <= 0 || n > ds.count) throw std::invalid_argument("bad subset size");
    Dataset out;
    out.count = n;
    out.height = ds.height;
    out.width = ds.width;
    const std::size_t px = static_cast<std::size_t>(n) * ds.height * ds.width;
    out.images.assign(ds.images.begin(), ds.images.begin() + px);
    out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
    return out;
}

}  // namespace sensim
