#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "sensim/vec.hpp"

namespace sensim {

/// High-resolution source image approximating the continuous radiance.
/// Values are stored in [0,1]; channels is 1 (gray) or 3 (RGB).
/// The sensor domain [-1,1]^2 maps onto the full image rectangle
/// [0,w]x[0,h] (aspect is stretched for non-square images); y = -1
/// corresponds to the top image row. Texel (i,j) covers [i,i+1]x[j,j+1]
/// with its center at half-integer coordinates.
struct SourceImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;  // row-major, interleaved

    SourceImage() = default;
    SourceImage(int w, int h, int c)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, 0.0) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3))
            throw std::invalid_argument("bad image dimensions");
    }

    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    /// Maps a sensor-domain point to continuous image coordinates.
    Vec2 domain_map(Vec2 p) const {
        return {(p.x + 1.0) * 0.5 * width, (p.y + 1.0) * 0.5 * height};
    }

    /// Bilinear sample with clamp-to-edge addressing. Grayscale replicates
    /// to three channels.
    Vec3 sample_bilinear(Vec2 p) const {
        constexpr double eps = 1e-9;
        if (std::abs(p.x) > 1.0 + eps || std::abs(p.y) > 1.0 + eps)
            throw std::domain_error("sample point outside sensor domain");
        const Vec2 uv = domain_map({std::clamp(p.x, -1.0, 1.0), std::clamp(p.y, -1.0, 1.0)});
        const double fx = uv.x - 0.5;
        const double fy = uv.y - 0.5;
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const double tx = fx - x0;
        const double ty = fy - y0;
        const int xa = std::clamp(x0, 0, width - 1);
        const int xb = std::clamp(x0 + 1, 0, width - 1);
        const int ya = std::clamp(y0, 0, height - 1);
        const int yb = std::clamp(y0 + 1, 0, height - 1);
        Vec3 out;
        for (int c = 0; c < 3; ++c) {
            const int cc = channels == 1 ? 0 : c;
            const double v00 = at(xa, ya, cc), v10 = at(xb, ya, cc);
            const double v01 = at(xa, yb, cc), v11 = at(xb, yb, cc);
            out[c] = (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) +
                     ty * ((1.0 - tx) * v01 + tx * v11);
        }
        return out;
    }
};

namespace detail {

inline int ppm_read_token(std::istream& in) {
    // Skips whitespace and '#' comments between header tokens.
    while (true) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int v;
    if (!(in >> v)) throw std::runtime_error("malformed PNM header");
    return v;
}

}  // namespace detail

/// Reads binary PPM (P6) or PGM (P5), 8- or 16-bit.
inline SourceImage load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string magic;
    in >> magic;
    int channels;
    if (magic == "P6") channels = 3;
    else if (magic == "P5") channels = 1;
    else throw std::runtime_error("unsupported PNM magic '" + magic + "' in " + path);
    const int w = detail::ppm_read_token(in);
    const int h = detail::ppm_read_token(in);
    const int maxval = detail::ppm_read_token(in);
    if (maxval != 255 && maxval != 65535)
        throw std::runtime_error("unsupported PNM maxval " + std::to_string(maxval));
    in.get();  // single whitespace after maxval
    SourceImage img(w, h, channels);
    const std::size_t n = img.data.size();
    if (maxval == 255) {
        std::vector<std::uint8_t> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (!in) throw std::runtime_error("truncated PNM data in " + path);
        for (std::size_t i = 0; i < n; ++i) img.data[i] = buf[i] / 255.0;
    } else {
        std::vector<std::uint8_t> buf(n * 2);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 2));
        if (!in) throw std::runtime_error("truncated PNM data in " + path);
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned v = (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1];
            img.data[i] = v / 65535.0;
        }
    }
    return img;
}

/// Writes binary PPM (P6, maxval 255) for 3-channel data or PGM (P5) for
/// 1-channel data.
inline void write_pnm(const SourceImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (img.channels == 3 ? "P6" : "P5") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> buf(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        buf[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Reads an 8-bit PNG (gray or RGB; palette and alpha are converted).
inline SourceImage load_png(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("malformed PNG: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("unsupported PNG channel count");
    }
    SourceImage img(w, h, channels);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * channels);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (std::size_t i = 0; i < row.size(); ++i)
            img.data[static_cast<std::size_t>(y) * row.size() + i] = row[i] / 255.0;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

/// Dispatches on file extension: .png, .ppm, .pgm.
inline SourceImage load_image(const std::string& path) {
    auto ends_with = [&](const char* suf) {
        const std::string s(suf);
        return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with(".png")) return load_png(path);
    if (ends_with(".ppm") || ends_with(".pgm")) return load_pnm(path);
    throw std::runtime_error("unsupported image format: " + path);
}

}  // namespace sensim
