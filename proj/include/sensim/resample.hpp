#pragma once

#include <stdexcept>
#include <vector>

#include "sensim/layout.hpp"
#include "sensim/parallel.hpp"
#include "sensim/vec.hpp"

namespace sensim {

namespace detail {

/// Maps a sensor-domain coordinate to the uniform pixel index containing it.
/// Half-open pixel intervals [lo, hi), closed on the last pixel, so every
/// point gets exactly one owner.
inline int uniform_cell_index(double coord, int resolution) {
    int k = static_cast<int>((coord + 1.0) * 0.5 * resolution);
    if (k < 0) k = 0;
    if (k >= resolution) k = resolution - 1;
    return k;
}

}  // namespace detail

/// Back-warps a sensor-resolution image (interpreted on the deformed layout)
/// onto a uniform target grid: each target cell center q pulls the value of
/// the pixel whose deformed footprint contains q, found as the uniform pixel
/// containing phi^{-1}(q). Nearest-neighbor: values are copied, never mixed.
template <typename T>
std::vector<T> backwarp(const std::vector<T>& deformed, const SensorGrid& grid,
                        const LayoutParams& params, int target_w, int target_h,
                        unsigned threads = 1) {
    if (static_cast<int>(deformed.size()) != grid.pixel_count())
        throw std::invalid_argument("deformed image shape mismatch");
    if (target_w < grid.r1 || target_h < grid.r2)
        throw std::invalid_argument("target resolution must be >= sensor resolution");
    std::vector<T> out(static_cast<std::size_t>(target_w) * target_h);
    parallel_for(static_cast<std::size_t>(target_h), threads, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        const double qy = -1.0 + (2.0 * y + 1.0) / target_h;
        for (int x = 0; x < target_w; ++x) {
            const double qx = -1.0 + (2.0 * x + 1.0) / target_w;
            const Vec2 u = deform_inverse({qx, qy}, params);
            const int k1 = detail::uniform_cell_index(u.x, grid.r1);
            const int k2 = detail::uniform_cell_index(u.y, grid.r2);
            out[static_cast<std::size_t>(y) * target_w + x] = deformed[grid.flat(k1, k2)];
        }
    });
    return out;
}

}  // namespace sensim
