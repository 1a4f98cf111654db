#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sensim/layout.hpp"
#include "sensim/parallel.hpp"
#include "sensim/radiance.hpp"
#include "sensim/rng.hpp"
#include "sensim/vec.hpp"

namespace sensim {

namespace detail {
// Stream tags keeping interior and boundary sample sets decorrelated.
constexpr std::uint64_t kInteriorTag = 0x496e7465ull;
constexpr std::uint64_t kBoundaryTag = 0x426f756eull;
}  // namespace detail

struct SamplingConfig {
    int interior_strata = 8;    // n: n*n stratified samples per pixel
    int boundary_samples = 32;  // per edge
    std::uint64_t rng_seed = 0;
    bool jitter = true;         // false: stratum midpoints (quadrature mode)

    void validate() const {
        if (interior_strata < 1) throw std::invalid_argument("interior_strata must be >= 1");
        if (boundary_samples < 2) throw std::invalid_argument("boundary_samples must be >= 2");
    }
};

/// Constant pixel response W. Its theta-derivative is identically zero,
/// which is what makes the interior transport term vanish.
struct SensorResponse {
    double w = 1.0;
};

struct SensorImage {
    SensorGrid grid;
    std::vector<Vec3> pixels;     // row-major, index k2*r1 + k1
    std::vector<double> volumes;  // estimated vol(A_k(theta))

    const Vec3& pixel(int k1, int k2) const { return pixels[grid.flat(k1, k2)]; }
    double volume(int k1, int k2) const { return volumes[grid.flat(k1, k2)]; }
};

/// Per-pixel estimates retained for the backward pass: the pixel value I,
/// f = integral of W L |det J| over U_k and g = integral of |det J| (the
/// volume), with f = W I g by construction. The stratified sample positions
/// themselves are reproducible from the per-pixel seed, so only the
/// reductions are kept.
struct ForwardCache {
    SamplingConfig cfg;
    std::vector<Vec3> pixels;
    std::vector<Vec3> f;
    std::vector<double> g;
};

/// Forward pass: I_k = (sum W L(phi(u_i)) |det J(u_i)|) / (sum |det J(u_i)|)
/// over an n x n stratified sample of U_k. The numerator and denominator
/// share one sample set, so a constant field passes through exactly.
/// Deterministic for fixed (inputs, seed) independent of thread count.
inline SensorImage simulate(const RadianceField& field, const SensorGrid& grid,
                            const LayoutParams& params, const SamplingConfig& cfg,
                            ForwardCache* cache = nullptr, unsigned threads = 1,
                            const SensorResponse& response = {}) {
    cfg.validate();
    if (response.w <= 0.0) throw std::invalid_argument("sensor response must be positive");
    SensorImage out;
    out.grid = grid;
    out.pixels.resize(grid.pixel_count());
    out.volumes.resize(grid.pixel_count());
    if (cache) {
        cache->cfg = cfg;
        cache->pixels.resize(grid.pixel_count());
        cache->f.resize(grid.pixel_count());
        cache->g.resize(grid.pixel_count());
    }
    const int n = cfg.interior_strata;
    parallel_for(static_cast<std::size_t>(grid.pixel_count()), threads, [&](std::size_t idx) {
        const int k1 = static_cast<int>(idx) % grid.r1;
        const int k2 = static_cast<int>(idx) / grid.r1;
        const Rect u = uniform_pixel_bounds(grid, k1, k2);
        Rng rng = Rng::keyed(cfg.rng_seed, detail::kInteriorTag, k1, k2);
        // Incremental weighted mean: the constant response W cancels in the
        // quotient, and a constant field passes through bitwise because the
        // update term (L - mean) vanishes exactly.
        Vec3 mean;
        double acc_g = 0.0;
        for (int sy = 0; sy < n; ++sy) {
            for (int sx = 0; sx < n; ++sx) {
                const double jx = cfg.jitter ? rng.next_double() : 0.5;
                const double jy = cfg.jitter ? rng.next_double() : 0.5;
                const Vec2 p{u.x0 + (sx + jx) / n * u.width(),
                             u.y0 + (sy + jy) / n * u.height()};
                const double w = std::abs(jacobian(p, params).det());
                const Vec3 radiance = field.sample(deform(p, params));
                acc_g += w;
                mean += (w / acc_g) * (radiance - mean);
            }
        }
        const double g = acc_g * (u.area() / (n * n));
        if (g < 1e-12) throw std::runtime_error("collapsed pixel volume");
        out.pixels[idx] = mean;
        out.volumes[idx] = g;
        if (cache) {
            cache->pixels[idx] = mean;
            cache->f[idx] = (response.w * g) * mean;
            cache->g[idx] = g;
        }
    });
    return out;
}

/// Monte-Carlo estimate of vol(A_k(theta)) for a single pixel.
inline double pixel_volume(const SensorGrid& grid, int k1, int k2,
                           const LayoutParams& params, const SamplingConfig& cfg) {
    cfg.validate();
    const Rect u = uniform_pixel_bounds(grid, k1, k2);
    Rng rng = Rng::keyed(cfg.rng_seed, detail::kInteriorTag, k1, k2);
    const int n = cfg.interior_strata;
    double acc = 0.0;
    for (int sy = 0; sy < n; ++sy) {
        for (int sx = 0; sx < n; ++sx) {
            const double jx = cfg.jitter ? rng.next_double() : 0.5;
            const double jy = cfg.jitter ? rng.next_double() : 0.5;
            const Vec2 p{u.x0 + (sx + jx) / n * u.width(),
                         u.y0 + (sy + jy) / n * u.height()};
            acc += std::abs(jacobian(p, params).det());
        }
    }
    return acc / (n * n) * u.area();
}

}  // namespace sensim
