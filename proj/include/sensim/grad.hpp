#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sensim/layout.hpp"
#include "sensim/parallel.hpp"
#include "sensim/radiance.hpp"
#include "sensim/rng.hpp"
#include "sensim/sensor.hpp"
#include "sensim/vec.hpp"

namespace sensim {

/// Boundary-flux integrals of one pixel edge, per theta component:
///   flux_f[j] = integral over the edge of W L(r) <dr/dtheta_j, n_hat> ds
///   flux_g[j] = same with the integrand W L replaced by 1
/// Oriented with the owning pixel's outward normal; the shared edge of two
/// neighboring pixels yields exactly negated fluxes for the two owners.
struct EdgeFlux {
    int k1 = 0;
    int k2 = 0;
    Edge edge = Edge::Bottom;
    std::array<Vec3, 2> flux_f{};
    std::array<double, 2> flux_g{};
};

/// Columns are d I_k / d theta_j (RGB x 2).
struct PixelJacobian {
    std::array<Vec3, 2> col{};
};

struct GradientRecord {
    std::vector<PixelJacobian> dpixel_dtheta;  // row-major over pixels
    Vec2 dloss_dtheta{};
    Vec2 dloss_dtheta_raw{};  // after the tanh chain rule
};

namespace detail {

/// Visits the boundary samples of one pixel edge, invoking
/// fn(speed_theta1, speed_theta2, radiance) per sample. Jitter is drawn from
/// a stream keyed by the underlying grid line, and traversal against the
/// canonical direction (Left, Top) flips the parameter, so both owners of an
/// interior edge visit the identical point set with exactly negated speeds.
/// The speeds use the unnormalized form <dr/dtheta, (r_dot2, -r_dot1)>: the
/// normal normalization and the line element cancel.
template <class Fn>
inline void for_each_boundary_sample(const PixelRegion& region, Edge edge,
                                     const RadianceField& field, const SamplingConfig& cfg,
                                     Fn&& fn) {
    int axis, line, cell;
    bool reversed;
    switch (edge) {
        case Edge::Right:  axis = 0; line = region.k1 + 1; cell = region.k2; reversed = false; break;
        case Edge::Left:   axis = 0; line = region.k1;     cell = region.k2; reversed = true;  break;
        case Edge::Top:    axis = 1; line = region.k2 + 1; cell = region.k1; reversed = true;  break;
        case Edge::Bottom: axis = 1; line = region.k2;     cell = region.k1; reversed = false; break;
    }
    const BoundaryParam bp = boundary_param(region, edge);
    Rng rng = Rng::keyed(cfg.rng_seed, detail::kBoundaryTag, axis, line, cell);
    const int n = cfg.boundary_samples;
    for (int i = 0; i < n; ++i) {
        const double jt = cfg.jitter ? rng.next_double() : 0.5;
        const double s = (i + jt) / n;
        const double t = reversed ? 1.0 - s : s;
        const Vec2 ns = bp.normal_scaled(t);
        const Mat2 dth = bp.r_dtheta(t);
        fn(dth.col(0).dot(ns), dth.col(1).dot(ns), field.sample(bp.r(t)));
    }
}

}  // namespace detail

/// Boundary flux of one pixel edge (Monte-Carlo estimate of the raw
/// integrals above).
inline EdgeFlux edge_flux(const PixelRegion& region, Edge edge, const RadianceField& field,
                          const SamplingConfig& cfg, const SensorResponse& response = {}) {
    cfg.validate();
    EdgeFlux out;
    out.k1 = region.k1;
    out.k2 = region.k2;
    out.edge = edge;
    detail::for_each_boundary_sample(
        region, edge, field, cfg, [&](double s0, double s1, const Vec3& radiance) {
            out.flux_f[0] += (response.w * s0) * radiance;
            out.flux_f[1] += (response.w * s1) * radiance;
            out.flux_g[0] += s0;
            out.flux_g[1] += s1;
        });
    const double inv_n = 1.0 / cfg.boundary_samples;
    for (int j = 0; j < 2; ++j) {
        out.flux_f[j] = out.flux_f[j] * inv_n;
        out.flux_g[j] *= inv_n;
    }
    return out;
}

namespace detail {

/// Centered flux integrals of one edge: (1/n) sum speed_j * (L - center),
/// oriented with the owning pixel's outward normal. Centering on the pixel
/// value regroups the quotient-rule numerator f' g - f g' = g * int (L - I) v
/// per sample, so a constant field yields an exact zero.
struct CenteredFlux {
    std::array<Vec3, 2> numer{};
    std::array<double, 2> gprime{};
};

inline CenteredFlux centered_edge_flux(const PixelRegion& region, Edge edge,
                                       const RadianceField& field, const SamplingConfig& cfg,
                                       const Vec3& center) {
    CenteredFlux out;
    for_each_boundary_sample(region, edge, field, cfg,
                             [&](double s0, double s1, const Vec3& radiance) {
                                 const Vec3 d = radiance - center;
                                 out.numer[0] += s0 * d;
                                 out.numer[1] += s1 * d;
                                 out.gprime[0] += s0;
                                 out.gprime[1] += s1;
                             });
    const double inv_n = 1.0 / cfg.boundary_samples;
    for (int j = 0; j < 2; ++j) {
        out.numer[j] = out.numer[j] * inv_n;
        out.gprime[j] *= inv_n;
    }
    return out;
}

}  // namespace detail

/// d I_k / d theta via the boundary transport identity. The interior term is
/// identically zero because the pixel response W is constant, leaving the
/// quotient rule (f' g - f g') / (W g^2), evaluated in the equivalent
/// centered form (1/g) * sum over edges of int (L - I_k) <dr/dtheta, n> ds.
inline PixelJacobian dpixel_dtheta(const PixelRegion& region, const RadianceField& field,
                                   const SamplingConfig& cfg, const ForwardCache& cache,
                                   const SensorGrid& grid, const SensorResponse& response = {}) {
    cfg.validate();
    // Q_int = int dW/dtheta * L: zero under constant W by construction.
    const double q_int = 0.0 * response.w;
    if (q_int != 0.0) throw std::logic_error("non-constant response is unsupported");
    const int idx = grid.flat(region.k1, region.k2);
    const double g = cache.g[idx];
    if (g < 1e-12) throw std::runtime_error("collapsed pixel volume in gradient");
    std::array<Vec3, 2> numer{};
    for (Edge e : {Edge::Bottom, Edge::Right, Edge::Top, Edge::Left}) {
        const detail::CenteredFlux flux =
            detail::centered_edge_flux(region, e, field, cfg, cache.pixels[idx]);
        for (int j = 0; j < 2; ++j) numer[j] += flux.numer[j];
    }
    PixelJacobian out;
    for (int j = 0; j < 2; ++j) out.col[j] = numer[j] / g;
    return out;
}

/// Backward pass. Samples each interior edge once (the expensive geometry
/// and radiance evaluations are shared) and applies the flux with opposite
/// signs to the two adjacent pixels; outer sensor edges are skipped because
/// phi fixes the sensor boundary setwise, making their flux exactly zero.
/// Contracts the per-pixel Jacobians with the upstream cotangents and
/// applies the tanh chain rule.
inline GradientRecord backward(const SensorImage& image, const std::vector<Vec3>& upstream,
                               const RadianceField& field, const LayoutParams& params,
                               const SamplingConfig& cfg, const ForwardCache& cache,
                               unsigned threads = 1, const SensorResponse& response = {}) {
    cfg.validate();
    (void)response;
    const SensorGrid& grid = image.grid;
    if (static_cast<int>(upstream.size()) != grid.pixel_count())
        throw std::invalid_argument("upstream cotangent shape mismatch");
    if (static_cast<int>(cache.pixels.size()) != grid.pixel_count())
        throw std::invalid_argument("forward cache shape mismatch");

    struct SharedEdge {
        int owner = 0;
        int neighbor = 0;
        std::array<Vec3, 2> numer_owner{};     // centered on the owner pixel
        std::array<Vec3, 2> numer_neighbor{};  // centered on the neighbor, owner orientation
    };
    const int n_vert = (grid.r1 - 1) * grid.r2;
    const int n_horz = grid.r1 * (grid.r2 - 1);
    std::vector<SharedEdge> edges(n_vert + n_horz);
    parallel_for(edges.size(), threads, [&](std::size_t i) {
        PixelRegion region = [&] {
            if (static_cast<int>(i) < n_vert) {
                const int line = 1 + static_cast<int>(i) % (grid.r1 - 1);
                const int cell = static_cast<int>(i) / (grid.r1 - 1);
                return PixelRegion(grid, line - 1, cell, params);
            }
            const int h = static_cast<int>(i) - n_vert;
            const int line = 1 + h % (grid.r2 - 1);
            const int cell = h / (grid.r2 - 1);
            return PixelRegion(grid, cell, line - 1, params);
        }();
        const bool vertical = static_cast<int>(i) < n_vert;
        const Edge edge = vertical ? Edge::Right : Edge::Top;
        SharedEdge& out = edges[i];
        out.owner = grid.flat(region.k1, region.k2);
        out.neighbor = vertical ? grid.flat(region.k1 + 1, region.k2)
                                : grid.flat(region.k1, region.k2 + 1);
        const Vec3& c_owner = cache.pixels[out.owner];
        const Vec3& c_neighbor = cache.pixels[out.neighbor];
        detail::for_each_boundary_sample(
            region, edge, field, cfg, [&](double s0, double s1, const Vec3& radiance) {
                const Vec3 d_owner = radiance - c_owner;
                const Vec3 d_neighbor = radiance - c_neighbor;
                out.numer_owner[0] += s0 * d_owner;
                out.numer_owner[1] += s1 * d_owner;
                out.numer_neighbor[0] += s0 * d_neighbor;
                out.numer_neighbor[1] += s1 * d_neighbor;
            });
        const double inv_n = 1.0 / cfg.boundary_samples;
        for (int j = 0; j < 2; ++j) {
            out.numer_owner[j] = out.numer_owner[j] * inv_n;
            out.numer_neighbor[j] = out.numer_neighbor[j] * inv_n;
        }
    });

    std::vector<std::array<Vec3, 2>> numer(grid.pixel_count());
    for (const SharedEdge& e : edges)
        for (int j = 0; j < 2; ++j) {
            numer[e.owner][j] += e.numer_owner[j];
            numer[e.neighbor][j] += e.numer_neighbor[j] * -1.0;  // inward normal
        }

    GradientRecord rec;
    rec.dpixel_dtheta.resize(grid.pixel_count());
    for (int idx = 0; idx < grid.pixel_count(); ++idx) {
        const double g = cache.g[idx];
        if (g < 1e-12) throw std::runtime_error("collapsed pixel volume in gradient");
        for (int j = 0; j < 2; ++j) {
            rec.dpixel_dtheta[idx].col[j] = numer[idx][j] / g;
            rec.dloss_dtheta[j] += upstream[idx].dot(rec.dpixel_dtheta[idx].col[j]);
        }
    }
    const Vec2 th = params.theta();
    rec.dloss_dtheta_raw = {rec.dloss_dtheta.x * (1.0 - th.x * th.x),
                            rec.dloss_dtheta.y * (1.0 - th.y * th.y)};
    return rec;
}

}  // namespace sensim
