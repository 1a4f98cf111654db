#include <cmath>

#include "doctest.h"
#include "sensim/grad.hpp"
#include "sensim/radiance.hpp"
#include "sensim/rng.hpp"
#include "sensim/sensor.hpp"

using namespace sensim;

namespace {

// Overrides only sample(): the backward pass must never need the spatial
// gradient of the incident radiance.
struct NoGradBlobField : RadianceField {
    GaussianBlobField inner;
    Vec3 sample(Vec2 p) const override { return inner.sample(p); }
};

SamplingConfig dense_cfg(std::uint64_t seed = 0) {
    SamplingConfig cfg;
    cfg.interior_strata = 32;
    cfg.boundary_samples = 512;
    cfg.jitter = false;
    cfg.rng_seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("shared interior edge fluxes negate bitwise between both owners") {
    const GaussianBlobField field;
    const SensorGrid grid(4, 4);
    Rng rng = Rng::keyed(61, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const auto params = LayoutParams::from_theta(
            LayoutKind::Curvilinear, {rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)});
        SamplingConfig cfg;
        cfg.rng_seed = rng.next_u64();
        // Vertical line between (1,2) and (2,2).
        const EdgeFlux right = edge_flux(PixelRegion(grid, 1, 2, params), Edge::Right, field, cfg);
        const EdgeFlux left = edge_flux(PixelRegion(grid, 2, 2, params), Edge::Left, field, cfg);
        // Horizontal line between (0,1) and (0,2).
        const EdgeFlux top = edge_flux(PixelRegion(grid, 0, 1, params), Edge::Top, field, cfg);
        const EdgeFlux bottom = edge_flux(PixelRegion(grid, 0, 2, params), Edge::Bottom, field, cfg);
        for (int j = 0; j < 2; ++j) {
            for (int c = 0; c < 3; ++c) {
                CHECK(right.flux_f[j][c] == -left.flux_f[j][c]);
                CHECK(top.flux_f[j][c] == -bottom.flux_f[j][c]);
            }
            CHECK(right.flux_g[j] == -left.flux_g[j]);
            CHECK(top.flux_g[j] == -bottom.flux_g[j]);
        }
    }
}

TEST_CASE("constant field: flux_f = c * flux_g componentwise") {
    const ConstantField field({0.2, 0.45, 0.9});
    const SensorGrid grid(3, 3);
    const auto params = LayoutParams::from_theta(LayoutKind::Rectangular, {0.35, -0.55});
    SamplingConfig cfg;
    cfg.rng_seed = 17;
    for (int k2 = 0; k2 < 3; ++k2)
        for (int k1 = 0; k1 < 3; ++k1)
            for (Edge e : {Edge::Bottom, Edge::Right, Edge::Top, Edge::Left}) {
                const EdgeFlux flux = edge_flux(PixelRegion(grid, k1, k2, params), e, field, cfg);
                for (int j = 0; j < 2; ++j)
                    for (int c = 0; c < 3; ++c)
                        CHECK(flux.flux_f[j][c] ==
                              doctest::Approx(field.sample({0, 0})[c] * flux.flux_g[j])
                                  .epsilon(1e-13));
            }
}

TEST_CASE("constant field: pixel gradients and loss gradient are exactly zero") {
    const ConstantField field({0.3, 0.6, 0.85});
    const SensorGrid grid(4, 3);
    Rng rng = Rng::keyed(62, 0);
    for (int trial = 0; trial < 5; ++trial) {
        for (LayoutKind kind : {LayoutKind::Curvilinear, LayoutKind::Rectangular}) {
            const auto params = LayoutParams::from_theta(
                kind, {rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)});
            SamplingConfig cfg;
            cfg.rng_seed = rng.next_u64();
            ForwardCache cache;
            const SensorImage img = simulate(field, grid, params, cfg, &cache);
            const PixelJacobian pj =
                dpixel_dtheta(PixelRegion(grid, 1, 1, params), field, cfg, cache, grid);
            for (int j = 0; j < 2; ++j)
                for (int c = 0; c < 3; ++c) CHECK(pj.col[j][c] == 0.0);
            std::vector<Vec3> upstream(grid.pixel_count(), Vec3{1.0, -0.5, 2.0});
            const GradientRecord rec = backward(img, upstream, field, params, cfg, cache);
            CHECK(rec.dloss_dtheta.x == 0.0);
            CHECK(rec.dloss_dtheta.y == 0.0);
            CHECK(rec.dloss_dtheta_raw.x == 0.0);
            CHECK(rec.dloss_dtheta_raw.y == 0.0);
        }
    }
}

TEST_CASE("pixel jacobian matches central finite differences of the forward pass") {
    const GaussianBlobField field({0.15, -0.1}, 0.5);
    const SensorGrid grid(4, 4);
    const SamplingConfig cfg = dense_cfg();
    const double h = 1e-4;
    Rng rng = Rng::keyed(63, 0);
    for (int trial = 0; trial < 4; ++trial) {
        const Vec2 th{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)};
        for (LayoutKind kind : {LayoutKind::Curvilinear, LayoutKind::Rectangular}) {
            const auto params = LayoutParams::from_theta(kind, th);
            ForwardCache cache;
            const SensorImage base = simulate(field, grid, params, cfg, &cache);
            std::vector<Vec3> upstream(grid.pixel_count());
            for (Vec3& u : upstream) u = Vec3{1.0, 1.0, 1.0};
            const GradientRecord rec = backward(base, upstream, field, params, cfg, cache);
            for (int j = 0; j < 2; ++j) {
                Vec2 tp = th, tm = th;
                tp[j] += h;
                tm[j] -= h;
                const SensorImage up = simulate(field, grid, LayoutParams::from_theta(kind, tp), cfg);
                const SensorImage dn = simulate(field, grid, LayoutParams::from_theta(kind, tm), cfg);
                for (int idx = 0; idx < grid.pixel_count(); ++idx) {
                    const double fd = (up.pixels[idx].r - dn.pixels[idx].r) / (2 * h);
                    const double an = rec.dpixel_dtheta[idx].col[j].r;
                    const double scale = std::max({std::abs(fd), std::abs(an), 0.05});
                    CHECK(std::abs(an - fd) / scale < 2e-2);
                }
            }
        }
    }
}

TEST_CASE("sum of edge volume fluxes matches finite differences of pixel_volume") {
    const ConstantField field({1, 1, 1});
    const SensorGrid grid(4, 4);
    const SamplingConfig cfg = dense_cfg();
    SamplingConfig vol_cfg = dense_cfg();
    vol_cfg.interior_strata = 192;  // midpoint-quadrature bias below the FD tolerance
    const double h = 1e-5;
    const Vec2 th{0.4, -0.3};
    for (LayoutKind kind : {LayoutKind::Curvilinear, LayoutKind::Rectangular}) {
        const auto params = LayoutParams::from_theta(kind, th);
        for (int k2 : {0, 1, 3})
            for (int k1 : {0, 2}) {
                std::array<double, 2> gprime{};
                for (Edge e : {Edge::Bottom, Edge::Right, Edge::Top, Edge::Left}) {
                    const EdgeFlux flux =
                        edge_flux(PixelRegion(grid, k1, k2, params), e, field, cfg);
                    for (int j = 0; j < 2; ++j) gprime[j] += flux.flux_g[j];
                }
                for (int j = 0; j < 2; ++j) {
                    Vec2 tp = th, tm = th;
                    tp[j] += h;
                    tm[j] -= h;
                    const double fd =
                        (pixel_volume(grid, k1, k2, LayoutParams::from_theta(kind, tp), vol_cfg) -
                         pixel_volume(grid, k1, k2, LayoutParams::from_theta(kind, tm), vol_cfg)) /
                        (2 * h);
                    CHECK(gprime[j] == doctest::Approx(fd).epsilon(5e-3).scale(0.1));
                }
            }
    }
}

TEST_CASE("total volume derivative is conserved across the sensor") {
    // Interior edge fluxes cancel pairwise and the outer boundary is fixed,
    // so the theta-derivative of the total volume vanishes.
    const ConstantField field({1, 1, 1});
    const SensorGrid grid(5, 4);
    Rng rng = Rng::keyed(64, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const auto params = LayoutParams::from_theta(
            LayoutKind::Curvilinear, {rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)});
        SamplingConfig cfg;
        cfg.rng_seed = rng.next_u64();
        std::array<double, 2> total{};
        for (int k2 = 0; k2 < grid.r2; ++k2)
            for (int k1 = 0; k1 < grid.r1; ++k1)
                for (Edge e : {Edge::Bottom, Edge::Right, Edge::Top, Edge::Left}) {
                    const EdgeFlux flux =
                        edge_flux(PixelRegion(grid, k1, k2, params), e, field, cfg);
                    for (int j = 0; j < 2; ++j) total[j] += flux.flux_g[j];
                }
        CHECK(std::abs(total[0]) < 1e-12);
        CHECK(std::abs(total[1]) < 1e-12);
    }
}

TEST_CASE("outer sensor edges carry exactly zero flux") {
    const GaussianBlobField field;
    const SensorGrid grid(3, 3);
    const auto params = LayoutParams::from_theta(LayoutKind::Rectangular, {0.6, 0.6});
    SamplingConfig cfg;
    cfg.rng_seed = 5;
    const std::array<std::tuple<int, int, Edge>, 4> outer{{{0, 1, Edge::Left},
                                                          {2, 1, Edge::Right},
                                                          {1, 0, Edge::Bottom},
                                                          {1, 2, Edge::Top}}};
    for (const auto& [k1, k2, e] : outer) {
        const EdgeFlux flux = edge_flux(PixelRegion(grid, k1, k2, params), e, field, cfg);
        for (int j = 0; j < 2; ++j) {
            CHECK(flux.flux_g[j] == 0.0);
            for (int c = 0; c < 3; ++c) CHECK(flux.flux_f[j][c] == 0.0);
        }
    }
}

TEST_CASE("backward never requires the radiance spatial gradient") {
    const NoGradBlobField field;
    CHECK_THROWS_AS(field.spatial_gradient({0.0, 0.0}, 0), std::logic_error);
    const SensorGrid grid(4, 4);
    const auto params = LayoutParams::from_theta(LayoutKind::Curvilinear, {0.3, 0.3});
    SamplingConfig cfg;
    cfg.rng_seed = 8;
    ForwardCache cache;
    const SensorImage img = simulate(field, grid, params, cfg, &cache);
    std::vector<Vec3> upstream(grid.pixel_count(), Vec3{1, 1, 1});
    CHECK_NOTHROW(backward(img, upstream, field, params, cfg, cache));
}

TEST_CASE("backward agrees with per-pixel dpixel_dtheta and contracts upstream") {
    const GaussianBlobField field;
    const SensorGrid grid(4, 3);
    const auto params = LayoutParams::from_theta(LayoutKind::Curvilinear, {0.25, -0.4});
    SamplingConfig cfg;
    cfg.rng_seed = 23;
    ForwardCache cache;
    const SensorImage img = simulate(field, grid, params, cfg, &cache);
    Rng rng = Rng::keyed(65, 0);
    std::vector<Vec3> upstream(grid.pixel_count());
    for (Vec3& u : upstream)
        u = Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const GradientRecord rec = backward(img, upstream, field, params, cfg, cache);
    Vec2 manual{};
    for (int k2 = 0; k2 < grid.r2; ++k2)
        for (int k1 = 0; k1 < grid.r1; ++k1) {
            const int idx = grid.flat(k1, k2);
            const PixelJacobian pj =
                dpixel_dtheta(PixelRegion(grid, k1, k2, params), field, cfg, cache, grid);
            for (int j = 0; j < 2; ++j) {
                CHECK((pj.col[j] - rec.dpixel_dtheta[idx].col[j]).max_abs() < 1e-13);
                manual[j] += upstream[idx].dot(pj.col[j]);
            }
        }
    CHECK(rec.dloss_dtheta.x == doctest::Approx(manual.x).epsilon(1e-12));
    CHECK(rec.dloss_dtheta.y == doctest::Approx(manual.y).epsilon(1e-12));
    const Vec2 th = params.theta();
    CHECK(rec.dloss_dtheta_raw.x == rec.dloss_dtheta.x * (1.0 - th.x * th.x));
    CHECK(rec.dloss_dtheta_raw.y == rec.dloss_dtheta.y * (1.0 - th.y * th.y));
}

TEST_CASE("identity layout has exactly zero gradient") {
    const GaussianBlobField field;
    const SensorGrid grid(4, 4);
    const LayoutParams params(LayoutKind::Identity, {0.0, 0.0});
    SamplingConfig cfg;
    cfg.rng_seed = 2;
    ForwardCache cache;
    const SensorImage img = simulate(field, grid, params, cfg, &cache);
    std::vector<Vec3> upstream(grid.pixel_count(), Vec3{1, 1, 1});
    const GradientRecord rec = backward(img, upstream, field, params, cfg, cache);
    CHECK(rec.dloss_dtheta.x == 0.0);
    CHECK(rec.dloss_dtheta.y == 0.0);
    for (const PixelJacobian& pj : rec.dpixel_dtheta)
        for (int j = 0; j < 2; ++j) CHECK(pj.col[j].max_abs() == 0.0);
}

TEST_CASE("backward is deterministic and thread-count independent") {
    const CheckerboardField field;
    const SensorGrid grid(6, 6);
    const auto params = LayoutParams::from_theta(LayoutKind::Curvilinear, {0.45, 0.2});
    SamplingConfig cfg;
    cfg.rng_seed = 31;
    ForwardCache cache;
    const SensorImage img = simulate(field, grid, params, cfg, &cache);
    std::vector<Vec3> upstream(grid.pixel_count(), Vec3{0.5, 1.0, -0.25});
    const GradientRecord a = backward(img, upstream, field, params, cfg, cache, 1);
    const GradientRecord b = backward(img, upstream, field, params, cfg, cache, 4);
    const GradientRecord c = backward(img, upstream, field, params, cfg, cache, 0);
    CHECK(a.dloss_dtheta_raw.x == b.dloss_dtheta_raw.x);
    CHECK(a.dloss_dtheta_raw.y == b.dloss_dtheta_raw.y);
    CHECK(a.dloss_dtheta_raw.x == c.dloss_dtheta_raw.x);
    CHECK(a.dloss_dtheta_raw.y == c.dloss_dtheta_raw.y);
}
