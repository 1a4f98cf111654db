#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "sensim/vec.hpp"

namespace sensim {

enum class LayoutKind { Identity, Curvilinear, Rectangular };

inline const char* to_string(LayoutKind k) {
    switch (k) {
        case LayoutKind::Identity: return "identity";
        case LayoutKind::Curvilinear: return "curv";
        case LayoutKind::Rectangular: return "rect";
    }
    return "?";
}

inline LayoutKind layout_kind_from_string(const std::string& s) {
    if (s == "identity") return LayoutKind::Identity;
    if (s == "curv" || s == "curvilinear") return LayoutKind::Curvilinear;
    if (s == "rect" || s == "rectangular") return LayoutKind::Rectangular;
    throw std::invalid_argument("unknown layout kind: " + s);
}

/// Deformation parameters. The optimizer works on the unconstrained
/// raw values; the geometry consumes theta = tanh(theta_raw) in (-1,1)^2.
class LayoutParams {
public:
    LayoutParams() : LayoutParams(LayoutKind::Identity, Vec2{0.0, 0.0}) {}

    LayoutParams(LayoutKind kind, Vec2 theta_raw)
        : kind_(kind),
          theta_raw_(theta_raw),
          theta_{std::tanh(theta_raw.x), std::tanh(theta_raw.y)} {}

    /// Constructs from constrained theta; rejects values outside (-1, 1).
    static LayoutParams from_theta(LayoutKind kind, Vec2 theta) {
        if (std::abs(theta.x) >= 1.0 || std::abs(theta.y) >= 1.0)
            throw std::invalid_argument("theta components must lie in (-1, 1); pass theta_raw instead");
        return LayoutParams(kind, Vec2{std::atanh(theta.x), std::atanh(theta.y)});
    }

    LayoutKind kind() const { return kind_; }
    Vec2 theta() const { return kind_ == LayoutKind::Identity ? Vec2{0.0, 0.0} : theta_; }
    Vec2 theta_raw() const { return theta_raw_; }

    bool is_identity() const {
        return kind_ == LayoutKind::Identity || (theta_.x == 0.0 && theta_.y == 0.0);
    }

    LayoutParams with_theta_raw(Vec2 raw) const { return LayoutParams(kind_, raw); }

private:
    LayoutKind kind_;
    Vec2 theta_raw_;
    Vec2 theta_;
};

namespace detail {

constexpr double kDomainEps = 1e-9;

inline void check_in_domain(Vec2 p) {
    if (std::abs(p.x) > 1.0 + kDomainEps || std::abs(p.y) > 1.0 + kDomainEps)
        throw std::domain_error("point outside sensor domain [-1,1]^2");
}

}  // namespace detail

/// phi(p, theta). Identity outside the deformation region (|p| >= 1 radially
/// for curvilinear, per component for rectangular), continuous across it.
inline Vec2 deform(Vec2 p, const LayoutParams& params) {
    detail::check_in_domain(p);
    if (params.is_identity()) return p;
    const Vec2 th = params.theta();
    if (params.kind() == LayoutKind::Curvilinear) {
        const double s = p.norm();
        if (s >= 1.0) return p;
        Vec2 q;
        for (int j = 0; j < 2; ++j)
            q[j] = p[j] * (th[j] - 1.0) / (2.0 * th[j] * s - th[j] - 1.0);
        return q;
    }
    // Rectangular: separable per component.
    Vec2 q;
    for (int j = 0; j < 2; ++j) {
        const double a = std::abs(p[j]);
        q[j] = (a >= 1.0) ? p[j]
                          : p[j] * (th[j] - 1.0) / (2.0 * th[j] * a - th[j] - 1.0);
    }
    return q;
}

/// Exact inverse of deform. Rectangular uses the closed-form Moebius inverse;
/// curvilinear recovers the radius by bisection (the radial profile is
/// strictly monotone on [0,1]).
inline Vec2 deform_inverse(Vec2 q, const LayoutParams& params) {
    detail::check_in_domain(q);
    if (params.is_identity()) return q;
    const Vec2 th = params.theta();
    if (params.kind() == LayoutKind::Rectangular) {
        Vec2 p;
        for (int j = 0; j < 2; ++j) {
            const double a = std::abs(q[j]);
            p[j] = (a >= 1.0) ? q[j]
                              : q[j] * (th[j] + 1.0) / (2.0 * th[j] * a - th[j] + 1.0);
        }
        return p;
    }
    // Curvilinear. phi maps the open unit disk onto itself and is the
    // identity outside it.
    if (q.norm() >= 1.0) return q;
    auto preimage = [&](double s) {
        // Candidate p assuming ||p|| = s.
        Vec2 p;
        for (int j = 0; j < 2; ++j)
            p[j] = q[j] * (2.0 * th[j] * s - th[j] - 1.0) / (th[j] - 1.0);
        return p;
    };
    double lo = 0.0, hi = 1.0;
    // h(s) = ||p(s)|| - s has h(0) >= 0, h(1) < 0; 80 bisection steps
    // shrink the bracket below 1e-24.
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (preimage(mid).norm() - mid >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return preimage(0.5 * (lo + hi));
}

/// Spatial 2x2 Jacobian of phi at p. On the kink set the interior-branch
/// limit is used; the identity branch applies for ||p|| >= 1 (resp.
/// |p_j| >= 1).
inline Mat2 jacobian(Vec2 p, const LayoutParams& params) {
    if (params.is_identity()) return Mat2::identity();
    const Vec2 th = params.theta();
    if (params.kind() == LayoutKind::Rectangular) {
        Mat2 m = Mat2::zero();
        for (int j = 0; j < 2; ++j) {
            const double a = std::abs(p[j]);
            double dj;
            if (a >= 1.0) {
                dj = 1.0;
            } else {
                const double den = 2.0 * th[j] * a - th[j] - 1.0;
                dj = (1.0 - th[j] * th[j]) / (den * den);
            }
            if (j == 0) m.a = dj; else m.d = dj;
        }
        return m;
    }
    const double s = p.norm();
    if (s >= 1.0) return Mat2::identity();
    Mat2 m = Mat2::zero();
    for (int j = 0; j < 2; ++j) {
        const double den = 2.0 * th[j] * s - th[j] - 1.0;
        const double c0 = (th[j] - 1.0) / den;
        // d phi_j / d p_k = (th_j-1) [ delta_jk / den - 2 th_j p_j p_k / (s den^2) ]
        for (int k = 0; k < 2; ++k) {
            double v = (j == k) ? c0 : 0.0;
            if (s > 0.0)
                v -= (th[j] - 1.0) * 2.0 * th[j] * p[j] * p[k] / (s * den * den);
            if (j == 0) { (k == 0 ? m.a : m.b) = v; }
            else        { (k == 0 ? m.c : m.d) = v; }
        }
    }
    return m;
}

/// d phi / d theta at fixed p, columns are the theta_1 and theta_2 partials.
/// Component j depends only on theta_j for both families, so the matrix is
/// diagonal. Zero on the identity branch.
inline Mat2 deform_dtheta(Vec2 p, const LayoutParams& params) {
    if (params.kind() == LayoutKind::Identity) return Mat2::zero();
    const Vec2 th = params.theta();
    Mat2 m = Mat2::zero();
    if (params.kind() == LayoutKind::Curvilinear) {
        const double s = p.norm();
        if (s >= 1.0) return Mat2::zero();
        for (int j = 0; j < 2; ++j) {
            const double den = 2.0 * th[j] * s - th[j] - 1.0;
            const double v = p[j] * (den - (th[j] - 1.0) * (2.0 * s - 1.0)) / (den * den);
            if (j == 0) m.a = v; else m.d = v;
        }
        return m;
    }
    for (int j = 0; j < 2; ++j) {
        const double a = std::abs(p[j]);
        if (a >= 1.0) continue;
        const double den = 2.0 * th[j] * a - th[j] - 1.0;
        const double v = p[j] * (den - (th[j] - 1.0) * (2.0 * a - 1.0)) / (den * den);
        if (j == 0) m.a = v; else m.d = v;
    }
    return m;
}

/// Sensor resolution; the sensor domain is S = [-1, 1]^2.
struct SensorGrid {
    int r1 = 1;  // horizontal pixel count
    int r2 = 1;  // vertical pixel count

    SensorGrid() = default;
    SensorGrid(int r1_, int r2_) : r1(r1_), r2(r2_) {
        if (r1 < 1 || r2 < 1) throw std::invalid_argument("grid resolution must be >= 1");
    }

    int pixel_count() const { return r1 * r2; }
    int flat(int k1, int k2) const { return k2 * r1 + k1; }
};

struct Rect {
    double x0, x1, y0, y1;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
};

/// U_k: the uniform pixel rectangle for multi-index (k1, k2).
inline Rect uniform_pixel_bounds(const SensorGrid& grid, int k1, int k2) {
    if (k1 < 0 || k1 >= grid.r1 || k2 < 0 || k2 >= grid.r2)
        throw std::out_of_range("pixel index out of range");
    return Rect{
        (2.0 * k1 - grid.r1) / grid.r1,
        (2.0 * (k1 + 1) - grid.r1) / grid.r1,
        (2.0 * k2 - grid.r2) / grid.r2,
        (2.0 * (k2 + 1) - grid.r2) / grid.r2,
    };
}

/// A pixel region: the uniform rectangle plus the layout under which its
/// deformed image A_k = phi(U_k, theta) is interpreted.
struct PixelRegion {
    int k1 = 0;
    int k2 = 0;
    Rect uniform_bounds{-1.0, 1.0, -1.0, 1.0};
    LayoutParams layout;

    PixelRegion() = default;
    PixelRegion(const SensorGrid& grid, int k1_, int k2_, const LayoutParams& params)
        : k1(k1_), k2(k2_), uniform_bounds(uniform_pixel_bounds(grid, k1_, k2_)), layout(params) {}
};

enum class Edge : int { Bottom = 0, Right = 1, Top = 2, Left = 3 };

/// Counter-clockwise parameterization of one edge of the uniform square
/// boundary, with evaluators for the deformed boundary curve r(t, theta),
/// its tangent, outward unit normal and line element.
struct BoundaryParam {
    PixelRegion region;
    Edge edge;

    /// gamma(t), t in [0, 1], affine per edge, CCW around U_k.
    Vec2 gamma(double t) const {
        const Rect& u = region.uniform_bounds;
        switch (edge) {
            case Edge::Bottom: return {u.x0 + t * u.width(), u.y0};
            case Edge::Right:  return {u.x1, u.y0 + t * u.height()};
            case Edge::Top:    return {u.x1 - t * u.width(), u.y1};
            case Edge::Left:   return {u.x0, u.y1 - t * u.height()};
        }
        return {};
    }

    Vec2 gamma_dot() const {
        const Rect& u = region.uniform_bounds;
        switch (edge) {
            case Edge::Bottom: return {u.width(), 0.0};
            case Edge::Right:  return {0.0, u.height()};
            case Edge::Top:    return {-u.width(), 0.0};
            case Edge::Left:   return {0.0, -u.height()};
        }
        return {};
    }

    Vec2 r(double t) const { return deform(gamma(t), region.layout); }

    /// Pushforward tangent: J_phi(gamma(t)) * gamma_dot.
    Vec2 r_dot(double t) const { return jacobian(gamma(t), region.layout) * gamma_dot(); }

    /// Rotated tangent (r_dot2, -r_dot1); outward for CCW traversal.
    /// Equals n_hat * ||r_dot||, so flux integrands can skip normalizing.
    Vec2 normal_scaled(double t) const {
        const Vec2 rd = r_dot(t);
        return {rd.y, -rd.x};
    }

    Vec2 unit_normal(double t) const {
        const Vec2 ns = normal_scaled(t);
        const double len = ns.norm();
        if (len < 1e-12) throw std::runtime_error("degenerate boundary tangent");
        return ns * (1.0 / len);
    }

    double line_element(double t) const { return r_dot(t).norm(); }

    /// d r / d theta columns at parameter t (theta-velocity of the boundary point).
    Mat2 r_dtheta(double t) const { return deform_dtheta(gamma(t), region.layout); }
};

inline BoundaryParam boundary_param(const PixelRegion& region, Edge edge) {
    return BoundaryParam{region, edge};
}

}  // namespace sensim
