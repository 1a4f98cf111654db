#pragma once

#include <array>
#include <cmath>
#include <ostream>

namespace sensim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    double& operator[](int i) { return i == 0 ? x : y; }
    double operator[](int i) const { return i == 0 ? x : y; }

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }

    double norm() const { return std::hypot(x, y); }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }

    bool operator==(const Vec2&) const = default;
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// RGB triple; also used for per-channel accumulators.
struct Vec3 {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    double& operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }
    double operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }

    Vec3 operator+(const Vec3& o) const { return {r + o.r, g + o.g, b + o.b}; }
    Vec3 operator-(const Vec3& o) const { return {r - o.r, g - o.g, b - o.b}; }
    Vec3 operator*(double s) const { return {r * s, g * s, b * s}; }
    Vec3 operator/(double s) const { return {r / s, g / s, b / s}; }
    Vec3& operator+=(const Vec3& o) { r += o.r; g += o.g; b += o.b; return *this; }

    double dot(const Vec3& o) const { return r * o.r + g * o.g + b * o.b; }
    double max_abs() const { return std::max({std::abs(r), std::abs(g), std::abs(b)}); }

    bool operator==(const Vec3&) const = default;
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Row-major 2x2 matrix.
struct Mat2 {
    double a = 1.0, b = 0.0;  // row 0
    double c = 0.0, d = 1.0;  // row 1

    static Mat2 identity() { return {}; }
    static Mat2 zero() { return {0.0, 0.0, 0.0, 0.0}; }

    double det() const { return a * d - b * c; }

    Vec2 operator*(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }

    Vec2 col(int j) const { return j == 0 ? Vec2{a, c} : Vec2{b, d}; }
    double max_abs() const { return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}); }
};

inline std::ostream& operator<<(std::ostream& os, const Vec2& v) {
    return os << "(" << v.x << ", " << v.y << ")";
}

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.r << ", " << v.g << ", " << v.b << ")";
}

}  // namespace sensim
