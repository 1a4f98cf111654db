#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "sensim/image.hpp"
#include "sensim/vec.hpp"

namespace sensim {

/// Continuous radiance function L_i on the sensor domain. Sampling is pure
/// and must be safe to call concurrently. The simulator treats the field as
/// a black box: it never requests spatial derivatives, so fields without
/// them (e.g. path-traced radiance) plug in unchanged.
class RadianceField {
public:
    virtual ~RadianceField() = default;

    /// RGB in [0,1]^3 at p in [-1,1]^2.
    virtual Vec3 sample(Vec2 p) const = 0;

    /// Spatial gradient of the field. The sensor pipeline never calls this;
    /// it exists so tests can prove that claim with a throwing field.
    virtual Vec3 spatial_gradient(Vec2 /*p*/, int /*axis*/) const {
        throw std::logic_error("radiance gradients are not available");
    }
};

class ConstantField final : public RadianceField {
public:
    explicit ConstantField(Vec3 value) : value_(value) {}
    Vec3 sample(Vec2) const override { return value_; }

private:
    Vec3 value_;
};

/// L(p) = (p1+1)/2 on all channels.
class LinearRampField final : public RadianceField {
public:
    Vec3 sample(Vec2 p) const override {
        const double v = (p.x + 1.0) * 0.5;
        return {v, v, v};
    }
};

/// Isotropic Gaussian bump, all channels equal.
class GaussianBlobField final : public RadianceField {
public:
    GaussianBlobField(Vec2 center = {0.0, 0.0}, double sigma = 0.35)
        : center_(center), inv2s2_(1.0 / (2.0 * sigma * sigma)) {}

    Vec3 sample(Vec2 p) const override {
        const Vec2 d = p - center_;
        const double v = std::exp(-(d.x * d.x + d.y * d.y) * inv2s2_);
        return {v, v, v};
    }

private:
    Vec2 center_;
    double inv2s2_;
};

/// Smooth checker pattern: 0.5 + 0.5 sin(pi f (x+1)) sin(pi f (y+1)).
/// The smooth profile keeps the field differentiable, so finite-difference
/// gradient oracles stay well conditioned.
class CheckerboardField final : public RadianceField {
public:
    explicit CheckerboardField(double cells_per_axis = 4.0) : freq_(cells_per_axis) {}

    Vec3 sample(Vec2 p) const override {
        const double v = 0.5 + 0.5 * std::sin(M_PI * freq_ * (p.x + 1.0)) *
                                   std::sin(M_PI * freq_ * (p.y + 1.0));
        return {v, v, v};
    }

private:
    double freq_;
};

/// Bilinear interpolation of a high-resolution image.
class ImageField final : public RadianceField {
public:
    explicit ImageField(SourceImage image) : image_(std::move(image)) {}

    Vec3 sample(Vec2 p) const override { return image_.sample_bilinear(p); }

    const SourceImage& image() const { return image_; }

private:
    SourceImage image_;
};

}  // namespace sensim
