#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "sensim/layout.hpp"

namespace sensim {

/// Renders the deformed grid lines phi(grid lines of U, theta) as an SVG
/// polyline drawing, each line sampled at samples_per_edge points per pixel
/// edge.
inline std::string layout_svg(const SensorGrid& grid, const LayoutParams& params,
                              int canvas = 512, int samples_per_edge = 32) {
    if (samples_per_edge < 2) throw std::invalid_argument("need at least 2 samples per edge");
    std::ostringstream svg;
    svg.precision(4);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << canvas
        << "\" height=\"" << canvas << "\" viewBox=\"0 0 " << canvas << " " << canvas << "\">\n"
        << "<rect width=\"" << canvas << "\" height=\"" << canvas << "\" fill=\"white\"/>\n";
    auto to_canvas = [&](Vec2 p) {
        return Vec2{(p.x + 1.0) * 0.5 * canvas, (p.y + 1.0) * 0.5 * canvas};
    };
    auto polyline = [&](auto line_point) {
        svg << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
        const int total = samples_per_edge;
        for (int i = 0; i <= total; ++i) {
            const Vec2 q = to_canvas(deform(line_point(static_cast<double>(i) / total), params));
            svg << q.x << "," << q.y << (i == total ? "" : " ");
        }
        svg << "\"/>\n";
    };
    // Vertical grid lines, each drawn as r2 * samples_per_edge segments.
    for (int i = 0; i <= grid.r1; ++i) {
        const double x = (2.0 * i - grid.r1) / grid.r1;
        for (int k2 = 0; k2 < grid.r2; ++k2) {
            const double y0 = (2.0 * k2 - grid.r2) / grid.r2;
            const double h = 2.0 / grid.r2;
            polyline([&](double t) { return Vec2{x, y0 + t * h}; });
        }
    }
    for (int j = 0; j <= grid.r2; ++j) {
        const double y = (2.0 * j - grid.r2) / grid.r2;
        for (int k1 = 0; k1 < grid.r1; ++k1) {
            const double x0 = (2.0 * k1 - grid.r1) / grid.r1;
            const double w = 2.0 / grid.r1;
            polyline([&](double t) { return Vec2{x0 + t * w, y}; });
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

inline void write_layout_svg(const SensorGrid& grid, const LayoutParams& params,
                             const std::string& path, int canvas = 512,
                             int samples_per_edge = 32) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << layout_svg(grid, params, canvas, samples_per_edge);
}

}  // namespace sensim
