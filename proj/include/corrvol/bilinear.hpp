#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "corrvol/types.hpp"

namespace corrvol {

/// Read-only view of a row-major 2D scalar grid.
struct GridView {
    std::span<const float> data;
    int height = 0;
    int width = 0;

    bool contains(int y, int x) const { return y >= 0 && y < height && x >= 0 && x < width; }
    float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Bilinear sample at continuous (x, y) where integer coordinates address
/// cell centers. Neighbors outside the grid contribute zero. Throws Error on
/// non-finite coordinates.
float bilinear_tap(const GridView& grid, float x, float y);

namespace detail {

// Coordinates beyond this are treated as "far out of bounds"; keeps the
// integer arithmetic below from overflowing.
inline constexpr int kCoordLimit = 1 << 28;

/// Integer anchor plus fractional weights of one lookup center. Every sampler
/// derives its taps from the same frame, so the four corner weights are
/// computed identically regardless of which sampler is used.
struct TapFrame {
    int x0 = 0;
    int y0 = 0;
    float fx = 0.0f;
    float fy = 0.0f;

    // A corner column/row beyond the anchor only carries weight when the
    // fractional part is nonzero.
    bool spans_x() const { return fx > 0.0f; }
    bool spans_y() const { return fy > 0.0f; }
};

inline int clamp_floor(float v, float& frac) {
    const double f = std::floor(static_cast<double>(v));
    if (f < -kCoordLimit) {
        frac = 0.0f;
        return -kCoordLimit;
    }
    if (f > kCoordLimit) {
        frac = 0.0f;
        return kCoordLimit;
    }
    frac = v - static_cast<float>(f);
    return static_cast<int>(f);
}

/// Frame of a level-0 centroid viewed at pyramid level `level` (scaled by 2^-level).
inline TapFrame make_frame(Vec2 c, int level) {
    TapFrame t;
    const float xl = std::ldexp(c.x, -level);
    const float yl = std::ldexp(c.y, -level);
    t.x0 = clamp_floor(xl, t.fx);
    t.y0 = clamp_floor(yl, t.fy);
    return t;
}

/// Weighted sum of the four corners (y0,x0) (y0,x0+1) (y0+1,x0) (y0+1,x0+1).
inline float combine(float v00, float v01, float v10, float v11, float fx, float fy) {
    const float gx = 1.0f - fx;
    const float gy = 1.0f - fy;
    return (gx * gy) * v00 + (fx * gy) * v01 + (gx * fy) * v10 + (fx * fy) * v11;
}

/// Plain dot product, ascending channel order.
inline float dot(std::span<const float> a, std::span<const float> b) {
    float acc = 0.0f;
    for (std::size_t d = 0; d < a.size(); ++d) acc += a[d] * b[d];
    return acc;
}

/// Grid tap at integer anchor + fractional weights. Corners outside the grid
/// or without weight read as zero.
inline float tap_grid(const GridView& g, int ix, int iy, float fx, float fy) {
    const bool sx = fx > 0.0f;
    const bool sy = fy > 0.0f;
    const float v00 = g.contains(iy, ix) ? g.at(iy, ix) : 0.0f;
    const float v01 = sx && g.contains(iy, ix + 1) ? g.at(iy, ix + 1) : 0.0f;
    const float v10 = sy && g.contains(iy + 1, ix) ? g.at(iy + 1, ix) : 0.0f;
    const float v11 = sx && sy && g.contains(iy + 1, ix + 1) ? g.at(iy + 1, ix + 1) : 0.0f;
    return combine(v00, v01, v10, v11, fx, fy);
}

inline int floor_div(int a, int b) {
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace detail
}  // namespace corrvol
