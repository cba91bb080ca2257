#include "corrvol/types.hpp"

#include <algorithm>
#include <cmath>

#include "corrvol/bilinear.hpp"

namespace corrvol {

FeatureMap::FeatureMap(int height, int width, int dims)
    : FeatureMap(height, width, dims,
                 std::vector<float>(static_cast<std::size_t>(std::max(height, 0)) *
                                    std::max(width, 0) * std::max(dims, 0))) {}

FeatureMap::FeatureMap(int height, int width, int dims, std::vector<float> values)
    : height_(height), width_(width), dims_(dims), values_(std::move(values)) {
    if (height < 1 || width < 1 || dims < 1)
        throw Error("FeatureMap: height, width and dims must be >= 1");
    if (values_.size() != static_cast<std::size_t>(height) * width * dims)
        throw Error("FeatureMap: value count does not match H*W*D");
    for (float v : values_)
        if (!std::isfinite(v)) throw Error("FeatureMap: non-finite feature value");
}

CentroidField CentroidField::identity(int h, int w) {
    CentroidField c(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) c.at(y, x) = {static_cast<float>(x), static_cast<float>(y)};
    return c;
}

void CentroidField::validate() const {
    if (height < 1 || width < 1 || coords.size() != static_cast<std::size_t>(height) * width)
        throw Error("CentroidField: inconsistent shape");
    for (const Vec2& c : coords)
        if (!std::isfinite(c.x) || !std::isfinite(c.y))
            throw Error("CentroidField: non-finite centroid");
}

void LookupSpec::validate() const {
    if (radius < 0) throw Error("LookupSpec: radius must be >= 0");
    if (levels < 1) throw Error("LookupSpec: levels must be >= 1");
}

CostMaps::CostMaps(int h, int w, const LookupSpec& spec)
    : height(h), width(w), levels(spec.levels), radius(spec.radius) {
    values.assign(static_cast<std::size_t>(h) * w * per_pixel(), 0.0f);
}

void AccessLog::dedupe() {
    for (Level& l : levels) {
        std::sort(l.entries.begin(), l.entries.end());
        l.entries.erase(std::unique(l.entries.begin(), l.entries.end()), l.entries.end());
    }
}

float bilinear_tap(const GridView& grid, float x, float y) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw Error("bilinear_tap: non-finite coordinate");
    float fx = 0.0f, fy = 0.0f;
    const int ix = detail::clamp_floor(x, fx);
    const int iy = detail::clamp_floor(y, fy);
    return detail::tap_grid(grid, ix, iy, fx, fy);
}

}  // namespace corrvol
