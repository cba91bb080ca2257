#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace corrvol {

/// Selects between the serial reference loop and the OpenMP-parallel loop of
/// a kernel. Both produce bit-identical results; reductions inside a single
/// value are always performed in a fixed order.
enum class Exec { serial, parallel };

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a sparse gather hits a block that was never computed. Indicates
/// a bug in the computation mask, never a user error.
class GatherMiss : public Error {
public:
    using Error::Error;
};

class OutOfMemory : public Error {
public:
    using Error::Error;
};

/// H x W x D feature grid stored row-major in (y, x, d) order.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int height, int width, int dims);
    FeatureMap(int height, int width, int dims, std::vector<float> values);

    int height() const { return height_; }
    int width() const { return width_; }
    int dims() const { return dims_; }
    std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }

    std::span<const float> at(int y, int x) const {
        return {values_.data() + offset(y, x), static_cast<std::size_t>(dims_)};
    }
    std::span<float> at(int y, int x) {
        return {values_.data() + offset(y, x), static_cast<std::size_t>(dims_)};
    }
    std::span<const float> pixel(std::size_t linear) const {
        return {values_.data() + linear * dims_, static_cast<std::size_t>(dims_)};
    }

    std::span<const float> values() const { return values_; }
    std::span<float> values() { return values_; }

private:
    std::size_t offset(int y, int x) const {
        return (static_cast<std::size_t>(y) * width_ + x) * dims_;
    }

    int height_ = 0;
    int width_ = 0;
    int dims_ = 0;
    std::vector<float> values_;
};

/// Level 0 is the input map; level l is pooled l times by 2x2 / stride 2.
struct FeaturePyramid {
    std::vector<FeatureMap> levels;

    int dims() const { return levels.empty() ? 0 : levels.front().dims(); }
    std::size_t size() const { return levels.size(); }
};

struct Vec2 {
    float x = 0.0f;  // column
    float y = 0.0f;  // row
};

/// Continuous level-0 lookup centers, one per source pixel, row-major.
struct CentroidField {
    int height = 0;
    int width = 0;
    std::vector<Vec2> coords;

    CentroidField() = default;
    CentroidField(int h, int w) : height(h), width(w), coords(static_cast<std::size_t>(h) * w) {}

    std::size_t pixels() const { return coords.size(); }
    Vec2& at(int y, int x) { return coords[static_cast<std::size_t>(y) * width + x]; }
    const Vec2& at(int y, int x) const { return coords[static_cast<std::size_t>(y) * width + x]; }

    /// Zero-flow initialization: every centroid sits on its own source pixel.
    static CentroidField identity(int h, int w);
    void validate() const;
};

struct LookupSpec {
    int radius = 4;
    int levels = 4;
    bool normalize = false;  // divide correlations by sqrt(D)

    int window() const { return 2 * radius + 1; }
    int offsets() const { return window() * window(); }
    void validate() const;
};

/// Sampled correlations: per source pixel, levels * (2r+1)^2 values ordered
/// level-major, then dy from -r..r, then dx from -r..r.
struct CostMaps {
    int height = 0;
    int width = 0;
    int levels = 0;
    int radius = 0;
    std::vector<float> values;

    CostMaps() = default;
    CostMaps(int h, int w, const LookupSpec& spec);

    int window() const { return 2 * radius + 1; }
    std::size_t per_pixel() const {
        return static_cast<std::size_t>(levels) * window() * window();
    }
    std::size_t index(std::size_t pixel, int level, int dy, int dx) const {
        const int k = window();
        return pixel * per_pixel() + static_cast<std::size_t>(level) * k * k +
               static_cast<std::size_t>(dy + radius) * k + (dx + radius);
    }
    float at(std::size_t pixel, int level, int dy, int dx) const {
        return values[index(pixel, level, dy, dx)];
    }
};

/// Per-pixel (u horizontal, v vertical) displacements in pixels of this grid.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<Vec2> vectors;  // x = u, y = v

    FlowField() = default;
    FlowField(int h, int w) : height(h), width(w), vectors(static_cast<std::size_t>(h) * w) {}

    std::size_t pixels() const { return vectors.size(); }
    Vec2& at(int y, int x) { return vectors[static_cast<std::size_t>(y) * width + x]; }
    const Vec2& at(int y, int x) const { return vectors[static_cast<std::size_t>(y) * width + x]; }
};

/// (source linear index, target linear index) pairs touched at one pyramid
/// level. Raw entries may repeat; call dedupe() before reporting.
struct AccessLog {
    struct Level {
        int src_height = 0, src_width = 0;
        int tgt_height = 0, tgt_width = 0;
        std::vector<std::pair<std::int32_t, std::int32_t>> entries;
    };
    std::vector<Level> levels;

    void dedupe();
    std::size_t size(int level) const { return levels.at(level).entries.size(); }
};

}  // namespace corrvol
