#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "corrvol/types.hpp"

namespace corrvol {

/// Feature map re-ordered so that every B x B tile is contiguous. Tiles are
/// ordered row-major, and so are the cells inside each tile. The map is
/// zero-padded up to a multiple of B in both axes.
struct PatchMajorFeatures {
    int block = 1;
    int padded_height = 0;
    int padded_width = 0;
    int orig_height = 0;
    int orig_width = 0;
    int dims = 0;
    std::vector<float> values;  // [padded_height * padded_width] x dims

    int tiles_y() const { return padded_height / block; }
    int tiles_x() const { return padded_width / block; }
    int tile_count() const { return tiles_y() * tiles_x(); }
    int tile_cells() const { return block * block; }
    std::size_t rows() const { return static_cast<std::size_t>(padded_height) * padded_width; }

    std::span<const float> row(std::size_t index) const {
        return {values.data() + index * dims, static_cast<std::size_t>(dims)};
    }
    /// True iff flattened row `index` maps to a pixel of the original map.
    bool is_real(std::size_t index) const;
    std::size_t bytes() const { return values.size() * sizeof(float); }
};

struct PixelCoord {
    int y = 0;
    int x = 0;
};

/// Flattened patch-major index of padded-grid cell (y, x).
/// Throws Error when (y, x) lies outside the padded grid.
std::size_t pm_index(int y, int x, int block, int padded_height, int padded_width);

/// Inverse of pm_index.
PixelCoord pm_coord(std::size_t index, int block, int padded_width);

inline int padded_extent(int n, int block) { return ((n + block - 1) / block) * block; }

PatchMajorFeatures to_patch_major(const FeatureMap& f, int block, Exec exec = Exec::parallel);
FeatureMap from_patch_major(const PatchMajorFeatures& p);

}  // namespace corrvol
