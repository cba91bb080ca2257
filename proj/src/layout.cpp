#include "corrvol/layout.hpp"

#include <algorithm>
#include <string>

namespace corrvol {

namespace {

inline std::size_t pm_index_unchecked(int y, int x, int block, int padded_width) {
    const std::size_t tiles_x = static_cast<std::size_t>(padded_width / block);
    const std::size_t tile = static_cast<std::size_t>(y / block) * tiles_x + (x / block);
    return tile * block * block + static_cast<std::size_t>(y % block) * block + (x % block);
}

}  // namespace

std::size_t pm_index(int y, int x, int block, int padded_height, int padded_width) {
    if (block < 1) throw Error("pm_index: block must be >= 1");
    if (padded_height % block != 0 || padded_width % block != 0)
        throw Error("pm_index: padded extents must be multiples of the block size");
    if (y < 0 || y >= padded_height || x < 0 || x >= padded_width)
        throw Error("pm_index: (" + std::to_string(y) + ", " + std::to_string(x) +
                    ") outside padded grid");
    return pm_index_unchecked(y, x, block, padded_width);
}

PixelCoord pm_coord(std::size_t index, int block, int padded_width) {
    const std::size_t cells = static_cast<std::size_t>(block) * block;
    const std::size_t tile = index / cells;
    const std::size_t inner = index % cells;
    const std::size_t tiles_x = static_cast<std::size_t>(padded_width / block);
    return {static_cast<int>((tile / tiles_x) * block + inner / block),
            static_cast<int>((tile % tiles_x) * block + inner % block)};
}

bool PatchMajorFeatures::is_real(std::size_t index) const {
    const PixelCoord c = pm_coord(index, block, padded_width);
    return c.y < orig_height && c.x < orig_width;
}

PatchMajorFeatures to_patch_major(const FeatureMap& f, int block, Exec exec) {
    if (block < 1) throw Error("to_patch_major: block must be >= 1");
    PatchMajorFeatures p;
    p.block = block;
    p.orig_height = f.height();
    p.orig_width = f.width();
    p.padded_height = padded_extent(f.height(), block);
    p.padded_width = padded_extent(f.width(), block);
    p.dims = f.dims();
    p.values.assign(p.rows() * p.dims, 0.0f);

    const int h = f.height();
    const int w = f.width();
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto src = f.at(y, x);
            const std::size_t dst = pm_index_unchecked(y, x, block, p.padded_width) * p.dims;
            std::copy(src.begin(), src.end(), p.values.begin() + static_cast<std::ptrdiff_t>(dst));
        }
    }
    return p;
}

FeatureMap from_patch_major(const PatchMajorFeatures& p) {
    FeatureMap f(p.orig_height, p.orig_width, p.dims);
    for (int y = 0; y < p.orig_height; ++y) {
        for (int x = 0; x < p.orig_width; ++x) {
            const auto src = p.row(pm_index_unchecked(y, x, p.block, p.padded_width));
            std::copy(src.begin(), src.end(), f.at(y, x).begin());
        }
    }
    return f;
}

}  // namespace corrvol
