#pragma once

#include <cstddef>
#include <vector>

#include "corrvol/bilinear.hpp"
#include "corrvol/types.hpp"

namespace corrvol {

/// [src pixels] x [target pixels] correlation matrix; each row is a
/// tgt_height x tgt_width grid.
struct CorrelationMatrix {
    std::size_t rows = 0;
    int tgt_height = 0;
    int tgt_width = 0;
    std::vector<float> data;

    std::size_t cols() const { return static_cast<std::size_t>(tgt_height) * tgt_width; }
    float at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
    GridView row_grid(std::size_t i) const {
        return {{data.data() + i * cols(), cols()}, tgt_height, tgt_width};
    }
};

/// How the dense pyramid above level 0 is obtained. Both give the same operator
/// in exact arithmetic; `pool_features` reproduces the accumulation order of the
/// on-demand and block-sparse samplers bit for bit.
enum class PyramidMode { pool_volume, pool_features };

struct DenseCorrelationVolume {
    int src_height = 0;
    int src_width = 0;
    int dims = 0;
    std::vector<CorrelationMatrix> levels;

    std::size_t bytes() const;
};

/// C[i][j] = <F1_i, F2_j>, the full all-pairs product.
CorrelationMatrix build_dense_volume(const FeatureMap& f1, const FeatureMap& f2,
                                     Exec exec = Exec::parallel);

/// 2x2 / stride-2 mean over the target grid of every row. Odd trailing
/// rows/columns are dropped.
CorrelationMatrix pool_volume(const CorrelationMatrix& level, Exec exec = Exec::parallel);

/// Per-channel 2x2 / stride-2 mean, floor semantics.
FeatureMap avg_pool(const FeatureMap& f);

FeaturePyramid build_feature_pyramid(const FeatureMap& f2, int levels);

DenseCorrelationVolume build_dense_pyramid(const FeatureMap& f1, const FeatureMap& f2, int levels,
                                           PyramidMode mode = PyramidMode::pool_volume,
                                           Exec exec = Exec::parallel);

/// Bytes the dense pyramid would occupy, without building it.
std::size_t dense_pyramid_bytes(int h1, int w1, int h2, int w2, int levels);

/// Bilinear window lookup on the precomputed pyramid. When `log` is given the
/// lookup runs serially and records every in-bounds cell with nonzero weight.
CostMaps lookup_dense(const DenseCorrelationVolume& vol, const CentroidField& centroids,
                      const LookupSpec& spec, Exec exec = Exec::parallel,
                      AccessLog* log = nullptr);

}  // namespace corrvol
