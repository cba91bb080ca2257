#include "corrvol/dense_sampler.hpp"

#include <string>

#include "detail.hpp"

namespace corrvol {

std::size_t DenseCorrelationVolume::bytes() const {
    std::size_t total = 0;
    for (const auto& l : levels) total += l.data.size() * sizeof(float);
    return total;
}

CorrelationMatrix build_dense_volume(const FeatureMap& f1, const FeatureMap& f2, Exec exec) {
    if (f1.dims() != f2.dims())
        throw Error("build_dense_volume: feature dims differ (" + std::to_string(f1.dims()) +
                    " vs " + std::to_string(f2.dims()) + ")");
    CorrelationMatrix c;
    c.rows = f1.pixels();
    c.tgt_height = f2.height();
    c.tgt_width = f2.width();
    c.data.resize(c.rows * c.cols());

    const auto rows = static_cast<std::int64_t>(c.rows);
    const std::size_t cols = c.cols();
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t i = 0; i < rows; ++i) {
        const auto a = f1.pixel(static_cast<std::size_t>(i));
        float* out = c.data.data() + static_cast<std::size_t>(i) * cols;
        for (std::size_t j = 0; j < cols; ++j) out[j] = detail::dot(a, f2.pixel(j));
    }
    return c;
}

CorrelationMatrix pool_volume(const CorrelationMatrix& level, Exec exec) {
    if (level.tgt_height < 2 || level.tgt_width < 2)
        throw Error("pool_volume: target grid must be at least 2x2");
    CorrelationMatrix out;
    out.rows = level.rows;
    out.tgt_height = level.tgt_height / 2;
    out.tgt_width = level.tgt_width / 2;
    out.data.resize(out.rows * out.cols());

    const auto rows = static_cast<std::int64_t>(level.rows);
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t i = 0; i < rows; ++i) {
        const GridView g = level.row_grid(static_cast<std::size_t>(i));
        float* dst = out.data.data() + static_cast<std::size_t>(i) * out.cols();
        for (int y = 0; y < out.tgt_height; ++y)
            for (int x = 0; x < out.tgt_width; ++x)
                dst[y * out.tgt_width + x] = (g.at(2 * y, 2 * x) + g.at(2 * y, 2 * x + 1) +
                                              g.at(2 * y + 1, 2 * x) + g.at(2 * y + 1, 2 * x + 1)) *
                                             0.25f;
    }
    return out;
}

FeatureMap avg_pool(const FeatureMap& f) {
    if (f.height() < 2 || f.width() < 2) throw Error("avg_pool: map must be at least 2x2");
    FeatureMap out(f.height() / 2, f.width() / 2, f.dims());
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            const auto a = f.at(2 * y, 2 * x);
            const auto b = f.at(2 * y, 2 * x + 1);
            const auto c = f.at(2 * y + 1, 2 * x);
            const auto d = f.at(2 * y + 1, 2 * x + 1);
            auto dst = out.at(y, x);
            for (int k = 0; k < f.dims(); ++k) dst[k] = (a[k] + b[k] + c[k] + d[k]) * 0.25f;
        }
    }
    return out;
}

FeaturePyramid build_feature_pyramid(const FeatureMap& f2, int levels) {
    if (levels < 1) throw Error("build_feature_pyramid: levels must be >= 1");
    const int shrink = 1 << (levels - 1);
    if (f2.height() / shrink < 1 || f2.width() / shrink < 1)
        throw Error("build_feature_pyramid: " + std::to_string(levels) +
                    " levels would produce an empty level for a " + std::to_string(f2.height()) +
                    "x" + std::to_string(f2.width()) + " map");
    FeaturePyramid p;
    p.levels.reserve(levels);
    p.levels.push_back(f2);
    for (int l = 1; l < levels; ++l) p.levels.push_back(avg_pool(p.levels.back()));
    return p;
}

DenseCorrelationVolume build_dense_pyramid(const FeatureMap& f1, const FeatureMap& f2, int levels,
                                           PyramidMode mode, Exec exec) {
    DenseCorrelationVolume v;
    v.src_height = f1.height();
    v.src_width = f1.width();
    v.dims = f1.dims();
    if (mode == PyramidMode::pool_features) {
        const FeaturePyramid pyr = build_feature_pyramid(f2, levels);
        for (const FeatureMap& lvl : pyr.levels) v.levels.push_back(build_dense_volume(f1, lvl, exec));
        return v;
    }
    // Validates level count against the target extent.
    (void)build_feature_pyramid(FeatureMap(f2.height(), f2.width(), 1), levels);
    v.levels.push_back(build_dense_volume(f1, f2, exec));
    for (int l = 1; l < levels; ++l) v.levels.push_back(pool_volume(v.levels.back(), exec));
    return v;
}

std::size_t dense_pyramid_bytes(int h1, int w1, int h2, int w2, int levels) {
    std::size_t total = 0;
    const std::size_t rows = static_cast<std::size_t>(h1) * w1;
    for (int l = 0; l < levels; ++l)
        total += rows * static_cast<std::size_t>(h2 >> l) * static_cast<std::size_t>(w2 >> l) *
                 sizeof(float);
    return total;
}

CostMaps lookup_dense(const DenseCorrelationVolume& vol, const CentroidField& centroids,
                      const LookupSpec& spec, Exec exec, AccessLog* log) {
    spec.validate();
    centroids.validate();
    if (centroids.height != vol.src_height || centroids.width != vol.src_width)
        throw Error("lookup_dense: centroid field does not cover the source grid");
    if (static_cast<std::size_t>(spec.levels) > vol.levels.size())
        throw Error("lookup_dense: volume has fewer levels than requested");

    CostMaps out(centroids.height, centroids.width, spec);
    const int r = spec.radius;
    const float scale = detail::normalizer(spec, vol.dims);
    const auto n = static_cast<std::int64_t>(centroids.pixels());

    if (log) {
        std::vector<std::pair<int, int>> dims;
        for (int l = 0; l < spec.levels; ++l)
            dims.emplace_back(vol.levels[l].tgt_height, vol.levels[l].tgt_width);
        detail::prepare_log(*log, spec.levels, vol.src_height, vol.src_width, dims);
    }

    const bool par = exec == Exec::parallel && log == nullptr;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto p = static_cast<std::size_t>(i);
        for (int l = 0; l < spec.levels; ++l) {
            const GridView g = vol.levels[l].row_grid(p);
            const detail::TapFrame f = detail::make_frame(centroids.coords[p], l);
            if (log)
                detail::record_support(log->levels[l], p,
                                       detail::support_rect(f, r, g.height, g.width));
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    float v = detail::tap_grid(g, f.x0 + dx, f.y0 + dy, f.fx, f.fy);
                    if (spec.normalize) v *= scale;
                    out.values[out.index(p, l, dy, dx)] = v;
                }
        }
    }
    return out;
}

}  // namespace corrvol
