#include "corrvol/ondemand_sampler.hpp"

#include "detail.hpp"

namespace corrvol {

namespace {

void check_inputs(const FeatureMap& f1, const FeaturePyramid& pyr, const CentroidField& c,
                  const LookupSpec& spec) {
    spec.validate();
    c.validate();
    if (pyr.levels.empty() || f1.dims() != pyr.dims())
        throw Error("lookup_on_demand: feature dims differ between F1 and the pyramid");
    if (static_cast<std::size_t>(spec.levels) > pyr.size())
        throw Error("lookup_on_demand: pyramid has fewer levels than requested");
    if (c.height != f1.height() || c.width != f1.width())
        throw Error("lookup_on_demand: centroid field does not cover the source grid");
}

// Number of corners a single tap evaluates.
inline int corners_in_bounds(const detail::TapFrame& f, int ix, int iy, int h, int w) {
    const bool x0 = ix >= 0 && ix < w;
    const bool x1 = f.spans_x() && ix + 1 >= 0 && ix + 1 < w;
    const bool y0 = iy >= 0 && iy < h;
    const bool y1 = f.spans_y() && iy + 1 >= 0 && iy + 1 < h;
    return (y0 ? (x0 + x1) : 0) + (y1 ? (x0 + x1) : 0);
}

}  // namespace

CostMaps lookup_on_demand(const FeatureMap& f1, const FeaturePyramid& pyr,
                          const CentroidField& centroids, const LookupSpec& spec, Exec exec,
                          WorkCount* work, AccessLog* log) {
    check_inputs(f1, pyr, centroids, spec);
    CostMaps out(centroids.height, centroids.width, spec);
    const int r = spec.radius;
    const float scale = detail::normalizer(spec, f1.dims());
    const auto n = static_cast<std::int64_t>(centroids.pixels());

    if (log) {
        std::vector<std::pair<int, int>> dims;
        for (int l = 0; l < spec.levels; ++l)
            dims.emplace_back(pyr.levels[l].height(), pyr.levels[l].width());
        detail::prepare_log(*log, spec.levels, f1.height(), f1.width(), dims);
    }

    std::uint64_t dots = 0;
    const bool par = exec == Exec::parallel && log == nullptr;
#pragma omp parallel for schedule(static) reduction(+ : dots) if (par)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto p = static_cast<std::size_t>(i);
        const auto a = f1.pixel(p);
        for (int l = 0; l < spec.levels; ++l) {
            const FeatureMap& tgt = pyr.levels[l];
            const int h = tgt.height();
            const int w = tgt.width();
            const detail::TapFrame f = detail::make_frame(centroids.coords[p], l);
            const detail::SupportRect support = detail::support_rect(f, r, h, w);
            if (support.empty()) continue;  // whole window out of bounds, stays zero
            if (log) detail::record_support(log->levels[l], p, support);

            auto corner = [&](int y, int x) -> float {
                if (y < 0 || y >= h || x < 0 || x >= w) return 0.0f;
                ++dots;
                return detail::dot(a, tgt.at(y, x));
            };
            for (int dy = -r; dy <= r; ++dy) {
                const int iy = f.y0 + dy;
                for (int dx = -r; dx <= r; ++dx) {
                    const int ix = f.x0 + dx;
                    const float v00 = corner(iy, ix);
                    const float v01 = f.spans_x() ? corner(iy, ix + 1) : 0.0f;
                    const float v10 = f.spans_y() ? corner(iy + 1, ix) : 0.0f;
                    const float v11 = f.spans_x() && f.spans_y() ? corner(iy + 1, ix + 1) : 0.0f;
                    float v = detail::combine(v00, v01, v10, v11, f.fx, f.fy);
                    if (spec.normalize) v *= scale;
                    out.values[out.index(p, l, dy, dx)] = v;
                }
            }
        }
    }
    if (work) {
        work->dot_products += dots;
        work->multiply_adds += dots * static_cast<std::uint64_t>(f1.dims());
    }
    return out;
}

WorkCount count_work_on_demand(const FeaturePyramid& pyr, std::span<const CentroidField> iterations,
                               const LookupSpec& spec) {
    spec.validate();
    if (static_cast<std::size_t>(spec.levels) > pyr.size())
        throw Error("count_work_on_demand: pyramid has fewer levels than requested");
    const int r = spec.radius;
    WorkCount total;
    for (const CentroidField& c : iterations) {
        c.validate();
        for (const Vec2& v : c.coords) {
            for (int l = 0; l < spec.levels; ++l) {
                const int h = pyr.levels[l].height();
                const int w = pyr.levels[l].width();
                const detail::TapFrame f = detail::make_frame(v, l);
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx)
                        total.dot_products +=
                            static_cast<std::uint64_t>(corners_in_bounds(f, f.x0 + dx, f.y0 + dy, h, w));
            }
        }
    }
    total.multiply_adds = total.dot_products * static_cast<std::uint64_t>(pyr.dims());
    return total;
}

std::uint64_t on_demand_work_bound(int src_height, int src_width, int dims, const LookupSpec& spec,
                                   int iterations) {
    return static_cast<std::uint64_t>(iterations) * static_cast<std::uint64_t>(src_height) *
           static_cast<std::uint64_t>(src_width) * static_cast<std::uint64_t>(spec.levels) *
           static_cast<std::uint64_t>(spec.offsets()) * 4u * static_cast<std::uint64_t>(dims);
}

}  // namespace corrvol
