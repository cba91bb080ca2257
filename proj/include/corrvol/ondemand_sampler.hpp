#pragma once

#include <cstdint>
#include <span>

#include "corrvol/types.hpp"

namespace corrvol {

struct WorkCount {
    std::uint64_t dot_products = 0;
    std::uint64_t multiply_adds = 0;

    WorkCount& operator+=(const WorkCount& o) {
        dot_products += o.dot_products;
        multiply_adds += o.multiply_adds;
        return *this;
    }
    friend bool operator==(const WorkCount&, const WorkCount&) = default;
};

/// Evaluates every tap directly from the features: up to four fresh dot
/// products per tap, nothing stored or reused. Corners outside the target grid
/// or without bilinear weight are skipped. `work` (optional) accumulates the
/// dot products actually executed; `log` (optional, forces serial execution)
/// records touched cells.
CostMaps lookup_on_demand(const FeatureMap& f1, const FeaturePyramid& pyr,
                          const CentroidField& centroids, const LookupSpec& spec,
                          Exec exec = Exec::parallel, WorkCount* work = nullptr,
                          AccessLog* log = nullptr);

/// Work lookup_on_demand would execute over a sequence of centroid fields,
/// counted from tap geometry alone.
WorkCount count_work_on_demand(const FeaturePyramid& pyr, std::span<const CentroidField> iterations,
                               const LookupSpec& spec);

/// Closed-form upper bound: iterations * H*W * L * (2r+1)^2 * 4 corners * D.
std::uint64_t on_demand_work_bound(int src_height, int src_width, int dims, const LookupSpec& spec,
                                   int iterations);

}  // namespace corrvol
