#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "corrvol/dense_sampler.hpp"
#include "corrvol/sparse_sampler.hpp"
#include "corrvol/types.hpp"

namespace corrvol {

struct ScenarioConfig {
    int height = 16;
    int width = 16;
    int dims = 8;
    LookupSpec spec{4, 2, false};
    int iterations = 8;
    double max_flow = 6.0;     // px, largest ground-truth vector magnitude
    double smoothing = 0.0;    // Gaussian sigma in px; 0 picks min(H, W) / 8
    double noise = 0.25;       // px, per-coordinate jitter, fades as lookups converge
    double feature_scale = 1.0;  // features drawn uniformly from [-scale, scale]
    std::uint64_t seed = 0;
};

/// Synthetic stand-in for the lookup centroids an iterative flow network
/// produces: a smooth random ground-truth flow approached along a monotone
/// convergence schedule.
struct SyntheticScenario {
    ScenarioConfig config;
    FeatureMap f1;
    FeatureMap f2;
    FlowField flow_gt;
    std::vector<double> weights;  // per iteration, weights.front() == 0, weights.back() == 1
    std::vector<CentroidField> centroids;
};

/// Convergence weight of iteration i out of n: 1 - (1 - i/(n-1))^2, and 0 for n == 1.
double convergence_weight(int i, int n);

SyntheticScenario gen_scenario(const ScenarioConfig& config);

/// Largest |a - b| over two cost maps, relative to 1 + max |reference|.
struct Deviation {
    double max_abs = 0.0;
    double max_ref = 0.0;
    std::size_t pixel = 0;
    int level = 0, dy = 0, dx = 0;
    float reference = 0.0f, value = 0.0f;
    bool bitwise_equal = true;

    double relative() const { return max_abs / (1.0 + max_ref); }
    std::string describe() const;
};

Deviation compare_cost_maps(const CostMaps& reference, const CostMaps& value);

struct EquivalenceOptions {
    int block = 4;
    PyramidMode dense_mode = PyramidMode::pool_volume;
    double tolerance = 1e-5;
    bool caching = true;
    Exec exec = Exec::parallel;
};

struct IterationEquivalence {
    Deviation dense_vs_ondemand;
    Deviation dense_vs_sparse;
    Deviation ondemand_vs_sparse;

    double max_relative() const;
};

struct EquivalenceReport {
    double tolerance = 0.0;
    std::vector<IterationEquivalence> iterations;
    bool passed = true;
    std::string failure;  // first tolerance breach, empty when passed

    double max_relative() const;
    bool sparse_bitwise_dense() const;
};

EquivalenceReport run_equivalence(const SyntheticScenario& scenario, const EquivalenceOptions& options);

enum class SamplerId { dense, on_demand, sparse };
std::string to_string(SamplerId id);

struct LevelWork {
    std::uint64_t sparse_dot_products = 0;
    std::uint64_t dense_dot_products = 0;  // P1 * P2_l
    std::size_t touched_blocks = 0;        // union over the run
    std::size_t block_positions = 0;

    double occupancy() const {
        return block_positions == 0 ? 0.0 : static_cast<double>(touched_blocks) / block_positions;
    }
};

/// Percent of per-iteration wall time spent in each step of the sparse sampler.
struct StepShares {
    double mask = 0.0, indices = 0.0, cache = 0.0, mmm = 0.0, sampling = 0.0;
    double sum() const { return mask + indices + cache + mmm + sampling; }
};

struct BenchRecord {
    SamplerId sampler = SamplerId::sparse;
    int height = 0, width = 0, dims = 0;
    int block = 0;
    int iterations = 0;
    int levels = 0, radius = 0;
    bool caching = true;
    bool oom = false;
    std::uint64_t dot_products = 0;
    std::uint64_t blocks_computed = 0;
    std::uint64_t block_positions = 0;  // level 0, B^2 x B^2 blocks of the padded volume
    std::uint64_t new_blocks_first = 0;   // sparse: level-0 blocks computed by iteration 1
    std::uint64_t new_blocks_second = 0;  // sparse: level-0 blocks computed by iteration 2
    double occupancy_percent = 0.0;       // sparse: level-0 union of touched blocks
    std::size_t peak_bytes = 0;
    double wall_seconds = 0.0;
    StepShares shares;
    std::vector<LevelWork> level_work;  // sparse only
};

struct BenchOptions {
    std::vector<SamplerId> samplers{SamplerId::dense, SamplerId::on_demand, SamplerId::sparse};
    std::vector<int> blocks{8};
    bool caching = true;
    bool cache_ablation = false;  // additionally run sparse with caching disabled
    std::size_t dense_limit_bytes = std::size_t{1} << 30;
    StoreConfig store;
    Exec exec = Exec::parallel;
};

std::vector<BenchRecord> run_bench(const SyntheticScenario& scenario, const BenchOptions& options);

inline constexpr const char* kBenchCsvSchema = "# corrvol bench v1";
void write_bench_csv(std::ostream& os, std::span<const BenchRecord> records);

}  // namespace corrvol
