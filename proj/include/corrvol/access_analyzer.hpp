#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "corrvol/types.hpp"

namespace corrvol {

enum class Layout { row_major, patch_major };

std::string to_string(Layout layout);

/// Block occupancy of a single access log.
struct OccupancyReport {
    int block_size = 1;
    Layout layout = Layout::patch_major;
    std::size_t touched_blocks = 0;
    std::size_t total_blocks = 0;
    std::size_t touched_cells = 0;
    std::size_t total_cells = 0;

    double percent_blocks_touched() const;
    double percent_cells_touched() const;
};

/// Mean +- sample standard deviation of block occupancy over a corpus.
struct OccupancySummary {
    int block_size = 1;
    std::string layout;  // "row_major", "patch_major" or "shared" (B = 1)
    double mean_percent = 0.0;
    double stdev_percent = 0.0;
    std::size_t samples = 0;
};

/// Runs the instrumented on-demand sampler over every iteration and returns
/// the deduplicated union of touched (source, target) cells per level.
AccessLog record_run(const FeatureMap& f1, const FeaturePyramid& pyr,
                     std::span<const CentroidField> iterations, const LookupSpec& spec);

/// Partitions the level's [src cells] x [target cells] volume into B^2 x B^2
/// blocks under `layout` and counts blocks holding at least one logged cell.
/// `log` must be deduplicated for the cell statistics to be meaningful.
OccupancyReport occupancy(const AccessLog& log, int block, Layout layout, int level = 0);

/// Per-block touched-cell counts, [src blocks] x [target blocks] row-major.
struct BlockCountMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint32_t> counts;
};
BlockCountMatrix block_counts(const AccessLog& log, int block, Layout layout, int level = 0);

OccupancySummary summarize(std::span<const OccupancyReport> reports);

inline constexpr const char* kOccupancyCsvSchema = "# corrvol occupancy v1";
void write_occupancy_csv(std::ostream& os, std::span<const OccupancySummary> rows);
void write_block_counts_csv(std::ostream& os, const BlockCountMatrix& m);

}  // namespace corrvol
