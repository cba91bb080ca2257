#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "corrvol/layout.hpp"
#include "corrvol/types.hpp"

namespace corrvol {

/// Row-major bit matrix; each row is padded to whole 64-bit words so that
/// distinct rows can be written concurrently.
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t words_per_row() const { return words_per_row_; }

    bool test(std::size_t r, std::size_t c) const {
        return (words_[r * words_per_row_ + c / 64] >> (c % 64)) & 1u;
    }
    void set(std::size_t r, std::size_t c) {
        words_[r * words_per_row_ + c / 64] |= std::uint64_t{1} << (c % 64);
    }
    std::span<const std::uint64_t> row_words(std::size_t r) const {
        return {words_.data() + r * words_per_row_, words_per_row_};
    }
    std::size_t count() const;
    void clear();
    std::size_t bytes() const { return words_.size() * sizeof(std::uint64_t); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t words_per_row_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Which B^2 x B^2 correlation blocks are needed: rows are source tiles,
/// columns are target tiles of one pyramid level (both in row-major tile order).
struct BlockMask {
    int level = 0;
    int src_tiles_y = 0, src_tiles_x = 0;
    int tgt_tiles_y = 0, tgt_tiles_x = 0;
    BitMatrix bits;

    std::size_t src_tiles() const { return static_cast<std::size_t>(src_tiles_y) * src_tiles_x; }
    std::size_t tgt_tiles() const { return static_cast<std::size_t>(tgt_tiles_y) * tgt_tiles_x; }
    std::size_t positions() const { return src_tiles() * tgt_tiles(); }
};

struct StoreConfig {
    double growth_factor = 2.0;
    /// Growth never reserves more than this many bytes beyond current need.
    std::size_t overalloc_cap_bytes = std::size_t{5} << 30;
    /// Total capacity limit; 0 disables. Exceeding it raises OutOfMemory.
    std::size_t hard_limit_bytes = 0;
};

/// Append-only array of B^2 x B^2 float blocks with geometric growth.
class BlockStore {
public:
    BlockStore() = default;
    BlockStore(int block, StoreConfig config);

    int block() const { return block_; }
    std::size_t block_floats() const { return block_floats_; }
    std::size_t block_bytes() const { return block_floats_ * sizeof(float); }
    std::size_t used() const { return used_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t growth_events() const { return growth_events_; }
    const StoreConfig& config() const { return config_; }

    /// Makes room for `additional` more blocks, growing per the policy.
    void reserve_more(std::size_t additional);
    /// Appends `count` zeroed blocks and returns the id of the first one.
    std::size_t append(std::size_t count);
    /// Drops every block but keeps the allocation.
    void clear() { used_ = 0; }

    float* block(std::size_t id) { return data_.data() + id * block_floats_; }
    const float* block(std::size_t id) const { return data_.data() + id * block_floats_; }

private:
    int block_ = 1;
    std::size_t block_floats_ = 1;
    StoreConfig config_;
    std::size_t used_ = 0;
    std::size_t capacity_ = 0;
    std::size_t growth_events_ = 0;
    std::vector<float> data_;
};

struct SparseOptions {
    int block = 8;
    bool caching = true;
    StoreConfig store;
};

/// Wall-clock seconds spent per step, accumulated over all iterations.
struct StepTimes {
    double preprocessing = 0.0;
    double mask = 0.0;
    double indices = 0.0;
    double cache = 0.0;
    double mmm = 0.0;
    double sampling = 0.0;

    double iteration_total() const { return mask + indices + cache + mmm + sampling; }
};

struct SparseLevel {
    PatchMajorFeatures target;  // pooled F2 of this level
    BlockMask computed;         // everything present in the store
    BlockMask last_mask;        // mask requested by the latest iteration
    std::vector<std::int32_t> ids;  // per mask position, -1 if not computed
    BlockStore store;

    std::uint64_t blocks_computed = 0;  // over the whole run, recomputations included
    std::uint64_t dot_products = 0;     // real (non-padding) dot products executed
    std::vector<std::size_t> new_blocks;  // per iteration
};

struct SparseVolumeState {
    LookupSpec spec;
    SparseOptions options;
    int src_height = 0;
    int src_width = 0;
    PatchMajorFeatures source;  // F1, shared by every level
    std::vector<SparseLevel> levels;
    int iteration = 0;
    StepTimes times;

    int block() const { return options.block; }
};

/// One block that must be computed: mask position plus its assigned store id.
struct BlockRef {
    std::int32_t src_tile = 0;
    std::int32_t tgt_tile = 0;
    std::int32_t id = 0;
};

/// (2r+2)^2 gather of exact correlation cells anchored at
/// (floor(y_l) - r, floor(x_l) - r). Cells outside the target grid, and the
/// trailing row/column when the centroid has no fractional part on that axis,
/// carry no bilinear weight and are zero.
struct ProxyBlock {
    int side = 0;
    int y_origin = 0;
    int x_origin = 0;
    std::vector<float> cells;

    float at(int j, int i) const { return cells[static_cast<std::size_t>(j) * side + i]; }
};

struct LevelFootprint {
    std::size_t mask_bytes = 0;
    std::size_t id_bytes = 0;
    std::size_t block_bytes = 0;     // used blocks
    std::size_t capacity_bytes = 0;  // allocated blocks
    std::size_t feature_bytes = 0;
    std::size_t blocks_used = 0;
    std::size_t blocks_capacity = 0;
    std::size_t block_positions = 0;
};

struct MemoryFootprint {
    std::size_t source_feature_bytes = 0;
    std::vector<LevelFootprint> levels;

    std::size_t mask_bytes() const;
    std::size_t block_bytes() const;
    std::size_t capacity_bytes() const;
    std::size_t feature_bytes() const;
    /// Masks + id tables + allocated block capacity + patch-major features.
    std::size_t total_bytes() const;
};

SparseVolumeState init_state(const FeatureMap& f1, const FeatureMap& f2, const LookupSpec& spec,
                             const SparseOptions& options = {});

/// Scatters the bilinear support of every lookup window into the block grid
/// of `level`. Only in-bounds target cells are marked.
BlockMask set_computation_mask(const SparseVolumeState& state, const CentroidField& centroids,
                               int level, Exec exec = Exec::parallel);

/// Assigns store ids to the blocks of `mask` not yet computed, in row-major
/// order continuing after the store's current size, and folds them into the
/// cumulative mask. Returns the newly needed blocks.
std::vector<BlockRef> compute_block_indices(SparseVolumeState& state, int level,
                                            const BlockMask& mask);

/// Grows the level's block store so `refs` can be appended.
void update_cache(SparseVolumeState& state, int level, std::span<const BlockRef> refs);

/// Computes the dot-product blocks for `refs` and appends them at their ids.
/// Returns the number of real dot products executed.
std::uint64_t sampled_block_mmm(SparseVolumeState& state, int level, std::span<const BlockRef> refs,
                                Exec exec = Exec::parallel);

/// Throws GatherMiss if a required block was never computed.
ProxyBlock gather_proxy(const SparseVolumeState& state, int level, std::size_t source_pixel,
                        Vec2 centroid);

/// One full iteration over every level: mask, indices, cache growth, block
/// computation, proxy gather and bilinear sampling.
CostMaps sample_iteration(SparseVolumeState& state, const CentroidField& centroids,
                          Exec exec = Exec::parallel);

MemoryFootprint memory_footprint(const SparseVolumeState& state);

}  // namespace corrvol
