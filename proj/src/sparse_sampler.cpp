#include "corrvol/sparse_sampler.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>

#include "corrvol/dense_sampler.hpp"
#include "detail.hpp"

namespace corrvol {

// ---------------------------------------------------------------------------
// BitMatrix

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64), words_(rows * words_per_row_, 0) {}

std::size_t BitMatrix::count() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

void BitMatrix::clear() { std::fill(words_.begin(), words_.end(), 0); }

// ---------------------------------------------------------------------------
// BlockStore

BlockStore::BlockStore(int block, StoreConfig config)
    : block_(block),
      block_floats_(static_cast<std::size_t>(block) * block * block * block),
      config_(config) {
    if (block < 1) throw Error("BlockStore: block must be >= 1");
    if (!(config.growth_factor >= 1.0)) throw Error("BlockStore: growth factor must be >= 1");
}

void BlockStore::reserve_more(std::size_t additional) {
    const std::size_t needed = used_ + additional;
    if (needed <= capacity_) return;

    const auto grown = static_cast<std::size_t>(
        std::ceil(static_cast<double>(capacity_) * config_.growth_factor));
    std::size_t next = std::max(grown, needed);
    const std::size_t slack_limit = config_.overalloc_cap_bytes / block_bytes();
    if (next - needed > slack_limit) next = needed + slack_limit;
    if (config_.hard_limit_bytes != 0 && next * block_bytes() > config_.hard_limit_bytes) {
        next = needed;
        if (next * block_bytes() > config_.hard_limit_bytes)
            throw OutOfMemory("BlockStore: " + std::to_string(needed) + " blocks (" +
                              std::to_string(needed * block_bytes()) +
                              " bytes) exceed the hard limit of " +
                              std::to_string(config_.hard_limit_bytes) + " bytes");
    }

    std::vector<float> grown_data(next * block_floats_);
    std::copy(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(used_ * block_floats_),
              grown_data.begin());
    data_.swap(grown_data);
    capacity_ = next;
    ++growth_events_;
}

std::size_t BlockStore::append(std::size_t count) {
    reserve_more(count);
    const std::size_t first = used_;
    std::fill(data_.begin() + static_cast<std::ptrdiff_t>(used_ * block_floats_),
              data_.begin() + static_cast<std::ptrdiff_t>((used_ + count) * block_floats_), 0.0f);
    used_ += count;
    return first;
}

// ---------------------------------------------------------------------------
// Footprint

std::size_t MemoryFootprint::mask_bytes() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.mask_bytes + l.id_bytes;
    return n;
}
std::size_t MemoryFootprint::block_bytes() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.block_bytes;
    return n;
}
std::size_t MemoryFootprint::capacity_bytes() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.capacity_bytes;
    return n;
}
std::size_t MemoryFootprint::feature_bytes() const {
    std::size_t n = source_feature_bytes;
    for (const auto& l : levels) n += l.feature_bytes;
    return n;
}
std::size_t MemoryFootprint::total_bytes() const {
    return mask_bytes() + capacity_bytes() + feature_bytes();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

BlockMask empty_mask(const SparseVolumeState& s, int level) {
    const SparseLevel& lv = s.levels[level];
    BlockMask m;
    m.level = level;
    m.src_tiles_y = s.source.tiles_y();
    m.src_tiles_x = s.source.tiles_x();
    m.tgt_tiles_y = lv.target.tiles_y();
    m.tgt_tiles_x = lv.target.tiles_x();
    m.bits = BitMatrix(m.src_tiles(), m.tgt_tiles());
    return m;
}

void check_level(const SparseVolumeState& s, int level) {
    if (level < 0 || static_cast<std::size_t>(level) >= s.levels.size())
        throw Error("sparse sampler: level " + std::to_string(level) + " out of range");
}

// Source tile and in-tile row of source pixel p.
struct SourceSlot {
    std::size_t tile;
    std::size_t inner;
};

inline SourceSlot source_slot(const SparseVolumeState& s, std::size_t p) {
    const int B = s.block();
    const int y = static_cast<int>(p / static_cast<std::size_t>(s.src_width));
    const int x = static_cast<int>(p % static_cast<std::size_t>(s.src_width));
    return {static_cast<std::size_t>(y / B) * s.source.tiles_x() + static_cast<std::size_t>(x / B),
            static_cast<std::size_t>(y % B) * B + static_cast<std::size_t>(x % B)};
}

// Fills `out` ((2r+2)^2 floats) with the proxy block of one pixel at one level.
void gather_into(const SparseVolumeState& s, int level, std::size_t p, const detail::TapFrame& f,
                 float* out) {
    const SparseLevel& lv = s.levels[level];
    const int B = s.block();
    const int r = s.spec.radius;
    const int side = 2 * r + 2;
    const int h = lv.target.orig_height;
    const int w = lv.target.orig_width;
    const std::size_t tgt_tiles = lv.computed.tgt_tiles();
    const SourceSlot src = source_slot(s, p);
    const std::size_t cells = static_cast<std::size_t>(B) * B;

    for (int j = 0; j < side; ++j) {
        const int ty = f.y0 - r + j;
        const bool row_live = ty >= 0 && ty < h && (j < side - 1 || f.spans_y());
        for (int i = 0; i < side; ++i) {
            const int tx = f.x0 - r + i;
            float v = 0.0f;
            if (row_live && tx >= 0 && tx < w && (i < side - 1 || f.spans_x())) {
                const std::size_t t = static_cast<std::size_t>(ty / B) * lv.target.tiles_x() +
                                      static_cast<std::size_t>(tx / B);
                const std::int32_t id = lv.ids[src.tile * tgt_tiles + t];
                if (id < 0)
                    throw GatherMiss("gather: block (src tile " + std::to_string(src.tile) +
                                     ", tgt tile " + std::to_string(t) + ") at level " +
                                     std::to_string(level) + " was never computed (pixel " +
                                     std::to_string(p) + ")");
                const std::size_t inner =
                    static_cast<std::size_t>(ty % B) * B + static_cast<std::size_t>(tx % B);
                v = lv.store.block(static_cast<std::size_t>(id))[src.inner * cells + inner];
            }
            out[static_cast<std::size_t>(j) * side + i] = v;
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Operations

SparseVolumeState init_state(const FeatureMap& f1, const FeatureMap& f2, const LookupSpec& spec,
                             const SparseOptions& options) {
    spec.validate();
    if (options.block < 1) throw Error("init_state: block must be >= 1");
    if (f1.dims() != f2.dims()) throw Error("init_state: feature dims differ between F1 and F2");

    const auto t0 = Clock::now();
    SparseVolumeState s;
    s.spec = spec;
    s.options = options;
    s.src_height = f1.height();
    s.src_width = f1.width();
    s.source = to_patch_major(f1, options.block);

    const FeaturePyramid pyr = build_feature_pyramid(f2, spec.levels);
    s.levels.resize(pyr.size());
    for (std::size_t l = 0; l < pyr.size(); ++l) {
        SparseLevel& lv = s.levels[l];
        lv.target = to_patch_major(pyr.levels[l], options.block);
        lv.store = BlockStore(options.block, options.store);
    }
    for (std::size_t l = 0; l < pyr.size(); ++l) {
        SparseLevel& lv = s.levels[l];
        lv.computed = empty_mask(s, static_cast<int>(l));
        lv.last_mask = empty_mask(s, static_cast<int>(l));
        lv.ids.assign(lv.computed.positions(), -1);
    }
    s.times.preprocessing += seconds_since(t0);
    return s;
}

BlockMask set_computation_mask(const SparseVolumeState& s, const CentroidField& centroids, int level,
                               Exec exec) {
    check_level(s, level);
    centroids.validate();
    if (centroids.height != s.src_height || centroids.width != s.src_width)
        throw Error("set_computation_mask: centroid field does not cover the source grid");

    BlockMask m = empty_mask(s, level);
    const SparseLevel& lv = s.levels[level];
    const int B = s.block();
    const int r = s.spec.radius;
    const int h = lv.target.orig_height;
    const int w = lv.target.orig_width;
    const int tiles_x = m.tgt_tiles_x;
    const auto src_tiles = static_cast<std::int64_t>(m.src_tiles());

    // One source tile per mask row, so rows are written by a single thread.
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic, 4) if (par)
    for (std::int64_t st = 0; st < src_tiles; ++st) {
        const int sy = static_cast<int>(st / m.src_tiles_x) * B;
        const int sx = static_cast<int>(st % m.src_tiles_x) * B;
        const auto row = static_cast<std::size_t>(st);
        for (int y = sy; y < std::min(sy + B, s.src_height); ++y) {
            for (int x = sx; x < std::min(sx + B, s.src_width); ++x) {
                const detail::TapFrame f = detail::make_frame(centroids.at(y, x), level);
                const detail::SupportRect sup = detail::support_rect(f, r, h, w);
                if (sup.empty()) continue;
                for (int ty = sup.y_lo / B; ty <= sup.y_hi / B; ++ty)
                    for (int tx = sup.x_lo / B; tx <= sup.x_hi / B; ++tx)
                        m.bits.set(row, static_cast<std::size_t>(ty) * tiles_x + tx);
            }
        }
    }
    return m;
}

std::vector<BlockRef> compute_block_indices(SparseVolumeState& s, int level, const BlockMask& mask) {
    check_level(s, level);
    SparseLevel& lv = s.levels[level];
    if (mask.positions() != lv.computed.positions())
        throw Error("compute_block_indices: mask shape does not match the level");

    std::vector<BlockRef> fresh;
    auto next = static_cast<std::int32_t>(lv.store.used());
    const std::size_t tgt_tiles = mask.tgt_tiles();
    for (std::size_t st = 0; st < mask.src_tiles(); ++st) {
        const auto req = mask.bits.row_words(st);
        const auto have = lv.computed.bits.row_words(st);
        for (std::size_t wi = 0; wi < req.size(); ++wi) {
            std::uint64_t word = req[wi] & ~have[wi];
            while (word != 0) {
                const std::size_t tt = wi * 64 + static_cast<std::size_t>(std::countr_zero(word));
                word &= word - 1;
                lv.ids[st * tgt_tiles + tt] = next;
                lv.computed.bits.set(st, tt);
                fresh.push_back({static_cast<std::int32_t>(st), static_cast<std::int32_t>(tt), next});
                ++next;
            }
        }
    }
    return fresh;
}

void update_cache(SparseVolumeState& s, int level, std::span<const BlockRef> refs) {
    check_level(s, level);
    s.levels[level].store.reserve_more(refs.size());
}

std::uint64_t sampled_block_mmm(SparseVolumeState& s, int level, std::span<const BlockRef> refs,
                                Exec exec) {
    check_level(s, level);
    SparseLevel& lv = s.levels[level];
    if (refs.empty()) return 0;
    for (std::size_t k = 0; k < refs.size(); ++k)
        if (static_cast<std::size_t>(refs[k].id) != lv.store.used() + k)
            throw Error("sampled_block_mmm: block ids must continue the store contiguously");
    lv.store.append(refs.size());

    const int B = s.block();
    const std::size_t cells = static_cast<std::size_t>(B) * B;
    const PatchMajorFeatures& src = s.source;
    const PatchMajorFeatures& tgt = lv.target;
    const auto n = static_cast<std::int64_t>(refs.size());

    std::uint64_t dots = 0;
    const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : dots) if (par)
    for (std::int64_t k = 0; k < n; ++k) {
        const BlockRef& ref = refs[static_cast<std::size_t>(k)];
        float* out = lv.store.block(static_cast<std::size_t>(ref.id));
        const std::size_t src_base = static_cast<std::size_t>(ref.src_tile) * cells;
        const std::size_t tgt_base = static_cast<std::size_t>(ref.tgt_tile) * cells;
        for (std::size_t u = 0; u < cells; ++u) {
            // Padding rows stay zero; their features are zero vectors.
            if (!src.is_real(src_base + u)) continue;
            const auto a = src.row(src_base + u);
            for (std::size_t v = 0; v < cells; ++v) {
                if (!tgt.is_real(tgt_base + v)) continue;
                out[u * cells + v] = detail::dot(a, tgt.row(tgt_base + v));
                ++dots;
            }
        }
    }
    lv.blocks_computed += refs.size();
    lv.dot_products += dots;
    return dots;
}

ProxyBlock gather_proxy(const SparseVolumeState& s, int level, std::size_t source_pixel,
                        Vec2 centroid) {
    check_level(s, level);
    if (source_pixel >= static_cast<std::size_t>(s.src_height) * s.src_width)
        throw Error("gather_proxy: source pixel out of range");
    if (!std::isfinite(centroid.x) || !std::isfinite(centroid.y))
        throw Error("gather_proxy: non-finite centroid");
    const detail::TapFrame f = detail::make_frame(centroid, level);
    ProxyBlock pb;
    pb.side = 2 * s.spec.radius + 2;
    pb.y_origin = f.y0 - s.spec.radius;
    pb.x_origin = f.x0 - s.spec.radius;
    pb.cells.resize(static_cast<std::size_t>(pb.side) * pb.side);
    gather_into(s, level, source_pixel, f, pb.cells.data());
    return pb;
}

CostMaps sample_iteration(SparseVolumeState& s, const CentroidField& centroids, Exec exec) {
    centroids.validate();
    if (centroids.height != s.src_height || centroids.width != s.src_width)
        throw Error("sample_iteration: centroid field does not cover the source grid");
    const LookupSpec& spec = s.spec;

    for (int l = 0; l < spec.levels; ++l) {
        SparseLevel& lv = s.levels[l];
        auto t0 = Clock::now();
        lv.last_mask = set_computation_mask(s, centroids, l, exec);
        s.times.mask += seconds_since(t0);

        t0 = Clock::now();
        if (!s.options.caching) {
            lv.computed.bits.clear();
            std::fill(lv.ids.begin(), lv.ids.end(), -1);
            lv.store.clear();
        }
        const std::vector<BlockRef> fresh = compute_block_indices(s, l, lv.last_mask);
        s.times.indices += seconds_since(t0);

        t0 = Clock::now();
        update_cache(s, l, fresh);
        s.times.cache += seconds_since(t0);

        t0 = Clock::now();
        sampled_block_mmm(s, l, fresh, exec);
        s.times.mmm += seconds_since(t0);
        lv.new_blocks.push_back(fresh.size());
    }

    const auto t0 = Clock::now();
    CostMaps out(centroids.height, centroids.width, spec);
    const int r = spec.radius;
    const int side = 2 * r + 2;
    const float scale = detail::normalizer(spec, s.source.dims);
    const auto n = static_cast<std::int64_t>(centroids.pixels());
    const bool par = exec == Exec::parallel;
    std::exception_ptr failure;
#pragma omp parallel if (par)
    {
        std::vector<float> proxy(static_cast<std::size_t>(side) * side);
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            const auto p = static_cast<std::size_t>(i);
            try {
                for (int l = 0; l < spec.levels; ++l) {
                    const SparseLevel& lv = s.levels[l];
                    const detail::TapFrame f = detail::make_frame(centroids.coords[p], l);
                    if (detail::support_rect(f, r, lv.target.orig_height, lv.target.orig_width).empty())
                        continue;
                    gather_into(s, l, p, f, proxy.data());
                    const bool sx = f.spans_x();
                    const bool sy = f.spans_y();
                    for (int dy = -r; dy <= r; ++dy) {
                        const float* row0 = proxy.data() + static_cast<std::size_t>(dy + r) * side;
                        const float* row1 = row0 + side;
                        for (int dx = -r; dx <= r; ++dx) {
                            const int c = dx + r;
                            float v = detail::combine(row0[c], sx ? row0[c + 1] : 0.0f,
                                                      sy ? row1[c] : 0.0f,
                                                      sx && sy ? row1[c + 1] : 0.0f, f.fx, f.fy);
                            if (spec.normalize) v *= scale;
                            out.values[out.index(p, l, dy, dx)] = v;
                        }
                    }
                }
            } catch (...) {
#pragma omp critical(corrvol_sample_failure)
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    s.times.sampling += seconds_since(t0);
    ++s.iteration;
    return out;
}

MemoryFootprint memory_footprint(const SparseVolumeState& s) {
    MemoryFootprint fp;
    fp.source_feature_bytes = s.source.bytes();
    for (const SparseLevel& lv : s.levels) {
        LevelFootprint l;
        l.mask_bytes = lv.computed.bits.bytes() + lv.last_mask.bits.bytes();
        l.id_bytes = lv.ids.size() * sizeof(std::int32_t);
        l.block_bytes = lv.store.used() * lv.store.block_bytes();
        l.capacity_bytes = lv.store.capacity() * lv.store.block_bytes();
        l.feature_bytes = lv.target.bytes();
        l.blocks_used = lv.store.used();
        l.blocks_capacity = lv.store.capacity();
        l.block_positions = lv.computed.positions();
        fp.levels.push_back(l);
    }
    return fp;
}

}  // namespace corrvol
