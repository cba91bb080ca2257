#include "corrvol/access_analyzer.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_set>

#include "corrvol/ondemand_sampler.hpp"

namespace corrvol {

std::string to_string(Layout layout) {
    return layout == Layout::row_major ? "row_major" : "patch_major";
}

double OccupancyReport::percent_blocks_touched() const {
    return total_blocks == 0 ? 0.0 : 100.0 * static_cast<double>(touched_blocks) / total_blocks;
}

double OccupancyReport::percent_cells_touched() const {
    return total_cells == 0 ? 0.0 : 100.0 * static_cast<double>(touched_cells) / total_cells;
}

AccessLog record_run(const FeatureMap& f1, const FeaturePyramid& pyr,
                     std::span<const CentroidField> iterations, const LookupSpec& spec) {
    AccessLog log;
    for (const CentroidField& c : iterations) {
        (void)lookup_on_demand(f1, pyr, c, spec, Exec::serial, nullptr, &log);
        log.dedupe();  // keeps the raw buffer bounded across iterations
    }
    if (log.levels.empty()) {
        log.levels.resize(spec.levels);
        for (int l = 0; l < spec.levels; ++l)
            log.levels[l] = {f1.height(), f1.width(), pyr.levels[l].height(), pyr.levels[l].width(), {}};
    }
    return log;
}

namespace {

// Maps a linear pixel index of an h x w grid to its block under `layout`.
struct BlockMapper {
    int h, w, block;
    Layout layout;

    std::size_t count() const {
        if (layout == Layout::row_major) {
            const std::size_t cells = static_cast<std::size_t>(block) * block;
            return (static_cast<std::size_t>(h) * w + cells - 1) / cells;
        }
        return static_cast<std::size_t>((h + block - 1) / block) * ((w + block - 1) / block);
    }
    std::size_t operator()(std::int32_t linear) const {
        if (layout == Layout::row_major)
            return static_cast<std::size_t>(linear) / (static_cast<std::size_t>(block) * block);
        const int y = linear / w;
        const int x = linear % w;
        return static_cast<std::size_t>(y / block) * ((w + block - 1) / block) +
               static_cast<std::size_t>(x / block);
    }
};

}  // namespace

OccupancyReport occupancy(const AccessLog& log, int block, Layout layout, int level) {
    if (block < 1) throw Error("occupancy: block must be >= 1");
    const AccessLog::Level& lv = log.levels.at(level);
    const BlockMapper src{lv.src_height, lv.src_width, block, layout};
    const BlockMapper tgt{lv.tgt_height, lv.tgt_width, block, layout};

    OccupancyReport rep;
    rep.block_size = block;
    rep.layout = layout;
    rep.total_blocks = src.count() * tgt.count();
    rep.total_cells = static_cast<std::size_t>(lv.src_height) * lv.src_width *
                      static_cast<std::size_t>(lv.tgt_height) * lv.tgt_width;
    rep.touched_cells = lv.entries.size();

    const std::size_t cols = tgt.count();
    std::unordered_set<std::size_t> touched;
    touched.reserve(lv.entries.size() / 4 + 16);
    for (const auto& [s, t] : lv.entries) touched.insert(src(s) * cols + tgt(t));
    rep.touched_blocks = touched.size();
    return rep;
}

BlockCountMatrix block_counts(const AccessLog& log, int block, Layout layout, int level) {
    if (block < 1) throw Error("block_counts: block must be >= 1");
    const AccessLog::Level& lv = log.levels.at(level);
    const BlockMapper src{lv.src_height, lv.src_width, block, layout};
    const BlockMapper tgt{lv.tgt_height, lv.tgt_width, block, layout};
    BlockCountMatrix m;
    m.rows = src.count();
    m.cols = tgt.count();
    m.counts.assign(m.rows * m.cols, 0);
    for (const auto& [s, t] : lv.entries) ++m.counts[src(s) * m.cols + tgt(t)];
    return m;
}

OccupancySummary summarize(std::span<const OccupancyReport> reports) {
    OccupancySummary out;
    if (reports.empty()) return out;
    out.block_size = reports.front().block_size;
    out.layout = out.block_size == 1 ? "shared" : to_string(reports.front().layout);
    out.samples = reports.size();
    double sum = 0.0;
    for (const auto& r : reports) sum += r.percent_blocks_touched();
    out.mean_percent = sum / static_cast<double>(reports.size());
    if (reports.size() > 1) {
        double sq = 0.0;
        for (const auto& r : reports) {
            const double d = r.percent_blocks_touched() - out.mean_percent;
            sq += d * d;
        }
        out.stdev_percent = std::sqrt(sq / static_cast<double>(reports.size() - 1));
    }
    return out;
}

void write_occupancy_csv(std::ostream& os, std::span<const OccupancySummary> rows) {
    os << kOccupancyCsvSchema << '\n';
    os << "block_size,layout,mean_percent,stdev_percent,samples\n";
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f,%zu\n", r.block_size, r.layout.c_str(),
                      r.mean_percent, r.stdev_percent, r.samples);
        os << buf;
    }
}

void write_block_counts_csv(std::ostream& os, const BlockCountMatrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) os << ',';
            os << m.counts[i * m.cols + j];
        }
        os << '\n';
    }
}

}  // namespace corrvol
