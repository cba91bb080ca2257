#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "corrvol/access_analyzer.hpp"
#include "corrvol/dense_sampler.hpp"
#include "corrvol/harness.hpp"
#include "corrvol/sparse_sampler.hpp"
#include "test_util.hpp"

using namespace corrvol;
using corrvol::test::random_centroids;
using corrvol::test::random_map;
using corrvol::test::tap_footprint;

namespace {

AccessLog log_of(const FeatureMap& f1, const FeatureMap& f2, const std::vector<CentroidField>& iters,
                 const LookupSpec& spec) {
    return record_run(f1, build_feature_pyramid(f2, spec.levels), iters, spec);
}

}  // namespace

TEST(RecordRun, IntegerCentroidsRadiusZeroOneCellEach) {
    std::mt19937_64 rng(50);
    const FeatureMap a = random_map(rng, 5, 6, 2);
    const AccessLog log = log_of(a, a, {CentroidField::identity(5, 6)}, {0, 1, false});
    ASSERT_EQ(log.size(0), 30u);
    for (const auto& [s, t] : log.levels[0].entries) EXPECT_EQ(s, t);
}

TEST(RecordRun, FractionalCentroidRadiusOneSixteenCells) {
    const FeatureMap a(1, 1, 1), b(10, 10, 1);
    CentroidField c(1, 1);
    c.coords[0] = {4.3f, 5.6f};
    EXPECT_EQ(log_of(a, b, {c}, {1, 1, false}).size(0), 16u);
}

TEST(RecordRun, UnionOfPerIterationFootprints) {
    std::mt19937_64 rng(51);
    const FeatureMap a = random_map(rng, 6, 6, 2), b = random_map(rng, 12, 10, 2);
    const LookupSpec spec{2, 2, false};
    std::vector<CentroidField> iters;
    CentroidField c = random_centroids(rng, 6, 6, -2, 10);
    std::normal_distribution<float> drift(0.0f, 0.4f);
    for (int i = 0; i < 32; ++i) {
        iters.push_back(c);
        for (auto& v : c.coords) {
            v.x += drift(rng);
            v.y += drift(rng);
        }
    }
    const AccessLog log = log_of(a, b, iters, spec);
    for (int l = 0; l < 2; ++l) {
        const int th = 12 >> l, tw = 10 >> l;
        std::set<std::pair<int, int>> expected;
        for (const auto& it : iters)
            for (std::size_t p = 0; p < it.pixels(); ++p)
                for (int cell : tap_footprint(it.coords[p], l, 2, th, tw)) expected.emplace(int(p), cell);
        const std::set<std::pair<int, int>> got(log.levels[l].entries.begin(), log.levels[l].entries.end());
        EXPECT_EQ(got.size(), log.size(l));  // deduplicated
        EXPECT_EQ(got, expected);
    }
}

TEST(Occupancy, EverythingTouchedIsFull) {
    AccessLog log;
    log.levels.push_back({4, 4, 4, 4, {}});
    for (int s = 0; s < 16; ++s)
        for (int t = 0; t < 16; ++t) log.levels[0].entries.emplace_back(s, t);
    for (int B : {1, 2, 4, 8})
        for (Layout layout : {Layout::row_major, Layout::patch_major}) {
            const OccupancyReport r = occupancy(log, B, layout);
            EXPECT_DOUBLE_EQ(r.percent_blocks_touched(), 100.0);
            EXPECT_DOUBLE_EQ(r.percent_cells_touched(), 100.0);
        }
}

TEST(Occupancy, OversizedBlockIsSingleBlock) {
    AccessLog log;
    log.levels.push_back({3, 3, 5, 5, {{4, 7}}});
    for (Layout layout : {Layout::row_major, Layout::patch_major}) {
        const OccupancyReport r = occupancy(log, 16, layout);
        EXPECT_EQ(r.total_blocks, 1u);
        EXPECT_DOUBLE_EQ(r.percent_blocks_touched(), 100.0);
    }
}

TEST(Occupancy, HandCountedBlocks) {
    // 2x4 source and target; B = 2. Source cells 0 and 2 are (0,0) and (0,2).
    AccessLog log;
    log.levels.push_back({2, 4, 2, 4, {{0, 0}, {2, 0}}});
    // Row-major: cells 0 and 2 share block 0 (cells 0..3).
    EXPECT_EQ(occupancy(log, 2, Layout::row_major).touched_blocks, 1u);
    // Patch-major: (0,0) is tile 0, (0,2) is tile 1.
    EXPECT_EQ(occupancy(log, 2, Layout::patch_major).touched_blocks, 2u);
}

TEST(Occupancy, BlockOneLayoutIndependentAndMonotoneInB) {
    std::mt19937_64 rng(52);
    for (int seed = 0; seed < 4; ++seed) {
        ScenarioConfig cfg;
        cfg.height = cfg.width = 32;
        cfg.spec = {3, 1, false};
        cfg.iterations = 6;
        cfg.seed = std::uint64_t(seed);
        const SyntheticScenario sc = gen_scenario(cfg);
        const AccessLog log = log_of(sc.f1, sc.f2, sc.centroids, cfg.spec);
        const OccupancyReport rm1 = occupancy(log, 1, Layout::row_major);
        const OccupancyReport pm1 = occupancy(log, 1, Layout::patch_major);
        EXPECT_EQ(rm1.touched_blocks, pm1.touched_blocks);
        EXPECT_EQ(rm1.touched_blocks, log.size(0));
        for (Layout layout : {Layout::row_major, Layout::patch_major}) {
            double last = 0.0;
            for (int B : {1, 2, 4, 8, 16}) {
                const double p = occupancy(log, B, layout).percent_blocks_touched();
                EXPECT_GE(p, last);
                EXPECT_LE(p, 100.0);
                last = p;
            }
        }
    }
}

TEST(Occupancy, PatchMajorBelowRowMajorOnSmoothFlow) {
    ScenarioConfig cfg;
    cfg.height = cfg.width = 32;
    cfg.spec = {4, 1, false};
    cfg.iterations = 8;
    const SyntheticScenario sc = gen_scenario(cfg);
    const AccessLog log = log_of(sc.f1, sc.f2, sc.centroids, cfg.spec);
    for (int B : {2, 4, 8})
        EXPECT_LT(occupancy(log, B, Layout::patch_major).percent_blocks_touched(),
                  occupancy(log, B, Layout::row_major).percent_blocks_touched())
            << "B=" << B;
}

TEST(Occupancy, LoggedCellsLieInMaskedBlocks) {
    std::mt19937_64 rng(53);
    const FeatureMap a = random_map(rng, 12, 12, 2), b = random_map(rng, 12, 12, 2);
    const LookupSpec spec{2, 2, false};
    const int B = 4;
    SparseVolumeState s = init_state(a, b, spec, {B, true, {}});
    const CentroidField c = random_centroids(rng, 12, 12, -2, 14);
    sample_iteration(s, c);
    const AccessLog log = log_of(a, b, {c}, spec);
    for (int l = 0; l < 2; ++l) {
        const BlockMask& m = s.levels[l].last_mask;
        const int tw = log.levels[l].tgt_width;
        for (const auto& [src, tgt] : log.levels[l].entries) {
            const std::size_t st = std::size_t((src / 12) / B) * m.src_tiles_x + (src % 12) / B;
            const std::size_t tt = std::size_t((tgt / tw) / B) * m.tgt_tiles_x + (tgt % tw) / B;
            EXPECT_TRUE(m.bits.test(st, tt));
        }
    }
}

TEST(BlockCounts, SumToLoggedCells) {
    std::mt19937_64 rng(54);
    const FeatureMap a = random_map(rng, 9, 7, 2);
    const AccessLog log = log_of(a, a, {random_centroids(rng, 9, 7, 0, 8)}, {1, 1, false});
    for (Layout layout : {Layout::row_major, Layout::patch_major}) {
        const BlockCountMatrix m = block_counts(log, 4, layout);
        std::uint64_t total = 0;
        std::size_t nonzero = 0;
        for (auto v : m.counts) {
            total += v;
            nonzero += v ? 1 : 0;
        }
        EXPECT_EQ(total, log.size(0));
        EXPECT_EQ(nonzero, occupancy(log, 4, layout).touched_blocks);
    }
}

TEST(Summary, MeanAndSampleStdev) {
    std::vector<OccupancyReport> reps(3);
    const std::size_t touched[] = {10, 20, 30};
    for (int i = 0; i < 3; ++i) {
        reps[i].block_size = 4;
        reps[i].layout = Layout::row_major;
        reps[i].total_blocks = 100;
        reps[i].touched_blocks = touched[i];
    }
    const OccupancySummary s = summarize(reps);
    EXPECT_DOUBLE_EQ(s.mean_percent, 20.0);
    EXPECT_DOUBLE_EQ(s.stdev_percent, 10.0);
    EXPECT_EQ(s.samples, 3u);
    EXPECT_EQ(s.layout, "row_major");
    reps[0].block_size = 1;
    EXPECT_EQ(summarize(reps).layout, "shared");
}

TEST(Summary, CsvSchema) {
    std::ostringstream os;
    const OccupancySummary row{8, "patch_major", 12.5, 1.25, 20};
    write_occupancy_csv(os, std::span(&row, 1));
    EXPECT_EQ(os.str(),
              "# corrvol occupancy v1\nblock_size,layout,mean_percent,stdev_percent,samples\n"
              "8,patch_major,12.500000,1.250000,20\n");
}
