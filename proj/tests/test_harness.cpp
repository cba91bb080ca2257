#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "corrvol/harness.hpp"

using namespace corrvol;

namespace {

ScenarioConfig small_config(std::uint64_t seed = 0) {
    ScenarioConfig c;
    c.height = c.width = 16;
    c.dims = 8;
    c.spec = {2, 2, false};
    c.iterations = 8;
    c.seed = seed;
    return c;
}

const BenchRecord& find(const std::vector<BenchRecord>& recs, SamplerId id, int block, bool caching = true) {
    for (const auto& r : recs)
        if (r.sampler == id && r.block == block && (id != SamplerId::sparse || r.caching == caching)) return r;
    throw std::runtime_error("record not found");
}

}  // namespace

TEST(ConvergenceWeight, EndpointsAndMonotone) {
    EXPECT_EQ(convergence_weight(0, 1), 0.0);
    EXPECT_EQ(convergence_weight(0, 8), 0.0);
    EXPECT_EQ(convergence_weight(7, 8), 1.0);
    for (int i = 1; i < 8; ++i) EXPECT_GT(convergence_weight(i, 8), convergence_weight(i - 1, 8));
}

TEST(GenScenario, SingleIterationNoNoiseIsIdentity) {
    ScenarioConfig c = small_config();
    c.iterations = 1;
    c.noise = 0.0;
    const SyntheticScenario s = gen_scenario(c);
    const CentroidField id = CentroidField::identity(16, 16);
    for (std::size_t i = 0; i < id.pixels(); ++i) {
        EXPECT_EQ(s.centroids[0].coords[i].x, id.coords[i].x);
        EXPECT_EQ(s.centroids[0].coords[i].y, id.coords[i].y);
    }
}

TEST(GenScenario, FinalCentroidsReachGroundTruth) {
    ScenarioConfig c = small_config();
    c.noise = 0.0;
    const SyntheticScenario s = gen_scenario(c);
    EXPECT_EQ(s.weights.back(), 1.0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            const Vec2 f = s.flow_gt.at(y, x), p = s.centroids.back().at(y, x);
            EXPECT_EQ(p.x, float(x + 1.0 * f.x));
            EXPECT_EQ(p.y, float(y + 1.0 * f.y));
        }
}

TEST(GenScenario, FlowScaledToMaxMagnitude) {
    ScenarioConfig c = small_config(3);
    c.max_flow = 5.0;
    const SyntheticScenario s = gen_scenario(c);
    double peak = 0.0;
    for (const Vec2& v : s.flow_gt.vectors) peak = std::max(peak, std::hypot(double(v.x), double(v.y)));
    EXPECT_NEAR(peak, 5.0, 1e-5);
}

TEST(GenScenario, SameSeedBitIdentical) {
    const SyntheticScenario a = gen_scenario(small_config(9)), b = gen_scenario(small_config(9));
    const SyntheticScenario other = gen_scenario(small_config(10));
    bool differs = false;
    for (std::size_t it = 0; it < a.centroids.size(); ++it)
        for (std::size_t i = 0; i < a.centroids[it].pixels(); ++i) {
            EXPECT_EQ(a.centroids[it].coords[i].x, b.centroids[it].coords[i].x);
            EXPECT_EQ(a.centroids[it].coords[i].y, b.centroids[it].coords[i].y);
            differs |= a.centroids[it].coords[i].x != other.centroids[it].coords[i].x;
        }
    EXPECT_TRUE(differs);
}

TEST(GenScenario, RejectsInvalidConfig) {
    ScenarioConfig c = small_config();
    c.iterations = 0;
    EXPECT_THROW(gen_scenario(c), Error);
    c = small_config();
    c.height = 0;
    EXPECT_THROW(gen_scenario(c), Error);
}

TEST(CompareCostMaps, LocatesWorstCell) {
    CostMaps a(2, 1, {1, 2, false}), b(2, 1, {1, 2, false});
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = b.values[i] = 1.0f;
    b.values[a.index(1, 1, 1, -1)] = 1.5f;
    const Deviation d = compare_cost_maps(a, b);
    EXPECT_FALSE(d.bitwise_equal);
    EXPECT_EQ(d.pixel, 1u);
    EXPECT_EQ(d.level, 1);
    EXPECT_EQ(d.dy, 1);
    EXPECT_EQ(d.dx, -1);
    EXPECT_DOUBLE_EQ(d.relative(), 0.5 / 2.0);
    EXPECT_NE(d.describe().find("level 1"), std::string::npos);
}

TEST(RunEquivalence, DefaultScenarioWithinTolerance) {
    const EquivalenceReport r = run_equivalence(gen_scenario(small_config()), {});
    EXPECT_TRUE(r.passed) << r.failure;
    EXPECT_EQ(r.iterations.size(), 8u);
    EXPECT_LE(r.max_relative(), 1e-5);
}

TEST(RunEquivalence, BlockOneMatchedOrderIsExact) {
    EquivalenceOptions o;
    o.block = 1;
    o.dense_mode = PyramidMode::pool_features;
    o.tolerance = 0.0;
    const EquivalenceReport r = run_equivalence(gen_scenario(small_config(4)), o);
    EXPECT_TRUE(r.passed) << r.failure;
    EXPECT_EQ(r.max_relative(), 0.0);
    EXPECT_TRUE(r.sparse_bitwise_dense());
}

TEST(RunEquivalence, ZeroToleranceCatchesVolumePoolingReassociation) {
    EquivalenceOptions o;
    o.tolerance = 0.0;
    const EquivalenceReport r = run_equivalence(gen_scenario(small_config(5)), o);
    EXPECT_FALSE(r.passed);
    EXPECT_NE(r.failure.find("dense vs"), std::string::npos);
    EXPECT_LE(r.max_relative(), 1e-5);
}

TEST(RunEquivalence, RelativeDeviationStableUnderFeatureScaling) {
    ScenarioConfig c = small_config(6);
    const double base = run_equivalence(gen_scenario(c), {}).max_relative();
    c.feature_scale = 1000.0;
    const double scaled = run_equivalence(gen_scenario(c), {}).max_relative();
    EXPECT_LE(scaled, 1e-5);
    ASSERT_GT(base, 0.0);
    EXPECT_LE(scaled, 10.0 * base);
    EXPECT_GE(scaled, base / 10.0);
}

TEST(RunBench, CountersAndInvariants) {
    ScenarioConfig c = small_config(7);
    c.height = c.width = 32;
    c.max_flow = 3.0;
    BenchOptions o;
    o.blocks = {2, 4, 8};
    o.cache_ablation = true;
    const auto recs = run_bench(gen_scenario(c), o);
    ASSERT_EQ(recs.size(), 3u + 1u + 6u);
    for (int B : o.blocks) {
        const BenchRecord& on = find(recs, SamplerId::sparse, B, true);
        const BenchRecord& off = find(recs, SamplerId::sparse, B, false);
        EXPECT_LE(on.level_work[0].touched_blocks, on.block_positions);
        EXPECT_LE(on.new_blocks_first, on.block_positions);
        EXPECT_GE(off.blocks_computed, on.blocks_computed);
        EXPECT_LT(on.new_blocks_second, on.new_blocks_first);
        EXPECT_NEAR(on.shares.sum(), 100.0, 0.1);
        EXPECT_FALSE(on.oom);
        const BenchRecord& dense = find(recs, SamplerId::dense, B);
        EXPECT_EQ(dense.dot_products, 1024u * 1024u);
        EXPECT_EQ(dense.block_positions, on.block_positions);
    }
}

TEST(RunBench, OnDemandWorkLinearInIterations) {
    ScenarioConfig c = small_config(8);
    BenchOptions o;
    o.samplers = {SamplerId::on_demand};
    const SyntheticScenario s = gen_scenario(c);
    SyntheticScenario doubled = s;
    doubled.centroids.insert(doubled.centroids.end(), s.centroids.begin(), s.centroids.end());
    EXPECT_EQ(run_bench(doubled, o)[0].dot_products, 2 * run_bench(s, o)[0].dot_products);
}

TEST(RunBench, DeterministicAcrossRunsAndThreads) {
    const SyntheticScenario s = gen_scenario(small_config(11));
    BenchOptions par, ser;
    par.blocks = ser.blocks = {4};
    ser.exec = Exec::serial;
    const auto a = run_bench(s, par), b = run_bench(s, par), c = run_bench(s, ser);
    ASSERT_EQ(a.size(), c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (const auto* other : {&b[i], &c[i]}) {
            EXPECT_EQ(a[i].dot_products, other->dot_products);
            EXPECT_EQ(a[i].blocks_computed, other->blocks_computed);
            EXPECT_EQ(a[i].new_blocks_first, other->new_blocks_first);
            EXPECT_EQ(a[i].peak_bytes, other->peak_bytes);
            EXPECT_EQ(a[i].occupancy_percent, other->occupancy_percent);
        }
    }
}

TEST(RunBench, DenseOverLimitIsFlagged) {
    BenchOptions o;
    o.samplers = {SamplerId::dense};
    o.dense_limit_bytes = 1024;
    const auto recs = run_bench(gen_scenario(small_config()), o);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_TRUE(recs[0].oom);
    EXPECT_EQ(recs[0].dot_products, 0u);
}

TEST(RunBench, DensePositionsGrowSixteenfoldPerDoubling) {
    BenchOptions o;
    o.samplers = {SamplerId::dense};
    o.dense_limit_bytes = 0;  // counters only
    std::uint64_t last = 0;
    for (int w : {16, 32, 64}) {
        ScenarioConfig c = small_config();
        c.height = w / 2;
        c.width = w;
        c.iterations = 1;
        const auto recs = run_bench(gen_scenario(c), o);
        if (last) EXPECT_EQ(recs[0].block_positions, 16 * last);
        last = recs[0].block_positions;
    }
}

TEST(BenchCsv, HeaderAndRowCount) {
    BenchOptions o;
    o.blocks = {4};
    const auto recs = run_bench(gen_scenario(small_config()), o);
    std::ostringstream os;
    write_bench_csv(os, recs);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# corrvol bench v1");
    std::getline(in, line);
    EXPECT_EQ(line.rfind("sampler,height,width", 0), 0u);
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3);
}
