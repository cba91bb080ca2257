#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "corrvol/dense_sampler.hpp"
#include "test_util.hpp"

using namespace corrvol;
using corrvol::test::LookupOracle;
using corrvol::test::random_centroids;
using corrvol::test::random_map;

namespace {

double max_abs(std::span<const float> v) {
    double m = 0;
    for (float x : v) m = std::max(m, double(std::abs(x)));
    return m;
}

}  // namespace

TEST(DenseVolume, UnitFeatureSelfCorrelation) {
    const FeatureMap f(1, 1, 2, {1.0f, 0.0f});
    const CorrelationMatrix c = build_dense_volume(f, f);
    ASSERT_EQ(c.data.size(), 1u);
    EXPECT_EQ(c.data[0], 1.0f);
}

TEST(DenseVolume, OrthonormalFeaturesGiveIdentity) {
    const FeatureMap f(1, 2, 2, {1, 0, 0, 1});
    const CorrelationMatrix c = build_dense_volume(f, f);
    EXPECT_EQ(c.data, (std::vector<float>{1, 0, 0, 1}));
}

TEST(DenseVolume, MatchesTripleLoopExactly) {
    std::mt19937_64 rng(1);
    const FeatureMap a = random_map(rng, 3, 3, 4), b = random_map(rng, 3, 3, 4);
    const CorrelationMatrix c = build_dense_volume(a, b);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
            float acc = 0.0f;
            for (int d = 0; d < 4; ++d) acc += a.values()[i * 4 + d] * b.values()[j * 4 + d];
            EXPECT_EQ(c.at(i, j), acc);
        }
}

TEST(DenseVolume, DimensionMismatchThrows) {
    EXPECT_THROW(build_dense_volume(FeatureMap(2, 2, 3), FeatureMap(2, 2, 4)), Error);
}

TEST(DenseVolume, SelfCorrelationIsSymmetric) {
    std::mt19937_64 rng(2);
    const FeatureMap f = random_map(rng, 6, 5, 16);
    const CorrelationMatrix c = build_dense_volume(f, f);
    for (std::size_t i = 0; i < c.rows; ++i)
        for (std::size_t j = 0; j < c.rows; ++j) EXPECT_NEAR(c.at(i, j), c.at(j, i), 1e-6);
}

TEST(DenseVolume, SerialAndParallelBitIdentical) {
    std::mt19937_64 rng(3);
    const FeatureMap a = random_map(rng, 9, 11, 7), b = random_map(rng, 8, 6, 7);
    EXPECT_EQ(build_dense_volume(a, b, Exec::serial).data, build_dense_volume(a, b, Exec::parallel).data);
}

TEST(PoolVolume, MeanOfFour) {
    CorrelationMatrix c{1, 2, 2, {1, 2, 3, 4}};
    const CorrelationMatrix p = pool_volume(c);
    ASSERT_EQ(p.data.size(), 1u);
    EXPECT_FLOAT_EQ(p.data[0], 2.5f);
}

TEST(PoolVolume, ConstantStaysConstant) {
    CorrelationMatrix c{3, 6, 4, std::vector<float>(3 * 24, 1.75f)};
    const CorrelationMatrix p = pool_volume(c);
    EXPECT_EQ(p.tgt_height, 3);
    EXPECT_EQ(p.tgt_width, 2);
    for (float v : p.data) EXPECT_EQ(v, 1.75f);
}

TEST(PoolVolume, OddTargetUsesTopLeftWindow) {
    CorrelationMatrix c{1, 3, 3, {1, 2, 100, 3, 4, 100, 100, 100, 100}};
    const CorrelationMatrix p = pool_volume(c);
    ASSERT_EQ(p.tgt_height, 1);
    ASSERT_EQ(p.tgt_width, 1);
    EXPECT_FLOAT_EQ(p.data[0], 2.5f);
}

TEST(PoolVolume, TooSmallThrows) {
    CorrelationMatrix c{1, 1, 4, {1, 2, 3, 4}};
    EXPECT_THROW(pool_volume(c), Error);
}

TEST(FeaturePyramid, ConstantMapConstantAtEveryLevel) {
    const FeatureMap f(16, 12, 3, std::vector<float>(16 * 12 * 3, -0.5f));
    const FeaturePyramid p = build_feature_pyramid(f, 4);
    ASSERT_EQ(p.size(), 4u);
    for (const auto& l : p.levels)
        for (float v : l.values()) EXPECT_EQ(v, -0.5f);
    EXPECT_EQ(p.levels[3].height(), 2);
    EXPECT_EQ(p.levels[3].width(), 1);
}

TEST(FeaturePyramid, TwoByTwoMean) {
    const FeaturePyramid p = build_feature_pyramid(FeatureMap(2, 2, 1, {1, 2, 3, 4}), 2);
    EXPECT_FLOAT_EQ(p.levels[1].values()[0], 2.5f);
}

TEST(FeaturePyramid, FloorDimensions) {
    std::mt19937_64 rng(4);
    const FeatureMap f = random_map(rng, 5, 6, 2);
    const FeaturePyramid p = build_feature_pyramid(f, 2);
    EXPECT_EQ(p.levels[1].height(), 2);
    EXPECT_EQ(p.levels[1].width(), 3);
    // Oracle pooling on the same input.
    const std::vector<double> in(f.values().begin(), f.values().end());
    const std::vector<double> ref = test::oracle_pool(in, 5, 6, 2);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(p.levels[1].values()[i], ref[i], 1e-6);
}

TEST(FeaturePyramid, EmptyLevelThrows) {
    EXPECT_THROW(build_feature_pyramid(FeatureMap(4, 9, 1), 4), Error);
    EXPECT_THROW(build_feature_pyramid(FeatureMap(4, 9, 1), 0), Error);
    EXPECT_NO_THROW(build_feature_pyramid(FeatureMap(4, 9, 1), 3));
}

TEST(LookupDense, RadiusZeroIntegerCentroidReturnsCell) {
    std::mt19937_64 rng(5);
    const FeatureMap a = random_map(rng, 3, 4, 5), b = random_map(rng, 5, 6, 5);
    const DenseCorrelationVolume v = build_dense_pyramid(a, b, 1);
    CentroidField c(3, 4);
    for (std::size_t i = 0; i < c.pixels(); ++i) c.coords[i] = {float(i % 6), float(i % 5)};
    const CostMaps m = lookup_dense(v, c, {0, 1, false});
    for (std::size_t i = 0; i < c.pixels(); ++i)
        EXPECT_EQ(m.at(i, 0, 0, 0), v.levels[0].at(i, (i % 5) * 6 + (i % 6)));
}

TEST(LookupDense, ConstantVolumeAtCenter) {
    DenseCorrelationVolume v;
    v.src_height = 1;
    v.src_width = 1;
    v.dims = 1;
    v.levels.push_back({1, 7, 7, std::vector<float>(49, 3.0f)});
    CentroidField c(1, 1);
    c.coords[0] = {3.0f, 3.0f};
    const CostMaps m = lookup_dense(v, c, {1, 1, false});
    for (float x : m.values) EXPECT_EQ(x, 3.0f);
}

TEST(LookupDense, MatchesDirectEvaluationOracle) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const FeatureMap a = random_map(rng, 4, 4, 6), b = random_map(rng, 4, 4, 6);
        const CentroidField c = random_centroids(rng, 4, 4, -2.5f, 6.5f);
        const LookupSpec spec{2, 2, false};
        for (PyramidMode mode : {PyramidMode::pool_volume, PyramidMode::pool_features}) {
            const CostMaps m = lookup_dense(build_dense_pyramid(a, b, 2, mode), c, spec);
            const LookupOracle oracle(a, b, 2);
            const double scale = 1.0 + max_abs(m.values);
            for (std::size_t p = 0; p < 16; ++p)
                for (int l = 0; l < 2; ++l)
                    for (int dy = -2; dy <= 2; ++dy)
                        for (int dx = -2; dx <= 2; ++dx)
                            EXPECT_NEAR(m.at(p, l, dy, dx), oracle.lookup(p, c.coords[p], l, dy, dx), 1e-5 * scale);
        }
    }
}

TEST(LookupDense, NormalizeDividesBySqrtDims) {
    std::mt19937_64 rng(7);
    const FeatureMap a = random_map(rng, 3, 3, 9), b = random_map(rng, 3, 3, 9);
    const DenseCorrelationVolume v = build_dense_pyramid(a, b, 1);
    const CentroidField c = random_centroids(rng, 3, 3, 0, 2);
    const CostMaps plain = lookup_dense(v, c, {1, 1, false});
    const CostMaps norm = lookup_dense(v, c, {1, 1, true});
    for (std::size_t i = 0; i < plain.values.size(); ++i) EXPECT_NEAR(norm.values[i], plain.values[i] / 3.0f, 1e-6);
}

TEST(DenseInvariants, PoolingCommutesWithCorrelation) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const FeatureMap a = random_map(rng, 5, 4, 12), b = random_map(rng, 6, 8, 12);
        const CorrelationMatrix pooled = pool_volume(build_dense_volume(a, b));
        const CorrelationMatrix direct = build_dense_volume(a, avg_pool(b));
        ASSERT_EQ(pooled.data.size(), direct.data.size());
        const double scale = max_abs(direct.data);
        for (std::size_t i = 0; i < pooled.data.size(); ++i) EXPECT_NEAR(pooled.data[i], direct.data[i], 1e-6 * scale);
    }
}

TEST(DenseInvariants, ScalingTargetScalesCostMaps) {
    std::mt19937_64 rng(9);
    const FeatureMap a = random_map(rng, 4, 5, 8), b = random_map(rng, 4, 5, 8);
    std::vector<float> scaled(b.values().begin(), b.values().end());
    for (float& x : scaled) x *= 4.0f;  // power of two keeps the scaling exact
    const FeatureMap b4(4, 5, 8, scaled);
    const CentroidField c = random_centroids(rng, 4, 5, -1, 5);
    const LookupSpec spec{2, 2, false};
    const CostMaps m1 = lookup_dense(build_dense_pyramid(a, b, 2), c, spec);
    const CostMaps m4 = lookup_dense(build_dense_pyramid(a, b4, 2), c, spec);
    for (std::size_t i = 0; i < m1.values.size(); ++i) EXPECT_EQ(m4.values[i], 4.0f * m1.values[i]);
}

TEST(DenseInvariants, SerialAndParallelLookupBitIdentical) {
    std::mt19937_64 rng(10);
    const FeatureMap a = random_map(rng, 9, 10, 4), b = random_map(rng, 9, 10, 4);
    const DenseCorrelationVolume v = build_dense_pyramid(a, b, 3);
    const CentroidField c = random_centroids(rng, 9, 10, -3, 12);
    EXPECT_EQ(lookup_dense(v, c, {3, 3, false}, Exec::serial).values,
              lookup_dense(v, c, {3, 3, false}, Exec::parallel).values);
}
