#include "corrvol/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include "corrvol/ondemand_sampler.hpp"

namespace corrvol {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<float> gaussian_kernel(double sigma) {
    const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> k(2 * half + 1);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + half] = static_cast<float>(v);
        sum += v;
    }
    for (float& v : k) v = static_cast<float>(v / sum);
    return k;
}

// Separable blur with clamped borders.
std::vector<float> blur(const std::vector<float>& in, int h, int w, double sigma) {
    const std::vector<float> k = gaussian_kernel(sigma);
    const int half = static_cast<int>(k.size() / 2);
    std::vector<float> tmp(in.size()), out(in.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -half; i <= half; ++i)
                acc += k[i + half] * in[y * w + std::clamp(x + i, 0, w - 1)];
            tmp[y * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -half; i <= half; ++i)
                acc += k[i + half] * tmp[std::clamp(y + i, 0, h - 1) * w + x];
            out[y * w + x] = acc;
        }
    return out;
}

FeatureMap random_features(std::mt19937_64& rng, int h, int w, int d, double scale) {
    std::uniform_real_distribution<float> dist(static_cast<float>(-scale), static_cast<float>(scale));
    std::vector<float> v(static_cast<std::size_t>(h) * w * d);
    for (float& x : v) x = dist(rng);
    return FeatureMap(h, w, d, std::move(v));
}

}  // namespace

double convergence_weight(int i, int n) {
    if (n <= 1) return 0.0;
    const double t = static_cast<double>(i) / (n - 1);
    return 1.0 - (1.0 - t) * (1.0 - t);
}

SyntheticScenario gen_scenario(const ScenarioConfig& c) {
    if (c.height < 1 || c.width < 1 || c.dims < 1) throw Error("gen_scenario: invalid dims");
    if (c.iterations < 1) throw Error("gen_scenario: iterations must be >= 1");
    c.spec.validate();

    SyntheticScenario s;
    s.config = c;
    std::mt19937_64 rng(c.seed);
    s.f1 = random_features(rng, c.height, c.width, c.dims, c.feature_scale);
    s.f2 = random_features(rng, c.height, c.width, c.dims, c.feature_scale);

    const std::size_t n = static_cast<std::size_t>(c.height) * c.width;
    std::normal_distribution<float> normal(0.0f, 1.0f);
    std::vector<float> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = normal(rng);
        v[i] = normal(rng);
    }
    const double sigma = c.smoothing > 0.0 ? c.smoothing : std::max(1.0, std::min(c.height, c.width) / 8.0);
    u = blur(u, c.height, c.width, sigma);
    v = blur(v, c.height, c.width, sigma);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::hypot(double(u[i]), double(v[i])));
    const double gain = peak > 0.0 ? c.max_flow / peak : 0.0;
    s.flow_gt = FlowField(c.height, c.width);
    for (std::size_t i = 0; i < n; ++i)
        s.flow_gt.vectors[i] = {static_cast<float>(u[i] * gain), static_cast<float>(v[i] * gain)};

    for (int it = 0; it < c.iterations; ++it) {
        const double w = convergence_weight(it, c.iterations);
        s.weights.push_back(w);
        CentroidField cf(c.height, c.width);
        const double jitter = c.noise * (1.0 - w);
        for (int y = 0; y < c.height; ++y)
            for (int x = 0; x < c.width; ++x) {
                const Vec2 f = s.flow_gt.at(y, x);
                // Always draw so that the sequence does not depend on the noise level.
                const double nx = normal(rng);
                const double ny = normal(rng);
                cf.at(y, x) = {static_cast<float>(x + w * f.x + jitter * nx),
                               static_cast<float>(y + w * f.y + jitter * ny)};
            }
        s.centroids.push_back(std::move(cf));
    }
    return s;
}

std::string Deviation::describe() const {
    std::ostringstream os;
    os << "pixel " << pixel << " level " << level << " offset (dy=" << dy << ", dx=" << dx
       << "): reference " << reference << " vs " << value << " (|diff| " << max_abs
       << ", relative " << relative() << ")";
    return os.str();
}

Deviation compare_cost_maps(const CostMaps& ref, const CostMaps& val) {
    if (ref.values.size() != val.values.size() || ref.levels != val.levels || ref.radius != val.radius)
        throw Error("compare_cost_maps: cost maps differ in shape");
    Deviation d;
    const std::size_t per = ref.per_pixel();
    const int k = ref.window();
    for (std::size_t i = 0; i < ref.values.size(); ++i) {
        const double a = ref.values[i];
        const double b = val.values[i];
        d.max_ref = std::max(d.max_ref, std::abs(a));
        if (!(ref.values[i] == val.values[i])) d.bitwise_equal = false;
        const double diff = std::abs(a - b);
        if (diff > d.max_abs) {
            d.max_abs = diff;
            d.pixel = i / per;
            const std::size_t rem = i % per;
            d.level = static_cast<int>(rem / (static_cast<std::size_t>(k) * k));
            const std::size_t off = rem % (static_cast<std::size_t>(k) * k);
            d.dy = static_cast<int>(off / k) - ref.radius;
            d.dx = static_cast<int>(off % k) - ref.radius;
            d.reference = ref.values[i];
            d.value = val.values[i];
        }
    }
    return d;
}

double IterationEquivalence::max_relative() const {
    return std::max({dense_vs_ondemand.relative(), dense_vs_sparse.relative(),
                     ondemand_vs_sparse.relative()});
}

double EquivalenceReport::max_relative() const {
    double m = 0.0;
    for (const auto& it : iterations) m = std::max(m, it.max_relative());
    return m;
}

bool EquivalenceReport::sparse_bitwise_dense() const {
    return std::all_of(iterations.begin(), iterations.end(),
                       [](const IterationEquivalence& it) { return it.dense_vs_sparse.bitwise_equal; });
}

EquivalenceReport run_equivalence(const SyntheticScenario& sc, const EquivalenceOptions& opt) {
    const LookupSpec& spec = sc.config.spec;
    const DenseCorrelationVolume dense =
        build_dense_pyramid(sc.f1, sc.f2, spec.levels, opt.dense_mode, opt.exec);
    const FeaturePyramid pyr = build_feature_pyramid(sc.f2, spec.levels);
    SparseOptions so;
    so.block = opt.block;
    so.caching = opt.caching;
    SparseVolumeState state = init_state(sc.f1, sc.f2, spec, so);

    EquivalenceReport rep;
    rep.tolerance = opt.tolerance;
    for (std::size_t it = 0; it < sc.centroids.size(); ++it) {
        const CentroidField& c = sc.centroids[it];
        const CostMaps a = lookup_dense(dense, c, spec, opt.exec);
        const CostMaps b = lookup_on_demand(sc.f1, pyr, c, spec, opt.exec);
        const CostMaps s = sample_iteration(state, c, opt.exec);
        IterationEquivalence e{compare_cost_maps(a, b), compare_cost_maps(a, s), compare_cost_maps(b, s)};
        if (rep.passed && e.max_relative() > opt.tolerance) {
            rep.passed = false;
            const Deviation* worst = &e.dense_vs_ondemand;
            const char* which = "dense vs on-demand";
            if (e.dense_vs_sparse.relative() > worst->relative()) {
                worst = &e.dense_vs_sparse;
                which = "dense vs sparse";
            }
            if (e.ondemand_vs_sparse.relative() > worst->relative()) {
                worst = &e.ondemand_vs_sparse;
                which = "on-demand vs sparse";
            }
            rep.failure = "iteration " + std::to_string(it) + ", " + which + ": " + worst->describe();
        }
        rep.iterations.push_back(e);
    }
    return rep;
}

std::string to_string(SamplerId id) {
    switch (id) {
        case SamplerId::dense: return "dense";
        case SamplerId::on_demand: return "on_demand";
        case SamplerId::sparse: return "sparse";
    }
    return "?";
}

namespace {

std::uint64_t block_positions_for(int h1, int w1, int h2, int w2, int block) {
    const auto tiles = [block](int h, int w) {
        return static_cast<std::uint64_t>((h + block - 1) / block) *
               static_cast<std::uint64_t>((w + block - 1) / block);
    };
    return tiles(h1, w1) * tiles(h2, w2);
}

BenchRecord base_record(const SyntheticScenario& sc, SamplerId id, int block) {
    BenchRecord r;
    r.sampler = id;
    r.height = sc.config.height;
    r.width = sc.config.width;
    r.dims = sc.config.dims;
    r.block = block;
    r.iterations = static_cast<int>(sc.centroids.size());
    r.levels = sc.config.spec.levels;
    r.radius = sc.config.spec.radius;
    if (block > 0)
        r.block_positions = block_positions_for(r.height, r.width, r.height, r.width, block);
    return r;
}

BenchRecord bench_dense(const SyntheticScenario& sc, int block, const BenchOptions& opt) {
    BenchRecord r = base_record(sc, SamplerId::dense, block);
    r.caching = false;
    const LookupSpec& spec = sc.config.spec;
    const std::size_t need = dense_pyramid_bytes(r.height, r.width, r.height, r.width, spec.levels);
    if (need > opt.dense_limit_bytes) {
        r.oom = true;
        r.peak_bytes = need;
        return r;
    }
    const auto t0 = Clock::now();
    const DenseCorrelationVolume vol =
        build_dense_pyramid(sc.f1, sc.f2, spec.levels, PyramidMode::pool_volume, opt.exec);
    for (const CentroidField& c : sc.centroids) (void)lookup_dense(vol, c, spec, opt.exec);
    r.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.dot_products = static_cast<std::uint64_t>(sc.f1.pixels()) * sc.f2.pixels();
    r.blocks_computed = r.block_positions;
    r.peak_bytes = vol.bytes();
    return r;
}

BenchRecord bench_on_demand(const SyntheticScenario& sc, const BenchOptions& opt) {
    BenchRecord r = base_record(sc, SamplerId::on_demand, 0);
    r.caching = false;
    const LookupSpec& spec = sc.config.spec;
    const auto t0 = Clock::now();
    const FeaturePyramid pyr = build_feature_pyramid(sc.f2, spec.levels);
    WorkCount work;
    for (const CentroidField& c : sc.centroids)
        (void)lookup_on_demand(sc.f1, pyr, c, spec, opt.exec, &work);
    r.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.dot_products = work.dot_products;
    for (const FeatureMap& l : pyr.levels) r.peak_bytes += l.values().size() * sizeof(float);
    return r;
}

BenchRecord bench_sparse(const SyntheticScenario& sc, int block, bool caching, const BenchOptions& opt) {
    BenchRecord r = base_record(sc, SamplerId::sparse, block);
    r.caching = caching;
    const LookupSpec& spec = sc.config.spec;
    SparseOptions so;
    so.block = block;
    so.caching = caching;
    so.store = opt.store;

    const auto t0 = Clock::now();
    try {
        SparseVolumeState state = init_state(sc.f1, sc.f2, spec, so);
        std::vector<BitMatrix> touched;
        for (const SparseLevel& lv : state.levels)
            touched.emplace_back(lv.computed.bits.rows(), lv.computed.bits.cols());
        for (const CentroidField& c : sc.centroids) {
            (void)sample_iteration(state, c, opt.exec);
            for (std::size_t l = 0; l < state.levels.size(); ++l) {
                const BitMatrix& m = state.levels[l].last_mask.bits;
                for (std::size_t row = 0; row < m.rows(); ++row)
                    for (std::size_t col = 0; col < m.cols(); ++col)
                        if (m.test(row, col)) touched[l].set(row, col);
            }
            r.peak_bytes = std::max(r.peak_bytes, memory_footprint(state).total_bytes());
        }
        r.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

        for (std::size_t l = 0; l < state.levels.size(); ++l) {
            const SparseLevel& lv = state.levels[l];
            LevelWork w;
            w.sparse_dot_products = lv.dot_products;
            w.dense_dot_products = static_cast<std::uint64_t>(sc.f1.pixels()) *
                                   static_cast<std::uint64_t>(lv.target.orig_height) *
                                   static_cast<std::uint64_t>(lv.target.orig_width);
            w.touched_blocks = touched[l].count();
            w.block_positions = lv.computed.positions();
            r.level_work.push_back(w);
            r.dot_products += lv.dot_products;
            r.blocks_computed += lv.blocks_computed;
        }
        const SparseLevel& l0 = state.levels.front();
        if (!l0.new_blocks.empty()) r.new_blocks_first = l0.new_blocks[0];
        if (l0.new_blocks.size() > 1) r.new_blocks_second = l0.new_blocks[1];
        r.occupancy_percent = 100.0 * r.level_work.front().occupancy();

        const StepTimes& t = state.times;
        const double total = t.iteration_total();
        if (total > 0.0) {
            r.shares = {100.0 * t.mask / total, 100.0 * t.indices / total, 100.0 * t.cache / total,
                        100.0 * t.mmm / total, 100.0 * t.sampling / total};
        } else {
            r.shares.mmm = 100.0;
        }
    } catch (const OutOfMemory&) {
        r.oom = true;
    }
    return r;
}

}  // namespace

std::vector<BenchRecord> run_bench(const SyntheticScenario& sc, const BenchOptions& opt) {
    std::vector<BenchRecord> out;
    for (SamplerId id : opt.samplers) {
        switch (id) {
            case SamplerId::dense:
                for (int b : opt.blocks) out.push_back(bench_dense(sc, b, opt));
                break;
            case SamplerId::on_demand:
                out.push_back(bench_on_demand(sc, opt));
                break;
            case SamplerId::sparse:
                for (int b : opt.blocks) {
                    out.push_back(bench_sparse(sc, b, opt.caching, opt));
                    if (opt.cache_ablation) out.push_back(bench_sparse(sc, b, !opt.caching, opt));
                }
                break;
        }
    }
    return out;
}

void write_bench_csv(std::ostream& os, std::span<const BenchRecord> records) {
    os << kBenchCsvSchema << '\n';
    os << "sampler,height,width,dims,block,iterations,levels,radius,caching,oom,dot_products,"
          "blocks_computed,block_positions,new_blocks_iter1,new_blocks_iter2,occupancy_percent,"
          "peak_bytes,wall_seconds,share_mask,share_indices,share_cache,share_mmm,share_sampling\n";
    char buf[512];
    for (const BenchRecord& r : records) {
        std::snprintf(buf, sizeof buf,
                      "%s,%d,%d,%d,%d,%d,%d,%d,%d,%d,%llu,%llu,%llu,%llu,%llu,%.6f,%zu,%.6f,%.3f,%.3f,"
                      "%.3f,%.3f,%.3f\n",
                      to_string(r.sampler).c_str(), r.height, r.width, r.dims, r.block, r.iterations,
                      r.levels, r.radius, r.caching ? 1 : 0, r.oom ? 1 : 0,
                      static_cast<unsigned long long>(r.dot_products),
                      static_cast<unsigned long long>(r.blocks_computed),
                      static_cast<unsigned long long>(r.block_positions),
                      static_cast<unsigned long long>(r.new_blocks_first),
                      static_cast<unsigned long long>(r.new_blocks_second), r.occupancy_percent,
                      r.peak_bytes, r.wall_seconds, r.shares.mask, r.shares.indices, r.shares.cache,
                      r.shares.mmm, r.shares.sampling);
        os << buf;
    }
}

}  // namespace corrvol
