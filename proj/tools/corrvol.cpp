// corrvol: verify, analyze, bench and metrics front end.
//
// Exit codes: 0 ok, 1 verification failed, 2 usage, 3 flow file error,
// 4 invalid input or shape mismatch, 5 out of memory, 6 internal error.

#include <omp.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "corrvol/access_analyzer.hpp"
#include "corrvol/dense_sampler.hpp"
#include "corrvol/flow_io.hpp"
#include "corrvol/harness.hpp"
#include "corrvol/metrics.hpp"

using namespace corrvol;

namespace {

enum Exit { ok = 0, failed = 1, usage = 2, flo_error = 3, bad_input = 4, oom = 5, internal = 6 };

struct Common {
    int threads = 0;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--threads", c.threads, "Worker thread cap (0 = OpenMP default)")
        ->envname("CORRVOL_THREADS")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", c.out, "Write CSV here instead of stdout");
}

void apply_threads(const Common& c) {
    if (c.threads > 0) omp_set_num_threads(c.threads);
}

// Runs `emit` against the --out file or stdout.
template <class F>
void with_output(const Common& c, F&& emit) {
    if (c.out.empty()) {
        emit(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream f(c.out);
    if (!f) throw Error("cannot open output file " + c.out);
    emit(f);
    if (!f) throw Error("write failed for " + c.out);
}

struct Size {
    int height = 0, width = 0;
};

Size parse_size(const std::string& s) {
    Size z;
    char x = 0;
    std::istringstream in(s);
    if (!(in >> z.height >> x >> z.width) || (x != 'x' && x != 'X') || z.height < 1 || z.width < 1 ||
        !in.eof())
        throw CLI::ValidationError("--sizes", "expected HxW, got '" + s + "'");
    return z;
}

Rational parse_scale(const std::string& s) {
    Rational r;
    const auto slash = s.find('/');
    try {
        std::size_t used = 0;
        r.num = std::stoi(s.substr(0, slash), &used);
        if (used != slash && slash != std::string::npos) throw std::invalid_argument(s);
        if (slash != std::string::npos) r.den = std::stoi(s.substr(slash + 1));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--scale", "expected N or N/M, got '" + s + "'");
    }
    if (r.num <= 0 || r.den <= 0) throw CLI::ValidationError("--scale", "scale must be positive");
    return r;
}

struct ScenarioFlags {
    int height = 16, width = 16, dims = 8, radius = 4, levels = 2, iterations = 8;
    std::uint64_t seed = 0;
    double max_flow = 6.0, noise = 0.25;
};

void add_scenario(CLI::App* cmd, ScenarioFlags& s) {
    cmd->add_option("--height", s.height, "Source/target grid height")->capture_default_str();
    cmd->add_option("--width", s.width, "Source/target grid width")->capture_default_str();
    cmd->add_option("--dims,-D", s.dims, "Feature channels")->capture_default_str();
    cmd->add_option("--radius,-r", s.radius, "Lookup radius")->capture_default_str();
    cmd->add_option("--levels,-L", s.levels, "Pyramid levels")->capture_default_str();
    cmd->add_option("--iterations,-N", s.iterations, "Lookup iterations")->capture_default_str();
    cmd->add_option("--seed", s.seed, "Scenario seed")->capture_default_str();
    cmd->add_option("--max-flow", s.max_flow, "Largest ground-truth flow magnitude (px)")->capture_default_str();
    cmd->add_option("--noise", s.noise, "Centroid jitter (px)")->capture_default_str();
}

ScenarioConfig to_config(const ScenarioFlags& s) {
    ScenarioConfig c;
    c.height = s.height;
    c.width = s.width;
    c.dims = s.dims;
    c.spec = {s.radius, s.levels, false};
    c.iterations = s.iterations;
    c.seed = s.seed;
    c.max_flow = s.max_flow;
    c.noise = s.noise;
    return c;
}

// ---------------------------------------------------------------------------

int cmd_verify(const Common& common, const ScenarioFlags& sf, int block, double tolerance,
               const std::string& dense_mode, bool no_cache) {
    apply_threads(common);
    EquivalenceOptions o;
    o.block = block;
    o.tolerance = tolerance;
    o.caching = !no_cache;
    o.dense_mode = dense_mode == "features" ? PyramidMode::pool_features : PyramidMode::pool_volume;
    const EquivalenceReport rep = run_equivalence(gen_scenario(to_config(sf)), o);

    with_output(common, [&](std::ostream& os) {
        os << "# corrvol verify v1\n"
           << "iteration,dense_vs_on_demand,dense_vs_sparse,on_demand_vs_sparse,max_relative,"
              "sparse_bitwise_dense\n";
        char buf[256];
        for (std::size_t i = 0; i < rep.iterations.size(); ++i) {
            const IterationEquivalence& e = rep.iterations[i];
            std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%d\n", i, e.dense_vs_ondemand.relative(),
                          e.dense_vs_sparse.relative(), e.ondemand_vs_sparse.relative(), e.max_relative(),
                          e.dense_vs_sparse.bitwise_equal ? 1 : 0);
            os << buf;
        }
    });
    std::fprintf(stderr, "verify %dx%d D=%d r=%d L=%d B=%d N=%d seed=%llu: max relative deviation %.3g (tolerance %.3g) %s\n",
                 sf.height, sf.width, sf.dims, sf.radius, sf.levels, block, sf.iterations,
                 static_cast<unsigned long long>(sf.seed), rep.max_relative(), tolerance,
                 rep.passed ? "PASS" : "FAIL");
    if (!rep.passed) {
        std::fprintf(stderr, "first breach: %s\n", rep.failure.c_str());
        return failed;
    }
    return ok;
}

int cmd_analyze(const Common& common, const ScenarioFlags& sf, int seeds, const std::vector<int>& blocks,
                const std::vector<std::string>& layouts, const std::string& counts_path, int counts_block) {
    apply_threads(common);
    std::vector<Layout> lays;
    for (const auto& l : layouts) lays.push_back(l == "row_major" ? Layout::row_major : Layout::patch_major);

    // reports[b][layout] over seeds
    std::vector<std::vector<std::vector<OccupancyReport>>> reports(
        blocks.size(), std::vector<std::vector<OccupancyReport>>(lays.size()));
    for (int k = 0; k < seeds; ++k) {
        ScenarioFlags f = sf;
        f.seed = sf.seed + static_cast<std::uint64_t>(k);
        const ScenarioConfig cfg = to_config(f);
        const SyntheticScenario sc = gen_scenario(cfg);
        const AccessLog log = record_run(sc.f1, build_feature_pyramid(sc.f2, cfg.spec.levels), sc.centroids, cfg.spec);
        for (std::size_t b = 0; b < blocks.size(); ++b)
            for (std::size_t j = 0; j < lays.size(); ++j) reports[b][j].push_back(occupancy(log, blocks[b], lays[j]));
        if (k == 0 && !counts_path.empty()) {
            std::ofstream cf(counts_path);
            if (!cf) throw Error("cannot open " + counts_path);
            write_block_counts_csv(cf, block_counts(log, counts_block, Layout::patch_major));
        }
    }

    std::vector<OccupancySummary> rows;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t j = 0; j < lays.size(); ++j) {
            rows.push_back(summarize(reports[b][j]));
            if (blocks[b] == 1) break;  // layouts coincide
        }
    }
    with_output(common, [&](std::ostream& os) { write_occupancy_csv(os, rows); });
    return ok;
}

int cmd_bench(const Common& common, const ScenarioFlags& sf, const std::vector<std::string>& sizes,
              const std::vector<std::string>& samplers, const std::vector<int>& blocks, const std::string& cache,
              std::size_t dense_limit, std::size_t cache_cap) {
    apply_threads(common);
    BenchOptions o;
    o.samplers.clear();
    for (const auto& s : samplers)
        o.samplers.push_back(s == "dense" ? SamplerId::dense : s == "on_demand" ? SamplerId::on_demand : SamplerId::sparse);
    o.blocks = blocks;
    o.caching = cache != "off";
    o.cache_ablation = cache == "both";
    o.dense_limit_bytes = dense_limit;
    o.store.overalloc_cap_bytes = cache_cap;

    std::vector<Size> grid;
    for (const auto& s : sizes) grid.push_back(parse_size(s));
    if (grid.empty()) grid.push_back({sf.height, sf.width});

    std::vector<BenchRecord> records;
    for (const Size& z : grid) {
        ScenarioFlags f = sf;
        f.height = z.height;
        f.width = z.width;
        const auto recs = run_bench(gen_scenario(to_config(f)), o);
        records.insert(records.end(), recs.begin(), recs.end());
    }
    with_output(common, [&](std::ostream& os) { write_bench_csv(os, records); });
    return ok;
}

int cmd_metrics(const Common& common, const std::string& pred_path, const std::string& gt_path,
                const std::string& scale) {
    apply_threads(common);
    FlowField pred = read_flo(pred_path);
    const FlowField gt = read_flo(gt_path);
    if (!scale.empty()) pred = resample_flow(pred, parse_scale(scale));
    if (pred.height != gt.height || pred.width != gt.width) {
        std::fprintf(stderr, "corrvol metrics: prediction is %dx%d but ground truth is %dx%d\n", pred.height,
                     pred.width, gt.height, gt.width);
        return bad_input;
    }
    const FlowMetrics m = evaluate_flow(pred, gt);
    with_output(common, [&](std::ostream& os) { write_metrics_csv(os, m); });
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Correlation volume samplers: verification, occupancy analysis, benchmarks, flow metrics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "corrvol 1.0.0");

    Common common;

    // verify
    ScenarioFlags vf;
    int v_block = 4;
    double v_tol = 1e-5;
    std::string v_mode = "volume";
    bool v_no_cache = false;
    CLI::App* verify = app.add_subcommand("verify", "Check dense, on-demand and block-sparse lookups agree");
    add_common(verify, common);
    add_scenario(verify, vf);
    verify->add_option("--block,-B", v_block, "Sparse block size")->capture_default_str()->check(CLI::PositiveNumber);
    verify->add_option("--tolerance", v_tol, "Max relative deviation")->capture_default_str()->check(CLI::NonNegativeNumber);
    verify->add_option("--dense-mode", v_mode, "Dense pyramid: pool the volume or the features")
        ->capture_default_str()
        ->check(CLI::IsMember({"volume", "features"}));
    verify->add_flag("--no-cache", v_no_cache, "Recompute every block each iteration");

    // analyze
    ScenarioFlags af;
    af.height = af.width = 64;
    af.iterations = 16;
    af.levels = 1;
    int a_seeds = 20;
    std::vector<int> a_blocks{1, 2, 4, 8, 16};
    std::vector<std::string> a_layouts{"row_major", "patch_major"};
    std::string a_counts;
    int a_counts_block = 8;
    CLI::App* analyze = app.add_subcommand("analyze", "Block occupancy of recorded lookups by block size and layout");
    add_common(analyze, common);
    add_scenario(analyze, af);
    analyze->add_option("--seeds", a_seeds, "Corpus size; seeds run from --seed upward")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    analyze->add_option("--blocks", a_blocks, "Block sizes")->delimiter(',')->capture_default_str()->check(CLI::PositiveNumber);
    analyze->add_option("--layouts", a_layouts, "Layouts")
        ->delimiter(',')
        ->capture_default_str()
        ->check(CLI::IsMember({"row_major", "patch_major"}));
    analyze->add_option("--counts", a_counts, "Also dump the first seed's per-block counts (patch-major) here");
    analyze->add_option("--counts-block", a_counts_block, "Block size for --counts")->capture_default_str();

    // bench
    ScenarioFlags bf;
    std::vector<std::string> b_sizes;
    std::vector<std::string> b_samplers{"dense", "on_demand", "sparse"};
    std::vector<int> b_blocks{8};
    std::string b_cache = "on";
    std::size_t b_dense_limit = std::size_t{1} << 30;
    std::size_t b_cache_cap = std::size_t{5} << 30;
    CLI::App* bench = app.add_subcommand("bench", "Work, memory and time counters per sampler");
    add_common(bench, common);
    add_scenario(bench, bf);
    bench->add_option("--sizes", b_sizes, "Grid sweep, e.g. 16x16,32x32 (overrides --height/--width)")->delimiter(',');
    bench->add_option("--samplers", b_samplers, "Samplers to run")
        ->delimiter(',')
        ->capture_default_str()
        ->check(CLI::IsMember({"dense", "on_demand", "sparse"}));
    bench->add_option("--blocks,-B", b_blocks, "Block sizes")->delimiter(',')->capture_default_str()->check(CLI::PositiveNumber);
    bench->add_option("--cache", b_cache, "Block cache: on, off, or both (ablation)")
        ->capture_default_str()
        ->check(CLI::IsMember({"on", "off", "both"}));
    bench->add_option("--dense-limit-bytes", b_dense_limit, "Dense runs needing more are flagged OOM")->capture_default_str();
    bench->add_option("--cache-cap-bytes", b_cache_cap, "Block store over-allocation cap per level")
        ->envname("CORRVOL_CACHE_CAP_BYTES")
        ->capture_default_str();

    // metrics
    std::string m_pred, m_gt, m_scale;
    CLI::App* metrics = app.add_subcommand("metrics", "EPE, 1px and large-motion metrics of two .flo files");
    add_common(metrics, common);
    metrics->add_option("pred", m_pred, "Predicted flow (.flo)")->required();
    metrics->add_option("gt", m_gt, "Ground-truth flow (.flo)")->required();
    metrics->add_option("--scale", m_scale, "Resample the prediction by N or N/M first");

    // CLI11 drops environment values that fail a check, so reject them here.
    if (const char* env = std::getenv("CORRVOL_THREADS"); env && *env) {
        int n = -1;
        const char* end = env + std::strlen(env);
        const auto [ptr, ec] = std::from_chars(env, end, n);
        if (ec != std::errc{} || ptr != end || n < 0) {
            std::fprintf(stderr, "corrvol: CORRVOL_THREADS must be a non-negative integer, got '%s'\n", env);
            return usage;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*verify) return cmd_verify(common, vf, v_block, v_tol, v_mode, v_no_cache);
        if (*analyze) return cmd_analyze(common, af, a_seeds, a_blocks, a_layouts, a_counts, a_counts_block);
        if (*bench) return cmd_bench(common, bf, b_sizes, b_samplers, b_blocks, b_cache, b_dense_limit, b_cache_cap);
        if (*metrics) return cmd_metrics(common, m_pred, m_gt, m_scale);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "corrvol: %s\n", e.what());
        return usage;
    } catch (const FloError& e) {
        std::fprintf(stderr, "corrvol: %s\n", e.what());
        return flo_error;
    } catch (const OutOfMemory& e) {
        std::fprintf(stderr, "corrvol: out of memory: %s\n", e.what());
        return oom;
    } catch (const GatherMiss& e) {
        std::fprintf(stderr, "corrvol: internal error: %s\n", e.what());
        return internal;
    } catch (const Error& e) {
        std::fprintf(stderr, "corrvol: %s\n", e.what());
        return bad_input;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "corrvol: internal error: %s\n", e.what());
        return internal;
    }
    return usage;
}
