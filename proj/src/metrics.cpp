#include "corrvol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace corrvol {

namespace {

void check_same_shape(const FlowField& a, const FlowField& b, const char* who) {
    if (a.height != b.height || a.width != b.width || a.vectors.size() != b.vectors.size())
        throw Error(std::string(who) + ": flow fields differ in shape (" + std::to_string(a.height) +
                    "x" + std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                    std::to_string(b.width) + ")");
    if (a.vectors.empty()) throw Error(std::string(who) + ": empty flow field");
}

// Per-pixel endpoint errors. Computed in parallel; every reduction over them
// then runs serially in pixel order so results do not depend on thread count.
std::vector<double> endpoint_errors(const FlowField& pred, const FlowField& gt) {
    std::vector<double> e(pred.vectors.size());
    const auto n = static_cast<std::int64_t>(e.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double du = static_cast<double>(pred.vectors[k].x) - gt.vectors[k].x;
        const double dv = static_cast<double>(pred.vectors[k].y) - gt.vectors[k].y;
        e[k] = std::sqrt(du * du + dv * dv);
    }
    return e;
}

inline double magnitude(Vec2 v) {
    const double u = v.x;
    const double w = v.y;
    return std::sqrt(u * u + w * w);
}

FlowField resample_impl(const FlowField& f, int out_h, int out_w, double sy, double sx) {
    if (f.height < 1 || f.width < 1) throw Error("resample_flow: empty input field");
    if (out_h < 1 || out_w < 1)
        throw Error("resample_flow: degenerate output dims " + std::to_string(out_h) + "x" +
                    std::to_string(out_w));
    FlowField out(out_h, out_w);
    const double max_y = f.height - 1;
    const double max_x = f.width - 1;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_h; ++y) {
        const double syc = std::clamp((y + 0.5) / sy - 0.5, 0.0, max_y);
        const int y0 = static_cast<int>(std::floor(syc));
        const int y1 = std::min(y0 + 1, f.height - 1);
        const double wy = syc - y0;
        for (int x = 0; x < out_w; ++x) {
            const double sxc = std::clamp((x + 0.5) / sx - 0.5, 0.0, max_x);
            const int x0 = static_cast<int>(std::floor(sxc));
            const int x1 = std::min(x0 + 1, f.width - 1);
            const double wx = sxc - x0;
            auto lerp2 = [&](float Vec2::*c) {
                const double top = (1 - wx) * (f.at(y0, x0).*c) + wx * (f.at(y0, x1).*c);
                const double bot = (1 - wx) * (f.at(y1, x0).*c) + wx * (f.at(y1, x1).*c);
                return (1 - wy) * top + wy * bot;
            };
            out.at(y, x) = {static_cast<float>(lerp2(&Vec2::x) * sx),
                            static_cast<float>(lerp2(&Vec2::y) * sy)};
        }
    }
    return out;
}

}  // namespace

double epe(const FlowField& pred, const FlowField& gt) {
    check_same_shape(pred, gt, "epe");
    const std::vector<double> e = endpoint_errors(pred, gt);
    double sum = 0.0;
    for (double v : e) sum += v;
    return sum / static_cast<double>(e.size());
}

double outlier_1px(const FlowField& pred, const FlowField& gt) {
    check_same_shape(pred, gt, "outlier_1px");
    const std::vector<double> e = endpoint_errors(pred, gt);
    std::size_t bad = 0;
    for (double v : e) bad += v > kOutlierThreshold ? 1 : 0;
    return 100.0 * static_cast<double>(bad) / static_cast<double>(e.size());
}

std::optional<LargeMotionMetrics> large_motion_metrics(const FlowField& pred, const FlowField& gt) {
    check_same_shape(pred, gt, "large_motion_metrics");
    const std::vector<double> e = endpoint_errors(pred, gt);
    LargeMotionMetrics m;
    double sum = 0.0;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (!(magnitude(gt.vectors[i]) > kLargeMotionThreshold)) continue;
        ++m.pixels;
        sum += e[i];
        bad += e[i] > kOutlierThreshold ? 1 : 0;
    }
    if (m.pixels == 0) return std::nullopt;
    m.epe = sum / static_cast<double>(m.pixels);
    m.outlier_percent = 100.0 * static_cast<double>(bad) / static_cast<double>(m.pixels);
    return m;
}

FlowField resample_flow(const FlowField& field, Rational scale) {
    if (scale.num <= 0 || scale.den <= 0) throw Error("resample_flow: scale must be positive");
    const auto out_h = static_cast<int>(static_cast<std::int64_t>(field.height) * scale.num / scale.den);
    const auto out_w = static_cast<int>(static_cast<std::int64_t>(field.width) * scale.num / scale.den);
    return resample_impl(field, out_h, out_w, scale.value(), scale.value());
}

FlowField resample_flow_to(const FlowField& field, int height, int width) {
    if (field.height < 1 || field.width < 1) throw Error("resample_flow: empty input field");
    return resample_impl(field, height, width, static_cast<double>(height) / field.height,
                         static_cast<double>(width) / field.width);
}

FlowField cascaded_init(const FlowField& quarter_pass_flow) {
    return resample_flow(quarter_pass_flow, Rational{1, 2});
}

FlowField cascaded_init(const FlowField& quarter_pass_flow, int grid_height, int grid_width) {
    // The 1/8 grid must be about half the size of the 1/4-resolution output.
    if (std::abs(2 * grid_height - quarter_pass_flow.height) > 1 ||
        std::abs(2 * grid_width - quarter_pass_flow.width) > 1)
        throw Error("cascaded_init: grid " + std::to_string(grid_height) + "x" +
                    std::to_string(grid_width) + " is not half of " +
                    std::to_string(quarter_pass_flow.height) + "x" +
                    std::to_string(quarter_pass_flow.width));
    return resample_flow_to(quarter_pass_flow, grid_height, grid_width);
}

FlowMetrics evaluate_flow(const FlowField& pred, const FlowField& gt) {
    FlowMetrics m;
    m.epe = epe(pred, gt);
    m.outlier_percent = outlier_1px(pred, gt);
    m.large_motion = large_motion_metrics(pred, gt);
    m.pixels = pred.pixels();
    return m;
}

void write_metrics_csv(std::ostream& os, const FlowMetrics& m) {
    char buf[128];
    os << kMetricsCsvSchema << '\n' << "metric,value,pixel_count\n";
    std::snprintf(buf, sizeof buf, "epe,%.9g,%zu\n", m.epe, m.pixels);
    os << buf;
    std::snprintf(buf, sizeof buf, "outlier_1px,%.9g,%zu\n", m.outlier_percent, m.pixels);
    os << buf;
    if (m.large_motion) {
        std::snprintf(buf, sizeof buf, "lm_outlier_1px,%.9g,%zu\n", m.large_motion->outlier_percent,
                      m.large_motion->pixels);
        os << buf;
        std::snprintf(buf, sizeof buf, "lm_epe,%.9g,%zu\n", m.large_motion->epe, m.large_motion->pixels);
        os << buf;
    } else {
        os << "lm_outlier_1px,n/a,0\nlm_epe,n/a,0\n";
    }
}

}  // namespace corrvol
