#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>

#include "corrvol/types.hpp"

namespace corrvol {

/// Pixels whose ground-truth flow magnitude exceeds this count as large motion.
inline constexpr double kLargeMotionThreshold = 128.0;
inline constexpr double kOutlierThreshold = 1.0;

/// Cascaded initialization is meant for inputs whose smaller side exceeds
/// this many pixels. Informational: no code path here runs a model.
inline constexpr int kCascadeMinInputDim = 800;

/// Mean endpoint error.
double epe(const FlowField& pred, const FlowField& gt);

/// Percent of pixels with endpoint error strictly above 1 px.
double outlier_1px(const FlowField& pred, const FlowField& gt);

struct LargeMotionMetrics {
    double outlier_percent = 0.0;
    double epe = 0.0;
    std::size_t pixels = 0;
};

/// Metrics over pixels with |gt| > 128 px; nullopt when no pixel qualifies.
std::optional<LargeMotionMetrics> large_motion_metrics(const FlowField& pred, const FlowField& gt);

struct Rational {
    int num = 1;
    int den = 1;
    double value() const { return static_cast<double>(num) / den; }
};

/// Bilinear spatial resampling to floor(H*s) x floor(W*s) (half-pixel centers,
/// edge clamping), vectors multiplied by s so they stay in output-grid units.
FlowField resample_flow(const FlowField& field, Rational scale);

/// Resamples to an explicit grid; each axis uses its own scale out/in.
FlowField resample_flow_to(const FlowField& field, int height, int width);

/// Seeds the 1/8-grid of a full-resolution pass from the output of a pass run
/// at 1/4 input resolution: that output is downscaled by 1/2.
FlowField cascaded_init(const FlowField& quarter_pass_flow);

/// Same, shaped to an explicit 1/8 grid (handles odd extents).
FlowField cascaded_init(const FlowField& quarter_pass_flow, int grid_height, int grid_width);

struct FlowMetrics {
    double epe = 0.0;
    double outlier_percent = 0.0;
    std::optional<LargeMotionMetrics> large_motion;
    std::size_t pixels = 0;
};

FlowMetrics evaluate_flow(const FlowField& pred, const FlowField& gt);

inline constexpr const char* kMetricsCsvSchema = "# corrvol metrics v1";
/// Rows: metric,value,pixel_count; LM values are "n/a" when undefined.
void write_metrics_csv(std::ostream& os, const FlowMetrics& m);

}  // namespace corrvol
