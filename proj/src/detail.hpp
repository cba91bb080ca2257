#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "corrvol/bilinear.hpp"
#include "corrvol/types.hpp"

namespace corrvol::detail {

/// Rectangle of target cells with nonzero bilinear weight for some tap of a
/// (2r+1)^2 window anchored at `frame`, clipped to a tgt_h x tgt_w grid.
/// Empty when lo > hi on either axis.
struct SupportRect {
    int y_lo, y_hi, x_lo, x_hi;
    bool empty() const { return y_lo > y_hi || x_lo > x_hi; }
};

inline SupportRect support_rect(const TapFrame& f, int radius, int tgt_h, int tgt_w) {
    // Anchors are clamped to +-2^28, so these sums stay in range.
    SupportRect s;
    s.y_lo = std::max(f.y0 - radius, 0);
    s.y_hi = std::min(f.y0 + radius + (f.spans_y() ? 1 : 0), tgt_h - 1);
    s.x_lo = std::max(f.x0 - radius, 0);
    s.x_hi = std::min(f.x0 + radius + (f.spans_x() ? 1 : 0), tgt_w - 1);
    return s;
}

inline void prepare_log(AccessLog& log, int levels, int src_h, int src_w,
                        const std::vector<std::pair<int, int>>& tgt_dims) {
    if (log.levels.size() < static_cast<std::size_t>(levels)) log.levels.resize(levels);
    for (int l = 0; l < levels; ++l) {
        AccessLog::Level& lv = log.levels[l];
        lv.src_height = src_h;
        lv.src_width = src_w;
        lv.tgt_height = tgt_dims[l].first;
        lv.tgt_width = tgt_dims[l].second;
    }
}

inline void record_support(AccessLog::Level& lv, std::size_t src, const SupportRect& s) {
    if (s.empty()) return;
    for (int y = s.y_lo; y <= s.y_hi; ++y)
        for (int x = s.x_lo; x <= s.x_hi; ++x)
            lv.entries.emplace_back(static_cast<std::int32_t>(src),
                                    static_cast<std::int32_t>(y * lv.tgt_width + x));
}

inline float normalizer(const LookupSpec& spec, int dims) {
    return spec.normalize ? 1.0f / std::sqrt(static_cast<float>(dims)) : 1.0f;
}

}  // namespace corrvol::detail
