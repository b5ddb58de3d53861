#pragma once

// Min-max normalization fitted on training rows only, and the sliding-window
// construction of supervised (input window, target) pairs. A window never
// spans a segment boundary because windows are cut per gap-free segment.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwcast/model.hpp"
#include "gwcast/timeseries.hpp"

namespace gwcast {

enum class Channel : std::size_t { kRainfall = 0, kTide = 1, kGwl = 2 };

inline const char* channel_name(Channel c) {
    switch (c) {
        case Channel::kRainfall: return "rainfall_mm";
        case Channel::kTide: return "tide_m";
        default: return "gwl_m";
    }
}

// Affine map per channel: fitted min -> 0, fitted max -> 1. Values outside
// the fitted range map outside [0,1]; invert(apply(x)) == x up to rounding.
class Normalizer {
public:
    struct Range {
        double lo = 0.0;
        double hi = 1.0;
    };

    Normalizer() = default;
    explicit Normalizer(const std::array<Range, 3>& ranges) : ranges_(ranges) {
        for (std::size_t i = 0; i < 3; ++i)
            if (!(ranges_[i].hi > ranges_[i].lo))
                throw std::invalid_argument(std::string("Normalizer: channel ") +
                                            channel_name(static_cast<Channel>(i)) +
                                            " has max <= min");
    }

    double apply(Channel c, double x) const {
        const Range& r = ranges_[static_cast<std::size_t>(c)];
        return (x - r.lo) / (r.hi - r.lo);
    }

    double invert(Channel c, double y) const {
        const Range& r = ranges_[static_cast<std::size_t>(c)];
        return r.lo + y * (r.hi - r.lo);
    }

    Range range(Channel c) const { return ranges_[static_cast<std::size_t>(c)]; }

    friend bool operator==(const Normalizer& a, const Normalizer& b) {
        for (std::size_t i = 0; i < 3; ++i)
            if (a.ranges_[i].lo != b.ranges_[i].lo || a.ranges_[i].hi != b.ranges_[i].hi)
                return false;
        return true;
    }

private:
    std::array<Range, 3> ranges_{};
};

// Per-channel min/max over the training rows only. A constant channel makes
// the affine map degenerate and is rejected.
inline Normalizer fit_normalizer(const std::vector<TimeSeriesFrame>& train_segments) {
    bool any = false;
    std::array<Normalizer::Range, 3> ranges;
    for (const auto& seg : train_segments) {
        for (const auto& row : seg.rows) {
            const double vals[3] = {row.rainfall_mm, row.tide_m, row.gwl_m};
            for (std::size_t c = 0; c < 3; ++c) {
                if (!any) {
                    ranges[c].lo = ranges[c].hi = vals[c];
                } else {
                    ranges[c].lo = std::min(ranges[c].lo, vals[c]);
                    ranges[c].hi = std::max(ranges[c].hi, vals[c]);
                }
            }
            any = true;
        }
    }
    if (!any)
        throw std::invalid_argument("fit_normalizer: no training rows");
    for (std::size_t c = 0; c < 3; ++c)
        if (!(ranges[c].hi > ranges[c].lo))
            throw std::runtime_error(std::string("fit_normalizer: channel ") +
                                     channel_name(static_cast<Channel>(c)) +
                                     " is constant on the training data");
    return Normalizer(ranges);
}

enum class Provenance { kFull, kStorm };

inline const char* to_string(Provenance p) {
    return p == Provenance::kFull ? "full" : "storm";
}

struct SupervisedSample {
    InputWindow window;
    Vector target;                 // normalized gwl over the horizon
    std::size_t segment_index = 0;
    std::size_t offset = 0;        // window start row within its segment
    std::int64_t origin_hour = 0;  // timestamp of the last past row
};

struct SupervisedDataset {
    std::vector<SupervisedSample> samples;
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    Normalizer normalizer;
    Provenance provenance = Provenance::kFull;

    std::size_t size() const { return samples.size(); }
};

// For a segment of length L this yields max(0, L - lookback - horizon + 1)
// windows: past rows [t, t+lookback), future rows and targets
// [t+lookback, t+lookback+horizon). Observed rainfall/tide stand in for the
// forecast inputs of the future block.
inline SupervisedDataset build_windows(const std::vector<TimeSeriesFrame>& segments,
                                       std::size_t lookback, std::size_t horizon,
                                       const Normalizer& norm) {
    if (lookback < 1 || horizon < 1)
        throw std::invalid_argument("build_windows: lookback and horizon must be >= 1");
    SupervisedDataset ds;
    ds.lookback = lookback;
    ds.horizon = horizon;
    ds.normalizer = norm;
    ds.provenance = Provenance::kFull;

    for (std::size_t si = 0; si < segments.size(); ++si) {
        const auto& rows = segments[si].rows;
        if (rows.size() < lookback + horizon) continue;
        const std::size_t count = rows.size() - lookback - horizon + 1;
        for (std::size_t t = 0; t < count; ++t) {
            SupervisedSample s;
            s.segment_index = si;
            s.offset = t;
            s.origin_hour = rows[t + lookback - 1].hour;
            s.window.past = Matrix(lookback, 3);
            for (std::size_t i = 0; i < lookback; ++i) {
                const auto& r = rows[t + i];
                s.window.past(i, 0) = norm.apply(Channel::kRainfall, r.rainfall_mm);
                s.window.past(i, 1) = norm.apply(Channel::kTide, r.tide_m);
                s.window.past(i, 2) = norm.apply(Channel::kGwl, r.gwl_m);
            }
            s.window.future = Matrix(horizon, 2);
            s.target.resize(horizon);
            for (std::size_t i = 0; i < horizon; ++i) {
                const std::size_t target_row = t + lookback + i;
                // No label leakage: every target row lies strictly after the
                // past block [t, t+lookback).
                if (target_row < t + lookback)
                    throw std::logic_error("build_windows: target row inside past block");
                const auto& r = rows[target_row];
                s.window.future(i, 0) = norm.apply(Channel::kRainfall, r.rainfall_mm);
                s.window.future(i, 1) = norm.apply(Channel::kTide, r.tide_m);
                s.target[i] = norm.apply(Channel::kGwl, r.gwl_m);
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

}  // namespace gwcast
