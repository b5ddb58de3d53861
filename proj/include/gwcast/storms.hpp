#pragma once

// Storm-event detection on the rainfall record and assembly of the
// storm-only training set. An event is a run of wet hours (rainfall above
// wet_threshold) merged across dry spells shorter than dry_gap, padded with
// lead/tail context and clipped to the segment. Events below min_total_rain
// are dropped; padded ranges that overlap are merged.

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "gwcast/dataset.hpp"
#include "gwcast/timeseries.hpp"

namespace gwcast {

struct StormParams {
    double wet_threshold_mm = 0.5;
    std::int64_t dry_gap_hours = 12;
    double min_total_rain_mm = 5.0;
    std::int64_t lead_pad_hours = 24;
    std::int64_t tail_pad_hours = 72;
};

inline void validate_storm_params(const StormParams& p) {
    if (!(p.wet_threshold_mm > 0.0))
        throw std::invalid_argument("StormParams: wet_threshold must be > 0");
    if (p.dry_gap_hours < 0 || p.min_total_rain_mm < 0.0 || p.lead_pad_hours < 0 ||
        p.tail_pad_hours < 0)
        throw std::invalid_argument("StormParams: fields must be >= 0");
}

struct StormEvent {
    std::size_t segment_id = 0;
    std::size_t start_index = 0;  // inclusive, padded
    std::size_t end_index = 0;    // inclusive, padded
    std::size_t core_start = 0;   // first wet hour
    std::size_t core_end = 0;     // last wet hour
    double total_rain_mm = 0.0;   // over [core_start, core_end]
    double peak_rain_mm = 0.0;
};

inline std::size_t count_wet_hours(const TimeSeriesFrame& segment, double wet_threshold_mm) {
    std::size_t n = 0;
    for (const auto& r : segment.rows)
        if (r.rainfall_mm > wet_threshold_mm) ++n;
    return n;
}

inline std::vector<StormEvent> detect_storms(const TimeSeriesFrame& segment,
                                             const StormParams& p, std::size_t segment_id = 0) {
    validate_storm_params(p);
    const auto& rows = segment.rows;
    const std::size_t n = rows.size();

    // Wet-hour runs, merged when the dry spell between them is < dry_gap.
    struct Core {
        std::size_t start, end;
    };
    std::vector<Core> cores;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(rows[i].rainfall_mm > p.wet_threshold_mm)) continue;
        if (!cores.empty() &&
            static_cast<std::int64_t>(i) - static_cast<std::int64_t>(cores.back().end) - 1 <
                p.dry_gap_hours) {
            cores.back().end = i;
        } else {
            cores.push_back({i, i});
        }
    }

    const auto rain_stats = [&](std::size_t lo, std::size_t hi, double& total, double& peak) {
        total = 0.0;
        peak = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) {
            total += rows[i].rainfall_mm;
            peak = std::max(peak, rows[i].rainfall_mm);
        }
    };

    std::vector<StormEvent> events;
    for (const Core& c : cores) {
        StormEvent e;
        e.segment_id = segment_id;
        e.core_start = c.start;
        e.core_end = c.end;
        const std::int64_t lo = static_cast<std::int64_t>(c.start) - p.lead_pad_hours;
        const std::int64_t hi = static_cast<std::int64_t>(c.end) + p.tail_pad_hours;
        e.start_index = lo < 0 ? 0 : static_cast<std::size_t>(lo);
        e.end_index = hi >= static_cast<std::int64_t>(n) ? n - 1 : static_cast<std::size_t>(hi);
        rain_stats(e.core_start, e.core_end, e.total_rain_mm, e.peak_rain_mm);
        if (e.total_rain_mm < p.min_total_rain_mm) continue;
        events.push_back(e);
    }

    // Merge events whose padded ranges overlap.
    std::vector<StormEvent> merged;
    for (const StormEvent& e : events) {
        if (!merged.empty() && e.start_index <= merged.back().end_index) {
            StormEvent& prev = merged.back();
            prev.end_index = std::max(prev.end_index, e.end_index);
            prev.core_end = std::max(prev.core_end, e.core_end);
            rain_stats(prev.core_start, prev.core_end, prev.total_rain_mm, prev.peak_rain_mm);
        } else {
            merged.push_back(e);
        }
    }
    return merged;
}

inline std::vector<StormEvent> detect_storms_all(const std::vector<TimeSeriesFrame>& segments,
                                                 const StormParams& p) {
    std::vector<StormEvent> events;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        auto seg_events = detect_storms(segments[i], p, i);
        events.insert(events.end(), seg_events.begin(), seg_events.end());
    }
    return events;
}

// True when the window's target block [offset+lookback, offset+lookback+horizon)
// intersects the event's padded range. Membership is decided on the target
// block: the quantity being predicted is what must be storm-influenced.
inline bool window_targets_event(std::size_t offset, std::size_t lookback, std::size_t horizon,
                                 const StormEvent& e) {
    const std::size_t target_first = offset + lookback;
    const std::size_t target_last = offset + lookback + horizon - 1;
    return target_first <= e.end_index && target_last >= e.start_index;
}

// The subset of build_windows whose target block intersects some event.
inline SupervisedDataset extract_storm_dataset(const std::vector<TimeSeriesFrame>& segments,
                                               const std::vector<StormEvent>& events,
                                               std::size_t lookback, std::size_t horizon,
                                               const Normalizer& norm) {
    SupervisedDataset full = build_windows(segments, lookback, horizon, norm);
    SupervisedDataset storm;
    storm.lookback = lookback;
    storm.horizon = horizon;
    storm.normalizer = norm;
    storm.provenance = Provenance::kStorm;
    for (auto& s : full.samples) {
        for (const StormEvent& e : events) {
            if (e.segment_id != s.segment_index) continue;
            if (window_targets_event(s.offset, lookback, horizon, e)) {
                storm.samples.push_back(std::move(s));
                break;
            }
        }
    }
    return storm;
}

// CSV export: segment_id,start_iso,end_iso,core_start_iso,core_end_iso,
// total_rain_mm,peak_rain_mm
inline void write_events_csv(const std::vector<StormEvent>& events,
                             const std::vector<TimeSeriesFrame>& segments, std::ostream& out) {
    out << "segment_id,start_iso,end_iso,core_start_iso,core_end_iso,total_rain_mm,peak_rain_mm\n";
    for (const auto& e : events) {
        const auto& rows = segments.at(e.segment_id).rows;
        out << e.segment_id << ',' << iso_from_hour(rows.at(e.start_index).hour) << ','
            << iso_from_hour(rows.at(e.end_index).hour) << ','
            << iso_from_hour(rows.at(e.core_start).hour) << ','
            << iso_from_hour(rows.at(e.core_end).hour) << ',' << format_double(e.total_rain_mm)
            << ',' << format_double(e.peak_rain_mm) << '\n';
    }
}

}  // namespace gwcast
