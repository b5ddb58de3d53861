#pragma once

// Forecast metrics (RMSE, MAE, NSE), the rolling-origin evaluation that
// re-issues a fresh multi-step forecast from every valid origin in the test
// segments, and the full-vs-storm model comparison. Storm-period rows use the
// same membership rule as training extraction: an origin counts when its
// target block intersects a storm event detected on the test segments.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwcast/dataset.hpp"
#include "gwcast/model.hpp"
#include "gwcast/storms.hpp"
#include "gwcast/timeseries.hpp"

namespace gwcast {

inline double rmse(const Vector& pred, const Vector& obs) {
    if (pred.size() != obs.size())
        throw std::invalid_argument("rmse: length mismatch");
    if (pred.empty())
        throw std::invalid_argument("rmse: empty series");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - obs[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

inline double mae(const Vector& pred, const Vector& obs) {
    if (pred.size() != obs.size())
        throw std::invalid_argument("mae: length mismatch");
    if (pred.empty())
        throw std::invalid_argument("mae: empty series");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        acc += std::abs(pred[i] - obs[i]);
    return acc / static_cast<double>(pred.size());
}

// Nash-Sutcliffe efficiency: 1 - SSE / SS_about_obs_mean. 1 is perfect, 0
// matches the climatological mean predictor, negative is worse than it.
inline double nse(const Vector& pred, const Vector& obs) {
    if (pred.size() != obs.size())
        throw std::invalid_argument("nse: length mismatch");
    if (pred.empty())
        throw std::invalid_argument("nse: empty series");
    double mean = 0.0;
    for (double o : obs) mean += o;
    mean /= static_cast<double>(obs.size());
    double sse = 0.0, ss_mean = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        sse += (pred[i] - obs[i]) * (pred[i] - obs[i]);
        ss_mean += (obs[i] - mean) * (obs[i] - mean);
    }
    if (ss_mean == 0.0)
        throw std::invalid_argument("nse: observations are constant");
    return 1.0 - sse / ss_mean;
}

// ---------------------------------------------------------------------------

struct ForecastOrigin {
    std::int64_t origin_hour = 0;
    std::size_t segment_index = 0;
    std::size_t offset = 0;  // window offset within the segment
    Vector pred_m;           // denormalized, length horizon
    Vector obs_m;
};

struct ForecastResult {
    std::string well_id;
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    Provenance provenance = Provenance::kFull;
    std::vector<ForecastOrigin> origins;
};

// One fresh multi-step forecast per valid origin, origins advancing hour by
// hour through each test segment. Predictions and observations come back in
// metres.
inline ForecastResult rolling_forecast(const SequenceModel& model,
                                       const std::vector<TimeSeriesFrame>& test_segments,
                                       std::size_t lookback, std::size_t horizon,
                                       const Normalizer& norm,
                                       Provenance provenance = Provenance::kFull) {
    validate_model(model);
    ForecastResult result;
    result.well_id = test_segments.empty() ? std::string() : test_segments.front().well_id;
    result.lookback = lookback;
    result.horizon = horizon;
    result.provenance = provenance;

    const SupervisedDataset windows = build_windows(test_segments, lookback, horizon, norm);
    result.origins.reserve(windows.samples.size());
    for (const auto& s : windows.samples) {
        ForecastOrigin o;
        o.origin_hour = s.origin_hour;
        o.segment_index = s.segment_index;
        o.offset = s.offset;
        const Vector preds = model_forward(s.window, model).preds;
        o.pred_m.resize(horizon);
        o.obs_m.resize(horizon);
        for (std::size_t k = 0; k < horizon; ++k) {
            o.pred_m[k] = norm.invert(Channel::kGwl, preds[k]);
            o.obs_m[k] = norm.invert(Channel::kGwl, s.target[k]);
        }
        result.origins.push_back(std::move(o));
    }
    return result;
}

inline void write_forecast_csv(const ForecastResult& r, std::ostream& out) {
    out << "origin_iso,step,pred_gwl_m,obs_gwl_m,provenance\n";
    for (const auto& o : r.origins)
        for (std::size_t k = 0; k < r.horizon; ++k)
            out << iso_from_hour(o.origin_hour) << ',' << (k + 1) << ','
                << format_double(o.pred_m[k]) << ',' << format_double(o.obs_m[k]) << ','
                << to_string(r.provenance) << '\n';
}

// ---------------------------------------------------------------------------

struct MetricRow {
    bool empty = true;      // no qualifying origins
    std::size_t n_origins = 0;
    double rmse_m = 0.0;
    double mae_m = 0.0;
    double nse = 0.0;
};

struct ComparisonReport {
    MetricRow full_all, storm_all;              // whole test period
    MetricRow full_storm_periods, storm_storm_periods;
    std::vector<double> full_step_rmse, storm_step_rmse;  // all-test, per step
    std::size_t n_test_storm_events = 0;
};

namespace detail {

inline MetricRow pooled_metrics(const ForecastResult& r, const std::vector<bool>& mask) {
    Vector pred, obs;
    std::size_t n = 0;
    for (std::size_t i = 0; i < r.origins.size(); ++i) {
        if (!mask[i]) continue;
        ++n;
        pred.insert(pred.end(), r.origins[i].pred_m.begin(), r.origins[i].pred_m.end());
        obs.insert(obs.end(), r.origins[i].obs_m.begin(), r.origins[i].obs_m.end());
    }
    MetricRow row;
    if (n == 0) return row;
    row.empty = false;
    row.n_origins = n;
    row.rmse_m = rmse(pred, obs);
    row.mae_m = mae(pred, obs);
    row.nse = nse(pred, obs);
    return row;
}

inline std::vector<double> per_step_rmse(const ForecastResult& r) {
    std::vector<double> out(r.horizon, 0.0);
    if (r.origins.empty()) return out;
    for (std::size_t k = 0; k < r.horizon; ++k) {
        double acc = 0.0;
        for (const auto& o : r.origins) {
            const double d = o.pred_m[k] - o.obs_m[k];
            acc += d * d;
        }
        out[k] = std::sqrt(acc / static_cast<double>(r.origins.size()));
    }
    return out;
}

}  // namespace detail

// Marks the origins whose target block intersects any event detected on the
// test segments; the evaluation twin of the storm-extraction membership rule.
inline std::vector<bool> storm_origin_mask(const ForecastResult& r,
                                           const std::vector<StormEvent>& test_events) {
    std::vector<bool> mask(r.origins.size(), false);
    for (std::size_t i = 0; i < r.origins.size(); ++i) {
        for (const auto& e : test_events) {
            if (e.segment_id != r.origins[i].segment_index) continue;
            if (window_targets_event(r.origins[i].offset, r.lookback, r.horizon, e)) {
                mask[i] = true;
                break;
            }
        }
    }
    return mask;
}

inline ComparisonReport compare_models(const SequenceModel& full_model,
                                       const SequenceModel& storm_model,
                                       const std::vector<TimeSeriesFrame>& test_segments,
                                       const StormParams& storm_params, std::size_t lookback,
                                       std::size_t horizon, const Normalizer& norm) {
    if (full_model.input_size != storm_model.input_size)
        throw std::invalid_argument("compare_models: mismatched model input sizes");

    const ForecastResult full_fc =
        rolling_forecast(full_model, test_segments, lookback, horizon, norm, Provenance::kFull);
    const ForecastResult storm_fc =
        rolling_forecast(storm_model, test_segments, lookback, horizon, norm, Provenance::kStorm);

    const std::vector<StormEvent> test_events = detect_storms_all(test_segments, storm_params);
    const std::vector<bool> storm_mask = storm_origin_mask(full_fc, test_events);
    const std::vector<bool> all_mask(full_fc.origins.size(), true);

    ComparisonReport rep;
    rep.n_test_storm_events = test_events.size();
    rep.full_all = detail::pooled_metrics(full_fc, all_mask);
    rep.storm_all = detail::pooled_metrics(storm_fc, all_mask);
    rep.full_storm_periods = detail::pooled_metrics(full_fc, storm_mask);
    rep.storm_storm_periods = detail::pooled_metrics(storm_fc, storm_mask);
    rep.full_step_rmse = detail::per_step_rmse(full_fc);
    rep.storm_step_rmse = detail::per_step_rmse(storm_fc);
    return rep;
}

// ---------------------------------------------------------------------------
// Report serialization

namespace detail {

inline void write_metric_row(std::ostream& out, const char* model, const char* regime,
                             const MetricRow& row) {
    out << model << ',' << regime << ',';
    if (row.empty) {
        out << "empty,0,,,\n";
    } else {
        out << "ok," << row.n_origins << ',' << format_double(row.rmse_m) << ','
            << format_double(row.mae_m) << ',' << format_double(row.nse) << '\n';
    }
}

inline const char* lower_is_better_winner(const MetricRow& f, const MetricRow& s, double fv,
                                          double sv) {
    if (f.empty || s.empty) return "empty";
    if (fv == sv) return "tie";
    return fv < sv ? "full" : "storm";
}

}  // namespace detail

inline void write_comparison_csv(const ComparisonReport& rep, std::ostream& out) {
    out << "model,regime,status,n_origins,rmse_m,mae_m,nse\n";
    detail::write_metric_row(out, "full", "all", rep.full_all);
    detail::write_metric_row(out, "storm", "all", rep.storm_all);
    detail::write_metric_row(out, "full", "storm_periods", rep.full_storm_periods);
    detail::write_metric_row(out, "storm", "storm_periods", rep.storm_storm_periods);
}

inline void write_step_rmse_csv(const ComparisonReport& rep, std::ostream& out) {
    out << "step,full_rmse_m,storm_rmse_m\n";
    for (std::size_t k = 0; k < rep.full_step_rmse.size(); ++k)
        out << (k + 1) << ',' << format_double(rep.full_step_rmse[k]) << ','
            << format_double(rep.storm_step_rmse[k]) << '\n';
}

inline void write_comparison_summary(const ComparisonReport& rep, std::ostream& out) {
    const auto line = [&](const char* name, const MetricRow& row) {
        out << "  " << name << ": ";
        if (row.empty) {
            out << "empty (no qualifying origins)\n";
        } else {
            out << "n=" << row.n_origins << " rmse=" << format_double(row.rmse_m)
                << " m, mae=" << format_double(row.mae_m) << " m, nse=" << format_double(row.nse)
                << "\n";
        }
    };
    out << "comparison of full-trained vs storm-trained models\n";
    out << "test storm events: " << rep.n_test_storm_events << "\n";
    out << "whole test period:\n";
    line("full ", rep.full_all);
    line("storm", rep.storm_all);
    out << "storm periods only:\n";
    line("full ", rep.full_storm_periods);
    line("storm", rep.storm_storm_periods);
    out << "winners (rmse/mae/nse):\n";
    out << "  all          : "
        << detail::lower_is_better_winner(rep.full_all, rep.storm_all, rep.full_all.rmse_m,
                                          rep.storm_all.rmse_m)
        << "/"
        << detail::lower_is_better_winner(rep.full_all, rep.storm_all, rep.full_all.mae_m,
                                          rep.storm_all.mae_m)
        << "/"
        << detail::lower_is_better_winner(rep.full_all, rep.storm_all, -rep.full_all.nse,
                                          -rep.storm_all.nse)
        << "\n";
    out << "  storm periods: "
        << detail::lower_is_better_winner(rep.full_storm_periods, rep.storm_storm_periods,
                                          rep.full_storm_periods.rmse_m,
                                          rep.storm_storm_periods.rmse_m)
        << "/"
        << detail::lower_is_better_winner(rep.full_storm_periods, rep.storm_storm_periods,
                                          rep.full_storm_periods.mae_m,
                                          rep.storm_storm_periods.mae_m)
        << "/"
        << detail::lower_is_better_winner(rep.full_storm_periods, rep.storm_storm_periods,
                                          -rep.full_storm_periods.nse,
                                          -rep.storm_storm_periods.nse)
        << "\n";
}

}  // namespace gwcast
