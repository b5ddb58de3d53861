#pragma once

// End-to-end wiring shared by the CLI and the acceptance experiments:
// split -> gap segmentation -> normalizer fit (training rows only) ->
// regime dataset assembly -> training -> bundled model files.
//
// A model bundle persists the trained parameters together with the pipeline
// settings they were trained under (lookback, horizon, normalizer ranges,
// regime), so later evaluation can refuse mismatched combinations.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwcast/dataset.hpp"
#include "gwcast/evaluation.hpp"
#include "gwcast/model_io.hpp"
#include "gwcast/storms.hpp"
#include "gwcast/timeseries.hpp"
#include "gwcast/training.hpp"

namespace gwcast {

struct PipelineParams {
    std::size_t lookback = 48;
    std::size_t horizon = 18;
    std::int64_t max_fill_hours = 3;
    SplitSpec split;
    StormParams storm;
};

inline void validate_pipeline_params(const PipelineParams& p) {
    if (p.lookback < 1 || p.horizon < 1)
        throw std::invalid_argument("pipeline: lookback and horizon must be >= 1");
    if (p.max_fill_hours < 0)
        throw std::invalid_argument("pipeline: max_fill_hours must be >= 0");
    validate_split_spec(p.split);
    validate_storm_params(p.storm);
}

struct PreparedData {
    std::vector<TimeSeriesFrame> train_segments;
    std::vector<TimeSeriesFrame> val_segments;
    std::vector<TimeSeriesFrame> test_segments;
    Normalizer normalizer;
};

// The normalizer sees training rows only; the test split is segmented here
// but nothing downstream of training may read it.
inline PreparedData prepare_data(const TimeSeriesFrame& frame, const PipelineParams& p) {
    validate_pipeline_params(p);
    const SplitFrames splits = chronological_split(frame, p.split);
    PreparedData out;
    out.train_segments = segment_gaps(splits.train, p.max_fill_hours);
    out.val_segments = segment_gaps(splits.val, p.max_fill_hours);
    out.test_segments = segment_gaps(splits.test, p.max_fill_hours);
    out.normalizer = fit_normalizer(out.train_segments);
    return out;
}

// FULL regime: every window. STORM regime: windows whose target block
// intersects an event detected on these segments.
inline SupervisedDataset build_regime_dataset(const std::vector<TimeSeriesFrame>& segments,
                                              const PipelineParams& p, const Normalizer& norm,
                                              Provenance regime) {
    if (regime == Provenance::kFull)
        return build_windows(segments, p.lookback, p.horizon, norm);
    const std::vector<StormEvent> events = detect_storms_all(segments, p.storm);
    return extract_storm_dataset(segments, events, p.lookback, p.horizon, norm);
}

struct ModelBundle {
    SequenceModel model;
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    Normalizer normalizer;
    Provenance provenance = Provenance::kFull;
};

struct TrainedRegime {
    ModelBundle bundle;
    TrainReport report;
};

// Trains one regime on the prepared splits. The storm regime validates on
// storm windows of the validation split when any exist, otherwise on the
// full validation windows (a rainless validation period would leave early
// stopping without a signal).
inline TrainedRegime train_regime(const PreparedData& data, const PipelineParams& p,
                                  const ModelSpec& spec, const TrainConfig& cfg,
                                  Provenance regime) {
    SupervisedDataset train_set = build_regime_dataset(data.train_segments, p, data.normalizer,
                                                       regime);
    if (train_set.samples.empty()) {
        if (regime == Provenance::kStorm)
            throw std::runtime_error("train_regime: no storm events detected in the training split");
        throw std::runtime_error("train_regime: training split yields no windows");
    }
    SupervisedDataset val_set = build_regime_dataset(data.val_segments, p, data.normalizer,
                                                     regime);
    if (val_set.samples.empty() && regime == Provenance::kStorm)
        val_set = build_regime_dataset(data.val_segments, p, data.normalizer, Provenance::kFull);
    if (val_set.samples.empty())
        throw std::runtime_error("train_regime: validation split yields no windows");

    TrainOutcome outcome = train_model(spec, train_set, val_set, cfg);
    TrainedRegime out;
    out.bundle.model = std::move(outcome.model);
    out.bundle.lookback = p.lookback;
    out.bundle.horizon = p.horizon;
    out.bundle.normalizer = data.normalizer;
    out.bundle.provenance = regime;
    out.report = std::move(outcome.report);
    return out;
}

// ---------------------------------------------------------------------------
// Bundle files: the model document plus a "pipeline" section.

inline nlohmann::json bundle_to_json(const ModelBundle& b) {
    nlohmann::json j = model_to_json(b.model);
    const auto range_json = [&](Channel c) {
        const auto r = b.normalizer.range(c);
        return nlohmann::json{r.lo, r.hi};
    };
    j["pipeline"] = {{"lookback", b.lookback},
                     {"horizon", b.horizon},
                     {"provenance", to_string(b.provenance)},
                     {"normalizer",
                      {{"rainfall_mm", range_json(Channel::kRainfall)},
                       {"tide_m", range_json(Channel::kTide)},
                       {"gwl_m", range_json(Channel::kGwl)}}}};
    return j;
}

inline ModelBundle bundle_from_json(const nlohmann::json& j) {
    ModelBundle b;
    b.model = model_from_json(j);
    const auto& jp = j.at("pipeline");
    b.lookback = jp.at("lookback").get<std::size_t>();
    b.horizon = jp.at("horizon").get<std::size_t>();
    const std::string prov = jp.at("provenance").get<std::string>();
    if (prov == "full")
        b.provenance = Provenance::kFull;
    else if (prov == "storm")
        b.provenance = Provenance::kStorm;
    else
        throw std::runtime_error("bundle_from_json: unknown provenance \"" + prov + "\"");
    const auto& jn = jp.at("normalizer");
    std::array<Normalizer::Range, 3> ranges;
    const auto read_range = [&](const char* key, std::size_t idx) {
        const auto& arr = jn.at(key);
        ranges[idx] = {arr.at(0).get<double>(), arr.at(1).get<double>()};
    };
    read_range("rainfall_mm", 0);
    read_range("tide_m", 1);
    read_range("gwl_m", 2);
    b.normalizer = Normalizer(ranges);
    return b;
}

inline void save_bundle_file(const ModelBundle& b, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("save_bundle_file: cannot open " + path.string() +
                                 " for writing");
    out << bundle_to_json(b).dump(1) << '\n';
}

inline ModelBundle load_bundle_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_bundle_file: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_bundle_file: " + path.string() + ": " + e.what());
    }
    return bundle_from_json(j);
}

// Two bundles may be evaluated against the same test data only when the
// whole preprocessing contract matches.
inline void require_compatible(const ModelBundle& a, const ModelBundle& b) {
    if (a.lookback != b.lookback || a.horizon != b.horizon)
        throw std::runtime_error("bundles incompatible: lookback/horizon differ");
    if (!(a.normalizer == b.normalizer))
        throw std::runtime_error("bundles incompatible: normalizer mismatch");
}

inline void require_matches_pipeline(const ModelBundle& b, const PipelineParams& p,
                                     const Normalizer& norm) {
    if (b.lookback != p.lookback || b.horizon != p.horizon)
        throw std::runtime_error("bundle incompatible with config: lookback/horizon differ");
    if (!(b.normalizer == norm))
        throw std::runtime_error(
            "bundle incompatible with config: normalizer mismatch (was the model trained on "
            "this data and split?)");
}

}  // namespace gwcast
