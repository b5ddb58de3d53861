#pragma once

// Experiment configuration: one JSON document covering data source, window
// sizes, split fractions, storm detection, model shape, training settings,
// and the output directory. Unknown keys are rejected so a typo cannot
// silently fall back to a default. Command-line flags override config values;
// the GWCAST_OUT_DIR environment variable overrides the output directory.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gwcast/pipeline.hpp"
#include "gwcast/synthetic.hpp"
#include "gwcast/training.hpp"

namespace gwcast {

struct RunConfig {
    std::optional<std::string> data_csv;      // exactly one of data_csv /
    std::optional<HydroConfig> synthetic;     // synthetic must be set
    PipelineParams pipeline;
    ModelSpec model = default_model_spec(ModelKind::kLstm);
    TrainConfig train;
    std::string output_dir = "out";
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw std::runtime_error("config: unknown key \"" + item.key() + "\" in " + where);
}

template <typename T>
inline void read_if(const nlohmann::json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline HydroConfig parse_hydro_config(const nlohmann::json& j) {
    reject_unknown_keys(j, {"n_hours", "base_gwl_m", "recession", "recharge_coeff_m_per_mm",
                            "tidal_coeff", "constituents", "storms", "noise_std_m",
                            "initial_storage_m", "seed", "well_id"},
                        "data.synthetic");
    HydroConfig cfg;
    read_if(j, "n_hours", cfg.n_hours);
    read_if(j, "base_gwl_m", cfg.base_gwl_m);
    read_if(j, "recession", cfg.recession);
    read_if(j, "recharge_coeff_m_per_mm", cfg.recharge_coeff_m_per_mm);
    read_if(j, "tidal_coeff", cfg.tidal_coeff);
    if (j.contains("constituents")) {
        cfg.constituents.clear();
        for (const auto& jc : j.at("constituents")) {
            reject_unknown_keys(jc, {"amplitude_m", "period_hours", "phase_rad"},
                                "data.synthetic.constituents[]");
            TideConstituent c;
            read_if(jc, "amplitude_m", c.amplitude_m);
            read_if(jc, "period_hours", c.period_hours);
            read_if(jc, "phase_rad", c.phase_rad);
            cfg.constituents.push_back(c);
        }
    }
    if (j.contains("storms")) {
        const auto& js = j.at("storms");
        reject_unknown_keys(js, {"storms_per_month", "mean_duration_hours", "mean_intensity_mm"},
                            "data.synthetic.storms");
        read_if(js, "storms_per_month", cfg.storms.storms_per_month);
        read_if(js, "mean_duration_hours", cfg.storms.mean_duration_hours);
        read_if(js, "mean_intensity_mm", cfg.storms.mean_intensity_mm);
    }
    read_if(j, "noise_std_m", cfg.noise_std_m);
    read_if(j, "initial_storage_m", cfg.initial_storage_m);
    read_if(j, "seed", cfg.seed);
    read_if(j, "well_id", cfg.well_id);
    validate_hydro_config(cfg);
    return cfg;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, {"data", "lookback", "horizon", "max_fill_hours", "split",
                                    "storm", "model", "train", "output_dir"},
                                "top level");
    RunConfig cfg;

    if (j.contains("data")) {
        const auto& jd = j.at("data");
        detail::reject_unknown_keys(jd, {"csv", "synthetic"}, "data");
        if (jd.contains("csv")) cfg.data_csv = jd.at("csv").get<std::string>();
        if (jd.contains("synthetic")) cfg.synthetic = detail::parse_hydro_config(jd.at("synthetic"));
        if (cfg.data_csv && cfg.synthetic)
            throw std::runtime_error("config: data.csv and data.synthetic are mutually exclusive");
    }

    detail::read_if(j, "lookback", cfg.pipeline.lookback);
    detail::read_if(j, "horizon", cfg.pipeline.horizon);
    detail::read_if(j, "max_fill_hours", cfg.pipeline.max_fill_hours);
    if (j.contains("split")) {
        const auto& js = j.at("split");
        detail::reject_unknown_keys(js, {"train", "val", "test"}, "split");
        detail::read_if(js, "train", cfg.pipeline.split.train_frac);
        detail::read_if(js, "val", cfg.pipeline.split.val_frac);
        detail::read_if(js, "test", cfg.pipeline.split.test_frac);
    }
    if (j.contains("storm")) {
        const auto& js = j.at("storm");
        detail::reject_unknown_keys(js, {"wet_threshold_mm", "dry_gap_hours", "min_total_rain_mm",
                                         "lead_pad_hours", "tail_pad_hours"},
                                    "storm");
        detail::read_if(js, "wet_threshold_mm", cfg.pipeline.storm.wet_threshold_mm);
        detail::read_if(js, "dry_gap_hours", cfg.pipeline.storm.dry_gap_hours);
        detail::read_if(js, "min_total_rain_mm", cfg.pipeline.storm.min_total_rain_mm);
        detail::read_if(js, "lead_pad_hours", cfg.pipeline.storm.lead_pad_hours);
        detail::read_if(js, "tail_pad_hours", cfg.pipeline.storm.tail_pad_hours);
    }
    if (j.contains("model")) {
        const auto& jm = j.at("model");
        detail::reject_unknown_keys(jm, {"kind", "hidden_size", "num_layers"}, "model");
        if (jm.contains("kind")) {
            const std::string kind = jm.at("kind").get<std::string>();
            if (kind == "rnn")
                cfg.model = default_model_spec(ModelKind::kRnn);
            else if (kind == "lstm")
                cfg.model = default_model_spec(ModelKind::kLstm);
            else
                throw std::runtime_error("config: model.kind must be \"rnn\" or \"lstm\"");
        }
        detail::read_if(jm, "hidden_size", cfg.model.hidden_size);
        detail::read_if(jm, "num_layers", cfg.model.num_layers);
    }
    if (j.contains("train")) {
        const auto& jt = j.at("train");
        detail::reject_unknown_keys(jt, {"max_epochs", "learning_rate", "adam_beta1",
                                         "adam_beta2", "adam_eps", "patience", "clip_norm",
                                         "seed", "shuffle_each_epoch"},
                                    "train");
        detail::read_if(jt, "max_epochs", cfg.train.max_epochs);
        detail::read_if(jt, "learning_rate", cfg.train.learning_rate);
        detail::read_if(jt, "adam_beta1", cfg.train.adam_beta1);
        detail::read_if(jt, "adam_beta2", cfg.train.adam_beta2);
        detail::read_if(jt, "adam_eps", cfg.train.adam_eps);
        detail::read_if(jt, "patience", cfg.train.patience);
        detail::read_if(jt, "clip_norm", cfg.train.clip_norm);
        detail::read_if(jt, "seed", cfg.train.seed);
        detail::read_if(jt, "shuffle_each_epoch", cfg.train.shuffle_each_epoch);
    }
    detail::read_if(j, "output_dir", cfg.output_dir);

    validate_pipeline_params(cfg.pipeline);
    validate_train_config(cfg.train);
    if (cfg.model.hidden_size < 1)
        throw std::runtime_error("config: model.hidden_size must be >= 1");
    if (cfg.model.kind == ModelKind::kRnn && cfg.model.num_layers != 1)
        throw std::runtime_error("config: RNN models have exactly 1 layer");
    if (cfg.model.kind == ModelKind::kLstm && cfg.model.num_layers < 2)
        throw std::runtime_error("config: LSTM models need >= 2 layers");
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config: " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

// Loads the configured data source: either a well CSV or the synthetic
// generator.
inline TimeSeriesFrame load_config_frame(const RunConfig& cfg) {
    if (cfg.data_csv) return ingest_csv_file(*cfg.data_csv);
    if (cfg.synthetic) return generate_frame(*cfg.synthetic);
    throw std::runtime_error("config: no data source (set data.csv or data.synthetic)");
}

}  // namespace gwcast
