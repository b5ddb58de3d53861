// Command-line surface wiring the pipeline end to end:
//   synth     generate a synthetic well CSV
//   storms    detect storm events in a well record and export them
//   train     train the full- or storm-regime model
//   evaluate  rolling-origin forecast of one trained model on the test split
//   compare   full-vs-storm comparison report and plot
//   gradcheck verify BPTT gradients against finite differences
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gwcast/config.hpp"
#include "gwcast/evaluation.hpp"
#include "gwcast/model_io.hpp"
#include "gwcast/pipeline.hpp"
#include "gwcast/svg.hpp"
#include "gwcast/synthetic.hpp"
#include "gwcast/training.hpp"

namespace fs = std::filesystem;
using namespace gwcast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;  // --out beats GWCAST_OUT_DIR beats config.output_dir
};

RunConfig load_config_or_default(const CommonFlags& flags) {
    if (!flags.config_path.empty()) return load_run_config(flags.config_path);
    return RunConfig{};
}

fs::path resolve_out_dir(const CommonFlags& flags, const RunConfig& cfg) {
    std::string dir = cfg.output_dir;
    if (const char* env = std::getenv("GWCAST_OUT_DIR"); env && *env) dir = env;
    if (!flags.out_dir.empty()) dir = flags.out_dir;
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

// ---------------------------------------------------------------------------

int cmd_synth(const CommonFlags& flags, std::optional<std::uint64_t> seed,
              std::optional<std::size_t> hours, std::optional<std::string> well) {
    RunConfig cfg = load_config_or_default(flags);
    HydroConfig hydro = cfg.synthetic.value_or(HydroConfig{});
    if (seed) hydro.seed = *seed;
    if (hours) hydro.n_hours = *hours;
    if (well) hydro.well_id = *well;

    const TimeSeriesFrame frame = generate_frame(hydro);
    const fs::path out_dir = resolve_out_dir(flags, cfg);
    const fs::path path = out_dir / (hydro.well_id + ".csv");
    write_csv_file(frame, path);
    std::cout << "wrote " << path.string() << " (" << frame.size() << " rows)\n";
    return kExitOk;
}

int cmd_storms(const CommonFlags& flags) {
    const RunConfig cfg = load_config_or_default(flags);
    const TimeSeriesFrame frame = load_config_frame(cfg);
    const auto segments = segment_gaps(frame, cfg.pipeline.max_fill_hours);
    const auto events = detect_storms_all(segments, cfg.pipeline.storm);

    const fs::path out_dir = resolve_out_dir(flags, cfg);
    const fs::path path = out_dir / (frame.well_id + "_storms.csv");
    auto out = open_output(path);
    write_events_csv(events, segments, out);
    std::cout << "detected " << events.size() << " storm events in " << frame.size()
              << " rows; wrote " << path.string() << "\n";
    return kExitOk;
}

int cmd_train(const CommonFlags& flags, const std::string& regime_name,
              std::optional<std::uint64_t> seed) {
    RunConfig cfg = load_config_or_default(flags);
    if (seed) cfg.train.seed = *seed;
    const Provenance regime =
        regime_name == "storm" ? Provenance::kStorm : Provenance::kFull;

    const TimeSeriesFrame frame = load_config_frame(cfg);
    const PreparedData data = prepare_data(frame, cfg.pipeline);
    const TrainedRegime trained = train_regime(data, cfg.pipeline, cfg.model, cfg.train, regime);

    const fs::path out_dir = resolve_out_dir(flags, cfg);
    const fs::path model_path = out_dir / ("model_" + regime_name + ".json");
    save_bundle_file(trained.bundle, model_path);
    const fs::path report_path = out_dir / ("train_" + regime_name + ".csv");
    auto report_out = open_output(report_path);
    write_train_report_csv(trained.report, report_out);

    std::cout << "trained " << to_string(cfg.model.kind) << " (" << regime_name << " regime) on "
              << frame.well_id << ": " << trained.report.train_loss.size()
              << " epochs, best epoch " << trained.report.best_epoch << ", best val loss "
              << format_double(trained.report.val_loss[trained.report.best_epoch - 1])
              << (trained.report.stopped_early ? " (stopped early)" : "") << "\n";
    std::cout << "wrote " << model_path.string() << " and " << report_path.string() << "\n";
    return kExitOk;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& model_path) {
    const RunConfig cfg = load_config_or_default(flags);
    const ModelBundle bundle = load_bundle_file(model_path);

    const TimeSeriesFrame frame = load_config_frame(cfg);
    const PreparedData data = prepare_data(frame, cfg.pipeline);
    require_matches_pipeline(bundle, cfg.pipeline, data.normalizer);

    const ForecastResult fc = rolling_forecast(bundle.model, data.test_segments, bundle.lookback,
                                               bundle.horizon, bundle.normalizer,
                                               bundle.provenance);
    if (fc.origins.empty())
        throw std::runtime_error("evaluate: test split yields no forecast origins");

    const fs::path out_dir = resolve_out_dir(flags, cfg);
    const fs::path path =
        out_dir / ("forecast_" + std::string(to_string(bundle.provenance)) + ".csv");
    auto out = open_output(path);
    write_forecast_csv(fc, out);

    Vector pred, obs;
    for (const auto& o : fc.origins) {
        pred.insert(pred.end(), o.pred_m.begin(), o.pred_m.end());
        obs.insert(obs.end(), o.obs_m.begin(), o.obs_m.end());
    }
    std::cout << fc.origins.size() << " origins, horizon " << bundle.horizon << "\n";
    std::cout << "rmse=" << format_double(rmse(pred, obs))
              << " m, mae=" << format_double(mae(pred, obs)) << ", nse=" << format_double(nse(pred, obs))
              << "\n";
    std::cout << "wrote " << path.string() << "\n";
    return kExitOk;
}

int cmd_compare(const CommonFlags& flags, const std::string& full_path,
                const std::string& storm_path, std::size_t plot_step) {
    const RunConfig cfg = load_config_or_default(flags);
    const ModelBundle full_bundle = load_bundle_file(full_path);
    const ModelBundle storm_bundle = load_bundle_file(storm_path);
    require_compatible(full_bundle, storm_bundle);

    const TimeSeriesFrame frame = load_config_frame(cfg);
    const PreparedData data = prepare_data(frame, cfg.pipeline);
    require_matches_pipeline(full_bundle, cfg.pipeline, data.normalizer);

    if (plot_step < 1 || plot_step > full_bundle.horizon)
        throw std::runtime_error("compare: --step must lie in [1, horizon]");

    const ComparisonReport rep =
        compare_models(full_bundle.model, storm_bundle.model, data.test_segments,
                       cfg.pipeline.storm, full_bundle.lookback, full_bundle.horizon,
                       data.normalizer);

    const fs::path out_dir = resolve_out_dir(flags, cfg);
    {
        auto out = open_output(out_dir / "comparison.csv");
        write_comparison_csv(rep, out);
    }
    {
        auto out = open_output(out_dir / "step_rmse.csv");
        write_step_rmse_csv(rep, out);
    }
    {
        auto out = open_output(out_dir / "summary.txt");
        write_comparison_summary(rep, out);
    }

    // Three-trace plot at one horizon step over a test window, centered on
    // the first storm period when one exists.
    const ForecastResult full_fc =
        rolling_forecast(full_bundle.model, data.test_segments, full_bundle.lookback,
                         full_bundle.horizon, data.normalizer, Provenance::kFull);
    const ForecastResult storm_fc =
        rolling_forecast(storm_bundle.model, data.test_segments, full_bundle.lookback,
                         full_bundle.horizon, data.normalizer, Provenance::kStorm);
    const auto test_events = detect_storms_all(data.test_segments, cfg.pipeline.storm);
    const auto mask = storm_origin_mask(full_fc, test_events);
    std::size_t start = 0;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) {
            start = i >= 72 ? i - 72 : 0;
            break;
        }
    const std::size_t plot_len = std::min<std::size_t>(336, full_fc.origins.size() - start);
    SvgSeries observed{"observed gwl", "black", {}};
    SvgSeries full_series{"full forecast", "#1f77b4", {}};
    SvgSeries storm_series{"storm forecast", "#d62728", {}};
    for (std::size_t i = start; i < start + plot_len; ++i) {
        observed.y.push_back(full_fc.origins[i].obs_m[plot_step - 1]);
        full_series.y.push_back(full_fc.origins[i].pred_m[plot_step - 1]);
        storm_series.y.push_back(storm_fc.origins[i].pred_m[plot_step - 1]);
    }
    {
        auto out = open_output(out_dir / "comparison.svg");
        write_line_chart_svg(out,
                             "groundwater table forecasts, horizon step " +
                                 std::to_string(plot_step),
                             "test origin (hours from " +
                                 (plot_len ? iso_from_hour(full_fc.origins[start].origin_hour)
                                           : std::string("n/a")) +
                                 ")",
                             "gwl (m)", {observed, full_series, storm_series});
    }

    write_comparison_summary(rep, std::cout);
    std::cout << "wrote " << (out_dir / "comparison.csv").string() << ", "
              << (out_dir / "step_rmse.csv").string() << ", "
              << (out_dir / "summary.txt").string() << ", "
              << (out_dir / "comparison.svg").string() << "\n";
    return kExitOk;
}

int cmd_gradcheck(std::size_t hidden, std::size_t lookback, std::size_t horizon,
                  std::uint64_t seed, bool mutate) {
    bool ok = true;
    for (const ModelKind kind : {ModelKind::kRnn, ModelKind::kLstm}) {
        const std::size_t layers = kind == ModelKind::kRnn ? 1 : 2;
        // Redraw instances whose smallest gradient sits below what central
        // differences at 1e-6 can resolve against a relative bound.
        bool checked = false;
        for (std::uint64_t retry = 0; retry < 40 && !checked; ++retry) {
            Prng prng(seed * 1000003ull + (kind == ModelKind::kLstm ? 777ull : 0ull) +
                      retry * 258281ull);
            const SequenceModel model = init_model(kind, 3, hidden, layers, prng);
            InputWindow w;
            w.past = Matrix(lookback, 3);
            for (double& v : w.past.data()) v = prng.uniform(0.0, 1.0);
            w.future = Matrix(horizon, 2);
            for (double& v : w.future.data()) v = prng.uniform(0.0, 1.0);
            Vector target(horizon);
            for (double& v : target) v = prng.uniform(0.0, 1.0);

            const auto fwd = model_forward(w, model);
            const Gradients g =
                model_backward(fwd.tape, detail::dmse_dpreds(fwd.preds, target), model);
            double min_grad = 1e300;
            for (const Vector* t : param_tensors(g))
                for (double v : *t) min_grad = std::min(min_grad, std::abs(v));
            if (min_grad < 5e-6) continue;

            const double err = gradient_check(model, w, target, 1e-6, mutate);
            ok = ok && err < 1e-4;
            std::cout << to_string(kind) << " max_rel_error=" << format_double(err)
                      << (err < 1e-4 ? " (ok)" : " (FAIL)") << "\n";
            checked = true;
        }
        if (!checked) {
            std::cout << to_string(kind) << " no finite-difference-resolvable instance drawn\n";
            ok = false;
        }
    }
    return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"groundwater table forecasting toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> hours;
    std::optional<std::string> well;
    std::string regime;
    std::string model_path, full_model_path, storm_model_path;
    std::size_t plot_step = 1;
    std::size_t gc_hidden = 4, gc_lookback = 6, gc_horizon = 3;
    std::uint64_t gc_seed = 1;
    bool gc_mutate = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic well CSV");
    synth->add_option("--config", flags.config_path, "run configuration (JSON)");
    synth->add_option("--out", flags.out_dir, "output directory");
    synth->add_option("--seed", seed, "generator seed override");
    synth->add_option("--hours", hours, "series length override");
    synth->add_option("--well", well, "well id override");

    auto* storms = app.add_subcommand("storms", "detect storm events and export them");
    storms->add_option("--config", flags.config_path, "run configuration (JSON)")->required();
    storms->add_option("--out", flags.out_dir, "output directory");

    auto* train = app.add_subcommand("train", "train the full- or storm-regime model");
    train->add_option("--config", flags.config_path, "run configuration (JSON)")->required();
    train->add_option("--regime", regime, "training regime")
        ->required()
        ->check(CLI::IsMember({"full", "storm"}));
    train->add_option("--seed", seed, "training seed override");
    train->add_option("--out", flags.out_dir, "output directory");

    auto* evaluate = app.add_subcommand("evaluate", "rolling-origin forecast on the test split");
    evaluate->add_option("--config", flags.config_path, "run configuration (JSON)")->required();
    evaluate->add_option("--model", model_path, "trained model file")->required();
    evaluate->add_option("--out", flags.out_dir, "output directory");

    auto* compare = app.add_subcommand("compare", "full-vs-storm comparison report and plot");
    compare->add_option("--config", flags.config_path, "run configuration (JSON)")->required();
    compare->add_option("--full-model", full_model_path, "full-regime model file")->required();
    compare->add_option("--storm-model", storm_model_path, "storm-regime model file")->required();
    compare->add_option("--step", plot_step, "horizon step to plot (1-based)");
    compare->add_option("--out", flags.out_dir, "output directory");

    auto* gradcheck = app.add_subcommand("gradcheck", "verify gradients by finite differences");
    gradcheck->add_option("--hidden", gc_hidden, "hidden units");
    gradcheck->add_option("--lookback", gc_lookback, "window lookback");
    gradcheck->add_option("--horizon", gc_horizon, "window horizon");
    gradcheck->add_option("--seed", gc_seed, "instance seed");
    gradcheck->add_flag("--mutate", gc_mutate, "corrupt one gradient (harness self-test)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (synth->parsed()) return cmd_synth(flags, seed, hours, well);
        if (storms->parsed()) return cmd_storms(flags);
        if (train->parsed()) return cmd_train(flags, regime, seed);
        if (evaluate->parsed()) return cmd_evaluate(flags, model_path);
        if (compare->parsed())
            return cmd_compare(flags, full_model_path, storm_model_path, plot_step);
        if (gradcheck->parsed())
            return cmd_gradcheck(gc_hidden, gc_lookback, gc_horizon, gc_seed, gc_mutate);
    } catch (const TrainingDivergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
