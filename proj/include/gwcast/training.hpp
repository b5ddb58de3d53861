#pragma once

// Loss, Adam, chronological splitting, and the per-sample training loop with
// early stopping on a held-out validation segment. Training never touches the
// test split: the loop's signature cannot receive it.

#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwcast/dataset.hpp"
#include "gwcast/model.hpp"
#include "gwcast/timeseries.hpp"

namespace gwcast {

struct TrainConfig {
    std::size_t max_epochs = 100;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t patience = 10;
    double clip_norm = 5.0;
    std::uint64_t seed = 1;
    bool shuffle_each_epoch = true;
};

inline void validate_train_config(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(cfg.adam_beta1 > 0.0 && cfg.adam_beta1 < 1.0) ||
        !(cfg.adam_beta2 > 0.0 && cfg.adam_beta2 < 1.0))
        throw std::invalid_argument("TrainConfig: betas must lie in (0,1)");
    if (cfg.patience < 1)
        throw std::invalid_argument("TrainConfig: patience must be >= 1");
    if (cfg.max_epochs < 1)
        throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
    if (!(cfg.clip_norm > 0.0))
        throw std::invalid_argument("TrainConfig: clip_norm must be > 0");
    if (!(cfg.adam_eps > 0.0))
        throw std::invalid_argument("TrainConfig: adam_eps must be > 0");
}

struct SplitSpec {
    double train_frac = 0.7;
    double val_frac = 0.15;
    double test_frac = 0.15;
};

inline void validate_split_spec(const SplitSpec& s) {
    const auto in_unit = [](double f) { return f > 0.0 && f < 1.0; };
    if (!in_unit(s.train_frac) || !in_unit(s.val_frac) || !in_unit(s.test_frac))
        throw std::invalid_argument("SplitSpec: fractions must lie in (0,1)");
    if (std::abs(s.train_frac + s.val_frac + s.test_frac - 1.0) > 1e-9)
        throw std::invalid_argument("SplitSpec: fractions must sum to 1");
}

// Epochs are 1-based in the report and its CSV.
struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

inline void write_train_report_csv(const TrainReport& r, std::ostream& out) {
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < r.train_loss.size(); ++e)
        out << (e + 1) << ',' << format_double(r.train_loss[e]) << ','
            << format_double(r.val_loss[e]) << '\n';
}

inline double mse_loss(const Vector& preds, const Vector& targets) {
    if (preds.size() != targets.size())
        throw std::invalid_argument("mse_loss: length mismatch " + std::to_string(preds.size()) +
                                    " vs " + std::to_string(targets.size()));
    if (preds.empty())
        throw std::invalid_argument("mse_loss: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - targets[i];
        acc += d * d;
    }
    return acc / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// Adam with bias correction, over the flat parameter-tensor view.

struct AdamState {
    std::vector<Vector> m;  // first moments, aligned with param_tensors order
    std::vector<Vector> v;  // second moments
};

inline AdamState init_adam_state(const SequenceModel& model) {
    AdamState st;
    for (const Vector* t : param_tensors(model)) {
        st.m.emplace_back(t->size(), 0.0);
        st.v.emplace_back(t->size(), 0.0);
    }
    return st;
}

inline void adam_step(SequenceModel& params, const Gradients& grads, AdamState& state,
                      const TrainConfig& cfg, std::size_t t) {
    if (t < 1)
        throw std::invalid_argument("adam_step: step index must be >= 1");
    auto p_tensors = param_tensors(params);
    auto g_tensors = param_tensors(grads);
    if (p_tensors.size() != g_tensors.size() || p_tensors.size() != state.m.size())
        throw std::invalid_argument("adam_step: params/grads/state shape mismatch");
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < p_tensors.size(); ++k) {
        Vector& p = *p_tensors[k];
        const Vector& g = *g_tensors[k];
        Vector& m = state.m[k];
        Vector& v = state.v[k];
        if (p.size() != g.size() || p.size() != m.size())
            throw std::invalid_argument("adam_step: tensor " + std::to_string(k) +
                                        " shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Chronological split: contiguous segments, train strictly before val
// strictly before test. Row counts follow floor-then-remainder.

struct SplitFrames {
    TimeSeriesFrame train;
    TimeSeriesFrame val;
    TimeSeriesFrame test;
};

inline SplitFrames chronological_split(const TimeSeriesFrame& frame, const SplitSpec& spec) {
    validate_split_spec(spec);
    const std::size_t n = frame.rows.size();
    if (n < 10)
        throw std::invalid_argument("chronological_split: frame too short (" +
                                    std::to_string(n) + " rows, need >= 10)");
    const std::size_t n_train =
        static_cast<std::size_t>(static_cast<double>(n) * spec.train_frac);
    const std::size_t n_val = static_cast<std::size_t>(static_cast<double>(n) * spec.val_frac);
    const std::size_t n_test = n - n_train - n_val;
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw std::invalid_argument("chronological_split: frame too short for requested fractions");
    SplitFrames out;
    out.train.well_id = out.val.well_id = out.test.well_id = frame.well_id;
    out.train.rows.assign(frame.rows.begin(), frame.rows.begin() + n_train);
    out.val.rows.assign(frame.rows.begin() + n_train, frame.rows.begin() + n_train + n_val);
    out.test.rows.assign(frame.rows.begin() + n_train + n_val, frame.rows.end());
    return out;
}

// ---------------------------------------------------------------------------
// Training loop

struct ModelSpec {
    ModelKind kind = ModelKind::kLstm;
    std::size_t hidden_size = 20;
    std::size_t num_layers = 2;  // 1 for RNN
};

inline ModelSpec default_model_spec(ModelKind kind) {
    return ModelSpec{kind, 20, kind == ModelKind::kRnn ? std::size_t{1} : std::size_t{2}};
}

// Thrown when a training step produces a non-finite loss; carries the epoch
// and sample index so the CLI can report where the run diverged.
class TrainingDivergence : public std::runtime_error {
public:
    TrainingDivergence(std::size_t epoch, std::size_t sample_index)
        : std::runtime_error("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + ", sample " +
                             std::to_string(sample_index)),
          epoch_(epoch),
          sample_index_(sample_index) {}

    std::size_t epoch() const { return epoch_; }
    std::size_t sample_index() const { return sample_index_; }

private:
    std::size_t epoch_;
    std::size_t sample_index_;
};

inline double dataset_loss(const SequenceModel& model, const SupervisedDataset& ds) {
    if (ds.samples.empty())
        throw std::invalid_argument("dataset_loss: empty dataset");
    double acc = 0.0;
    for (const auto& s : ds.samples)
        acc += mse_loss(model_forward(s.window, model).preds, s.target);
    return acc / static_cast<double>(ds.samples.size());
}

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, Prng& prng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(prng.next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace detail

struct TrainOutcome {
    SequenceModel model;  // parameters from the best-validation epoch
    TrainReport report;
};

// Per-sample Adam updates in seeded shuffled order; early stopping once the
// validation loss has not improved for `patience` epochs. Returns the
// parameters of the best-validation epoch, not the last one.
inline TrainOutcome train_model(const ModelSpec& spec, const SupervisedDataset& train_set,
                                const SupervisedDataset& val_set, const TrainConfig& cfg) {
    validate_train_config(cfg);
    if (train_set.samples.empty() || val_set.samples.empty())
        throw std::invalid_argument("train_model: datasets must be nonempty");
    if (train_set.lookback != val_set.lookback || train_set.horizon != val_set.horizon)
        throw std::invalid_argument("train_model: train/val lookback or horizon mismatch");
    if (!(train_set.normalizer == val_set.normalizer))
        throw std::invalid_argument("train_model: train/val normalizer mismatch");

    Prng prng(cfg.seed);
    SequenceModel model = init_model(spec.kind, 3, spec.hidden_size, spec.num_layers, prng);
    AdamState adam = init_adam_state(model);

    std::vector<std::size_t> order(train_set.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainOutcome out;
    out.report.best_epoch = 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t epochs_since_best = 0;
    std::size_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (cfg.shuffle_each_epoch) detail::shuffle_indices(order, prng);
        double epoch_loss = 0.0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& sample = train_set.samples[order[k]];
            const auto lg = loss_and_gradients(model, sample.window, sample.target,
                                               cfg.clip_norm);
            if (!std::isfinite(lg.loss)) throw TrainingDivergence(epoch, order[k]);
            epoch_loss += lg.loss;
            adam_step(model, lg.grads, adam, cfg, ++step);
        }
        out.report.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));

        const double vloss = dataset_loss(model, val_set);
        if (!std::isfinite(vloss))
            throw TrainingDivergence(epoch, static_cast<std::size_t>(-1));
        out.report.val_loss.push_back(vloss);

        if (vloss < best_val) {
            best_val = vloss;
            out.model = model;
            out.report.best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= cfg.patience) {
                out.report.stopped_early = true;
                break;
            }
        }
    }
    return out;
}

}  // namespace gwcast
