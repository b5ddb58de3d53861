#pragma once

// Recurrent forecasting models: a shallow single-layer RNN and a stacked
// (deep) LSTM, unrolled encoder/decoder style over an input window. The
// encoder consumes lookback rows of (rainfall, tide, gwl); the decoder then
// continues the same recurrence for horizon steps fed only exogenous
// (rainfall, tide) forecasts with the gwl channel zeroed, and a dense head
// shared across decoder steps maps each hidden state to one prediction.
//
// The backward pass is plain backpropagation through time over the taped
// activations; gradient_check verifies it against central finite differences.

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gwcast/numerics.hpp"

namespace gwcast {

enum class ModelKind { kRnn, kLstm };

inline const char* to_string(ModelKind kind) {
    return kind == ModelKind::kRnn ? "rnn" : "lstm";
}

struct RnnCellParams {
    Matrix w_x;  // h x d
    Matrix w_h;  // h x h
    Vector b;    // h
};

// Gate order used everywhere: input, forget, output, candidate.
enum : std::size_t { kGateInput = 0, kGateForget = 1, kGateOutput = 2, kGateCand = 3 };

struct LstmCellParams {
    std::array<Matrix, 4> w_x;
    std::array<Matrix, 4> w_h;
    std::array<Vector, 4> b;
};

struct SequenceModel {
    ModelKind kind = ModelKind::kRnn;
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
    std::vector<RnnCellParams> rnn_layers;    // kind == kRnn: exactly 1
    std::vector<LstmCellParams> lstm_layers;  // kind == kLstm: >= 2
    Matrix head_w;  // 1 x h
    Vector head_b;  // length 1

    std::size_t num_layers() const {
        return kind == ModelKind::kRnn ? rnn_layers.size() : lstm_layers.size();
    }
};

// Gradient trees are shape-identical mirrors of the model parameters.
using Gradients = SequenceModel;

// One sample fed to the model: normalized past block (lookback x 3, columns
// rainfall/tide/gwl) and exogenous future block (horizon x 2, rainfall/tide).
struct InputWindow {
    Matrix past;
    Matrix future;

    std::size_t lookback() const { return past.rows(); }
    std::size_t horizon() const { return future.rows(); }
};

struct LayerTape {
    std::vector<Vector> x;  // layer input per step, T entries
    std::vector<Vector> h;  // T+1 entries, h[0] = zeros
    // LSTM only:
    std::vector<Vector> c;  // T+1 entries, c[0] = zeros
    std::vector<Vector> gate_i, gate_f, gate_o, gate_g, tanh_c;  // T entries
};

struct ForwardTape {
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::vector<LayerTape> layers;
    Vector preds;
};

// ---------------------------------------------------------------------------
// Construction and parameter traversal

namespace detail {

inline void check_cell_shapes(const Matrix& w_x, const Matrix& w_h, const Vector& b,
                              std::size_t in, std::size_t hidden, const char* what) {
    if (w_x.rows() != hidden || w_x.cols() != in || w_h.rows() != hidden ||
        w_h.cols() != hidden || b.size() != hidden)
        throw std::invalid_argument(std::string(what) + ": inconsistent cell shapes w_x=" +
                                    w_x.shape_str() + " w_h=" + w_h.shape_str() +
                                    " b=" + std::to_string(b.size()));
}

}  // namespace detail

inline void validate_model(const SequenceModel& m) {
    if (m.input_size == 0 || m.hidden_size == 0)
        throw std::invalid_argument("model: input_size and hidden_size must be positive");
    if (m.kind == ModelKind::kRnn) {
        if (m.rnn_layers.size() != 1 || !m.lstm_layers.empty())
            throw std::invalid_argument("model: RNN kind requires exactly 1 recurrent layer");
        detail::check_cell_shapes(m.rnn_layers[0].w_x, m.rnn_layers[0].w_h, m.rnn_layers[0].b,
                                  m.input_size, m.hidden_size, "rnn layer 0");
    } else {
        if (m.lstm_layers.size() < 2 || !m.rnn_layers.empty())
            throw std::invalid_argument("model: LSTM kind requires >= 2 stacked layers");
        for (std::size_t l = 0; l < m.lstm_layers.size(); ++l) {
            const std::size_t in = l == 0 ? m.input_size : m.hidden_size;
            for (std::size_t g = 0; g < 4; ++g)
                detail::check_cell_shapes(m.lstm_layers[l].w_x[g], m.lstm_layers[l].w_h[g],
                                          m.lstm_layers[l].b[g], in, m.hidden_size,
                                          "lstm layer");
        }
    }
    if (m.head_w.rows() != 1 || m.head_w.cols() != m.hidden_size || m.head_b.size() != 1)
        throw std::invalid_argument("model: head must be 1x" + std::to_string(m.hidden_size) +
                                    " with a single bias");
}

// Weights uniform in +-1/sqrt(fan_in); biases zero except the LSTM forget
// gate bias, which starts at 1 so early cell memory survives.
inline SequenceModel init_model(ModelKind kind, std::size_t input_size, std::size_t hidden_size,
                                std::size_t num_layers, Prng& prng) {
    SequenceModel m;
    m.kind = kind;
    m.input_size = input_size;
    m.hidden_size = hidden_size;
    const auto scale = [](std::size_t fan_in) {
        return 1.0 / std::sqrt(static_cast<double>(fan_in));
    };
    if (kind == ModelKind::kRnn) {
        if (num_layers != 1)
            throw std::invalid_argument("init_model: RNN requires exactly 1 layer");
        RnnCellParams cell;
        cell.w_x = uniform_init(prng, hidden_size, input_size, scale(input_size));
        cell.w_h = uniform_init(prng, hidden_size, hidden_size, scale(hidden_size));
        cell.b = Vector(hidden_size, 0.0);
        m.rnn_layers.push_back(std::move(cell));
    } else {
        if (num_layers < 2)
            throw std::invalid_argument("init_model: LSTM requires >= 2 layers");
        for (std::size_t l = 0; l < num_layers; ++l) {
            const std::size_t in = l == 0 ? input_size : hidden_size;
            LstmCellParams cell;
            for (std::size_t g = 0; g < 4; ++g) {
                cell.w_x[g] = uniform_init(prng, hidden_size, in, scale(in));
                cell.w_h[g] = uniform_init(prng, hidden_size, hidden_size, scale(hidden_size));
                cell.b[g] = Vector(hidden_size, g == kGateForget ? 1.0 : 0.0);
            }
            m.lstm_layers.push_back(std::move(cell));
        }
    }
    m.head_w = uniform_init(prng, 1, hidden_size, scale(hidden_size));
    m.head_b = Vector(1, 0.0);
    validate_model(m);
    return m;
}

inline Gradients zeros_like(const SequenceModel& m) {
    Gradients g;
    g.kind = m.kind;
    g.input_size = m.input_size;
    g.hidden_size = m.hidden_size;
    for (const auto& layer : m.rnn_layers) {
        RnnCellParams z;
        z.w_x = Matrix(layer.w_x.rows(), layer.w_x.cols());
        z.w_h = Matrix(layer.w_h.rows(), layer.w_h.cols());
        z.b = Vector(layer.b.size(), 0.0);
        g.rnn_layers.push_back(std::move(z));
    }
    for (const auto& layer : m.lstm_layers) {
        LstmCellParams z;
        for (std::size_t i = 0; i < 4; ++i) {
            z.w_x[i] = Matrix(layer.w_x[i].rows(), layer.w_x[i].cols());
            z.w_h[i] = Matrix(layer.w_h[i].rows(), layer.w_h[i].cols());
            z.b[i] = Vector(layer.b[i].size(), 0.0);
        }
        g.lstm_layers.push_back(std::move(z));
    }
    g.head_w = Matrix(m.head_w.rows(), m.head_w.cols());
    g.head_b = Vector(m.head_b.size(), 0.0);
    return g;
}

// Flat view over every parameter tensor, in a fixed documented order:
// per layer (RNN: w_x, w_h, b | LSTM: w_x[i,f,o,g], w_h[i,f,o,g], b[i,f,o,g]),
// then head_w, head_b. Serialization, Adam, and clipping all iterate this.
inline std::vector<Vector*> param_tensors(SequenceModel& m) {
    std::vector<Vector*> out;
    for (auto& layer : m.rnn_layers) {
        out.push_back(&layer.w_x.data());
        out.push_back(&layer.w_h.data());
        out.push_back(&layer.b);
    }
    for (auto& layer : m.lstm_layers) {
        for (auto& w : layer.w_x) out.push_back(&w.data());
        for (auto& w : layer.w_h) out.push_back(&w.data());
        for (auto& b : layer.b) out.push_back(&b);
    }
    out.push_back(&m.head_w.data());
    out.push_back(&m.head_b);
    return out;
}

inline std::vector<const Vector*> param_tensors(const SequenceModel& m) {
    auto mutable_view = param_tensors(const_cast<SequenceModel&>(m));
    return std::vector<const Vector*>(mutable_view.begin(), mutable_view.end());
}

inline std::size_t param_count(const SequenceModel& m) {
    std::size_t n = 0;
    for (const Vector* t : param_tensors(m)) n += t->size();
    return n;
}

// ---------------------------------------------------------------------------
// Cell forward passes

inline Vector rnn_cell_forward(const Vector& x, const Vector& h_prev, const RnnCellParams& p) {
    detail::check_cell_shapes(p.w_x, p.w_h, p.b, x.size(), h_prev.size(), "rnn_cell_forward");
    Vector a = matvec(p.w_x, x);
    const Vector rec = matvec(p.w_h, h_prev);
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] = std::tanh(a[i] + rec[i] + p.b[i]);
    return a;
}

namespace detail {

struct LstmStep {
    Vector i, f, o, g, c, tanh_c, h;
};

inline LstmStep lstm_step(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                          const LstmCellParams& p) {
    for (std::size_t g = 0; g < 4; ++g)
        check_cell_shapes(p.w_x[g], p.w_h[g], p.b[g], x.size(), h_prev.size(),
                          "lstm_cell_forward");
    if (c_prev.size() != h_prev.size())
        throw std::invalid_argument("lstm_cell_forward: c_prev length mismatch");

    const std::size_t h = h_prev.size();
    std::array<Vector, 4> pre;
    for (std::size_t g = 0; g < 4; ++g) {
        pre[g] = matvec(p.w_x[g], x);
        const Vector rec = matvec(p.w_h[g], h_prev);
        for (std::size_t i = 0; i < h; ++i)
            pre[g][i] += rec[i] + p.b[g][i];
    }
    LstmStep s;
    s.i.resize(h);
    s.f.resize(h);
    s.o.resize(h);
    s.g.resize(h);
    s.c.resize(h);
    s.tanh_c.resize(h);
    s.h.resize(h);
    for (std::size_t k = 0; k < h; ++k) {
        s.i[k] = sigmoid(pre[kGateInput][k]);
        s.f[k] = sigmoid(pre[kGateForget][k]);
        s.o[k] = sigmoid(pre[kGateOutput][k]);
        s.g[k] = std::tanh(pre[kGateCand][k]);
        s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
        s.tanh_c[k] = std::tanh(s.c[k]);
        s.h[k] = s.o[k] * s.tanh_c[k];
    }
    return s;
}

}  // namespace detail

inline std::pair<Vector, Vector> lstm_cell_forward(const Vector& x, const Vector& h_prev,
                                                   const Vector& c_prev,
                                                   const LstmCellParams& p) {
    auto s = detail::lstm_step(x, h_prev, c_prev, p);
    return {std::move(s.h), std::move(s.c)};
}

// ---------------------------------------------------------------------------
// Unrolled forward over a window

struct ForwardResult {
    Vector preds;  // length horizon
    ForwardTape tape;
};

inline ForwardResult model_forward(const InputWindow& w, const SequenceModel& m) {
    validate_model(m);
    if (w.past.cols() != 3)
        throw std::invalid_argument("model_forward: past block must have 3 columns, got " +
                                    w.past.shape_str());
    if (w.future.cols() != 2)
        throw std::invalid_argument("model_forward: future block must have 2 columns, got " +
                                    w.future.shape_str());
    if (m.input_size != 3)
        throw std::invalid_argument("model_forward: model input_size must be 3");
    const std::size_t lookback = w.lookback();
    const std::size_t horizon = w.horizon();
    const std::size_t steps = lookback + horizon;
    const std::size_t nlayers = m.num_layers();
    const std::size_t h = m.hidden_size;

    ForwardResult r;
    r.tape.lookback = lookback;
    r.tape.horizon = horizon;
    r.tape.layers.resize(nlayers);
    for (auto& lt : r.tape.layers) {
        lt.x.reserve(steps);
        lt.h.reserve(steps + 1);
        lt.h.push_back(Vector(h, 0.0));
        if (m.kind == ModelKind::kLstm) {
            lt.c.reserve(steps + 1);
            lt.c.push_back(Vector(h, 0.0));
            lt.gate_i.reserve(steps);
            lt.gate_f.reserve(steps);
            lt.gate_o.reserve(steps);
            lt.gate_g.reserve(steps);
            lt.tanh_c.reserve(steps);
        }
    }
    r.preds.resize(horizon);

    for (std::size_t t = 0; t < steps; ++t) {
        Vector input(3);
        if (t < lookback) {
            input = {w.past(t, 0), w.past(t, 1), w.past(t, 2)};
        } else {
            // Decoder steps see exogenous forecasts only; the gwl channel is 0.
            input = {w.future(t - lookback, 0), w.future(t - lookback, 1), 0.0};
        }
        for (std::size_t l = 0; l < nlayers; ++l) {
            LayerTape& lt = r.tape.layers[l];
            lt.x.push_back(std::move(input));
            if (m.kind == ModelKind::kRnn) {
                lt.h.push_back(rnn_cell_forward(lt.x.back(), lt.h.back(), m.rnn_layers[l]));
            } else {
                auto s = detail::lstm_step(lt.x.back(), lt.h.back(), lt.c.back(),
                                           m.lstm_layers[l]);
                lt.h.push_back(std::move(s.h));
                lt.c.push_back(std::move(s.c));
                lt.gate_i.push_back(std::move(s.i));
                lt.gate_f.push_back(std::move(s.f));
                lt.gate_o.push_back(std::move(s.o));
                lt.gate_g.push_back(std::move(s.g));
                lt.tanh_c.push_back(std::move(s.tanh_c));
            }
            input = r.tape.layers[l].h.back();  // feeds the layer above
        }
        if (t >= lookback) {
            const Vector& top = r.tape.layers[nlayers - 1].h.back();
            double y = m.head_b[0];
            for (std::size_t j = 0; j < h; ++j)
                y += m.head_w(0, j) * top[j];
            r.preds[t - lookback] = y;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Backpropagation through time

// Returns the true (unclipped) gradient of the loss whose per-prediction
// derivative is dloss_dpreds. Training applies global-norm clipping through
// the loss_and_gradients wrapper below.
inline Gradients model_backward(const ForwardTape& tape, const Vector& dloss_dpreds,
                                const SequenceModel& m) {
    const std::size_t nlayers = m.num_layers();
    if (tape.layers.size() != nlayers)
        throw std::invalid_argument("model_backward: tape layer count " +
                                    std::to_string(tape.layers.size()) +
                                    " does not match model (" + std::to_string(nlayers) + ")");
    if (dloss_dpreds.size() != tape.horizon)
        throw std::invalid_argument("model_backward: dloss length " +
                                    std::to_string(dloss_dpreds.size()) +
                                    " does not match horizon " + std::to_string(tape.horizon));
    const std::size_t steps = tape.lookback + tape.horizon;
    const std::size_t h = m.hidden_size;
    for (const auto& lt : tape.layers) {
        if (lt.x.size() != steps || lt.h.size() != steps + 1 ||
            (m.kind == ModelKind::kLstm && lt.c.size() != steps + 1) ||
            lt.h[0].size() != h)
            throw std::invalid_argument("model_backward: tape does not match model shape");
    }

    Gradients grads = zeros_like(m);
    std::vector<Vector> dh_next(nlayers, Vector(h, 0.0));
    std::vector<Vector> dc_next(nlayers, Vector(h, 0.0));

    for (std::size_t ti = steps; ti-- > 0;) {
        Vector dx_above;
        for (std::size_t li = nlayers; li-- > 0;) {
            const LayerTape& lt = tape.layers[li];
            Vector dh = std::move(dh_next[li]);
            if (li == nlayers - 1 && ti >= tape.lookback) {
                const double dp = dloss_dpreds[ti - tape.lookback];
                const Vector& top = lt.h[ti + 1];
                for (std::size_t j = 0; j < h; ++j) {
                    dh[j] += dp * m.head_w(0, j);
                    grads.head_w(0, j) += dp * top[j];
                }
                grads.head_b[0] += dp;
            }
            if (li < nlayers - 1)
                for (std::size_t j = 0; j < h; ++j) dh[j] += dx_above[j];

            if (m.kind == ModelKind::kRnn) {
                const RnnCellParams& p = m.rnn_layers[li];
                RnnCellParams& g = grads.rnn_layers[li];
                const Vector& ht = lt.h[ti + 1];
                Vector da(h);
                for (std::size_t j = 0; j < h; ++j)
                    da[j] = dh[j] * (1.0 - ht[j] * ht[j]);
                add_outer(g.w_x, da, lt.x[ti]);
                add_outer(g.w_h, da, lt.h[ti]);
                for (std::size_t j = 0; j < h; ++j) g.b[j] += da[j];
                dh_next[li].assign(h, 0.0);
                add_matvec_transposed(p.w_h, da, dh_next[li]);
                dx_above.assign(lt.x[ti].size(), 0.0);
                add_matvec_transposed(p.w_x, da, dx_above);
            } else {
                const LstmCellParams& p = m.lstm_layers[li];
                LstmCellParams& g = grads.lstm_layers[li];
                const Vector& gi = lt.gate_i[ti];
                const Vector& gf = lt.gate_f[ti];
                const Vector& go = lt.gate_o[ti];
                const Vector& gg = lt.gate_g[ti];
                const Vector& tc = lt.tanh_c[ti];
                const Vector& c_prev = lt.c[ti];

                std::array<Vector, 4> da;  // pre-activation grads per gate
                for (auto& v : da) v.resize(h);
                Vector dc(h);
                for (std::size_t j = 0; j < h; ++j) {
                    const double do_ = dh[j] * tc[j];
                    dc[j] = dc_next[li][j] + dh[j] * go[j] * (1.0 - tc[j] * tc[j]);
                    const double di = dc[j] * gg[j];
                    const double df = dc[j] * c_prev[j];
                    const double dg = dc[j] * gi[j];
                    da[kGateInput][j] = di * gi[j] * (1.0 - gi[j]);
                    da[kGateForget][j] = df * gf[j] * (1.0 - gf[j]);
                    da[kGateOutput][j] = do_ * go[j] * (1.0 - go[j]);
                    da[kGateCand][j] = dg * (1.0 - gg[j] * gg[j]);
                    dc_next[li][j] = dc[j] * gf[j];
                }
                dh_next[li].assign(h, 0.0);
                dx_above.assign(lt.x[ti].size(), 0.0);
                for (std::size_t gate = 0; gate < 4; ++gate) {
                    add_outer(g.w_x[gate], da[gate], lt.x[ti]);
                    add_outer(g.w_h[gate], da[gate], lt.h[ti]);
                    for (std::size_t j = 0; j < h; ++j) g.b[gate][j] += da[gate][j];
                    add_matvec_transposed(p.w_h[gate], da[gate], dh_next[li]);
                    add_matvec_transposed(p.w_x[gate], da[gate], dx_above);
                }
            }
        }
    }
    return grads;
}

inline double gradient_l2_norm(const Gradients& g) {
    double sq = 0.0;
    for (const Vector* t : param_tensors(g))
        for (double v : *t) sq += v * v;
    return std::sqrt(sq);
}

// Scales the whole gradient tree so its global L2 norm is at most max_norm.
inline void clip_gradients(Gradients& g, double max_norm) {
    const double norm = gradient_l2_norm(g);
    if (norm > max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (Vector* t : param_tensors(g))
            for (double& v : *t) v *= s;
    }
}

namespace detail {

inline double mse_of(const Vector& preds, const Vector& target) {
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(preds.size());
}

inline Vector dmse_dpreds(const Vector& preds, const Vector& target) {
    Vector d(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        d[i] = 2.0 * (preds[i] - target[i]) / static_cast<double>(preds.size());
    return d;
}

}  // namespace detail

struct LossAndGradients {
    double loss = 0.0;
    Gradients grads;
};

// Forward + MSE + backward, with global-norm clipping applied. This is the
// path the training loop uses.
inline LossAndGradients loss_and_gradients(const SequenceModel& m, const InputWindow& w,
                                           const Vector& target, double clip_norm) {
    if (target.size() != w.horizon())
        throw std::invalid_argument("loss_and_gradients: target length mismatch");
    auto fwd = model_forward(w, m);
    LossAndGradients out{detail::mse_of(fwd.preds, target),
                         model_backward(fwd.tape, detail::dmse_dpreds(fwd.preds, target), m)};
    clip_gradients(out.grads, clip_norm);
    return out;
}

// ---------------------------------------------------------------------------
// Finite-difference verification of the backward pass

// Maximum over all parameters of |analytic - numeric| relative error on the
// MSE loss. corrupt_one_sign flips the largest analytic gradient entry before
// comparing; it exists so tests can prove the harness detects a broken
// backward pass.
inline double gradient_check(const SequenceModel& m, const InputWindow& w, const Vector& target,
                             double eps, bool corrupt_one_sign = false) {
    if (eps < 1e-8 || eps > 1e-4)
        throw std::invalid_argument("gradient_check: eps must lie in [1e-8, 1e-4]");
    auto fwd = model_forward(w, m);
    Gradients analytic = model_backward(fwd.tape, detail::dmse_dpreds(fwd.preds, target), m);

    if (corrupt_one_sign) {
        Vector* best_tensor = nullptr;
        std::size_t best_idx = 0;
        double best_abs = -1.0;
        for (Vector* t : param_tensors(analytic))
            for (std::size_t i = 0; i < t->size(); ++i)
                if (std::abs((*t)[i]) > best_abs) {
                    best_abs = std::abs((*t)[i]);
                    best_tensor = t;
                    best_idx = i;
                }
        if (best_tensor) (*best_tensor)[best_idx] = -(*best_tensor)[best_idx];
    }

    SequenceModel probe = m;
    auto probe_tensors = param_tensors(probe);
    auto analytic_tensors = param_tensors(analytic);

    double max_rel = 0.0;
    for (std::size_t ti = 0; ti < probe_tensors.size(); ++ti) {
        Vector& tensor = *probe_tensors[ti];
        const Vector& grad = *analytic_tensors[ti];
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const double saved = tensor[i];
            tensor[i] = saved + eps;
            const double loss_plus = detail::mse_of(model_forward(w, probe).preds, target);
            tensor[i] = saved - eps;
            const double loss_minus = detail::mse_of(model_forward(w, probe).preds, target);
            tensor[i] = saved;
            const double numeric = (loss_plus - loss_minus) / (2.0 * eps);
            const double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-12});
            max_rel = std::max(max_rel, std::abs(grad[i] - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace gwcast
