#pragma once

// Model files are a single self-describing JSON document: kind, sizes, and
// every parameter tensor in row-major order. Doubles are emitted in
// shortest-round-trip decimal form, so save -> load reproduces the exact
// parameter bits.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gwcast/model.hpp"

namespace gwcast {

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<Vector>());
}

}  // namespace detail

inline nlohmann::json model_to_json(const SequenceModel& m) {
    validate_model(m);
    nlohmann::json j;
    j["format"] = "gwcast-model/1";
    j["kind"] = to_string(m.kind);
    j["input_size"] = m.input_size;
    j["hidden_size"] = m.hidden_size;
    j["num_layers"] = m.num_layers();
    nlohmann::json layers = nlohmann::json::array();
    if (m.kind == ModelKind::kRnn) {
        for (const auto& layer : m.rnn_layers)
            layers.push_back({{"w_x", detail::matrix_to_json(layer.w_x)},
                              {"w_h", detail::matrix_to_json(layer.w_h)},
                              {"b", layer.b}});
    } else {
        static constexpr const char* gate_names[4] = {"input", "forget", "output", "candidate"};
        for (const auto& layer : m.lstm_layers) {
            nlohmann::json jl;
            for (std::size_t g = 0; g < 4; ++g)
                jl[gate_names[g]] = {{"w_x", detail::matrix_to_json(layer.w_x[g])},
                                     {"w_h", detail::matrix_to_json(layer.w_h[g])},
                                     {"b", layer.b[g]}};
            layers.push_back(std::move(jl));
        }
    }
    j["layers"] = std::move(layers);
    j["head_w"] = detail::matrix_to_json(m.head_w);
    j["head_b"] = m.head_b;
    return j;
}

inline SequenceModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != std::string("gwcast-model/1"))
        throw std::runtime_error("model_from_json: unrecognized format tag");
    SequenceModel m;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "rnn")
        m.kind = ModelKind::kRnn;
    else if (kind == "lstm")
        m.kind = ModelKind::kLstm;
    else
        throw std::runtime_error("model_from_json: unknown kind \"" + kind + "\"");
    m.input_size = j.at("input_size").get<std::size_t>();
    m.hidden_size = j.at("hidden_size").get<std::size_t>();
    const auto& layers = j.at("layers");
    if (m.kind == ModelKind::kRnn) {
        for (const auto& jl : layers) {
            RnnCellParams layer;
            layer.w_x = detail::matrix_from_json(jl.at("w_x"));
            layer.w_h = detail::matrix_from_json(jl.at("w_h"));
            layer.b = jl.at("b").get<Vector>();
            m.rnn_layers.push_back(std::move(layer));
        }
    } else {
        static constexpr const char* gate_names[4] = {"input", "forget", "output", "candidate"};
        for (const auto& jl : layers) {
            LstmCellParams layer;
            for (std::size_t g = 0; g < 4; ++g) {
                const auto& jg = jl.at(gate_names[g]);
                layer.w_x[g] = detail::matrix_from_json(jg.at("w_x"));
                layer.w_h[g] = detail::matrix_from_json(jg.at("w_h"));
                layer.b[g] = jg.at("b").get<Vector>();
            }
            m.lstm_layers.push_back(std::move(layer));
        }
    }
    if (m.num_layers() != j.at("num_layers").get<std::size_t>())
        throw std::runtime_error("model_from_json: num_layers does not match layer array");
    m.head_w = detail::matrix_from_json(j.at("head_w"));
    m.head_b = j.at("head_b").get<Vector>();
    validate_model(m);
    return m;
}

inline void save_model_file(const SequenceModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("save_model_file: cannot open " + path.string() +
                                 " for writing");
    out << model_to_json(m).dump(1) << '\n';
}

inline SequenceModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_model_file: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_model_file: " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace gwcast
