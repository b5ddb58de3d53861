#include <catch2/catch.hpp>

#include <filesystem>

#include "gwcast/model_io.hpp"

using namespace gwcast;

namespace {

bool params_bit_identical(const SequenceModel& a, const SequenceModel& b) {
    const auto ta = param_tensors(a);
    const auto tb = param_tensors(b);
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (*ta[i] != *tb[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("model json round trip is bit exact") {
    for (const ModelKind kind : {ModelKind::kRnn, ModelKind::kLstm}) {
        Prng prng(kind == ModelKind::kRnn ? 101 : 202);
        const SequenceModel m =
            init_model(kind, 3, 7, kind == ModelKind::kRnn ? 1 : 3, prng);
        const nlohmann::json j = model_to_json(m);
        const SequenceModel back = model_from_json(j);
        REQUIRE(back.kind == m.kind);
        REQUIRE(back.input_size == m.input_size);
        REQUIRE(back.hidden_size == m.hidden_size);
        REQUIRE(back.num_layers() == m.num_layers());
        REQUIRE(params_bit_identical(m, back));
    }
}

TEST_CASE("model text round trip through a file is bit exact") {
    Prng prng(303);
    const SequenceModel m = init_model(ModelKind::kLstm, 3, 5, 2, prng);
    const auto path = std::filesystem::temp_directory_path() / "gwcast_model_io_test.json";
    save_model_file(m, path);
    const SequenceModel back = load_model_file(path);
    REQUIRE(params_bit_identical(m, back));
    std::filesystem::remove(path);
}

TEST_CASE("model serialization is deterministic") {
    Prng prng(404);
    const SequenceModel m = init_model(ModelKind::kRnn, 3, 4, 1, prng);
    REQUIRE(model_to_json(m).dump(1) == model_to_json(m).dump(1));
}

TEST_CASE("model loader rejects junk") {
    nlohmann::json j;
    j["format"] = "something-else";
    REQUIRE_THROWS_AS(model_from_json(j), std::runtime_error);

    Prng prng(1);
    nlohmann::json good = model_to_json(init_model(ModelKind::kRnn, 3, 4, 1, prng));
    good["kind"] = "gru";
    REQUIRE_THROWS_AS(model_from_json(good), std::runtime_error);
}
