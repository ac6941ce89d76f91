#include <doctest.h>

#include <fstream>
#include <poi/inference.hpp>

using namespace poi;

namespace {

KeyPair test_key(uint64_t i) { return KeyPair::from_seed("inference-test", i); }

ContentHash h32(uint8_t fill) {
    Hash32 h;
    h.bytes.fill(fill);
    return h;
}

InferenceTask demo_task(uint64_t salt = 0) {
    Bytes payload{'q', 'u', 'e', 'r', 'y'};
    payload.push_back(static_cast<uint8_t>(salt));
    return make_task(sha256(std::string_view("ds")), sha256(std::string_view("mod")), "1.0.0",
                     payload, {{"temperature", "0"}, {"top_k", "1"}}, 5000);
}

}  // namespace

TEST_CASE("golden task fixtures reproduce frozen outputs") {
    std::ifstream f(std::string(POI_TEST_DATA_DIR) + "/golden_tasks.json");
    REQUIRE(f.good());
    Json fixtures = Json::parse(f);
    REQUIRE(fixtures.is_array());
    REQUIRE(fixtures.size() >= 2);
    for (const Json& fix : fixtures) {
        auto task = task_from_json(fix["task"]);
        REQUIRE(task.has_value());
        CHECK(task_well_formed(*task));  // file's task_id matches the content address
        InferenceResult r = execute(*task, h32(0xEE));
        CHECK(to_hex(r.output_hash) == fix["output_hash"].get<std::string>());
        CHECK(r.validation_score == fix["validation_score"].get<uint64_t>());
    }
}

TEST_CASE("execute is pure and deterministic") {
    InferenceTask t = demo_task();
    InferenceResult a = execute(t, h32(1));
    InferenceResult b = execute(t, h32(1));
    CHECK(a.output_hash == b.output_hash);
    CHECK(a.validation_score == b.validation_score);
    CHECK(a.validation_score <= kScoreMax);

    // interleave other executions; result must not drift
    for (int i = 0; i < 5; i++) execute(demo_task(i + 1), h32(2));
    InferenceResult c = execute(t, h32(1));
    CHECK(c.output_hash == a.output_hash);
}

TEST_CASE("decoding parameters feed the output") {
    InferenceTask t1 = demo_task();
    InferenceTask t2 = t1;
    t2.decoding_params[0].second = "1";  // temperature 0 -> 1
    t2.task_id = task_id_for(t2);
    CHECK(t1.task_id != t2.task_id);
    CHECK(execute(t1, h32(1)).output_hash != execute(t2, h32(1)).output_hash);

    // parameter order matters: the list is ordered, not a map
    InferenceTask t3 = t1;
    std::swap(t3.decoding_params[0], t3.decoding_params[1]);
    t3.task_id = task_id_for(t3);
    CHECK(execute(t1, h32(1)).output_hash != execute(t3, h32(1)).output_hash);
}

TEST_CASE("make_proof produces an admissible record that verifies") {
    KeyPair ex = test_key(1);
    InferenceTask t = demo_task();
    InferenceResult r = execute(t, ex.node_id);
    ProofRecord proof = make_proof(r, t, ex, 777);
    CHECK_FALSE(admit(AnyRecord{proof}));
    auto check = verify_proof(proof, t);
    CHECK(check.verdict == ProofVerdict::Ok);
    CHECK(check.recomputed_score == r.validation_score);

    // proof_id is stable across runs for the same inputs
    ProofRecord proof2 = make_proof(execute(t, ex.node_id), t, ex, 777);
    CHECK(proof.proof_id == proof2.proof_id);
    CHECK(proof.signature == proof2.signature);
}

TEST_CASE("score fabrication admits but never verifies") {
    KeyPair ex = test_key(2);
    InferenceTask t = demo_task();
    InferenceResult r = execute(t, ex.node_id);

    for (int64_t delta : {+1, -1, +500, -500, +250000}) {
        uint64_t forged =
            static_cast<uint64_t>(static_cast<int64_t>(r.validation_score) + delta) %
            (kScoreMax + 1);
        InferenceResult fr = r;
        fr.validation_score = forged;
        ProofRecord proof = make_proof(fr, t, ex, 900);
        CHECK_FALSE(admit(AnyRecord{proof}));  // schema+signature alone cannot catch it
        auto check = verify_proof(proof, t);
        CHECK(check.verdict == ProofVerdict::ScoreMismatch);
        CHECK(check.recomputed_score == r.validation_score);
    }
}

TEST_CASE("tolerance threshold bounds accepted deviation") {
    KeyPair ex = test_key(3);
    InferenceTask t = demo_task();
    InferenceResult r = execute(t, ex.node_id);
    InferenceResult off = r;
    off.validation_score = r.validation_score + 500;
    ProofRecord proof = make_proof(off, t, ex, 901);

    CHECK(verify_proof(proof, t, mock_backend(), 0).verdict == ProofVerdict::ScoreMismatch);
    CHECK(verify_proof(proof, t, mock_backend(), 499).verdict == ProofVerdict::ScoreMismatch);
    CHECK(verify_proof(proof, t, mock_backend(), 500).verdict == ProofVerdict::Ok);
    CHECK(verify_proof(proof, t, mock_backend(), 1000).verdict == ProofVerdict::Ok);
}

TEST_CASE("proof for a different task is TaskMismatch") {
    KeyPair ex = test_key(4);
    InferenceTask t1 = demo_task(1);
    InferenceTask t2 = demo_task(2);
    ProofRecord proof = make_proof(execute(t1, ex.node_id), t1, ex, 902);
    CHECK(verify_proof(proof, t2).verdict == ProofVerdict::TaskMismatch);
}

TEST_CASE("task identity and JSON round trip") {
    InferenceTask t = demo_task();
    CHECK(task_well_formed(t));

    auto back = task_from_json(to_json(t));
    REQUIRE(back.has_value());
    CHECK(back->task_id == t.task_id);
    CHECK(back->input_payload == t.input_payload);
    CHECK(back->decoding_params == t.decoding_params);

    InferenceTask big = t;
    big.input_payload.assign(kMaxInputPayload + 1, 0x7);
    big.task_id = task_id_for(big);
    CHECK_FALSE(task_well_formed(big));

    InferenceTask lying = t;
    lying.deadline += 1;  // task_id no longer matches
    CHECK_FALSE(task_well_formed(lying));
}

TEST_CASE("result JSON round trip") {
    InferenceResult r = execute(demo_task(), h32(0x33));
    auto back = result_from_json(to_json(r));
    REQUIRE(back.has_value());
    CHECK(back->output_hash == r.output_hash);
    CHECK(back->validation_score == r.validation_score);
    CHECK(back->executor_id == r.executor_id);
    CHECK_FALSE(result_from_json(Json{{"task_id", "xyz"}}).has_value());
}
