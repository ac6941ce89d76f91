#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "poi/records.hpp"

namespace poi {

inline constexpr size_t kMaxInputPayload = 64 * 1024;

/// A deterministic evaluation task. Content-addressed: task_id hashes the
/// canonical encoding of every other field.
struct InferenceTask {
    Hash32 task_id;
    Hash32 dataset_hash;
    Hash32 model_hash;
    std::string model_version;
    Bytes input_payload;  // <= 64 KiB
    std::vector<std::pair<std::string, std::string>> decoding_params;  // ordered
    uint64_t deadline = 0;  // simulated ms
};

/// Ordered key/value list encoding shared by the task identity and the
/// mock backend: an 8-byte big-endian count, then each key and value as a
/// length-prefixed field.
inline Bytes encode_decoding_params(
    const std::vector<std::pair<std::string, std::string>>& params) {
    Bytes out;
    append_u64_be(out, params.size());
    for (const auto& [k, v] : params) {
        append_u32_be(out, static_cast<uint32_t>(k.size()));
        out.insert(out.end(), k.begin(), k.end());
        append_u32_be(out, static_cast<uint32_t>(v.size()));
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

inline Bytes task_identity_bytes(const InferenceTask& t) {
    CanonicalWriter w(tag::kInferenceTask);
    w.field_hash(t.dataset_hash);
    w.field_hash(t.model_hash);
    w.field_string(t.model_version);
    w.field_bytes(t.input_payload);
    w.field_bytes(encode_decoding_params(t.decoding_params));
    w.field_u64(t.deadline);
    return w.take();
}

inline Hash32 task_id_for(const InferenceTask& t) { return hash(task_identity_bytes(t)); }

inline InferenceTask make_task(const Hash32& dataset_hash, const Hash32& model_hash,
                               std::string model_version, Bytes input_payload,
                               std::vector<std::pair<std::string, std::string>> decoding_params,
                               uint64_t deadline) {
    InferenceTask t;
    t.dataset_hash = dataset_hash;
    t.model_hash = model_hash;
    t.model_version = std::move(model_version);
    t.input_payload = std::move(input_payload);
    t.decoding_params = std::move(decoding_params);
    t.deadline = deadline;
    t.task_id = task_id_for(t);
    return t;
}

inline bool task_well_formed(const InferenceTask& t) {
    return t.input_payload.size() <= kMaxInputPayload && !t.model_version.empty() &&
           t.task_id == task_id_for(t);
}

struct InferenceResult {
    Hash32 task_id;
    Hash32 output_hash;
    uint64_t validation_score = 0;  // micro-units
    Hash32 executor_id;
};

/// Execution backend seam. The simulator ships a deterministic mock; a
/// real model runner can slot in without touching consensus code.
class InferenceBackend {
public:
    virtual ~InferenceBackend() = default;

    /// Returns (output_hash, validation_score) for a well-formed task.
    /// Must be pure: identical tasks yield identical results.
    virtual std::pair<Hash32, uint64_t> run(const InferenceTask& task) const = 0;
};

/// Stand-in for a model forward pass that keeps the property consensus
/// relies on: the output is a cheap deterministic function of exactly
/// (model, dataset, input, decoding parameters).
class MockInferenceBackend final : public InferenceBackend {
public:
    std::pair<Hash32, uint64_t> run(const InferenceTask& task) const override {
        Bytes pre;
        pre.push_back(tag::kMockInference);
        pre.insert(pre.end(), task.model_hash.bytes.begin(), task.model_hash.bytes.end());
        pre.insert(pre.end(), task.dataset_hash.bytes.begin(), task.dataset_hash.bytes.end());
        pre.insert(pre.end(), task.input_payload.begin(), task.input_payload.end());
        Bytes params = encode_decoding_params(task.decoding_params);
        pre.insert(pre.end(), params.begin(), params.end());
        Hash32 out = hash(pre);
        uint64_t score = read_u64_be(out.bytes.data()) % (kScoreMax + 1);
        return {out, score};
    }
};

inline const InferenceBackend& mock_backend() {
    static const MockInferenceBackend backend;
    return backend;
}

inline InferenceResult execute(const InferenceTask& task, const Hash32& executor_id,
                               const InferenceBackend& backend = mock_backend()) {
    auto [out, score] = backend.run(task);
    return InferenceResult{task.task_id, out, score, executor_id};
}

/// Wrap an execution result as a signed, admissible PROOF record.
inline ProofRecord make_proof(const InferenceResult& result, const InferenceTask& task,
                              const KeyPair& executor, uint64_t timestamp) {
    return make_proof_record(executor, task.dataset_hash, task.model_hash,
                             result.validation_score, task.task_id, timestamp);
}

enum class ProofVerdict : uint8_t { Ok, ScoreMismatch, TaskMismatch };

inline const char* proof_verdict_name(ProofVerdict v) {
    switch (v) {
        case ProofVerdict::Ok: return "Ok";
        case ProofVerdict::ScoreMismatch: return "ScoreMismatch";
        case ProofVerdict::TaskMismatch: return "TaskMismatch";
    }
    return "?";
}

struct ProofCheck {
    ProofVerdict verdict;
    uint64_t recomputed_score = 0;
};

/// Verification by recomputation: re-execute the task and require the
/// submitted score to match within the tolerance (0 by default, since the
/// backend is bit-deterministic).
inline ProofCheck verify_proof(const ProofRecord& proof, const InferenceTask& task,
                               const InferenceBackend& backend = mock_backend(),
                               uint64_t score_tolerance = 0) {
    if (proof.task_id != task.task_id.to_bytes() ||
        proof.dataset_hash != task.dataset_hash.to_bytes() ||
        proof.model_hash != task.model_hash.to_bytes())
        return {ProofVerdict::TaskMismatch, 0};
    auto [out, score] = backend.run(task);
    uint64_t diff = score > proof.validation_score ? score - proof.validation_score
                                                   : proof.validation_score - score;
    if (diff > score_tolerance) return {ProofVerdict::ScoreMismatch, score};
    return {ProofVerdict::Ok, score};
}

// Task JSON: hex hashes, base64 payload, params as [key, value] arrays.

inline Json to_json(const InferenceTask& t) {
    Json params = Json::array();
    for (const auto& [k, v] : t.decoding_params) params.push_back(Json::array({k, v}));
    return Json{{"task_id", to_hex(t.task_id)},
                {"dataset_hash", to_hex(t.dataset_hash)},
                {"model_hash", to_hex(t.model_hash)},
                {"model_version", t.model_version},
                {"input_payload", to_base64(t.input_payload)},
                {"decoding_params", params},
                {"deadline", t.deadline}};
}

inline std::optional<InferenceTask> task_from_json(const Json& j) {
    if (!j.is_object()) return std::nullopt;
    try {
        InferenceTask t;
        auto ti = hash_from_hex(j.at("task_id").get<std::string>());
        auto dh = hash_from_hex(j.at("dataset_hash").get<std::string>());
        auto mh = hash_from_hex(j.at("model_hash").get<std::string>());
        auto payload = from_base64(j.at("input_payload").get<std::string>());
        if (!ti || !dh || !mh || !payload) return std::nullopt;
        t.task_id = *ti;
        t.dataset_hash = *dh;
        t.model_hash = *mh;
        t.model_version = j.at("model_version").get<std::string>();
        t.input_payload = *payload;
        for (const Json& p : j.at("decoding_params")) {
            if (!p.is_array() || p.size() != 2) return std::nullopt;
            t.decoding_params.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
        }
        t.deadline = j.at("deadline").get<uint64_t>();
        return t;
    } catch (const Json::exception&) {
        return std::nullopt;
    }
}

inline Json to_json(const InferenceResult& r) {
    return Json{{"task_id", to_hex(r.task_id)},
                {"output_hash", to_hex(r.output_hash)},
                {"validation_score", r.validation_score},
                {"executor_id", to_hex(r.executor_id)}};
}

inline std::optional<InferenceResult> result_from_json(const Json& j) {
    if (!j.is_object()) return std::nullopt;
    try {
        InferenceResult r;
        auto ti = hash_from_hex(j.at("task_id").get<std::string>());
        auto oh = hash_from_hex(j.at("output_hash").get<std::string>());
        auto ei = hash_from_hex(j.at("executor_id").get<std::string>());
        if (!ti || !oh || !ei) return std::nullopt;
        r.task_id = *ti;
        r.output_hash = *oh;
        r.executor_id = *ei;
        r.validation_score = j.at("validation_score").get<uint64_t>();
        return r;
    } catch (const Json::exception&) {
        return std::nullopt;
    }
}

}  // namespace poi
