#pragma once

#include <json.hpp>
#include <string>
#include <variant>

#include "poi/common.hpp"
#include "poi/crypto.hpp"

namespace poi {

using Json = nlohmann::json;

// Schema limits, protocol constants.
inline constexpr size_t kHashLen = 32;
inline constexpr size_t kPubKeyLen = 33;
inline constexpr size_t kSignatureLen = 64;
inline constexpr size_t kMaxMetadataLen = 4096;
inline constexpr size_t kMaxModelIdLen = 128;
inline constexpr size_t kMaxModelVersionLen = 64;
inline constexpr uint64_t kScoreMax = 1'000'000;  // scores are micro-units, score x 1e6

enum class RecordKind : uint8_t { Data = 1, Model = 2, Proof = 3 };

inline const char* record_kind_name(RecordKind k) {
    switch (k) {
        case RecordKind::Data: return "DATA";
        case RecordKind::Model: return "MODEL";
        case RecordKind::Proof: return "PROOF";
    }
    return "?";
}

enum class ErrorKind : uint8_t {
    MissingField,
    BadLength,
    BadType,
    BadPattern,
    ScoreOutOfRange,
    BadSignature,
    Duplicate,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::MissingField: return "MissingField";
        case ErrorKind::BadLength: return "BadLength";
        case ErrorKind::BadType: return "BadType";
        case ErrorKind::BadPattern: return "BadPattern";
        case ErrorKind::ScoreOutOfRange: return "ScoreOutOfRange";
        case ErrorKind::BadSignature: return "BadSignature";
        case ErrorKind::Duplicate: return "Duplicate";
    }
    return "?";
}

/// First failed check, in schema order; validation short-circuits.
struct ValidationError {
    ErrorKind kind;
    std::string detail;

    std::string to_string() const { return std::string(error_kind_name(kind)) + ": " + detail; }
};

/// Commitment to an off-chain data artifact.
struct DataRecord {
    Bytes content_hash;  // 32 bytes
    uint64_t timestamp = 0;
    Bytes sender_id;       // 32 bytes, SHA-256 of sender_public_key
    std::string metadata;  // optional, <= 4096 bytes
    Bytes signature;       // 64 bytes
    Bytes sender_public_key;
};

/// Reference to a model configuration or serialized artifact.
struct ModelRecord {
    Bytes model_hash;
    std::string model_version;  // [A-Za-z0-9._-]{1,64}
    std::string model_id;       // <= 128 bytes
    std::string config_metadata;
    uint64_t timestamp = 0;
    Bytes sender_id;
    Bytes signature;
    Bytes sender_public_key;
};

/// Outcome of a deterministic evaluation run; the consensus evidence unit.
struct ProofRecord {
    Bytes dataset_hash;
    Bytes model_hash;
    uint64_t validation_score = 0;  // micro-units in [0, 1'000'000]
    Bytes task_id;
    Bytes proof_id;  // content-addressed, see proof_id_for()
    uint64_t timestamp = 0;
    Bytes sender_id;
    Bytes signature;
    Bytes sender_public_key;
};

using AnyRecord = std::variant<DataRecord, ModelRecord, ProofRecord>;

inline RecordKind record_kind(const AnyRecord& r) {
    if (std::holds_alternative<DataRecord>(r)) return RecordKind::Data;
    if (std::holds_alternative<ModelRecord>(r)) return RecordKind::Model;
    return RecordKind::Proof;
}

// Canonical encodings. Fields appear in schema order; signatures excluded.

inline Bytes canonical_bytes(const DataRecord& r) {
    CanonicalWriter w(tag::kDataRecord);
    w.field_bytes(r.content_hash);
    w.field_u64(r.timestamp);
    w.field_bytes(r.sender_id);
    w.field_string(r.metadata);
    w.field_bytes(r.sender_public_key);
    return w.take();
}

inline Bytes canonical_bytes(const ModelRecord& r) {
    CanonicalWriter w(tag::kModelRecord);
    w.field_bytes(r.model_hash);
    w.field_string(r.model_version);
    w.field_string(r.model_id);
    w.field_string(r.config_metadata);
    w.field_u64(r.timestamp);
    w.field_bytes(r.sender_id);
    w.field_bytes(r.sender_public_key);
    return w.take();
}

inline Bytes canonical_bytes(const ProofRecord& r) {
    CanonicalWriter w(tag::kProofRecord);
    w.field_bytes(r.dataset_hash);
    w.field_bytes(r.model_hash);
    w.field_u64(r.validation_score);
    w.field_bytes(r.task_id);
    w.field_bytes(r.proof_id);
    w.field_u64(r.timestamp);
    w.field_bytes(r.sender_id);
    w.field_bytes(r.sender_public_key);
    return w.take();
}

inline Bytes canonical_bytes(const AnyRecord& r) {
    return std::visit([](const auto& rec) { return canonical_bytes(rec); }, r);
}

/// proof_id = SHA-256 of the canonical encoding with proof_id zeroed
/// (signature is excluded by the encoding itself).
inline ContentHash proof_id_for(const ProofRecord& r) {
    ProofRecord tmp = r;
    tmp.proof_id = Bytes(kHashLen, 0);
    return hash(canonical_bytes(tmp));
}

/// Identity hash used for dedup keys: the claimed proof_id for proofs,
/// hash of the canonical encoding otherwise.
inline ContentHash record_identity(const AnyRecord& r) {
    if (const auto* p = std::get_if<ProofRecord>(&r)) {
        if (p->proof_id.size() == kHashLen) return Hash32::from_bytes(p->proof_id);
    }
    return hash(canonical_bytes(r));
}

namespace detail {

inline std::optional<ValidationError> check_hash_field(const Bytes& b, const char* name) {
    if (b.empty()) return ValidationError{ErrorKind::MissingField, name};
    if (b.size() != kHashLen)
        return ValidationError{ErrorKind::BadLength,
                               std::string(name) + " must be 32 bytes, got " +
                                   std::to_string(b.size())};
    return std::nullopt;
}

inline std::optional<ValidationError> check_pubkey_field(const Bytes& b) {
    if (b.empty()) return ValidationError{ErrorKind::MissingField, "sender_public_key"};
    if (b.size() != kPubKeyLen)
        return ValidationError{ErrorKind::BadLength, "sender_public_key must be 33 bytes"};
    return std::nullopt;
}

inline std::optional<ValidationError> check_signature_field(const Bytes& b) {
    if (b.empty()) return ValidationError{ErrorKind::MissingField, "signature"};
    if (b.size() != kSignatureLen)
        return ValidationError{ErrorKind::BadLength, "signature must be 64 bytes"};
    return std::nullopt;
}

inline bool version_char_ok(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
}

}  // namespace detail

// Stage one of admission: presence, type, length, pattern, and range
// checks in schema order, reporting the first violation.

inline std::optional<ValidationError> validate_schema(const DataRecord& r) {
    if (auto e = detail::check_hash_field(r.content_hash, "content_hash")) return e;
    if (auto e = detail::check_hash_field(r.sender_id, "sender_id")) return e;
    if (r.metadata.size() > kMaxMetadataLen)
        return ValidationError{ErrorKind::BadLength, "metadata exceeds 4096 bytes"};
    if (auto e = detail::check_signature_field(r.signature)) return e;
    if (auto e = detail::check_pubkey_field(r.sender_public_key)) return e;
    return std::nullopt;
}

inline std::optional<ValidationError> validate_schema(const ModelRecord& r) {
    if (auto e = detail::check_hash_field(r.model_hash, "model_hash")) return e;
    if (r.model_version.empty())
        return ValidationError{ErrorKind::BadPattern, "model_version empty"};
    if (r.model_version.size() > kMaxModelVersionLen)
        return ValidationError{ErrorKind::BadPattern, "model_version exceeds 64 chars"};
    for (char c : r.model_version)
        if (!detail::version_char_ok(c))
            return ValidationError{ErrorKind::BadPattern,
                                   "model_version must match [A-Za-z0-9._-]{1,64}"};
    if (r.model_id.empty()) return ValidationError{ErrorKind::MissingField, "model_id"};
    if (r.model_id.size() > kMaxModelIdLen)
        return ValidationError{ErrorKind::BadLength, "model_id exceeds 128 bytes"};
    if (r.config_metadata.size() > kMaxMetadataLen)
        return ValidationError{ErrorKind::BadLength, "metadata exceeds 4096 bytes"};
    if (auto e = detail::check_hash_field(r.sender_id, "sender_id")) return e;
    if (auto e = detail::check_signature_field(r.signature)) return e;
    if (auto e = detail::check_pubkey_field(r.sender_public_key)) return e;
    return std::nullopt;
}

inline std::optional<ValidationError> validate_schema(const ProofRecord& r) {
    if (auto e = detail::check_hash_field(r.dataset_hash, "dataset_hash")) return e;
    if (auto e = detail::check_hash_field(r.model_hash, "model_hash")) return e;
    if (r.validation_score > kScoreMax)
        return ValidationError{ErrorKind::ScoreOutOfRange,
                               "validation_score " + std::to_string(r.validation_score) +
                                   " exceeds 1000000"};
    if (auto e = detail::check_hash_field(r.task_id, "task_id")) return e;
    if (auto e = detail::check_hash_field(r.proof_id, "proof_id")) return e;
    if (auto e = detail::check_hash_field(r.sender_id, "sender_id")) return e;
    if (auto e = detail::check_signature_field(r.signature)) return e;
    if (auto e = detail::check_pubkey_field(r.sender_public_key)) return e;
    // proof_id is content-addressed; a mismatched id fails its derivation rule
    if (proof_id_for(r).to_bytes() != r.proof_id)
        return ValidationError{ErrorKind::BadPattern, "proof_id does not match record contents"};
    return std::nullopt;
}

inline std::optional<ValidationError> validate_schema(const AnyRecord& r) {
    return std::visit([](const auto& rec) { return validate_schema(rec); }, r);
}

// Stage two: the signature must verify over the canonical bytes and the
// carried public key must hash to the claimed sender id.

template <typename R>
inline std::optional<ValidationError> validate_signature(const R& r) {
    if (sha256(r.sender_public_key).to_bytes() != r.sender_id)
        return ValidationError{ErrorKind::BadSignature,
                               "sender_public_key does not hash to sender_id"};
    if (!verify(r.sender_public_key, canonical_bytes(r), r.signature))
        return ValidationError{ErrorKind::BadSignature, "signature verification failed"};
    return std::nullopt;
}

inline std::optional<ValidationError> validate_signature(const AnyRecord& r) {
    return std::visit([](const auto& rec) { return validate_signature(rec); }, r);
}

/// The two-stage admission gate: schema first, then signature.
inline std::optional<ValidationError> admit(const AnyRecord& r) {
    if (auto e = validate_schema(r)) return e;
    return validate_signature(r);
}

// Builders for honestly constructed records: fill derived fields and sign.

inline DataRecord make_data_record(const KeyPair& sender, const ContentHash& content_hash,
                                   uint64_t timestamp, std::string metadata = "") {
    DataRecord r;
    r.content_hash = content_hash.to_bytes();
    r.timestamp = timestamp;
    r.sender_id = sender.node_id.to_bytes();
    r.metadata = std::move(metadata);
    r.sender_public_key = sender.public_key;
    r.signature = sign(sender, canonical_bytes(r));
    return r;
}

inline ModelRecord make_model_record(const KeyPair& sender, const ContentHash& model_hash,
                                     std::string model_version, std::string model_id,
                                     uint64_t timestamp, std::string config_metadata = "") {
    ModelRecord r;
    r.model_hash = model_hash.to_bytes();
    r.model_version = std::move(model_version);
    r.model_id = std::move(model_id);
    r.config_metadata = std::move(config_metadata);
    r.timestamp = timestamp;
    r.sender_id = sender.node_id.to_bytes();
    r.sender_public_key = sender.public_key;
    r.signature = sign(sender, canonical_bytes(r));
    return r;
}

inline ProofRecord make_proof_record(const KeyPair& sender, const ContentHash& dataset_hash,
                                     const ContentHash& model_hash, uint64_t validation_score,
                                     const ContentHash& task_id, uint64_t timestamp) {
    ProofRecord r;
    r.dataset_hash = dataset_hash.to_bytes();
    r.model_hash = model_hash.to_bytes();
    r.validation_score = validation_score;
    r.task_id = task_id.to_bytes();
    r.proof_id = Bytes(kHashLen, 0);
    r.timestamp = timestamp;
    r.sender_id = sender.node_id.to_bytes();
    r.sender_public_key = sender.public_key;
    r.proof_id = proof_id_for(r).to_bytes();
    r.signature = sign(sender, canonical_bytes(r));
    return r;
}

// JSON wire form. Hashes, keys, and signatures are lowercase hex.

inline Json to_json(const DataRecord& r) {
    return Json{{"content_hash", to_hex(r.content_hash)},
                {"timestamp", r.timestamp},
                {"sender_id", to_hex(r.sender_id)},
                {"metadata", r.metadata},
                {"signature", to_hex(r.signature)},
                {"sender_public_key", to_hex(r.sender_public_key)}};
}

inline Json to_json(const ModelRecord& r) {
    return Json{{"model_hash", to_hex(r.model_hash)},
                {"model_version", r.model_version},
                {"model_id", r.model_id},
                {"metadata", r.config_metadata},
                {"timestamp", r.timestamp},
                {"sender_id", to_hex(r.sender_id)},
                {"signature", to_hex(r.signature)},
                {"sender_public_key", to_hex(r.sender_public_key)}};
}

inline Json to_json(const ProofRecord& r) {
    return Json{{"dataset_hash", to_hex(r.dataset_hash)},
                {"model_hash", to_hex(r.model_hash)},
                {"validation_score", r.validation_score},
                {"task_id", to_hex(r.task_id)},
                {"proof_id", to_hex(r.proof_id)},
                {"timestamp", r.timestamp},
                {"sender_id", to_hex(r.sender_id)},
                {"signature", to_hex(r.signature)},
                {"sender_public_key", to_hex(r.sender_public_key)}};
}

inline Json to_json(const AnyRecord& r) {
    return std::visit([](const auto& rec) { return to_json(rec); }, r);
}

namespace detail {

inline Expected<Bytes, ValidationError> json_hex_field(const Json& j, const char* name) {
    if (!j.contains(name)) return ValidationError{ErrorKind::MissingField, name};
    if (!j[name].is_string())
        return ValidationError{ErrorKind::BadType, std::string(name) + " must be a hex string"};
    auto b = from_hex(j[name].get<std::string>());
    if (!b) return ValidationError{ErrorKind::BadType, std::string(name) + " is not valid hex"};
    return *b;
}

inline Expected<uint64_t, ValidationError> json_uint_field(const Json& j, const char* name) {
    if (!j.contains(name)) return ValidationError{ErrorKind::MissingField, name};
    if (!j[name].is_number_unsigned())
        return ValidationError{ErrorKind::BadType,
                               std::string(name) + " must be an unsigned integer"};
    return j[name].get<uint64_t>();
}

inline Expected<std::string, ValidationError> json_string_field(const Json& j, const char* name,
                                                                bool required) {
    if (!j.contains(name)) {
        if (required) return ValidationError{ErrorKind::MissingField, name};
        return std::string();
    }
    if (!j[name].is_string())
        return ValidationError{ErrorKind::BadType, std::string(name) + " must be a string"};
    return j[name].get<std::string>();
}

}  // namespace detail

/// Decode one record from wire JSON. Covers presence and JSON-type errors;
/// value constraints are left to validate_schema.
inline Expected<AnyRecord, ValidationError> record_from_json(RecordKind kind, const Json& j) {
    using detail::json_hex_field;
    using detail::json_string_field;
    using detail::json_uint_field;
    if (!j.is_object()) return ValidationError{ErrorKind::BadType, "record must be a JSON object"};

    switch (kind) {
        case RecordKind::Data: {
            DataRecord r;
            auto ch = json_hex_field(j, "content_hash");
            if (!ch) return ch.error();
            r.content_hash = ch.value();
            auto ts = json_uint_field(j, "timestamp");
            if (!ts) return ts.error();
            r.timestamp = ts.value();
            auto sid = json_hex_field(j, "sender_id");
            if (!sid) return sid.error();
            r.sender_id = sid.value();
            auto md = json_string_field(j, "metadata", false);
            if (!md) return md.error();
            r.metadata = md.value();
            auto sig = json_hex_field(j, "signature");
            if (!sig) return sig.error();
            r.signature = sig.value();
            auto pk = json_hex_field(j, "sender_public_key");
            if (!pk) return pk.error();
            r.sender_public_key = pk.value();
            return AnyRecord{r};
        }
        case RecordKind::Model: {
            ModelRecord r;
            auto mh = json_hex_field(j, "model_hash");
            if (!mh) return mh.error();
            r.model_hash = mh.value();
            auto mv = json_string_field(j, "model_version", true);
            if (!mv) return mv.error();
            r.model_version = mv.value();
            auto mi = json_string_field(j, "model_id", true);
            if (!mi) return mi.error();
            r.model_id = mi.value();
            auto md = json_string_field(j, "metadata", false);
            if (!md) return md.error();
            r.config_metadata = md.value();
            auto ts = json_uint_field(j, "timestamp");
            if (!ts) return ts.error();
            r.timestamp = ts.value();
            auto sid = json_hex_field(j, "sender_id");
            if (!sid) return sid.error();
            r.sender_id = sid.value();
            auto sig = json_hex_field(j, "signature");
            if (!sig) return sig.error();
            r.signature = sig.value();
            auto pk = json_hex_field(j, "sender_public_key");
            if (!pk) return pk.error();
            r.sender_public_key = pk.value();
            return AnyRecord{r};
        }
        case RecordKind::Proof: {
            ProofRecord r;
            auto dh = json_hex_field(j, "dataset_hash");
            if (!dh) return dh.error();
            r.dataset_hash = dh.value();
            auto mh = json_hex_field(j, "model_hash");
            if (!mh) return mh.error();
            r.model_hash = mh.value();
            auto vs = json_uint_field(j, "validation_score");
            if (!vs) return vs.error();
            r.validation_score = vs.value();
            auto ti = json_hex_field(j, "task_id");
            if (!ti) return ti.error();
            r.task_id = ti.value();
            auto pi = json_hex_field(j, "proof_id");
            if (!pi) return pi.error();
            r.proof_id = pi.value();
            auto ts = json_uint_field(j, "timestamp");
            if (!ts) return ts.error();
            r.timestamp = ts.value();
            auto sid = json_hex_field(j, "sender_id");
            if (!sid) return sid.error();
            r.sender_id = sid.value();
            auto sig = json_hex_field(j, "signature");
            if (!sig) return sig.error();
            r.signature = sig.value();
            auto pk = json_hex_field(j, "sender_public_key");
            if (!pk) return pk.error();
            r.sender_public_key = pk.value();
            return AnyRecord{r};
        }
    }
    return ValidationError{ErrorKind::BadType, "unknown record kind"};
}

}  // namespace poi
