#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "poi/merkle.hpp"
#include "poi/records.hpp"

namespace poi {

struct BlockHeader {
    uint64_t height = 0;
    Hash32 prev_hash;  // 32 zero bytes on the genesis block
    uint64_t timestamp = 0;
    Hash32 data_root;
    Hash32 model_root;
    Hash32 proof_root;
    Hash32 proposer_id;
    Bytes proposer_public_key;
    Bytes signature;
};

/// Header encoding used both for signing and for the block hash; the
/// signature field itself is excluded.
inline Bytes canonical_bytes(const BlockHeader& h) {
    CanonicalWriter w(tag::kBlockHeader);
    w.field_u64(h.height);
    w.field_hash(h.prev_hash);
    w.field_u64(h.timestamp);
    w.field_hash(h.data_root);
    w.field_hash(h.model_root);
    w.field_hash(h.proof_root);
    w.field_hash(h.proposer_id);
    w.field_bytes(h.proposer_public_key);
    return w.take();
}

/// Three-lane body: one lane per record type, each lane protected by its
/// own Merkle root in the header.
struct BlockBody {
    std::vector<DataRecord> data_lane;
    std::vector<ModelRecord> model_lane;
    std::vector<ProofRecord> proof_lane;
};

struct Block {
    BlockHeader header;
    BlockBody body;
    Hash32 block_hash;  // hash(canonical_bytes(header))

    static Hash32 compute_hash(const BlockHeader& h) { return hash(canonical_bytes(h)); }
};

template <typename R>
inline Hash32 lane_root(const std::vector<R>& lane) {
    std::vector<Bytes> leaves;
    leaves.reserve(lane.size());
    for (const R& r : lane) leaves.push_back(canonical_bytes(r));
    return merkle_root(leaves);
}

enum class BlockErrorKind : uint8_t {
    BadHeight,
    BadPrevHash,
    BadDataRoot,
    BadModelRoot,
    BadProofRoot,
    BadRecord,
    BadBlockSignature,
};

inline const char* block_error_name(BlockErrorKind k) {
    switch (k) {
        case BlockErrorKind::BadHeight: return "BadHeight";
        case BlockErrorKind::BadPrevHash: return "BadPrevHash";
        case BlockErrorKind::BadDataRoot: return "BadDataRoot";
        case BlockErrorKind::BadModelRoot: return "BadModelRoot";
        case BlockErrorKind::BadProofRoot: return "BadProofRoot";
        case BlockErrorKind::BadRecord: return "BadRecord";
        case BlockErrorKind::BadBlockSignature: return "BadBlockSignature";
    }
    return "?";
}

struct BlockError {
    BlockErrorKind kind;
    std::string detail;

    std::string to_string() const { return std::string(block_error_name(kind)) + ": " + detail; }
};

namespace detail {

// Deterministic lane order: (timestamp, identity hash), with the full
// canonical encoding as the final tie-break so ordering is total.
template <typename R>
void sort_lane(std::vector<R>& lane, const Bytes& (*id_of)(const R&)) {
    std::sort(lane.begin(), lane.end(), [&](const R& a, const R& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        const Bytes& ia = id_of(a);
        const Bytes& ib = id_of(b);
        if (ia != ib) return ia < ib;
        return canonical_bytes(a) < canonical_bytes(b);
    });
}

inline const Bytes& data_id(const DataRecord& r) { return r.content_hash; }
inline const Bytes& model_id(const ModelRecord& r) { return r.model_hash; }
inline const Bytes& proof_id(const ProofRecord& r) { return r.proof_id; }

}  // namespace detail

/// Genesis: height 0, all-zero previous hash, empty lanes.
inline Block make_genesis(const KeyPair& proposer, uint64_t timestamp) {
    Block b;
    b.header.height = 0;
    b.header.prev_hash = Hash32{};
    b.header.timestamp = timestamp;
    b.header.data_root = lane_root(b.body.data_lane);
    b.header.model_root = lane_root(b.body.model_lane);
    b.header.proof_root = lane_root(b.body.proof_lane);
    b.header.proposer_id = proposer.node_id;
    b.header.proposer_public_key = proposer.public_key;
    b.header.signature = sign(proposer, canonical_bytes(b.header));
    b.block_hash = Block::compute_hash(b.header);
    return b;
}

/// Assemble and sign the next block. All records must already have passed
/// admission; the first offender is reported instead of a block.
inline Expected<Block, ValidationError> build_block(const Block& prev,
                                                    std::vector<DataRecord> data,
                                                    std::vector<ModelRecord> model,
                                                    std::vector<ProofRecord> proof,
                                                    const KeyPair& proposer, uint64_t timestamp) {
    for (const auto& r : data)
        if (auto e = admit(AnyRecord{r})) return *e;
    for (const auto& r : model)
        if (auto e = admit(AnyRecord{r})) return *e;
    for (const auto& r : proof)
        if (auto e = admit(AnyRecord{r})) return *e;

    Block b;
    b.body.data_lane = std::move(data);
    b.body.model_lane = std::move(model);
    b.body.proof_lane = std::move(proof);
    detail::sort_lane<DataRecord>(b.body.data_lane, detail::data_id);
    detail::sort_lane<ModelRecord>(b.body.model_lane, detail::model_id);
    detail::sort_lane<ProofRecord>(b.body.proof_lane, detail::proof_id);

    std::set<Bytes> seen;
    for (const auto& p : b.body.proof_lane)
        if (!seen.insert(p.proof_id).second)
            return ValidationError{ErrorKind::Duplicate,
                                   "duplicate proof_id in proof lane: " + to_hex(p.proof_id)};

    b.header.height = prev.header.height + 1;
    b.header.prev_hash = prev.block_hash;
    b.header.timestamp = timestamp;
    b.header.data_root = lane_root(b.body.data_lane);
    b.header.model_root = lane_root(b.body.model_lane);
    b.header.proof_root = lane_root(b.body.proof_lane);
    b.header.proposer_id = proposer.node_id;
    b.header.proposer_public_key = proposer.public_key;
    b.header.signature = sign(proposer, canonical_bytes(b.header));
    b.block_hash = Block::compute_hash(b.header);
    return b;
}

/// Full block validation against its accepted predecessor. Checks run in
/// a fixed order so multi-fault blocks report deterministically:
/// height, linkage, the three lane roots, record admission, signature.
inline std::optional<BlockError> validate_block(const Block& b, const Block& prev) {
    if (b.header.height != prev.header.height + 1)
        return BlockError{BlockErrorKind::BadHeight,
                          "expected " + std::to_string(prev.header.height + 1) + ", got " +
                              std::to_string(b.header.height)};
    if (b.header.prev_hash != prev.block_hash)
        return BlockError{BlockErrorKind::BadPrevHash, "prev_hash does not match chain tip"};
    if (lane_root(b.body.data_lane) != b.header.data_root)
        return BlockError{BlockErrorKind::BadDataRoot, "data lane root mismatch"};
    if (lane_root(b.body.model_lane) != b.header.model_root)
        return BlockError{BlockErrorKind::BadModelRoot, "model lane root mismatch"};
    if (lane_root(b.body.proof_lane) != b.header.proof_root)
        return BlockError{BlockErrorKind::BadProofRoot, "proof lane root mismatch"};

    for (const auto& r : b.body.data_lane)
        if (auto e = admit(AnyRecord{r}))
            return BlockError{BlockErrorKind::BadRecord, "data lane: " + e->to_string()};
    for (const auto& r : b.body.model_lane)
        if (auto e = admit(AnyRecord{r}))
            return BlockError{BlockErrorKind::BadRecord, "model lane: " + e->to_string()};
    std::set<Bytes> seen;
    for (const auto& r : b.body.proof_lane) {
        if (auto e = admit(AnyRecord{r}))
            return BlockError{BlockErrorKind::BadRecord, "proof lane: " + e->to_string()};
        if (!seen.insert(r.proof_id).second)
            return BlockError{BlockErrorKind::BadRecord,
                              "duplicate proof_id: " + to_hex(r.proof_id)};
    }

    if (sha256(b.header.proposer_public_key) != b.header.proposer_id)
        return BlockError{BlockErrorKind::BadBlockSignature,
                          "proposer_public_key does not hash to proposer_id"};
    if (!verify(b.header.proposer_public_key, canonical_bytes(b.header), b.header.signature))
        return BlockError{BlockErrorKind::BadBlockSignature, "header signature invalid"};
    if (b.block_hash != Block::compute_hash(b.header))
        return BlockError{BlockErrorKind::BadBlockSignature, "stored block_hash mismatch"};
    return std::nullopt;
}

/// Validate the genesis block's own structure (linkage rules do not apply).
inline std::optional<BlockError> validate_genesis(const Block& b) {
    if (b.header.height != 0)
        return BlockError{BlockErrorKind::BadHeight, "genesis height must be 0"};
    if (!b.header.prev_hash.is_zero())
        return BlockError{BlockErrorKind::BadPrevHash, "genesis prev_hash must be zero"};
    if (lane_root(b.body.data_lane) != b.header.data_root)
        return BlockError{BlockErrorKind::BadDataRoot, "data lane root mismatch"};
    if (lane_root(b.body.model_lane) != b.header.model_root)
        return BlockError{BlockErrorKind::BadModelRoot, "model lane root mismatch"};
    if (lane_root(b.body.proof_lane) != b.header.proof_root)
        return BlockError{BlockErrorKind::BadProofRoot, "proof lane root mismatch"};
    if (!verify(b.header.proposer_public_key, canonical_bytes(b.header), b.header.signature))
        return BlockError{BlockErrorKind::BadBlockSignature, "header signature invalid"};
    return std::nullopt;
}

/// Whole-chain validation; reports the first failing index and error.
inline std::optional<std::pair<size_t, BlockError>> validate_chain(
    const std::vector<Block>& blocks) {
    if (blocks.empty()) return std::make_pair(size_t{0}, BlockError{BlockErrorKind::BadHeight,
                                                                    "empty chain"});
    if (auto e = validate_genesis(blocks[0])) return std::make_pair(size_t{0}, *e);
    for (size_t i = 1; i < blocks.size(); i++)
        if (auto e = validate_block(blocks[i], blocks[i - 1])) return std::make_pair(i, *e);
    return std::nullopt;
}

inline Json to_json(const BlockHeader& h) {
    return Json{{"height", h.height},
                {"prev_hash", to_hex(h.prev_hash)},
                {"timestamp", h.timestamp},
                {"data_root", to_hex(h.data_root)},
                {"model_root", to_hex(h.model_root)},
                {"proof_root", to_hex(h.proof_root)},
                {"proposer_id", to_hex(h.proposer_id)},
                {"proposer_public_key", to_hex(h.proposer_public_key)},
                {"signature", to_hex(h.signature)}};
}

inline Json to_json(const Block& b) {
    Json data = Json::array();
    for (const auto& r : b.body.data_lane) data.push_back(to_json(r));
    Json model = Json::array();
    for (const auto& r : b.body.model_lane) model.push_back(to_json(r));
    Json proof = Json::array();
    for (const auto& r : b.body.proof_lane) proof.push_back(to_json(r));
    return Json{{"header", to_json(b.header)},
                {"block_hash", to_hex(b.block_hash)},
                {"body", Json{{"data_lane", data}, {"model_lane", model}, {"proof_lane", proof}}}};
}

/// Decode a block from wire JSON. Structural errors only; semantic checks
/// stay with validate_block.
inline Expected<Block, ValidationError> block_from_json(const Json& j) {
    auto bad = [](const std::string& d) {
        return ValidationError{ErrorKind::BadType, "block: " + d};
    };
    if (!j.is_object() || !j.contains("header") || !j.contains("body") ||
        !j.contains("block_hash"))
        return bad("missing header/body/block_hash");
    const Json& h = j["header"];
    const Json& body = j["body"];
    if (!h.is_object() || !body.is_object()) return bad("header/body must be objects");

    Block b;
    try {
        b.header.height = h.at("height").get<uint64_t>();
        b.header.timestamp = h.at("timestamp").get<uint64_t>();
        auto ph = hash_from_hex(h.at("prev_hash").get<std::string>());
        auto dr = hash_from_hex(h.at("data_root").get<std::string>());
        auto mr = hash_from_hex(h.at("model_root").get<std::string>());
        auto pr = hash_from_hex(h.at("proof_root").get<std::string>());
        auto pid = hash_from_hex(h.at("proposer_id").get<std::string>());
        auto bh = hash_from_hex(j.at("block_hash").get<std::string>());
        auto pk = from_hex(h.at("proposer_public_key").get<std::string>());
        auto sig = from_hex(h.at("signature").get<std::string>());
        if (!ph || !dr || !mr || !pr || !pid || !bh || !pk || !sig)
            return bad("invalid hex in header");
        b.header.prev_hash = *ph;
        b.header.data_root = *dr;
        b.header.model_root = *mr;
        b.header.proof_root = *pr;
        b.header.proposer_id = *pid;
        b.header.proposer_public_key = *pk;
        b.header.signature = *sig;
        b.block_hash = *bh;

        for (const Json& rj : body.at("data_lane")) {
            auto r = record_from_json(RecordKind::Data, rj);
            if (!r) return r.error();
            b.body.data_lane.push_back(std::get<DataRecord>(r.value()));
        }
        for (const Json& rj : body.at("model_lane")) {
            auto r = record_from_json(RecordKind::Model, rj);
            if (!r) return r.error();
            b.body.model_lane.push_back(std::get<ModelRecord>(r.value()));
        }
        for (const Json& rj : body.at("proof_lane")) {
            auto r = record_from_json(RecordKind::Proof, rj);
            if (!r) return r.error();
            b.body.proof_lane.push_back(std::get<ProofRecord>(r.value()));
        }
    } catch (const Json::exception&) {
        return bad("malformed block JSON");
    }
    return b;
}

}  // namespace poi
