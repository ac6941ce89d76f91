#pragma once

#include "poi/scenario.hpp"

namespace poi {

// Fixed-mix validation suites. The baseline drives a known set of valid
// and tampered inputs through each component (records, blocks, hub, pool)
// and checks that every tampered case is rejected and every valid case
// accepted. The combined suite layers a scale pass on top: 1000 extra
// record validations and 1000 extra hub submissions. Wall-clock latency
// is recorded around each validation call.

struct SuiteCase {
    std::string name;
    std::string component;  // records | blocks | hub | pool
    bool valid;             // ground truth
    bool accepted;          // observed
    std::string error;      // observed error, empty when accepted

    bool outcome_correct() const { return valid == accepted; }
};

struct SuiteRun {
    std::vector<SuiteCase> cases;
    MetricsReport report;
};

namespace suite_detail {

inline ContentHash h32(uint8_t fill) {
    Hash32 h;
    h.bytes.fill(fill);
    return h;
}

struct Counters {
    uint64_t valid = 0, invalid = 0, accepted_valid = 0, rejected_invalid = 0;
};

inline void tally(std::vector<SuiteCase>& cases, std::map<std::string, Counters>& per_component,
                  SuiteCase c) {
    Counters& ctr = per_component[c.component];
    if (c.valid) {
        ctr.valid++;
        if (c.accepted) ctr.accepted_valid++;
    } else {
        ctr.invalid++;
        if (!c.accepted) ctr.rejected_invalid++;
    }
    cases.push_back(std::move(c));
}

}  // namespace suite_detail

/// Baseline case mix: records 3 valid / 8 invalid, blocks 2 / 5,
/// hub 5 / 2, pool 3 / 1. scale_records/scale_hub add valid bulk cases.
inline SuiteRun run_validation_suite(uint64_t seed, size_t scale_records, size_t scale_hub,
                                     LatencyRecorder* latency = nullptr) {
    using suite_detail::h32;
    using suite_detail::tally;
    LatencyRecorder local;
    LatencyRecorder& lat = latency ? *latency : local;

    SuiteRun run;
    std::map<std::string, suite_detail::Counters> per_component;

    KeyPair alice = KeyPair::from_seed("suite:alice", seed);
    KeyPair bob = KeyPair::from_seed("suite:bob", seed);
    KeyPair proposer = KeyPair::from_seed("suite:proposer", seed);

    auto record_case = [&](const std::string& name, bool valid, const AnyRecord& r) {
        auto err = lat.timed(valid ? "record" : "record_reject", [&] { return admit(r); });
        tally(run.cases, per_component,
              {name, "records", valid, !err.has_value(), err ? err->to_string() : ""});
    };
    auto record_json_case = [&](const std::string& name, RecordKind kind, const Json& j) {
        // wire-form record: decode then admit, like any external input
        auto err = lat.timed("record_reject", [&]() -> std::optional<std::string> {
            auto decoded = record_from_json(kind, j);
            if (!decoded.ok()) return decoded.error().to_string();
            if (auto e = admit(decoded.value())) return e->to_string();
            return std::nullopt;
        });
        tally(run.cases, per_component, {name, "records", false, !err.has_value(), err ? *err : ""});
    };

    // --- records: 3 valid ---
    DataRecord data_ok = make_data_record(alice, h32(0x11), 1000, "baseline");
    ModelRecord model_ok = make_model_record(alice, h32(0x22), "1.0.0", "model-a", 1001);
    ProofRecord proof_ok = make_proof_record(alice, h32(0x33), h32(0x22), 654321, h32(0x44), 1002);
    record_case("data_valid", true, AnyRecord{data_ok});
    record_case("model_valid", true, AnyRecord{model_ok});
    record_case("proof_valid", true, AnyRecord{proof_ok});

    // --- records: 8 invalid, one per tamper category ---
    {
        Json j = to_json(data_ok);
        j.erase("timestamp");
        record_json_case("data_missing_timestamp", RecordKind::Data, j);
    }
    {
        ProofRecord r = proof_ok;
        r.dataset_hash.resize(31);
        record_case("proof_short_hash", false, AnyRecord{r});
    }
    {
        Json j = to_json(model_ok);
        j["timestamp"] = "not-a-number";
        record_json_case("model_mistyped_timestamp", RecordKind::Model, j);
    }
    {
        ModelRecord r = model_ok;
        r.model_version = "bad version!";
        record_case("model_bad_version", false, AnyRecord{r});
    }
    {
        ProofRecord r = proof_ok;
        r.validation_score = kScoreMax + 1;
        record_case("proof_score_out_of_range", false, AnyRecord{r});
    }
    {
        DataRecord r = make_data_record(alice, h32(0x12), 1003,
                                        std::string(kMaxMetadataLen + 1, 'm'));
        record_case("data_oversize_metadata", false, AnyRecord{r});
    }
    {
        DataRecord r = data_ok;
        r.metadata = "baselinx";  // one byte altered after signing
        record_case("data_tampered_metadata", false, AnyRecord{r});
    }
    {
        ProofRecord r = proof_ok;
        r.sender_id = bob.node_id.to_bytes();
        r.sender_public_key = bob.public_key;  // signature remains alice's
        record_case("proof_wrong_sender", false, AnyRecord{r});
    }

    // --- records: scale pass (valid) ---
    SplitMix64 rng(seed ^ 0x5CA1E);
    std::vector<DataRecord> bulk;
    bulk.reserve(scale_records);
    for (size_t i = 0; i < scale_records; i++) {
        Hash32 ch;
        for (auto& b : ch.bytes) b = static_cast<uint8_t>(rng.next());
        bulk.push_back(make_data_record(alice, ch, 2000 + i));
    }
    {
        suite_detail::Counters& ctr = per_component["records"];
        for (const DataRecord& r : bulk) {
            auto err = lat.timed("record", [&] { return admit(AnyRecord{r}); });
            ctr.valid++;
            if (!err) ctr.accepted_valid++;
        }
    }

    // --- blocks: genesis + 2 valid links ---
    Block genesis = make_genesis(proposer, 0);
    auto mk_block = [&](const Block& prev, int salt) {
        std::vector<DataRecord> d{make_data_record(alice, h32(uint8_t(salt)), 3000 + salt)};
        std::vector<ModelRecord> m{
            make_model_record(alice, h32(uint8_t(salt + 1)), "1.0.0", "model-a", 3000 + salt)};
        std::vector<ProofRecord> p{make_proof_record(alice, h32(uint8_t(salt + 2)),
                                                     h32(uint8_t(salt + 1)), 1000u * salt,
                                                     h32(uint8_t(salt + 3)), 3000 + salt)};
        auto b = build_block(prev, d, m, p, proposer, prev.header.timestamp + 50);
        return b.value();
    };
    Block b1 = mk_block(genesis, 1);
    Block b2 = mk_block(b1, 2);

    auto block_case = [&](const std::string& name, bool valid, const Block& blk,
                          const Block& prev) {
        auto err = lat.timed(valid ? "block" : "block_reject",
                             [&] { return validate_block(blk, prev); });
        tally(run.cases, per_component,
              {name, "blocks", valid, !err.has_value(), err ? err->to_string() : ""});
    };
    block_case("block_1_valid", true, b1, genesis);
    block_case("block_2_valid", true, b2, b1);

    // --- blocks: 5 tampered variants ---
    {
        Block t = b1;
        t.header.height += 1;
        t.header.signature = sign(proposer, canonical_bytes(t.header));
        t.block_hash = Block::compute_hash(t.header);
        block_case("block_bad_height", false, t, genesis);
    }
    {
        Block t = b1;
        t.header.prev_hash = h32(0x77);
        t.header.signature = sign(proposer, canonical_bytes(t.header));
        t.block_hash = Block::compute_hash(t.header);
        block_case("block_bad_prev_hash", false, t, genesis);
    }
    {
        Block t = b1;
        t.body.data_lane[0].timestamp += 1;
        block_case("block_tampered_data_lane", false, t, genesis);
    }
    {
        Block t = b1;
        t.body.model_lane[0].model_version = "2.0.0";
        block_case("block_tampered_model_lane", false, t, genesis);
    }
    {
        Block t = b1;
        t.body.proof_lane[0].validation_score += 1;
        block_case("block_tampered_proof_lane", false, t, genesis);
    }

    // --- hub: 5 valid + 2 invalid + scale ---
    Mempool hub_pool;
    InformationHub hub(hub_pool);
    auto hub_case = [&](const std::string& name, bool valid, PacketKind kind, const Json& payload) {
        Packet p{kind, alice.node_id, proposer.node_id, payload};
        auto res = lat.timed(valid ? "hub" : "hub_reject", [&] { return hub.ingest(p); });
        tally(run.cases, per_component,
              {name, "hub", valid, res.routed, res.routed ? "" : res.verdict});
    };
    hub_case("hub_data_1", true, PacketKind::NEW_DATA_RECORD,
             to_json(make_data_record(alice, h32(0x51), 4000)));
    hub_case("hub_data_2", true, PacketKind::NEW_DATA_RECORD,
             to_json(make_data_record(bob, h32(0x52), 4001)));
    hub_case("hub_model", true, PacketKind::NEW_MODEL_RECORD,
             to_json(make_model_record(bob, h32(0x53), "2.1.0", "model-b", 4002)));
    hub_case("hub_proof_1", true, PacketKind::NEW_PROOF_RECORD,
             to_json(make_proof_record(alice, h32(0x54), h32(0x53), 12345, h32(0x55), 4003)));
    hub_case("hub_proof_2", true, PacketKind::NEW_PROOF_RECORD,
             to_json(make_proof_record(bob, h32(0x56), h32(0x53), 99999, h32(0x57), 4004)));
    {
        Json j = to_json(make_data_record(alice, h32(0x58), 4005));
        j.erase("content_hash");  // schema decode failure
        hub_case("hub_malformed_payload", false, PacketKind::NEW_DATA_RECORD, j);
    }
    {
        ProofRecord r = make_proof_record(bob, h32(0x59), h32(0x53), 7, h32(0x5A), 4006);
        r.signature[3] ^= 0x10;
        hub_case("hub_bad_signature", false, PacketKind::NEW_PROOF_RECORD, to_json(r));
    }
    {
        suite_detail::Counters& ctr = per_component["hub"];
        std::vector<Json> payloads;
        payloads.reserve(scale_hub);
        for (size_t i = 0; i < scale_hub; i++) {
            Hash32 ch;
            for (auto& b : ch.bytes) b = static_cast<uint8_t>(rng.next());
            payloads.push_back(to_json(make_proof_record(bob, ch, h32(0x53),
                                                         rng.bounded(kScoreMax + 1), ch,
                                                         5000 + i)));
        }
        for (const Json& payload : payloads) {
            Packet p{PacketKind::NEW_PROOF_RECORD, bob.node_id, proposer.node_id, payload};
            auto res = lat.timed("hub", [&] { return hub.ingest(p); });
            ctr.valid++;
            if (res.routed) ctr.accepted_valid++;
        }
    }

    // --- pool: 3 valid (store of pre-admitted records) + 1 invalid ---
    Mempool pool;
    auto pool_store_case = [&](const std::string& name, const AnyRecord& r) {
        auto out = lat.timed("pool", [&] { return pool.insert_admitted(r); });
        tally(run.cases, per_component, {name, "pool", true, out.ok(), out.to_string()});
    };
    pool_store_case("pool_data", AnyRecord{make_data_record(alice, h32(0x61), 6000)});
    pool_store_case("pool_model",
                    AnyRecord{make_model_record(alice, h32(0x62), "1.0.0", "model-a", 6001)});
    pool_store_case("pool_proof", AnyRecord{make_proof_record(alice, h32(0x63), h32(0x62), 42,
                                                              h32(0x64), 6002)});
    {
        ProofRecord r = make_proof_record(alice, h32(0x65), h32(0x62), 43, h32(0x66), 6003);
        r.signature[9] ^= 0x01;  // validating insert must reject it
        auto out = lat.timed("pool_reject", [&] { return pool.insert(AnyRecord{r}); });
        tally(run.cases, per_component,
              {"pool_bad_signature", "pool", false, out.ok(), out.to_string()});
    }

    // --- report assembly ---
    MetricsReport& rep = run.report;
    rep.name = scale_records > 0 ? "combined" : "baseline";
    rep.seed = seed;
    Json components = Json::object();
    for (const auto& [name, ctr] : per_component) {
        rep.valid_cases += ctr.valid;
        rep.invalid_cases += ctr.invalid;
        rep.detected_invalid += ctr.rejected_invalid;
        rep.rejected_valid += ctr.valid - ctr.accepted_valid;
        components[name] = Json{{"valid", ctr.valid},
                                {"invalid", ctr.invalid},
                                {"rejected_invalid", ctr.rejected_invalid},
                                {"accepted_valid", ctr.accepted_valid}};
    }
    Json case_list = Json::array();
    for (const SuiteCase& c : run.cases)
        case_list.push_back(Json{{"name", c.name},
                                 {"component", c.component},
                                 {"valid", c.valid},
                                 {"accepted", c.accepted},
                                 {"error", c.error}});
    rep.per_component = components;
    rep.per_component["cases"] = case_list;
    rep.chain_height = 2;
    rep.committed_blocks = 2;
    rep.mempool_depth = Json{{"data", pool.data_size() + hub_pool.data_size()},
                             {"model", pool.model_size() + hub_pool.model_size()},
                             {"proof", pool.proof_size() + hub_pool.proof_size()}};
    rep.responses = Json::object();
    return run;
}

inline SuiteRun run_baseline_suite(uint64_t seed = 7, LatencyRecorder* latency = nullptr) {
    return run_validation_suite(seed, 0, 0, latency);
}

inline SuiteRun run_combined_suite(uint64_t seed = 7, LatencyRecorder* latency = nullptr) {
    return run_validation_suite(seed, 1000, 1000, latency);
}

}  // namespace poi
