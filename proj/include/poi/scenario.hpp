#pragma once

#include <chrono>
#include <memory>

#include "poi/consensus.hpp"

namespace poi {

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

struct SecondarySpec {
    enum class Behavior : uint8_t { Honest, Fabricator, Laggard, Crasher, SignatureForger };
    Behavior behavior = Behavior::Honest;
    uint64_t delta_micro_units = 500;  // Fabricator score offset
    uint64_t delay_ms = 0;             // Laggard result delay
    uint64_t crash_at_round = 1;       // Crasher goes dark from this round on
    Tier initial_tier = Tier::NonTrusted;
};

inline const char* secondary_behavior_name(SecondarySpec::Behavior b) {
    switch (b) {
        case SecondarySpec::Behavior::Honest: return "honest";
        case SecondarySpec::Behavior::Fabricator: return "fabricator";
        case SecondarySpec::Behavior::Laggard: return "laggard";
        case SecondarySpec::Behavior::Crasher: return "crasher";
        case SecondarySpec::Behavior::SignatureForger: return "signature_forger";
    }
    return "?";
}

inline std::optional<SecondarySpec::Behavior> secondary_behavior_from_name(std::string_view s) {
    using B = SecondarySpec::Behavior;
    for (B b : {B::Honest, B::Fabricator, B::Laggard, B::Crasher, B::SignatureForger})
        if (s == secondary_behavior_name(b)) return b;
    return std::nullopt;
}

struct Scenario {
    std::string name = "scenario";
    uint32_t masters = 3;
    std::vector<MasterBehavior> master_behaviors;  // per index; missing -> Honest
    std::vector<SecondarySpec> secondaries;
    uint32_t rounds = 5;
    uint32_t requests_per_round = 2;
    NetParams net;
    ConsensusParams consensus;
    HarnessParams harness;
    std::vector<ModelInfo> models;

    /// ConfigError text when the scenario is internally inconsistent.
    std::optional<std::string> validate() const {
        if (masters < 1) return "masters must be >= 1";
        if (rounds < 1) return "rounds must be >= 1";
        if (secondaries.empty() && requests_per_round > 0)
            return "requests without secondaries";
        if (consensus.quorum != 0 &&
            (consensus.quorum <= masters / 2 || consensus.quorum > masters))
            return "quorum must satisfy M/2 < quorum <= M";
        if (consensus.audit_fraction <= 0.0 || consensus.audit_fraction > 1.0)
            return "audit_fraction must be in (0, 1]";
        if (harness.tau_d < 1 || harness.tau_p < 1) return "tau_d and tau_p must be >= 1";
        if (net.loss_rate < 0.0 || net.loss_rate > 1.0) return "loss_rate must be in [0, 1]";
        if (master_behaviors.size() > masters) return "more master behaviors than masters";
        return std::nullopt;
    }
};

inline Json to_json(const Scenario& sc) {
    Json masters_bh = Json::array();
    for (MasterBehavior b : sc.master_behaviors) masters_bh.push_back(master_behavior_name(b));
    Json secs = Json::array();
    for (const SecondarySpec& s : sc.secondaries) {
        Json j{{"behavior", secondary_behavior_name(s.behavior)},
               {"initial_tier", tier_name(s.initial_tier)}};
        if (s.behavior == SecondarySpec::Behavior::Fabricator)
            j["delta_micro_units"] = s.delta_micro_units;
        if (s.behavior == SecondarySpec::Behavior::Laggard) j["delay_ms"] = s.delay_ms;
        if (s.behavior == SecondarySpec::Behavior::Crasher)
            j["crash_at_round"] = s.crash_at_round;
        secs.push_back(j);
    }
    return Json{{"name", sc.name},
                {"masters", sc.masters},
                {"master_behaviors", masters_bh},
                {"secondaries", secs},
                {"rounds", sc.rounds},
                {"requests_per_round", sc.requests_per_round},
                {"net",
                 Json{{"base_latency_ms", sc.net.base_latency_ms},
                      {"jitter_max_ms", sc.net.jitter_max_ms},
                      {"loss_rate", sc.net.loss_rate},
                      {"seed", sc.net.seed}}},
                {"consensus",
                 Json{{"verify_interval_rounds", sc.consensus.verify_interval_rounds},
                      {"audit_fraction", sc.consensus.audit_fraction},
                      {"quorum", sc.consensus.quorum},
                      {"max_per_lane", sc.consensus.max_per_lane},
                      {"task_timeout_ms", sc.consensus.task_timeout_ms},
                      {"full_block_audit_on_vote", sc.consensus.full_block_audit_on_vote}}},
                {"harness",
                 Json{{"tau_d", sc.harness.tau_d},
                      {"tau_p", sc.harness.tau_p},
                      {"heartbeat_timeout_ms", sc.harness.heartbeat_timeout_ms},
                      {"anomaly_tolerance", sc.harness.anomaly_tolerance}}}};
}

inline Expected<Scenario, std::string> scenario_from_json(const Json& j) {
    Scenario sc;
    try {
        sc.name = j.value("name", std::string("scenario"));
        sc.masters = j.at("masters").get<uint32_t>();
        if (j.contains("master_behaviors"))
            for (const Json& b : j["master_behaviors"]) {
                auto mb = master_behavior_from_name(b.get<std::string>());
                if (!mb) return std::string("unknown master behavior: " + b.get<std::string>());
                sc.master_behaviors.push_back(*mb);
            }
        for (const Json& s : j.value("secondaries", Json::array())) {
            SecondarySpec spec;
            auto bh = secondary_behavior_from_name(s.value("behavior", "honest"));
            if (!bh) return std::string("unknown secondary behavior");
            spec.behavior = *bh;
            auto tier = tier_from_name(s.value("initial_tier", "NonTrusted"));
            if (!tier) return std::string("unknown initial_tier");
            spec.initial_tier = *tier;
            spec.delta_micro_units = s.value("delta_micro_units", uint64_t{500});
            spec.delay_ms = s.value("delay_ms", uint64_t{0});
            spec.crash_at_round = s.value("crash_at_round", uint64_t{1});
            sc.secondaries.push_back(spec);
        }
        sc.rounds = j.value("rounds", 5u);
        sc.requests_per_round = j.value("requests_per_round", 2u);
        if (j.contains("net")) {
            const Json& n = j["net"];
            sc.net.base_latency_ms = n.value("base_latency_ms", uint64_t{5});
            sc.net.jitter_max_ms = n.value("jitter_max_ms", uint64_t{5});
            sc.net.loss_rate = n.value("loss_rate", 0.0);
            sc.net.seed = n.value("seed", uint64_t{1});
        }
        if (j.contains("consensus")) {
            const Json& c = j["consensus"];
            sc.consensus.verify_interval_rounds = c.value("verify_interval_rounds", 1u);
            sc.consensus.audit_fraction = c.value("audit_fraction", 0.2);
            sc.consensus.quorum = c.value("quorum", 0u);
            sc.consensus.max_per_lane = c.value("max_per_lane", size_t{256});
            sc.consensus.task_timeout_ms = c.value("task_timeout_ms", uint64_t{2000});
            sc.consensus.full_block_audit_on_vote = c.value("full_block_audit_on_vote", true);
        }
        if (j.contains("harness")) {
            const Json& h = j["harness"];
            sc.harness.tau_d = h.value("tau_d", 2u);
            sc.harness.tau_p = h.value("tau_p", 5u);
            sc.harness.heartbeat_timeout_ms = h.value("heartbeat_timeout_ms", uint64_t{500});
            sc.harness.anomaly_tolerance = h.value("anomaly_tolerance", uint64_t{0});
        }
    } catch (const Json::exception& e) {
        return std::string("malformed scenario: ") + e.what();
    }
    if (auto err = sc.validate()) return *err;
    return sc;
}

// ---------------------------------------------------------------------------
// Wall-clock latency instrumentation (the only non-deterministic output;
// kept out of metrics.json)
// ---------------------------------------------------------------------------

class LatencyRecorder {
public:
    void record(const std::string& op_class, double micros) { samples_[op_class].push_back(micros); }

    template <typename F>
    auto timed(const std::string& op_class, F&& fn) {
        auto t0 = std::chrono::steady_clock::now();
        auto result = fn();
        auto t1 = std::chrono::steady_clock::now();
        record(op_class, std::chrono::duration<double, std::micro>(t1 - t0).count());
        return result;
    }

    double median(const std::string& op_class) const { return quantile(op_class, 0.5); }

    double quantile(const std::string& op_class, double q) const {
        auto it = samples_.find(op_class);
        if (it == samples_.end() || it->second.empty()) return 0.0;
        std::vector<double> v = it->second;
        std::sort(v.begin(), v.end());
        size_t idx = static_cast<size_t>(q * static_cast<double>(v.size() - 1));
        return v[idx];
    }

    /// min/median/p99/max per operation class, microseconds.
    Json summary() const {
        Json out = Json::object();
        for (const auto& [k, v] : samples_) {
            if (v.empty()) continue;
            std::vector<double> s = v;
            std::sort(s.begin(), s.end());
            out[k] = Json{{"count", s.size()},
                          {"min_us", s.front()},
                          {"median_us", quantile(k, 0.5)},
                          {"p99_us", quantile(k, 0.99)},
                          {"max_us", s.back()}};
        }
        return out;
    }

    bool empty() const { return samples_.empty(); }

private:
    std::map<std::string, std::vector<double>> samples_;
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricsReport {
    std::string name;
    uint64_t seed = 0;
    uint64_t valid_cases = 0;
    uint64_t invalid_cases = 0;
    uint64_t detected_invalid = 0;
    uint64_t rejected_valid = 0;  // false positives
    uint64_t committed_blocks = 0;
    uint64_t chain_height = 0;
    bool chain_valid = true;
    bool chains_identical = true;
    bool safety_ok = true;  // no committed proof fails recomputation
    Json per_component;     // suite runs: per-component case counters
    Json mempool_depth;     // per-lane depth at end of run
    Json responses;         // agent serving stats (simulated time)
    Json harness_transitions = Json::array();

    double detection_rate() const {
        return invalid_cases == 0
                   ? 1.0
                   : static_cast<double>(detected_invalid) / static_cast<double>(invalid_cases);
    }
    double false_positive_rate() const {
        return valid_cases == 0
                   ? 0.0
                   : static_cast<double>(rejected_valid) / static_cast<double>(valid_cases);
    }
    bool ok() const {
        return detected_invalid == invalid_cases && rejected_valid == 0 && chain_valid &&
               chains_identical && safety_ok;
    }

    Json to_json() const {
        return Json{{"name", name},
                    {"seed", seed},
                    {"valid_cases", valid_cases},
                    {"invalid_cases", invalid_cases},
                    {"detected_invalid", detected_invalid},
                    {"rejected_valid", rejected_valid},
                    {"detection_rate", detection_rate()},
                    {"false_positive_rate", false_positive_rate()},
                    {"committed_blocks", committed_blocks},
                    {"chain_height", chain_height},
                    {"chain_valid", chain_valid},
                    {"chains_identical", chains_identical},
                    {"safety_ok", safety_ok},
                    {"per_component", per_component},
                    {"mempool_depth", mempool_depth},
                    {"responses", responses},
                    {"harness_transitions", harness_transitions}};
    }
};

// ---------------------------------------------------------------------------
// Simulated actors
// ---------------------------------------------------------------------------

/// Scripted executor. Honest nodes run the task and sign a truthful proof;
/// the adversarial variants fabricate scores, forge signatures, lag past
/// deadlines, or go silent.
class SecondaryNode {
public:
    struct Injection {
        uint64_t round;
        Hash32 executor;
        Hash32 task_id;
        std::string kind;  // "fabricated" | "forged_signature"
    };

    SecondaryNode(KeyPair key, SecondarySpec spec, WorldBus* bus, const uint64_t* round,
                  std::vector<Injection>* injections)
        : key_(std::move(key)), spec_(spec), bus_(bus), round_(round), injections_(injections) {}

    const Hash32& id() const { return key_.node_id; }
    const Bytes& public_key() const { return key_.public_key; }
    const SecondarySpec& spec() const { return spec_; }

    std::string on_packet(const Packet& p) {
        bool crashed = spec_.behavior == SecondarySpec::Behavior::Crasher &&
                       *round_ >= spec_.crash_at_round;
        switch (p.kind) {
            case PacketKind::HEARTBEAT_PING:
                if (crashed) return "dropped:crashed";
                bus_->net->send({PacketKind::HEARTBEAT_PONG, key_.node_id, p.sender_id,
                                 Json{{"round", p.payload.value("round", uint64_t{0})}}});
                return "ok";
            case PacketKind::TASK_ASSIGN: return crashed ? "dropped:crashed" : run_task(p);
            default: return "ignored";
        }
    }

private:
    std::string run_task(const Packet& p) {
        if (!p.payload.is_object() || !p.payload.contains("task"))
            return "rejected:MalformedPacket";
        auto task = task_from_json(p.payload["task"]);
        if (!task || !task_well_formed(*task)) return "rejected:MalformedPacket";

        InferenceResult result = execute(*task, key_.node_id, *bus_->backend);
        uint64_t claimed = result.validation_score;
        if (spec_.behavior == SecondarySpec::Behavior::Fabricator) {
            claimed = (claimed + spec_.delta_micro_units) % (kScoreMax + 1);
            if (injections_)
                injections_->push_back({*round_, key_.node_id, task->task_id, "fabricated"});
        }
        result.validation_score = claimed;

        ProofRecord proof = make_proof_record(key_, task->dataset_hash, task->model_hash, claimed,
                                              task->task_id, bus_->net->now());
        if (spec_.behavior == SecondarySpec::Behavior::SignatureForger) {
            proof.signature[0] ^= 0xFF;
            if (injections_)
                injections_->push_back({*round_, key_.node_id, task->task_id,
                                        "forged_signature"});
        }

        uint64_t delay = spec_.behavior == SecondarySpec::Behavior::Laggard ? spec_.delay_ms : 0;
        bus_->net->send_with_delay({PacketKind::TASK_RESULT, key_.node_id, p.sender_id,
                                    Json{{"task_id", to_hex(task->task_id)},
                                         {"result", to_json(result)},
                                         {"proof", to_json(proof)},
                                         {"request_id", p.payload.value("request_id", "")}}},
                                   delay);
        return "ok";
    }

    KeyPair key_;
    SecondarySpec spec_;
    WorldBus* bus_;
    const uint64_t* round_;
    std::vector<Injection>* injections_;
};

/// Synthetic request source; also the sink that records every response.
class AgentDriver {
public:
    struct ResponseInfo {
        uint64_t requested_at = 0;
        uint64_t responded_at = 0;
        bool responded = false;
        bool ok = false;
        std::string path;  // "optimistic" | "verified" | "" for failures
    };

    AgentDriver(uint64_t seed, WorldBus* bus) : rng_(seed ^ 0xA9E17), bus_(bus) {
        Bytes label{'a', 'g', 'e', 'n', 't'};
        append_u64_be(label, seed);
        id_ = sha256(label);
    }

    const Hash32& id() const { return id_; }

    void send_requests(uint64_t round, const Hash32& leader, uint32_t count) {
        for (uint32_t i = 0; i < count; i++) {
            Bytes payload(8 + rng_.bounded(24));
            for (auto& b : payload) b = static_cast<uint8_t>(rng_.next());
            Bytes rid_material{'r', 'e', 'q'};
            append_u64_be(rid_material, round);
            append_u64_be(rid_material, i);
            std::string request_id = to_hex(sha256(rid_material)).substr(0, 16);
            const ModelInfo& model = bus_->models[rng_.bounded(bus_->models.size())];
            requests_[request_id].requested_at = bus_->net->now();
            bus_->net->send({PacketKind::AGENT_REQUEST, id_, leader,
                             Json{{"request_id", request_id},
                                  {"model_id", model.model_id},
                                  {"input_payload", to_base64(payload)},
                                  {"decoding_params", Json::array({Json::array(
                                                          {"temperature", "0"})})}}});
        }
    }

    std::string on_packet(const Packet& p) {
        if (p.kind != PacketKind::AGENT_RESPONSE) return "ignored";
        std::string rid = p.payload.value("request_id", "");
        auto it = requests_.find(rid);
        if (it == requests_.end()) return "rejected:UnknownRequest";
        if (it->second.responded) return "ignored:duplicate";
        it->second.responded = true;
        it->second.responded_at = bus_->net->now();
        it->second.ok = p.payload.value("status", "") == "ok";
        it->second.path = p.payload.value("path", "");
        return "ok";
    }

    const std::map<std::string, ResponseInfo>& requests() const { return requests_; }

    Json stats() const {
        uint64_t optimistic = 0, verified = 0, failed = 0, unserved = 0;
        double optimistic_ms = 0, verified_ms = 0;
        for (const auto& [_, r] : requests_) {
            if (!r.responded) {
                unserved++;
            } else if (!r.ok) {
                failed++;
            } else if (r.path == "optimistic") {
                optimistic++;
                optimistic_ms += static_cast<double>(r.responded_at - r.requested_at);
            } else {
                verified++;
                verified_ms += static_cast<double>(r.responded_at - r.requested_at);
            }
        }
        return Json{{"optimistic", optimistic},
                    {"verified", verified},
                    {"failed", failed},
                    {"unserved", unserved},
                    {"mean_optimistic_latency_ms",
                     optimistic ? optimistic_ms / static_cast<double>(optimistic) : 0.0},
                    {"mean_verified_latency_ms",
                     verified ? verified_ms / static_cast<double>(verified) : 0.0}};
    }

private:
    SplitMix64 rng_;
    WorldBus* bus_;
    Hash32 id_;
    std::map<std::string, ResponseInfo> requests_;
};

// ---------------------------------------------------------------------------
// World: full multi-node simulation of one scenario
// ---------------------------------------------------------------------------

struct RunOutput {
    MetricsReport report;
    std::vector<std::string> consensus_log;  // JSON lines
    std::vector<std::string> harness_log;
    std::vector<std::string> trace_log;
};

class World {
public:
    explicit World(const Scenario& sc, bool capture_trace = false)
        : sc_(sc), net_(sc.net), capture_trace_(capture_trace) {
        bus_.net = &net_;
        bus_.tasks = &tasks_;
        bus_.profiles = &profiles_;
        bus_.backend = &mock_backend();
        bus_.submissions = &submissions_;
        bus_.round_evidence = &extra_evidence_;
        bus_.models = sc.models.empty()
                          ? std::vector<ModelInfo>{{"default-model",
                                                    sha256(std::string_view("model:default")),
                                                    "1.0.0"}}
                          : sc.models;

        // deterministic identities; masters sorted by node id with their
        // configured behavior attached
        std::vector<std::pair<KeyPair, MasterBehavior>> master_keys;
        for (uint32_t i = 0; i < sc.masters; i++) {
            MasterBehavior b = i < sc.master_behaviors.size() ? sc.master_behaviors[i]
                                                              : MasterBehavior::Honest;
            master_keys.emplace_back(
                KeyPair::from_seed("master:" + std::to_string(i), sc.net.seed), b);
        }
        std::sort(master_keys.begin(), master_keys.end(),
                  [](const auto& a, const auto& b) { return a.first.node_id < b.first.node_id; });
        for (const auto& [kp, _] : master_keys)
            bus_.masters.push_back({kp.node_id, kp.public_key});

        KeyPair genesis_key = KeyPair::from_seed("genesis", sc.net.seed);
        Block genesis = make_genesis(genesis_key, 0);

        for (auto& [kp, behavior] : master_keys) {
            masters_.push_back(std::make_unique<MasterNode>(kp, behavior, sc.consensus,
                                                            sc.harness, &bus_, genesis));
            MasterNode* m = masters_.back().get();
            net_.register_node(m->id(), [m](const Packet& p) { return m->on_packet(p); });
        }

        for (size_t i = 0; i < sc.secondaries.size(); i++) {
            KeyPair kp = KeyPair::from_seed("secondary:" + std::to_string(i), sc.net.seed);
            secondaries_.push_back(std::make_unique<SecondaryNode>(
                kp, sc.secondaries[i], &bus_, &current_round_, &injections_));
            SecondaryNode* s = secondaries_.back().get();
            profiles_.add(s->id(), sc.secondaries[i].initial_tier);
            net_.register_node(s->id(), [s](const Packet& p) { return s->on_packet(p); });
        }

        agent_ = std::make_unique<AgentDriver>(sc.net.seed, &bus_);
        bus_.agent_id = agent_->id();
        net_.register_node(agent_->id(),
                           [a = agent_.get()](const Packet& p) { return a->on_packet(p); });

        if (capture_trace_) {
            net_.set_trace_sink([this](uint64_t t, const Packet& p, const std::string& verdict) {
                trace_log_.push_back(Json{{"t", t},
                                          {"kind", packet_kind_name(p.kind)},
                                          {"from", to_hex(p.sender_id)},
                                          {"to", to_hex(p.recipient_id)},
                                          {"verdict", verdict}}
                                         .dump());
            });
        }
    }

    MasterNode& leader_for(uint64_t round) {
        return *masters_[round % masters_.size()];
    }

    const std::vector<std::unique_ptr<MasterNode>>& masters() const { return masters_; }
    const std::vector<std::unique_ptr<SecondaryNode>>& secondaries() const {
        return secondaries_;
    }
    const ProfileTable& profiles() const { return profiles_; }
    const AgentDriver& agent() const { return *agent_; }
    const std::vector<std::string>& harness_log() const { return harness_log_; }
    const std::vector<std::string>& consensus_log() const { return consensus_log_; }
    SimNetwork& net() { return net_; }

    void run_round(uint64_t round) {
        current_round_ = round;
        net_.advance_to(net_.now() + 1);
        submissions_.clear();
        extra_evidence_.clear();

        MasterNode& leader = leader_for(round);
        for (auto& m : masters_) m->begin_round(round, leader.id());

        // steps 1-4: requests in, tasks out, results evaluated and staged
        agent_->send_requests(round, leader.id(), sc_.requests_per_round);
        net_.run_until_idle();

        // step 5: verification interval over the leader's pending proofs
        AuditReport audit = leader.run_verification_interval();

        // steps 6-7: propose, vote, commit, announce
        std::optional<Block> proposed = leader.propose_block();
        net_.run_until_idle();
        CommitOutcome commit = leader.tally_and_commit();
        net_.run_until_idle();

        // harness phase 1: liveness probes, failover, deadline sweep
        leader.send_heartbeats();
        net_.run_until_idle();
        std::vector<Hash32> misses = leader.collect_heartbeat_misses();
        std::set<Hash32> missed(misses.begin(), misses.end());
        for (auto& m : masters_) {
            m->reassign_tasks_of(missed);
            m->scan_overdue_tasks();
        }
        net_.run_until_idle();  // reassigned work completes inside this round

        // harness phase 2: recompute-and-compare over every submission
        std::vector<Evidence> evidence = anomaly_phase(
            submissions_,
            [this](const Hash32& id) { return tasks_.find(id); }, *bus_.backend,
            sc_.harness.anomaly_tolerance);
        for (const Hash32& id : misses)
            evidence.push_back({id, EvidenceKind::HeartbeatMiss, Hash32{}, 0, 0});
        evidence.insert(evidence.end(), extra_evidence_.begin(), extra_evidence_.end());

        // harness phase 3: tier transitions from the accumulated evidence
        std::vector<TierTransition> transitions =
            trust_update_phase(profiles_, evidence, sc_.harness);

        HarnessReport hr;
        hr.round = round;
        hr.misses = misses;
        for (const Evidence& e : evidence)
            if (e.kind == EvidenceKind::ProofAnomaly || e.kind == EvidenceKind::Timeout)
                hr.anomalies.push_back(e);
        hr.transitions = transitions;
        harness_log_.push_back(to_json(hr).dump());
        all_transitions_.insert(all_transitions_.end(), transitions.begin(), transitions.end());

        Json votes = Json::array();
        for (const Vote& v : leader.round_votes())
            votes.push_back(Json{{"voter", to_hex(v.voter_id)},
                                 {"verdict", v.approve ? "Approve" : "Reject"}});
        consensus_log_.push_back(Json{{"round", round},
                                      {"leader", to_hex(leader.id())},
                                      {"proposed_block",
                                       proposed ? Json(to_hex(proposed->block_hash)) : Json()},
                                      {"votes", votes},
                                      {"committed", commit.committed},
                                      {"approvals", commit.approvals},
                                      {"audit_mismatches", audit.mismatches}}
                                     .dump());

        round_evidence_history_.push_back(evidence);
    }

    RunOutput finish() {
        RunOutput out;
        MetricsReport& rep = out.report;
        rep.name = sc_.name;
        rep.seed = sc_.net.seed;

        // ground-truth cross-check: every injected bad submission must have
        // matching anomaly evidence in its round (no silent acceptance);
        // honest submissions must never be flagged
        std::set<std::pair<Hash32, Hash32>> injected;  // (executor, task)
        for (const auto& inj : injections_) injected.insert({inj.executor, inj.task_id});
        std::set<std::pair<Hash32, Hash32>> flagged;
        uint64_t ok_honest = 0, flagged_honest = 0;
        for (const auto& round_ev : round_evidence_history_)
            for (const Evidence& e : round_ev) {
                if (e.kind == EvidenceKind::ProofAnomaly) {
                    flagged.insert({e.node_id, e.task_id});
                    if (!injected.contains({e.node_id, e.task_id})) flagged_honest++;
                } else if (e.kind == EvidenceKind::ProofOk &&
                           !injected.contains({e.node_id, e.task_id})) {
                    ok_honest++;
                }
            }

        rep.invalid_cases = injections_.size();
        for (const auto& inj : injections_)
            if (flagged.contains({inj.executor, inj.task_id})) rep.detected_invalid++;
        rep.valid_cases = ok_honest + flagged_honest;
        rep.rejected_valid = flagged_honest;

        // chain agreement + validity + safety across honest masters
        const MasterNode* reference = nullptr;
        for (const auto& m : masters_)
            if (m->honest()) {
                reference = m.get();
                break;
            }
        if (reference == nullptr) reference = masters_.front().get();
        rep.chain_height = reference->chain().back().header.height;
        rep.committed_blocks = reference->chain().size() - 1;

        for (const auto& m : masters_) {
            if (!m->honest()) continue;
            if (validate_chain(m->chain())) rep.chain_valid = false;
            if (m->chain().size() != reference->chain().size() ||
                m->chain().back().block_hash != reference->chain().back().block_hash)
                rep.chains_identical = false;
            for (const Block& b : m->chain())
                for (const ProofRecord& proof : b.body.proof_lane) {
                    const InferenceTask* task = tasks_.find(Hash32::from_bytes(proof.task_id));
                    if (task == nullptr ||
                        verify_proof(proof, *task, *bus_.backend).verdict != ProofVerdict::Ok)
                        rep.safety_ok = false;
                }
        }

        rep.mempool_depth = Json{{"data", reference->mempool().data_size()},
                                 {"model", reference->mempool().model_size()},
                                 {"proof", reference->mempool().proof_size()}};
        rep.responses = agent_->stats();
        for (const TierTransition& t : all_transitions_)
            rep.harness_transitions.push_back(Json{{"node", to_hex(t.node_id)},
                                                   {"from", tier_name(t.from)},
                                                   {"to", tier_name(t.to)}});

        out.consensus_log = consensus_log_;
        out.harness_log = harness_log_;
        out.trace_log = trace_log_;
        return out;
    }

    RunOutput run() {
        for (uint64_t round = 1; round <= sc_.rounds; round++) run_round(round);
        return finish();
    }

private:
    Scenario sc_;
    SimNetwork net_;
    bool capture_trace_;
    TaskRegistry tasks_;
    ProfileTable profiles_;
    WorldBus bus_;
    std::vector<std::unique_ptr<MasterNode>> masters_;
    std::vector<std::unique_ptr<SecondaryNode>> secondaries_;
    std::unique_ptr<AgentDriver> agent_;
    uint64_t current_round_ = 0;
    std::vector<RoundSubmission> submissions_;
    std::vector<Evidence> extra_evidence_;
    std::vector<std::vector<Evidence>> round_evidence_history_;
    std::vector<SecondaryNode::Injection> injections_;
    std::vector<TierTransition> all_transitions_;
    std::vector<std::string> consensus_log_, harness_log_, trace_log_;
};

/// Run one scenario end to end. ConfigError (as a string) for scenarios
/// that fail validation.
inline Expected<RunOutput, std::string> run_scenario(const Scenario& sc,
                                                     bool capture_trace = false) {
    if (auto err = sc.validate()) return *err;
    World world(sc, capture_trace);
    return world.run();
}

}  // namespace poi
