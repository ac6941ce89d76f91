#pragma once

#include <cmath>
#include <map>
#include <set>

#include "poi/block.hpp"
#include "poi/hub.hpp"
#include "poi/inference.hpp"
#include "poi/simnet.hpp"
#include "poi/trust.hpp"

namespace poi {

struct ConsensusParams {
    uint32_t verify_interval_rounds = 1;  // audit every N rounds
    double audit_fraction = 0.2;          // fraction of pending proofs sampled
    uint32_t quorum = 0;                  // 0 -> floor(M/2)+1
    size_t max_per_lane = 256;
    uint64_t rng_seed = 1;  // shared audit-sampling seed
    uint64_t task_timeout_ms = 2000;
    // Voters re-verify every proof in a proposal, not just the sampled
    // audit set; keeps fabricated proofs out of committed blocks even
    // when the proposer is dishonest.
    bool full_block_audit_on_vote = true;
};

inline uint32_t quorum_for(uint32_t masters, const ConsensusParams& p) {
    return p.quorum != 0 ? p.quorum : masters / 2 + 1;
}

struct MasterInfo {
    Hash32 node_id;
    Bytes public_key;
};

struct ModelInfo {
    std::string model_id;
    Hash32 model_hash;
    std::string version;
};

/// Signed per-round ballot over a proposed block.
struct Vote {
    Hash32 voter_id;
    uint64_t round = 0;
    Hash32 block_hash;
    std::vector<Hash32> audited_task_ids;
    bool approve = false;
    Bytes signature;
    Bytes voter_public_key;
};

inline Bytes vote_signing_bytes(const Vote& v) {
    CanonicalWriter w(tag::kVote);
    w.field_hash(v.voter_id);
    w.field_u64(v.round);
    w.field_hash(v.block_hash);
    w.field_u64(v.approve ? 1 : 0);
    w.field_u64(v.audited_task_ids.size());
    for (const Hash32& id : v.audited_task_ids) w.field_hash(id);
    return w.take();
}

inline Vote make_vote(const KeyPair& voter, uint64_t round, const Hash32& block_hash,
                      std::vector<Hash32> audited, bool approve) {
    Vote v;
    v.voter_id = voter.node_id;
    v.round = round;
    v.block_hash = block_hash;
    v.audited_task_ids = std::move(audited);
    v.approve = approve;
    v.voter_public_key = voter.public_key;
    v.signature = sign(voter, vote_signing_bytes(v));
    return v;
}

inline bool verify_vote(const Vote& v, uint64_t round, const Hash32& block_hash,
                        const std::vector<MasterInfo>& masters) {
    if (v.round != round || v.block_hash != block_hash) return false;
    bool known = false;
    for (const MasterInfo& m : masters)
        if (m.node_id == v.voter_id && m.public_key == v.voter_public_key) known = true;
    if (!known) return false;
    if (sha256(v.voter_public_key) != v.voter_id) return false;
    return verify(v.voter_public_key, vote_signing_bytes(v), v.signature);
}

inline Json to_json(const Vote& v) {
    Json audited = Json::array();
    for (const Hash32& id : v.audited_task_ids) audited.push_back(to_hex(id));
    return Json{{"voter_id", to_hex(v.voter_id)},
                {"round", v.round},
                {"proposed_block_hash", to_hex(v.block_hash)},
                {"audited_task_ids", audited},
                {"verdict", v.approve ? "Approve" : "Reject"},
                {"signature", to_hex(v.signature)},
                {"voter_public_key", to_hex(v.voter_public_key)}};
}

inline std::optional<Vote> vote_from_json(const Json& j) {
    try {
        Vote v;
        auto vid = hash_from_hex(j.at("voter_id").get<std::string>());
        auto bh = hash_from_hex(j.at("proposed_block_hash").get<std::string>());
        auto sig = from_hex(j.at("signature").get<std::string>());
        auto pk = from_hex(j.at("voter_public_key").get<std::string>());
        if (!vid || !bh || !sig || !pk) return std::nullopt;
        v.voter_id = *vid;
        v.block_hash = *bh;
        v.signature = *sig;
        v.voter_public_key = *pk;
        v.round = j.at("round").get<uint64_t>();
        std::string verdict = j.at("verdict").get<std::string>();
        if (verdict != "Approve" && verdict != "Reject") return std::nullopt;
        v.approve = verdict == "Approve";
        for (const Json& t : j.at("audited_task_ids")) {
            auto id = hash_from_hex(t.get<std::string>());
            if (!id) return std::nullopt;
            v.audited_task_ids.push_back(*id);
        }
        return v;
    } catch (const Json::exception&) {
        return std::nullopt;
    }
}

/// Shared task store, standing in for the off-chain artifact distribution
/// channel: every node can resolve a task_id to the exact task spec.
class TaskRegistry {
public:
    struct Entry {
        InferenceTask task;
        std::string request_id;
        Hash32 assigner;
    };

    void put(const InferenceTask& task, std::string request_id, const Hash32& assigner) {
        entries_.emplace(task.task_id, Entry{task, std::move(request_id), assigner});
    }

    const InferenceTask* find(const Hash32& task_id) const {
        auto it = entries_.find(task_id);
        return it == entries_.end() ? nullptr : &it->second.task;
    }

    const Entry* entry(const Hash32& task_id) const {
        auto it = entries_.find(task_id);
        return it == entries_.end() ? nullptr : &it->second;
    }

    size_t size() const { return entries_.size(); }

private:
    std::map<Hash32, Entry> entries_;
};

/// Deterministic audit-sample derivation: every master seeds the same RNG
/// from (shared seed, round), so sample sets agree without coordination
/// while staying unpredictable to executors.
inline uint64_t audit_seed(uint64_t shared_seed, uint64_t round) {
    Bytes material{'a', 'u', 'd', 'i', 't'};
    append_u64_be(material, shared_seed);
    append_u64_be(material, round);
    return read_u64_be(sha256(material).bytes.data());
}

/// Sample k of n indices uniformly without replacement (partial
/// Fisher-Yates over the index vector).
inline std::vector<size_t> sample_without_replacement(size_t n, size_t k, SplitMix64& rng) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; i++) idx[i] = i;
    if (k > n) k = n;
    for (size_t i = 0; i < k; i++) {
        size_t j = i + static_cast<size_t>(rng.bounded(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

enum class MasterBehavior : uint8_t {
    Honest,
    RejectAll,       // votes Reject always, never proposes
    ApproveAll,      // votes Approve without validating
    TamperProposal,  // as leader, inflates a proof score in its proposal
    CensorProofs,    // as leader, silently drops half the selected proofs
};

inline const char* master_behavior_name(MasterBehavior b) {
    switch (b) {
        case MasterBehavior::Honest: return "honest";
        case MasterBehavior::RejectAll: return "reject_all";
        case MasterBehavior::ApproveAll: return "approve_all";
        case MasterBehavior::TamperProposal: return "tamper_proposal";
        case MasterBehavior::CensorProofs: return "censor_proofs";
    }
    return "?";
}

inline std::optional<MasterBehavior> master_behavior_from_name(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(MasterBehavior::CensorProofs); i++) {
        auto b = static_cast<MasterBehavior>(i);
        if (s == master_behavior_name(b)) return b;
    }
    return std::nullopt;
}

/// Everything a master shares with the rest of the simulated world.
struct WorldBus {
    SimNetwork* net = nullptr;
    TaskRegistry* tasks = nullptr;
    ProfileTable* profiles = nullptr;  // secondary tiers, harness-owned
    const InferenceBackend* backend = nullptr;
    std::vector<MasterInfo> masters;  // sorted by node_id
    std::vector<ModelInfo> models;
    Hash32 agent_id;
    std::vector<RoundSubmission>* submissions = nullptr;  // current round
    std::vector<Evidence>* round_evidence = nullptr;      // interval/timeout evidence
};

struct AuditReport {
    uint64_t round = 0;
    std::vector<std::pair<Hash32, bool>> checks;  // (task_id, ok)
    uint32_t mismatches = 0;
};

struct CommitOutcome {
    bool committed = false;
    uint32_t approvals = 0;
    std::optional<Block> block;
};

/// Master-node state machine: routes tasks, evaluates results, audits,
/// proposes and votes on blocks, and maintains its chain replica. Driven
/// entirely by simulator events plus explicit per-round stage calls.
class MasterNode {
public:
    MasterNode(KeyPair key, MasterBehavior behavior, ConsensusParams params,
               HarnessParams harness_params, WorldBus* bus, Block genesis)
        : key_(std::move(key)),
          behavior_(behavior),
          params_(params),
          hparams_(harness_params),
          bus_(bus),
          hub_(pool_) {
        chain_.push_back(std::move(genesis));
        hub_.on_kind(PacketKind::AGENT_REQUEST,
                     [this](const Packet& p) { return handle_agent_request(p); });
        hub_.on_kind(PacketKind::TASK_RESULT,
                     [this](const Packet& p) { return handle_task_result(p); });
        hub_.on_kind(PacketKind::VOTE_REQUEST,
                     [this](const Packet& p) { return handle_vote_request(p); });
        hub_.on_kind(PacketKind::VOTE_RESPONSE,
                     [this](const Packet& p) { return handle_vote_response(p); });
        hub_.on_kind(PacketKind::BLOCK_ANNOUNCE,
                     [this](const Packet& p) { return handle_block_announce(p); });
        hub_.on_kind(PacketKind::HEARTBEAT_PONG,
                     [this](const Packet& p) { return handle_pong(p); });
    }

    const Hash32& id() const { return key_.node_id; }
    MasterBehavior behavior() const { return behavior_; }
    bool honest() const { return behavior_ == MasterBehavior::Honest; }
    const std::vector<Block>& chain() const { return chain_; }
    Mempool& mempool() { return pool_; }
    const Mempool& mempool() const { return pool_; }
    uint64_t round() const { return round_; }
    const std::vector<Vote>& round_votes() const { return votes_this_round_; }
    const std::optional<Block>& proposal() const { return proposal_; }

    std::string on_packet(const Packet& p) { return hub_.ingest(p).verdict; }

    void begin_round(uint64_t round, const Hash32& leader) {
        round_ = round;
        leader_ = leader;
        votes_this_round_.clear();
        proposal_.reset();
        pongs_.clear();
        pings_sent_at_.clear();
    }

    bool is_leader() const { return leader_ == key_.node_id; }

    // ---- step 5: cross-master verification interval (leader-side) ----

    AuditReport run_verification_interval() {
        AuditReport report;
        report.round = round_;
        if (round_ % std::max<uint32_t>(params_.verify_interval_rounds, 1) != 0 &&
            params_.verify_interval_rounds > 1)
            return report;
        std::vector<ProofRecord> proofs = pool_.pending_proofs();
        std::sort(proofs.begin(), proofs.end(),
                  [](const ProofRecord& a, const ProofRecord& b) { return a.proof_id < b.proof_id; });
        if (proofs.empty()) return report;

        size_t k = static_cast<size_t>(
            std::ceil(params_.audit_fraction * static_cast<double>(proofs.size())));
        k = std::min(std::max<size_t>(k, 1), proofs.size());
        SplitMix64 rng(audit_seed(params_.rng_seed, round_));
        for (size_t i : sample_without_replacement(proofs.size(), k, rng)) {
            const ProofRecord& proof = proofs[i];
            Hash32 task_id = Hash32::from_bytes(proof.task_id);
            bool ok = recheck_proof(proof);
            report.checks.emplace_back(task_id, ok);
            if (!ok) {
                report.mismatches++;
                pool_.evict(Hash32::from_bytes(proof.proof_id));
                if (bus_->round_evidence)
                    bus_->round_evidence->push_back({Hash32::from_bytes(proof.sender_id),
                                                     EvidenceKind::ProofAnomaly, task_id,
                                                     proof.validation_score, 0});
            }
        }
        return report;
    }

    // ---- step 6/7: propose, gather votes, commit ----

    std::optional<Block> propose_block() {
        if (behavior_ == MasterBehavior::RejectAll) return std::nullopt;

        Mempool::Selection sel = pool_.select_for_block(params_.max_per_lane);
        std::vector<ProofRecord> proofs;
        for (const ProofRecord& p : sel.proof) {
            if (recheck_proof(p)) {
                proofs.push_back(p);
            } else {
                // a bad proof gossiped into our pool; drop it now
                pool_.evict(Hash32::from_bytes(p.proof_id));
                if (bus_->round_evidence)
                    bus_->round_evidence->push_back({Hash32::from_bytes(p.sender_id),
                                                     EvidenceKind::ProofAnomaly,
                                                     Hash32::from_bytes(p.task_id),
                                                     p.validation_score, 0});
            }
        }
        if (behavior_ == MasterBehavior::CensorProofs && proofs.size() > 1)
            proofs.resize(proofs.size() / 2);
        if (sel.data.empty() && sel.model.empty() && proofs.empty()) return std::nullopt;

        auto built = build_block(chain_.back(), sel.data, sel.model, proofs, key_,
                                 bus_->net->now());
        if (!built.ok()) return std::nullopt;
        Block block = built.value();

        if (behavior_ == MasterBehavior::TamperProposal && !block.body.proof_lane.empty()) {
            // structurally consistent forgery: bump a score, redo roots+sig
            block.body.proof_lane[0].validation_score =
                (block.body.proof_lane[0].validation_score + 1) % (kScoreMax + 1);
            block.header.proof_root = lane_root(block.body.proof_lane);
            block.header.signature = sign(key_, canonical_bytes(block.header));
            block.block_hash = Block::compute_hash(block.header);
        }

        proposal_ = block;
        votes_this_round_.clear();
        votes_this_round_.push_back(
            make_vote(key_, round_, block.block_hash, {}, true));  // own ballot

        Json payload{{"round", round_}, {"block", to_json(block)}};
        for (const MasterInfo& peer : bus_->masters)
            if (peer.node_id != key_.node_id)
                bus_->net->send({PacketKind::VOTE_REQUEST, key_.node_id, peer.node_id, payload});
        return block;
    }

    CommitOutcome tally_and_commit() {
        CommitOutcome out;
        if (!proposal_) return out;
        uint32_t approvals = 0;
        std::set<Hash32> seen;
        for (const Vote& v : votes_this_round_)
            if (v.approve && seen.insert(v.voter_id).second) approvals++;
        out.approvals = approvals;
        if (approvals < quorum_for(static_cast<uint32_t>(bus_->masters.size()), params_))
            return out;  // NoQuorum: records stay available in the mempool

        Block block = *proposal_;
        adopt_block(block);
        out.committed = true;
        out.block = block;

        Json votes = Json::array();
        for (const Vote& v : votes_this_round_) votes.push_back(to_json(v));
        Json payload{{"round", round_}, {"block", to_json(block)}, {"votes", votes}};
        for (const MasterInfo& peer : bus_->masters)
            if (peer.node_id != key_.node_id)
                bus_->net->send({PacketKind::BLOCK_ANNOUNCE, key_.node_id, peer.node_id, payload});
        return out;
    }

    // ---- harness hooks ----

    void send_heartbeats() {
        pings_sent_at_.clear();
        pongs_.clear();
        for (const Hash32& id : bus_->profiles->active_ids()) {
            pings_sent_at_[id] = bus_->net->now();
            bus_->net->send({PacketKind::HEARTBEAT_PING, key_.node_id, id,
                             Json{{"round", round_}}});
        }
    }

    /// After the network drains: every pinged node must have answered
    /// within the timeout.
    std::vector<Hash32> collect_heartbeat_misses() {
        std::vector<Hash32> misses;
        for (const auto& [id, sent_at] : pings_sent_at_) {
            auto it = pongs_.find(id);
            if (it == pongs_.end() || it->second - sent_at > hparams_.heartbeat_timeout_ms) {
                misses.push_back(id);
            } else {
                bus_->profiles->at(id).last_heartbeat = it->second;
            }
        }
        return misses;
    }

    /// Reassign every pending task held by the given executor (heartbeat
    /// failover) and time out tasks past their deadline.
    void reassign_tasks_of(const std::set<Hash32>& executors) {
        std::vector<Hash32> stale;
        for (const auto& [task_id, pending] : pending_tasks_)
            if (executors.contains(pending.executor)) stale.push_back(task_id);
        for (const Hash32& task_id : stale) expire_pending(task_id, /*evidence=*/false);
    }

    void scan_overdue_tasks() {
        std::vector<Hash32> overdue;
        for (const auto& [task_id, pending] : pending_tasks_)
            if (bus_->net->now() > pending.task.deadline) overdue.push_back(task_id);
        for (const Hash32& task_id : overdue) expire_pending(task_id, /*evidence=*/true);
    }

    size_t pending_task_count() const { return pending_tasks_.size(); }

    /// True while some request still awaits a response (liveness probe).
    size_t unserved_request_count() const {
        size_t n = 0;
        for (const auto& [_, req] : requests_)
            if (!req.responded) n++;
        return n;
    }

private:
    struct RequestState {
        std::string request_id;
        std::string model_id;
        Bytes input_payload;
        std::vector<std::pair<std::string, std::string>> decoding_params;
        std::set<Hash32> attempted;
        bool responded = false;
    };

    struct PendingTask {
        InferenceTask task;
        Hash32 executor;
        std::string request_id;
        Tier tier_at_assignment;
        uint64_t assigned_at = 0;
    };

    bool recheck_proof(const ProofRecord& proof) {
        const InferenceTask* task = bus_->tasks->find(Hash32::from_bytes(proof.task_id));
        if (task == nullptr) return false;
        return verify_proof(proof, *task, *bus_->backend, hparams_.anomaly_tolerance).verdict ==
               ProofVerdict::Ok;
    }

    // ---- packet handlers ----

    std::string handle_agent_request(const Packet& p) {
        const Json& j = p.payload;
        if (!j.is_object() || !j.contains("request_id") || !j.contains("input_payload"))
            return "rejected:MalformedPacket";
        RequestState req;
        try {
            req.request_id = j.at("request_id").get<std::string>();
            auto payload = from_base64(j.at("input_payload").get<std::string>());
            if (!payload) return "rejected:MalformedPacket";
            req.input_payload = *payload;
            req.model_id = j.value("model_id", bus_->models.front().model_id);
            if (j.contains("decoding_params"))
                for (const Json& kv : j.at("decoding_params"))
                    req.decoding_params.emplace_back(kv.at(0).get<std::string>(),
                                                     kv.at(1).get<std::string>());
        } catch (const Json::exception&) {
            return "rejected:MalformedPacket";
        }
        auto [it, fresh] = requests_.emplace(req.request_id, std::move(req));
        if (!fresh) return "rejected:DuplicateRequest";
        return route_task(it->second) ? "ok" : "rejected:NoAvailableExecutor";
    }

    bool route_task(RequestState& req) {
        std::optional<Hash32> executor = pick_executor(req.attempted);
        if (!executor) {
            respond_failed(req, "NoAvailableExecutor");
            return false;
        }
        const ModelInfo& model = model_for(req.model_id);
        InferenceTask task =
            make_task(sha256(req.input_payload), model.model_hash, model.version,
                      req.input_payload, req.decoding_params,
                      bus_->net->now() + params_.task_timeout_ms);
        bus_->tasks->put(task, req.request_id, key_.node_id);
        pending_tasks_[task.task_id] = {task, *executor, req.request_id,
                                        bus_->profiles->tier(*executor), bus_->net->now()};
        req.attempted.insert(*executor);
        bus_->net->send({PacketKind::TASK_ASSIGN, key_.node_id, *executor,
                         Json{{"task", to_json(task)}, {"request_id", req.request_id}}});
        return true;
    }

    std::optional<Hash32> pick_executor(const std::set<Hash32>& attempted) {
        for (Tier tier : {Tier::Trusted, Tier::NonTrusted}) {
            std::vector<Hash32> candidates;
            for (const Hash32& id : bus_->profiles->ids_in_tier(tier))
                if (!attempted.contains(id)) candidates.push_back(id);
            if (candidates.empty()) continue;
            size_t& cursor = tier == Tier::Trusted ? trusted_cursor_ : nontrusted_cursor_;
            return candidates[cursor++ % candidates.size()];
        }
        return std::nullopt;
    }

    const ModelInfo& model_for(const std::string& model_id) const {
        for (const ModelInfo& m : bus_->models)
            if (m.model_id == model_id) return m;
        return bus_->models.front();
    }

    std::string handle_task_result(const Packet& p) {
        const Json& j = p.payload;
        auto task_id_hex = j.is_object() && j.contains("task_id")
                               ? std::optional<std::string>(j["task_id"].get<std::string>())
                               : std::nullopt;
        if (!task_id_hex) return "rejected:MalformedPacket";
        auto task_id = hash_from_hex(*task_id_hex);
        if (!task_id) return "rejected:MalformedPacket";
        auto it = pending_tasks_.find(*task_id);
        if (it == pending_tasks_.end()) return "rejected:UnknownTask";
        if (it->second.executor != p.sender_id) return "rejected:WrongExecutor";
        PendingTask pending = it->second;
        pending_tasks_.erase(it);

        RoundSubmission sub;
        sub.executor = p.sender_id;
        sub.task_id = *task_id;

        if (bus_->net->now() > pending.task.deadline) {
            sub.late = true;
            record_submission(sub);
            reassign(pending.request_id);
            return "rejected:Deadline";
        }

        std::optional<AnyRecord> decoded;
        if (j.contains("proof")) {
            auto r = record_from_json(RecordKind::Proof, j["proof"]);
            if (r.ok()) decoded = r.value();
        }
        if (!decoded) {
            sub.admitted = false;
            record_submission(sub);
            reassign(pending.request_id);
            return "rejected:MalformedPacket";
        }
        ProofRecord proof = std::get<ProofRecord>(*decoded);
        sub.proof = proof;

        if (admit(*decoded) || proof.sender_id != p.sender_id.to_bytes()) {
            sub.admitted = false;
            record_submission(sub);
            reassign(pending.request_id);
            return "rejected:BadSignature";
        }

        ProofCheck check =
            verify_proof(proof, pending.task, *bus_->backend, hparams_.anomaly_tolerance);
        record_submission(sub);  // anomaly phase re-verifies independently
        if (check.verdict != ProofVerdict::Ok) {
            reassign(pending.request_id);
            return "rejected:ScoreMismatch";
        }

        stage_record(AnyRecord{proof}, PacketKind::NEW_PROOF_RECORD);
        DataRecord data = make_data_record(key_, pending.task.dataset_hash, pending.assigned_at);
        stage_record(AnyRecord{data}, PacketKind::NEW_DATA_RECORD);
        ModelRecord model =
            make_model_record(key_, pending.task.model_hash, pending.task.model_version,
                              model_id_of(pending.task.model_hash), pending.assigned_at);
        stage_record(AnyRecord{model}, PacketKind::NEW_MODEL_RECORD);

        auto req = requests_.find(pending.request_id);
        if (pending.tier_at_assignment == Tier::Trusted) {
            if (req != requests_.end() && !req->second.responded) {
                send_agent_response(req->second, proof, "optimistic");
                req->second.responded = true;
            }
        } else {
            pending_serve_[Hash32::from_bytes(proof.proof_id)] = pending.request_id;
        }
        return "ok";
    }

    std::string model_id_of(const Hash32& model_hash) const {
        for (const ModelInfo& m : bus_->models)
            if (m.model_hash == model_hash) return m.model_id;
        return "unknown";
    }

    void record_submission(const RoundSubmission& sub) {
        if (bus_->submissions) bus_->submissions->push_back(sub);
    }

    /// Insert locally and announce to peer masters.
    void stage_record(const AnyRecord& record, PacketKind kind) {
        pool_.insert_admitted(record);
        Json payload = to_json(record);
        for (const MasterInfo& peer : bus_->masters)
            if (peer.node_id != key_.node_id)
                bus_->net->send({kind, key_.node_id, peer.node_id, payload});
    }

    void reassign(const std::string& request_id) {
        auto it = requests_.find(request_id);
        if (it == requests_.end() || it->second.responded) return;
        route_task(it->second);
    }

    void expire_pending(const Hash32& task_id, bool evidence) {
        auto it = pending_tasks_.find(task_id);
        if (it == pending_tasks_.end()) return;
        PendingTask pending = it->second;
        pending_tasks_.erase(it);
        if (evidence && bus_->round_evidence)
            bus_->round_evidence->push_back(
                {pending.executor, EvidenceKind::Timeout, task_id, 0, 0});
        reassign(pending.request_id);
    }

    void respond_failed(RequestState& req, const std::string& reason) {
        if (req.responded) return;
        req.responded = true;
        bus_->net->send({PacketKind::AGENT_RESPONSE, key_.node_id, bus_->agent_id,
                         Json{{"request_id", req.request_id},
                              {"status", "failed"},
                              {"reason", reason}}});
    }

    void send_agent_response(const RequestState& req, const ProofRecord& proof,
                             const char* path) {
        bus_->net->send({PacketKind::AGENT_RESPONSE, key_.node_id, bus_->agent_id,
                         Json{{"request_id", req.request_id},
                              {"status", "ok"},
                              {"path", path},
                              {"task_id", to_hex(proof.task_id)},
                              {"validation_score", proof.validation_score}}});
    }

    std::string handle_vote_request(const Packet& p) {
        if (p.sender_id != leader_) return "rejected:NotLeader";
        if (!p.payload.is_object() || !p.payload.contains("block"))
            return "rejected:MalformedPacket";
        uint64_t round = p.payload.value("round", uint64_t{0});
        if (round != round_ || voted_rounds_.contains(round)) return "rejected:WrongRound";
        auto decoded = block_from_json(p.payload["block"]);
        if (!decoded.ok()) return "rejected:MalformedPacket";
        const Block& block = decoded.value();

        bool approve;
        std::vector<Hash32> audited;
        switch (behavior_) {
            case MasterBehavior::RejectAll: approve = false; break;
            case MasterBehavior::ApproveAll:
            case MasterBehavior::TamperProposal: approve = true; break;
            default: approve = evaluate_proposal(block, audited); break;
        }
        voted_rounds_.insert(round);
        Vote vote = make_vote(key_, round, block.block_hash, std::move(audited), approve);
        bus_->net->send({PacketKind::VOTE_RESPONSE, key_.node_id, p.sender_id, to_json(vote)});
        return approve ? "ok" : "rejected:VoteReject";
    }

    bool evaluate_proposal(const Block& block, std::vector<Hash32>& audited) {
        if (validate_block(block, chain_.back())) return false;
        if (params_.full_block_audit_on_vote) {
            for (const ProofRecord& proof : block.body.proof_lane) {
                audited.push_back(Hash32::from_bytes(proof.task_id));
                if (!recheck_proof(proof)) return false;
            }
        }
        return true;
    }

    std::string handle_vote_response(const Packet& p) {
        if (!proposal_) return "rejected:NoProposal";
        auto vote = vote_from_json(p.payload);
        if (!vote) return "rejected:MalformedPacket";
        if (!verify_vote(*vote, round_, proposal_->block_hash, bus_->masters))
            return "rejected:BadVote";
        if (vote->voter_id != p.sender_id) return "rejected:BadVote";
        votes_this_round_.push_back(*vote);
        return "ok";
    }

    std::string handle_block_announce(const Packet& p) {
        if (!p.payload.is_object() || !p.payload.contains("block") ||
            !p.payload.contains("votes"))
            return "rejected:MalformedPacket";
        auto decoded = block_from_json(p.payload["block"]);
        if (!decoded.ok()) return "rejected:MalformedPacket";
        const Block& block = decoded.value();
        if (block.block_hash == chain_.back().block_hash) return "ok";  // already adopted
        if (validate_block(block, chain_.back())) return "rejected:InvalidBlock";

        uint64_t round = p.payload.value("round", uint64_t{0});
        uint32_t approvals = 0;
        std::set<Hash32> seen;
        for (const Json& vj : p.payload["votes"]) {
            auto vote = vote_from_json(vj);
            if (!vote || !vote->approve) continue;
            if (!verify_vote(*vote, round, block.block_hash, bus_->masters)) continue;
            if (seen.insert(vote->voter_id).second) approvals++;
        }
        if (approvals < quorum_for(static_cast<uint32_t>(bus_->masters.size()), params_))
            return "rejected:NoQuorum";
        adopt_block(block);
        return "ok";
    }

    /// Append a final block: update the chain, purge its records from the
    /// mempool, and serve any verified-path responses it settles.
    void adopt_block(const Block& block) {
        chain_.push_back(block);
        std::vector<Hash32> keys;
        for (const DataRecord& r : block.body.data_lane)
            keys.push_back(record_identity(AnyRecord{r}));
        for (const ModelRecord& r : block.body.model_lane)
            keys.push_back(record_identity(AnyRecord{r}));
        for (const ProofRecord& r : block.body.proof_lane)
            keys.push_back(record_identity(AnyRecord{r}));
        pool_.commit(keys);

        for (const ProofRecord& proof : block.body.proof_lane) {
            auto it = pending_serve_.find(Hash32::from_bytes(proof.proof_id));
            if (it == pending_serve_.end()) continue;
            auto req = requests_.find(it->second);
            if (req != requests_.end() && !req->second.responded) {
                send_agent_response(req->second, proof, "verified");
                req->second.responded = true;
            }
            pending_serve_.erase(it);
        }
    }

    std::string handle_pong(const Packet& p) {
        if (!pongs_.contains(p.sender_id)) pongs_[p.sender_id] = bus_->net->now();
        return "ok";
    }

    KeyPair key_;
    MasterBehavior behavior_;
    ConsensusParams params_;
    HarnessParams hparams_;
    WorldBus* bus_;
    Mempool pool_;
    InformationHub hub_;
    std::vector<Block> chain_;

    uint64_t round_ = 0;
    Hash32 leader_;
    std::optional<Block> proposal_;
    std::vector<Vote> votes_this_round_;
    std::set<uint64_t> voted_rounds_;

    std::map<std::string, RequestState> requests_;
    std::map<Hash32, PendingTask> pending_tasks_;
    std::map<Hash32, std::string> pending_serve_;  // proof_id -> request_id
    std::map<Hash32, uint64_t> pings_sent_at_;
    std::map<Hash32, uint64_t> pongs_;

    size_t trusted_cursor_ = 0;
    size_t nontrusted_cursor_ = 0;
};

}  // namespace poi
