#pragma once

#include <functional>
#include <map>
#include <vector>

#include "poi/inference.hpp"

namespace poi {

enum class Tier : uint8_t { Trusted, NonTrusted, Excluded };

inline const char* tier_name(Tier t) {
    switch (t) {
        case Tier::Trusted: return "Trusted";
        case Tier::NonTrusted: return "NonTrusted";
        case Tier::Excluded: return "Excluded";
    }
    return "?";
}

inline std::optional<Tier> tier_from_name(std::string_view s) {
    if (s == "Trusted") return Tier::Trusted;
    if (s == "NonTrusted") return Tier::NonTrusted;
    if (s == "Excluded") return Tier::Excluded;
    return std::nullopt;
}

/// Per-node trust bookkeeping. A success run and a failure run are never
/// both nonzero; each kind of round resets the other counter.
struct NodeProfile {
    Hash32 node_id;
    Tier tier = Tier::NonTrusted;
    uint32_t consecutive_failures = 0;
    uint32_t consecutive_successes = 0;
    uint64_t last_heartbeat = 0;
};

struct HarnessParams {
    uint32_t tau_d = 2;  // consecutive failing rounds until demotion
    uint32_t tau_p = 5;  // consecutive successful rounds until promotion
    uint64_t heartbeat_timeout_ms = 500;
    uint64_t anomaly_tolerance = 0;  // micro-units
};

enum class EvidenceKind : uint8_t { ProofOk, ProofAnomaly, Timeout, HeartbeatMiss };

inline const char* evidence_kind_name(EvidenceKind k) {
    switch (k) {
        case EvidenceKind::ProofOk: return "ProofOk";
        case EvidenceKind::ProofAnomaly: return "ProofAnomaly";
        case EvidenceKind::Timeout: return "Timeout";
        case EvidenceKind::HeartbeatMiss: return "HeartbeatMiss";
    }
    return "?";
}

/// One observed event about one node during a round.
struct Evidence {
    Hash32 node_id;
    EvidenceKind kind;
    Hash32 task_id;           // for proof/timeout evidence
    uint64_t submitted = 0;   // claimed score (anomalies)
    uint64_t recomputed = 0;  // recomputed score (anomalies)
};

struct TierTransition {
    Hash32 node_id;
    Tier from;
    Tier to;
};

/// Shared profile table. Ordered by node id so every walk is
/// deterministic.
class ProfileTable {
public:
    void add(const Hash32& id, Tier tier) {
        NodeProfile p;
        p.node_id = id;
        p.tier = tier;
        profiles_[id] = p;
    }

    bool contains(const Hash32& id) const { return profiles_.contains(id); }
    NodeProfile& at(const Hash32& id) { return profiles_.at(id); }
    const NodeProfile& at(const Hash32& id) const { return profiles_.at(id); }

    Tier tier(const Hash32& id) const { return profiles_.at(id).tier; }

    /// Non-excluded node ids of the given tier, ascending.
    std::vector<Hash32> ids_in_tier(Tier t) const {
        std::vector<Hash32> out;
        for (const auto& [id, p] : profiles_)
            if (p.tier == t) out.push_back(id);
        return out;
    }

    std::vector<Hash32> active_ids() const {
        std::vector<Hash32> out;
        for (const auto& [id, p] : profiles_)
            if (p.tier != Tier::Excluded) out.push_back(id);
        return out;
    }

    const std::map<Hash32, NodeProfile>& all() const { return profiles_; }
    std::map<Hash32, NodeProfile>& all_mutable() { return profiles_; }

private:
    std::map<Hash32, NodeProfile> profiles_;
};

/// Phase 2: re-verify every proof submitted this round against its task by
/// recomputation. Submissions that failed admission count as anomalies for
/// their executor, as do late results (timeouts).
struct RoundSubmission {
    Hash32 executor;
    ProofRecord proof;
    Hash32 task_id;
    bool admitted = true;  // false: rejected at the admission gate
    bool late = false;     // arrived past the task deadline
};

inline std::vector<Evidence> anomaly_phase(
    const std::vector<RoundSubmission>& submissions,
    const std::function<const InferenceTask*(const Hash32&)>& task_lookup,
    const InferenceBackend& backend, uint64_t tolerance) {
    std::vector<Evidence> out;
    for (const RoundSubmission& sub : submissions) {
        if (sub.late) {
            out.push_back({sub.executor, EvidenceKind::Timeout, sub.task_id, 0, 0});
            continue;
        }
        if (!sub.admitted) {
            out.push_back({sub.executor, EvidenceKind::ProofAnomaly, sub.task_id,
                           sub.proof.validation_score, 0});
            continue;
        }
        const InferenceTask* task = task_lookup(sub.task_id);
        if (task == nullptr) {
            out.push_back({sub.executor, EvidenceKind::ProofAnomaly, sub.task_id,
                           sub.proof.validation_score, 0});
            continue;
        }
        ProofCheck check = verify_proof(sub.proof, *task, backend, tolerance);
        if (check.verdict == ProofVerdict::Ok) {
            out.push_back({sub.executor, EvidenceKind::ProofOk, sub.task_id,
                           sub.proof.validation_score, check.recomputed_score});
        } else {
            out.push_back({sub.executor, EvidenceKind::ProofAnomaly, sub.task_id,
                           sub.proof.validation_score, check.recomputed_score});
        }
    }
    return out;
}

/// Phase 3: fold the round's evidence into tier moves. A round with any
/// failure event counts as one failing round; a round with at least one
/// verified proof and no failures counts as one successful round; a quiet
/// round leaves counters untouched. Demotion steps down one tier at
/// tau_d consecutive failing rounds, promotion lifts NonTrusted to Trusted
/// at tau_p consecutive successful rounds, and both reset the counters.
/// Excluded is absorbing.
inline std::vector<TierTransition> trust_update_phase(ProfileTable& profiles,
                                                      const std::vector<Evidence>& evidence,
                                                      const HarnessParams& params) {
    std::map<Hash32, std::pair<bool, bool>> round_state;  // id -> (had_failure, had_ok)
    for (const Evidence& e : evidence) {
        auto& [fail, ok] = round_state[e.node_id];
        if (e.kind == EvidenceKind::ProofOk)
            ok = true;
        else
            fail = true;
    }

    std::vector<TierTransition> transitions;
    for (auto& [id, state] : round_state) {
        if (!profiles.contains(id)) continue;
        NodeProfile& p = profiles.at(id);
        if (p.tier == Tier::Excluded) continue;

        auto [had_failure, had_ok] = state;
        if (had_failure) {
            p.consecutive_failures++;
            p.consecutive_successes = 0;
        } else if (had_ok) {
            p.consecutive_successes++;
            p.consecutive_failures = 0;
        }

        if (p.consecutive_failures >= params.tau_d) {
            Tier from = p.tier;
            p.tier = (p.tier == Tier::Trusted) ? Tier::NonTrusted : Tier::Excluded;
            p.consecutive_failures = 0;
            p.consecutive_successes = 0;
            transitions.push_back({id, from, p.tier});
        } else if (p.consecutive_successes >= params.tau_p && p.tier == Tier::NonTrusted) {
            p.tier = Tier::Trusted;
            p.consecutive_failures = 0;
            p.consecutive_successes = 0;
            transitions.push_back({id, Tier::NonTrusted, Tier::Trusted});
        }
    }
    return transitions;
}

/// Per-round harness summary, one line of harness.jsonl.
struct HarnessReport {
    uint64_t round = 0;
    std::vector<Hash32> misses;
    std::vector<Evidence> anomalies;  // ProofAnomaly and Timeout evidence
    std::vector<TierTransition> transitions;
};

inline Json to_json(const HarnessReport& r) {
    Json misses = Json::array();
    for (const auto& m : r.misses) misses.push_back(to_hex(m));
    Json anomalies = Json::array();
    for (const auto& a : r.anomalies)
        anomalies.push_back(Json{{"node", to_hex(a.node_id)},
                                 {"task", to_hex(a.task_id)},
                                 {"kind", evidence_kind_name(a.kind)},
                                 {"submitted", a.submitted},
                                 {"recomputed", a.recomputed}});
    Json transitions = Json::array();
    for (const auto& t : r.transitions)
        transitions.push_back(Json{{"node", to_hex(t.node_id)},
                                   {"from", tier_name(t.from)},
                                   {"to", tier_name(t.to)}});
    return Json{{"round", r.round},
                {"misses", misses},
                {"anomalies", anomalies},
                {"transitions", transitions}};
}

inline std::optional<HarnessReport> harness_report_from_json(const Json& j) {
    try {
        HarnessReport r;
        r.round = j.at("round").get<uint64_t>();
        for (const Json& m : j.at("misses")) {
            auto h = hash_from_hex(m.get<std::string>());
            if (!h) return std::nullopt;
            r.misses.push_back(*h);
        }
        for (const Json& a : j.at("anomalies")) {
            Evidence e;
            auto n = hash_from_hex(a.at("node").get<std::string>());
            auto t = hash_from_hex(a.at("task").get<std::string>());
            if (!n || !t) return std::nullopt;
            e.node_id = *n;
            e.task_id = *t;
            e.kind = std::string(a.at("kind").get<std::string>()) == "Timeout"
                         ? EvidenceKind::Timeout
                         : EvidenceKind::ProofAnomaly;
            e.submitted = a.at("submitted").get<uint64_t>();
            e.recomputed = a.at("recomputed").get<uint64_t>();
            r.anomalies.push_back(e);
        }
        for (const Json& t : j.at("transitions")) {
            TierTransition tr;
            auto n = hash_from_hex(t.at("node").get<std::string>());
            auto from = tier_from_name(t.at("from").get<std::string>());
            auto to = tier_from_name(t.at("to").get<std::string>());
            if (!n || !from || !to) return std::nullopt;
            tr.node_id = *n;
            tr.from = *from;
            tr.to = *to;
            r.transitions.push_back(tr);
        }
        return r;
    } catch (const Json::exception&) {
        return std::nullopt;
    }
}

}  // namespace poi
