#pragma once

#include <functional>
#include <map>

#include "poi/mempool.hpp"
#include "poi/packet.hpp"

namespace poi {

/// Entry point for incoming packets: record announcements run the full
/// admission gate and land in the mempool; every other kind routes to a
/// handler registered by the owning node. Payloads are validated before
/// any processing happens.
class InformationHub {
public:
    struct IngestResult {
        bool routed;
        std::string verdict;  // "routed", "ok", or "rejected:<reason>"
    };

    using KindHandler = std::function<std::string(const Packet&)>;

    explicit InformationHub(Mempool& pool) : pool_(pool) {}

    void on_kind(PacketKind kind, KindHandler handler) { handlers_[kind] = std::move(handler); }

    IngestResult ingest(const Packet& packet) {
        switch (packet.kind) {
            case PacketKind::NEW_DATA_RECORD: return ingest_record(RecordKind::Data, packet);
            case PacketKind::NEW_MODEL_RECORD: return ingest_record(RecordKind::Model, packet);
            case PacketKind::NEW_PROOF_RECORD: return ingest_record(RecordKind::Proof, packet);
            default: break;
        }
        auto it = handlers_.find(packet.kind);
        if (it == handlers_.end()) return {false, "rejected:NoHandler"};
        return {true, it->second(packet)};
    }

    uint64_t routed_count() const { return routed_; }
    uint64_t rejected_count() const { return rejected_; }

private:
    IngestResult ingest_record(RecordKind kind, const Packet& packet) {
        if (!packet.payload.is_object()) return reject("MalformedPacket");
        auto decoded = record_from_json(kind, packet.payload);
        if (!decoded.ok()) {
            // presence/type failures at decode are malformed packets;
            // the error detail still names the offending field
            return reject("MalformedPacket:" + decoded.error().to_string());
        }
        const AnyRecord& record = decoded.value();
        if (auto e = admit(record)) return reject(e->to_string());
        auto outcome = pool_.insert_admitted(record);
        if (!outcome.ok()) return reject(outcome.to_string());
        routed_++;
        if (on_record_) on_record_(record);
        return {true, "routed"};
    }

    IngestResult reject(const std::string& reason) {
        rejected_++;
        return {false, "rejected:" + reason};
    }

public:
    /// Post-admission hook (gossip fan-out, metrics).
    void on_record(std::function<void(const AnyRecord&)> fn) { on_record_ = std::move(fn); }

private:
    Mempool& pool_;
    std::map<PacketKind, KindHandler> handlers_;
    std::function<void(const AnyRecord&)> on_record_;
    uint64_t routed_ = 0;
    uint64_t rejected_ = 0;
};

}  // namespace poi
