#pragma once

#include <json.hpp>
#include <string_view>

#include "poi/common.hpp"

namespace poi {

/// Typed packet vocabulary. Record announcements carry record JSON;
/// the task/vote/heartbeat kinds carry their own payload schemas.
enum class PacketKind : uint8_t {
    NEW_DATA_RECORD,
    NEW_MODEL_RECORD,
    NEW_PROOF_RECORD,
    TASK_ASSIGN,
    TASK_RESULT,
    HEARTBEAT_PING,
    HEARTBEAT_PONG,
    VOTE_REQUEST,
    VOTE_RESPONSE,
    BLOCK_ANNOUNCE,
    AGENT_REQUEST,
    AGENT_RESPONSE,
};

inline const char* packet_kind_name(PacketKind k) {
    switch (k) {
        case PacketKind::NEW_DATA_RECORD: return "NEW_DATA_RECORD";
        case PacketKind::NEW_MODEL_RECORD: return "NEW_MODEL_RECORD";
        case PacketKind::NEW_PROOF_RECORD: return "NEW_PROOF_RECORD";
        case PacketKind::TASK_ASSIGN: return "TASK_ASSIGN";
        case PacketKind::TASK_RESULT: return "TASK_RESULT";
        case PacketKind::HEARTBEAT_PING: return "HEARTBEAT_PING";
        case PacketKind::HEARTBEAT_PONG: return "HEARTBEAT_PONG";
        case PacketKind::VOTE_REQUEST: return "VOTE_REQUEST";
        case PacketKind::VOTE_RESPONSE: return "VOTE_RESPONSE";
        case PacketKind::BLOCK_ANNOUNCE: return "BLOCK_ANNOUNCE";
        case PacketKind::AGENT_REQUEST: return "AGENT_REQUEST";
        case PacketKind::AGENT_RESPONSE: return "AGENT_RESPONSE";
    }
    return "?";
}

inline std::optional<PacketKind> packet_kind_from_name(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(PacketKind::AGENT_RESPONSE); i++) {
        auto k = static_cast<PacketKind>(i);
        if (s == packet_kind_name(k)) return k;
    }
    return std::nullopt;
}

struct Packet {
    PacketKind kind;
    Hash32 sender_id;
    Hash32 recipient_id;
    nlohmann::json payload;
    uint64_t sent_at = 0;  // simulated ms, stamped by the network
};

inline nlohmann::json to_json(const Packet& p) {
    return nlohmann::json{{"kind", packet_kind_name(p.kind)},
                          {"sender_id", to_hex(p.sender_id)},
                          {"recipient_id", to_hex(p.recipient_id)},
                          {"payload", p.payload},
                          {"sent_at", p.sent_at}};
}

}  // namespace poi
