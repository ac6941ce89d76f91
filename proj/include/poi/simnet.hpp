#pragma once

#include <functional>
#include <map>
#include <queue>
#include <stdexcept>

#include "poi/packet.hpp"

namespace poi {

struct NetParams {
    uint64_t base_latency_ms = 5;
    uint64_t jitter_max_ms = 5;  // per-packet jitter uniform in [0, jitter_max]
    double loss_rate = 0.0;
    uint64_t seed = 1;
};

/// Deterministic discrete-event point-to-point network. One event fires at
/// a time; simultaneous deliveries break ties by send sequence number, so
/// an identical (scenario, seed) pair replays an identical event trace.
///
/// Per send, the RNG is consulted in a fixed order: one loss draw, then
/// one jitter draw if the packet survived. Tests replay this stream.
class SimNetwork {
public:
    /// Handlers return a short verdict string for the delivery trace.
    using Handler = std::function<std::string(const Packet&)>;
    /// (time, packet, verdict) sink invoked after each delivery.
    using TraceSink = std::function<void(uint64_t, const Packet&, const std::string&)>;

    enum class SendStatus { Scheduled, Dropped, UnknownRecipient };

    explicit SimNetwork(const NetParams& params = {}) : params_(params), rng_(params.seed) {}

    void register_node(const Hash32& id, Handler handler) { nodes_[id] = std::move(handler); }
    bool has_node(const Hash32& id) const { return nodes_.contains(id); }

    uint64_t now() const { return clock_; }
    void advance_to(uint64_t t) {
        if (t > clock_) clock_ = t;
    }

    void set_trace_sink(TraceSink sink) { trace_ = std::move(sink); }

    SendStatus send(Packet packet) { return send_with_delay(std::move(packet), 0); }

    /// Extra delay models sender-side processing time (slow executors).
    SendStatus send_with_delay(Packet packet, uint64_t extra_ms) {
        if (!nodes_.contains(packet.recipient_id)) return SendStatus::UnknownRecipient;
        packet.sent_at = clock_;
        if (params_.loss_rate > 0.0 && rng_.next_double() < params_.loss_rate) {
            dropped_++;
            return SendStatus::Dropped;
        }
        uint64_t jitter = params_.jitter_max_ms > 0 ? rng_.bounded(params_.jitter_max_ms + 1) : 0;
        uint64_t deliver_at = clock_ + params_.base_latency_ms + jitter + extra_ms;
        queue_.push(Event{deliver_at, next_seq_++, std::move(packet)});
        return SendStatus::Scheduled;
    }

    bool idle() const { return queue_.empty(); }
    size_t pending() const { return queue_.size(); }
    uint64_t dropped_count() const { return dropped_; }

    /// Deliver the earliest scheduled event; returns false when idle.
    bool step() {
        if (queue_.empty()) return false;
        Event ev = queue_.top();
        queue_.pop();
        advance_to(ev.deliver_at);
        auto it = nodes_.find(ev.packet.recipient_id);
        std::string verdict = "no-handler";
        if (it != nodes_.end() && it->second) verdict = it->second(ev.packet);
        if (trace_) trace_(ev.deliver_at, ev.packet, verdict);
        delivered_++;
        return true;
    }

    void run_until_idle(size_t max_events = 1'000'000) {
        size_t n = 0;
        while (step()) {
            if (++n > max_events)
                throw std::runtime_error("SimNetwork: event budget exhausted (runaway loop?)");
        }
    }

    uint64_t delivered_count() const { return delivered_; }

private:
    struct Event {
        uint64_t deliver_at;
        uint64_t seq;
        Packet packet;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.deliver_at != b.deliver_at) return a.deliver_at > b.deliver_at;
            return a.seq > b.seq;
        }
    };

    NetParams params_;
    SplitMix64 rng_;
    uint64_t clock_ = 0;
    uint64_t next_seq_ = 0;
    uint64_t dropped_ = 0;
    uint64_t delivered_ = 0;
    std::map<Hash32, Handler> nodes_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    TraceSink trace_;
};

}  // namespace poi
