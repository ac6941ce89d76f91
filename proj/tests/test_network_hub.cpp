#include <doctest.h>

#include <poi/hub.hpp>
#include <poi/simnet.hpp>

using namespace poi;

namespace {

Hash32 node_id(uint8_t fill) {
    Hash32 h;
    h.bytes.fill(fill);
    return h;
}

Packet record_packet(PacketKind kind, const Json& payload) {
    return Packet{kind, node_id(1), node_id(2), payload};
}

// Independent re-statement of the generator the network draws from, used
// to replay its random stream without touching the library class.
struct ReplayRng {
    uint64_t state;
    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    uint64_t bounded(uint64_t bound) {
        uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % bound;
    }
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace

TEST_CASE("degenerate latency parameters deliver exactly at base latency") {
    NetParams params;
    params.base_latency_ms = 5;
    params.jitter_max_ms = 0;
    params.loss_rate = 0.0;
    SimNetwork net(params);
    std::vector<uint64_t> arrivals;
    net.register_node(node_id(9), [&](const Packet&) {
        arrivals.push_back(net.now());
        return "ok";
    });
    net.advance_to(100);
    CHECK(net.send({PacketKind::HEARTBEAT_PING, node_id(1), node_id(9), Json::object()}) ==
          SimNetwork::SendStatus::Scheduled);
    net.run_until_idle();
    REQUIRE(arrivals.size() == 1);
    CHECK(arrivals[0] == 105);
}

TEST_CASE("loss_rate 1 drops everything, unknown recipients are errors") {
    NetParams params;
    params.loss_rate = 1.0;
    SimNetwork net(params);
    net.register_node(node_id(9), [](const Packet&) { return "ok"; });
    CHECK(net.send({PacketKind::HEARTBEAT_PING, node_id(1), node_id(9), {}}) ==
          SimNetwork::SendStatus::Dropped);
    CHECK(net.send({PacketKind::HEARTBEAT_PING, node_id(1), node_id(7), {}}) ==
          SimNetwork::SendStatus::UnknownRecipient);
    CHECK(net.idle());
    CHECK(net.dropped_count() == 1);
}

TEST_CASE("events deliver in time order, ties broken by send sequence") {
    NetParams params;
    params.base_latency_ms = 0;
    params.jitter_max_ms = 0;
    SimNetwork net(params);
    std::vector<int> order;
    net.register_node(node_id(9), [&](const Packet& p) {
        order.push_back(p.payload["n"].get<int>());
        return "ok";
    });

    // two different future times via extra delay
    net.send_with_delay({PacketKind::HEARTBEAT_PING, node_id(1), node_id(9), Json{{"n", 7}}}, 7);
    net.send_with_delay({PacketKind::HEARTBEAT_PING, node_id(1), node_id(9), Json{{"n", 3}}}, 3);
    // three ties at t=5, expect send order
    for (int n : {50, 51, 52})
        net.send_with_delay({PacketKind::HEARTBEAT_PING, node_id(1), node_id(9), Json{{"n", n}}},
                            5);
    net.run_until_idle();
    CHECK(order == std::vector<int>{3, 50, 51, 52, 7});

    CHECK_FALSE(net.step());  // idle network
}

TEST_CASE("delivery clock is monotonic") {
    NetParams params;
    params.base_latency_ms = 2;
    params.jitter_max_ms = 9;
    params.seed = 77;
    SimNetwork net(params);
    uint64_t last = 0;
    bool monotonic = true;
    net.register_node(node_id(9), [&](const Packet&) {
        if (net.now() < last) monotonic = false;
        last = net.now();
        return "ok";
    });
    SplitMix64 rng(5);
    for (int i = 0; i < 300; i++) {
        net.send({PacketKind::HEARTBEAT_PING, node_id(1), node_id(9), {}});
        if (rng.bounded(3) == 0) net.step();
    }
    net.run_until_idle();
    CHECK(monotonic);
}

TEST_CASE("drop count matches an independent replay of the RNG stream") {
    NetParams params;
    params.base_latency_ms = 5;
    params.jitter_max_ms = 5;
    params.loss_rate = 0.3;
    params.seed = 42;
    SimNetwork net(params);
    net.register_node(node_id(9), [](const Packet&) { return "ok"; });

    const int kPackets = 1000;
    int dropped = 0;
    for (int i = 0; i < kPackets; i++) {
        if (net.send({PacketKind::HEARTBEAT_PING, node_id(1), node_id(9), {}}) ==
            SimNetwork::SendStatus::Dropped)
            dropped++;
    }

    // replay: one loss draw per packet; one jitter draw only if kept
    ReplayRng rng{42};
    int expected_drops = 0;
    for (int i = 0; i < kPackets; i++) {
        if (rng.next_double() < 0.3) {
            expected_drops++;
        } else {
            rng.bounded(6);
        }
    }
    CHECK(dropped == expected_drops);
    CHECK(net.dropped_count() == static_cast<uint64_t>(dropped));
    CHECK(dropped > 200);  // sanity: near 300 of 1000
    CHECK(dropped < 400);
}

TEST_CASE("same seed same trace, different seed different trace") {
    auto trace_of = [](uint64_t seed) {
        NetParams params;
        params.jitter_max_ms = 20;
        params.loss_rate = 0.2;
        params.seed = seed;
        SimNetwork net(params);
        std::vector<std::string> log;
        net.register_node(node_id(9), [](const Packet&) { return "ok"; });
        net.set_trace_sink([&](uint64_t t, const Packet& p, const std::string& v) {
            log.push_back(std::to_string(t) + ":" + packet_kind_name(p.kind) + ":" + v);
        });
        for (int i = 0; i < 100; i++)
            net.send({PacketKind::HEARTBEAT_PING, node_id(1), node_id(9), {}});
        net.run_until_idle();
        return log;
    };
    CHECK(trace_of(11) == trace_of(11));
    CHECK(trace_of(11) != trace_of(12));
}

TEST_CASE("hub routes valid records into the mempool") {
    KeyPair kp = KeyPair::from_seed("hub-test", 1);
    Mempool pool;
    InformationHub hub(pool);

    ProofRecord proof = make_proof_record(kp, node_id(3), node_id(4), 100, node_id(5), 42);
    auto res = hub.ingest(record_packet(PacketKind::NEW_PROOF_RECORD, to_json(proof)));
    CHECK(res.routed);
    CHECK(res.verdict == "routed");
    CHECK(pool.proof_size() == 1);

    // duplicate via the hub is rejected like any other bad insert
    auto dup = hub.ingest(record_packet(PacketKind::NEW_PROOF_RECORD, to_json(proof)));
    CHECK_FALSE(dup.routed);
    CHECK(dup.verdict == "rejected:Duplicate");
    CHECK(pool.proof_size() == 1);
}

TEST_CASE("hub rejects undecodable and inadmissible payloads") {
    KeyPair kp = KeyPair::from_seed("hub-test", 2);
    Mempool pool;
    InformationHub hub(pool);

    SUBCASE("payload that fails schema decode") {
        Json j = to_json(make_data_record(kp, node_id(3), 42));
        j.erase("sender_id");
        auto res = hub.ingest(record_packet(PacketKind::NEW_DATA_RECORD, j));
        CHECK_FALSE(res.routed);
        CHECK(res.verdict.starts_with("rejected:MalformedPacket"));
        CHECK(pool.size() == 0);
    }
    SUBCASE("payload that is not an object") {
        auto res = hub.ingest(record_packet(PacketKind::NEW_DATA_RECORD, Json("junk")));
        CHECK_FALSE(res.routed);
        CHECK(res.verdict.starts_with("rejected:MalformedPacket"));
    }
    SUBCASE("bad signature record") {
        DataRecord r = make_data_record(kp, node_id(3), 42);
        r.signature[0] ^= 1;
        auto res = hub.ingest(record_packet(PacketKind::NEW_DATA_RECORD, to_json(r)));
        CHECK_FALSE(res.routed);
        CHECK(res.verdict == "rejected:BadSignature: signature verification failed");
    }
    SUBCASE("kind without a registered handler") {
        auto res = hub.ingest(record_packet(PacketKind::VOTE_REQUEST, Json::object()));
        CHECK_FALSE(res.routed);
        CHECK(res.verdict == "rejected:NoHandler");
    }
    SUBCASE("registered handler receives non-record kinds") {
        hub.on_kind(PacketKind::VOTE_REQUEST, [](const Packet&) { return std::string("ok"); });
        auto res = hub.ingest(record_packet(PacketKind::VOTE_REQUEST, Json::object()));
        CHECK(res.routed);
    }
}

TEST_CASE("hub verdicts agree with direct admission") {
    KeyPair kp = KeyPair::from_seed("hub-test", 3);
    SplitMix64 rng(13);
    for (int i = 0; i < 60; i++) {
        Hash32 ch;
        for (auto& b : ch.bytes) b = static_cast<uint8_t>(rng.next());
        ProofRecord r = make_proof_record(kp, ch, node_id(4), rng.bounded(kScoreMax + 1),
                                          node_id(5), rng.next() % 10000);
        // half the time, tamper some field after signing
        if (rng.bounded(2)) {
            switch (rng.bounded(4)) {
                case 0: r.validation_score = (r.validation_score + 1) % (kScoreMax + 1); break;
                case 1: r.signature[rng.bounded(64)] ^= 0x08; break;
                case 2: r.timestamp += 1; break;
                case 3: r.sender_id[5] ^= 0x80; break;
            }
        }
        Mempool pool;
        InformationHub hub(pool);
        bool direct_ok = !admit(AnyRecord{r}).has_value();
        bool hub_ok = hub.ingest(record_packet(PacketKind::NEW_PROOF_RECORD, to_json(r))).routed;
        CHECK(direct_ok == hub_ok);
    }
}

TEST_CASE("1000 valid record packets all route") {
    KeyPair kp = KeyPair::from_seed("hub-test", 4);
    Mempool pool;
    InformationHub hub(pool);
    SplitMix64 rng(17);
    int routed = 0;
    for (int i = 0; i < 1000; i++) {
        Hash32 ch;
        for (auto& b : ch.bytes) b = static_cast<uint8_t>(rng.next());
        DataRecord r = make_data_record(kp, ch, 1000 + i);
        if (hub.ingest(record_packet(PacketKind::NEW_DATA_RECORD, to_json(r))).routed) routed++;
    }
    CHECK(routed == 1000);
    CHECK(hub.rejected_count() == 0);
    CHECK(pool.data_size() == 1000);
}
