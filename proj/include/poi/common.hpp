#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace poi {

using Bytes = std::vector<uint8_t>;

/// 32-byte content hash, the identity type used throughout the protocol.
struct Hash32 {
    std::array<uint8_t, 32> bytes{};

    bool operator==(const Hash32& o) const { return bytes == o.bytes; }
    bool operator!=(const Hash32& o) const { return bytes != o.bytes; }
    bool operator<(const Hash32& o) const { return bytes < o.bytes; }

    bool is_zero() const {
        for (uint8_t b : bytes)
            if (b != 0) return false;
        return true;
    }

    Bytes to_bytes() const { return Bytes(bytes.begin(), bytes.end()); }

    static Hash32 from_bytes(const Bytes& b) {
        if (b.size() != 32) throw std::invalid_argument("Hash32: need 32 bytes");
        Hash32 h;
        std::memcpy(h.bytes.data(), b.data(), 32);
        return h;
    }
};

struct Hash32Hasher {
    size_t operator()(const Hash32& h) const {
        size_t v;
        std::memcpy(&v, h.bytes.data(), sizeof(v));
        return v;
    }
};

inline const char* kHexDigits = "0123456789abcdef";

inline std::string to_hex(const uint8_t* data, size_t len) {
    std::string s;
    s.reserve(len * 2);
    for (size_t i = 0; i < len; i++) {
        s.push_back(kHexDigits[data[i] >> 4]);
        s.push_back(kHexDigits[data[i] & 0xF]);
    }
    return s;
}

inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }
inline std::string to_hex(const Hash32& h) { return to_hex(h.bytes.data(), 32); }

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;  // uppercase rejected: wire form is lowercase hex
}

inline std::optional<Bytes> from_hex(std::string_view s) {
    if (s.size() % 2 != 0) return std::nullopt;
    Bytes out(s.size() / 2);
    for (size_t i = 0; i < out.size(); i++) {
        int hi = hex_nibble(s[2 * i]);
        int lo = hex_nibble(s[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return out;
}

inline std::optional<Hash32> hash_from_hex(std::string_view s) {
    auto b = from_hex(s);
    if (!b || b->size() != 32) return std::nullopt;
    return Hash32::from_bytes(*b);
}

inline void append_u32_be(Bytes& out, uint32_t v) {
    for (int i = 3; i >= 0; i--) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void append_u64_be(Bytes& out, uint64_t v) {
    for (int i = 7; i >= 0; i--) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline uint64_t read_u64_be(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v = (v << 8) | p[i];
    return v;
}

/// Canonical binary encoding: a leading tag byte, then each field as a
/// 4-byte big-endian length prefix followed by the field's raw bytes.
/// Integers are 8-byte big-endian. Signature fields are never encoded.
class CanonicalWriter {
public:
    explicit CanonicalWriter(uint8_t tag) { out_.push_back(tag); }

    void field_bytes(const uint8_t* data, size_t len) {
        append_u32_be(out_, static_cast<uint32_t>(len));
        out_.insert(out_.end(), data, data + len);
    }
    void field_bytes(const Bytes& b) { field_bytes(b.data(), b.size()); }
    void field_hash(const Hash32& h) { field_bytes(h.bytes.data(), 32); }
    void field_u64(uint64_t v) {
        append_u32_be(out_, 8);
        append_u64_be(out_, v);
    }
    void field_string(std::string_view s) {
        field_bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
    }

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

// Protocol tag bytes. Kept in one place so the encoding can be versioned.
namespace tag {
inline constexpr uint8_t kDataRecord = 0x01;
inline constexpr uint8_t kModelRecord = 0x02;
inline constexpr uint8_t kProofRecord = 0x03;
inline constexpr uint8_t kBlockHeader = 0x10;
inline constexpr uint8_t kMockInference = 0x20;
inline constexpr uint8_t kInferenceTask = 0x30;
inline constexpr uint8_t kVote = 0x31;
}  // namespace tag

/// Minimal expected-or-error holder used by validation and decode paths.
template <typename T, typename E>
class Expected {
public:
    Expected(T v) : v_(std::move(v)) {}
    Expected(E e) : v_(std::move(e)) {}

    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }

    const T& value() const { return std::get<T>(v_); }
    T& value() { return std::get<T>(v_); }
    const E& error() const { return std::get<E>(v_); }

private:
    std::variant<T, E> v_;
};

inline const char* kBase64Chars =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string to_base64(const Bytes& in) {
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    for (size_t i = 0; i < in.size(); i += 3) {
        uint32_t chunk = uint32_t(in[i]) << 16;
        if (i + 1 < in.size()) chunk |= uint32_t(in[i + 1]) << 8;
        if (i + 2 < in.size()) chunk |= uint32_t(in[i + 2]);
        out.push_back(kBase64Chars[(chunk >> 18) & 0x3F]);
        out.push_back(kBase64Chars[(chunk >> 12) & 0x3F]);
        out.push_back(i + 1 < in.size() ? kBase64Chars[(chunk >> 6) & 0x3F] : '=');
        out.push_back(i + 2 < in.size() ? kBase64Chars[chunk & 0x3F] : '=');
    }
    return out;
}

inline std::optional<Bytes> from_base64(std::string_view s) {
    if (s.size() % 4 != 0) return std::nullopt;
    auto decode_char = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    Bytes out;
    out.reserve(s.size() / 4 * 3);
    for (size_t i = 0; i < s.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int j = 0; j < 4; j++) {
            char c = s[i + j];
            if (c == '=' && i + 4 == s.size() && j >= 2) {
                vals[j] = 0;
                pad++;
            } else {
                vals[j] = decode_char(c);
                if (vals[j] < 0 || pad > 0) return std::nullopt;
            }
        }
        uint32_t chunk = (uint32_t(vals[0]) << 18) | (uint32_t(vals[1]) << 12) |
                         (uint32_t(vals[2]) << 6) | uint32_t(vals[3]);
        out.push_back(static_cast<uint8_t>(chunk >> 16));
        if (pad < 2) out.push_back(static_cast<uint8_t>(chunk >> 8));
        if (pad < 1) out.push_back(static_cast<uint8_t>(chunk));
    }
    return out;
}

/// splitmix64: the deterministic RNG used for all simulation randomness.
/// Chosen over std engines so the stream is trivially replayable from the
/// algorithm description alone, independent of any library internals.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound) by rejection sampling (no modulo bias).
    uint64_t bounded(uint64_t bound) {
        if (bound == 0) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % bound;
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    uint64_t state_;
};

}  // namespace poi
