#pragma once

#include <string>

#include "poi/common.hpp"
#include "poi/ecdsa.hpp"
#include "poi/sha256.hpp"

namespace poi {

using ContentHash = Hash32;

inline ContentHash hash(const Bytes& data) { return sha256(data); }

/// Node identity: secp256k1 keypair plus the derived node id,
/// node_id = SHA-256(compressed public key).
struct KeyPair {
    ecdsa::U256 private_key;
    Bytes public_key;  // 33-byte compressed point
    ContentHash node_id;

    static KeyPair from_private(const ecdsa::U256& d) {
        KeyPair kp;
        kp.private_key = d;
        kp.public_key = ecdsa::derive_public_key(d);
        kp.node_id = sha256(kp.public_key);
        return kp;
    }

    /// Deterministic keypair from an arbitrary seed label. Hash-chains
    /// until the candidate lands in [1, n-1].
    static KeyPair from_seed(const std::string& label, uint64_t seed) {
        Bytes material;
        material.insert(material.end(), label.begin(), label.end());
        append_u64_be(material, seed);
        Hash32 h = sha256(material);
        const ecdsa::Modulus& n = ecdsa::order_n();
        for (;;) {
            ecdsa::U256 d = ecdsa::U256::from_be_bytes(h.bytes.data());
            d = n.reduce(d);
            if (!d.is_zero()) return from_private(d);
            h = sha256(h.to_bytes());
        }
    }
};

/// Sign SHA-256(message); 64-byte compact signature, deterministic per
/// RFC 6979 so repeated runs produce identical bytes.
inline Bytes sign(const KeyPair& key, const Bytes& message) {
    return ecdsa::sign_digest(key.private_key, sha256(message));
}

/// Verify an ECDSA signature over SHA-256(message). Returns false on any
/// malformed key or signature; never throws.
inline bool verify(const Bytes& public_key, const Bytes& message, const Bytes& signature) {
    return ecdsa::verify_digest(public_key, sha256(message), signature);
}

}  // namespace poi
