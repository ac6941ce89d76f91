#pragma once

#include <vector>

#include "poi/common.hpp"
#include "poi/sha256.hpp"

namespace poi {

// Domain-separated Merkle tree: leaf nodes are SHA-256(0x00 || leaf bytes),
// internal nodes SHA-256(0x01 || left || right). An odd node at any level
// is paired with itself. The empty tree hashes to SHA-256 of the empty
// byte string, a fixed sentinel so empty lanes still have a defined root.

inline Hash32 merkle_leaf(const Bytes& leaf) {
    Sha256 ctx;
    uint8_t prefix = 0x00;
    ctx.update(&prefix, 1);
    ctx.update(leaf);
    return ctx.finish();
}

inline Hash32 merkle_internal(const Hash32& left, const Hash32& right) {
    Sha256 ctx;
    uint8_t prefix = 0x01;
    ctx.update(&prefix, 1);
    ctx.update(left.bytes.data(), 32);
    ctx.update(right.bytes.data(), 32);
    return ctx.finish();
}

inline Hash32 merkle_root(const std::vector<Bytes>& leaves) {
    if (leaves.empty()) return sha256(Bytes{});
    std::vector<Hash32> level;
    level.reserve(leaves.size());
    for (const Bytes& leaf : leaves) level.push_back(merkle_leaf(leaf));
    do {
        std::vector<Hash32> next;
        next.reserve((level.size() + 1) / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            const Hash32& left = level[i];
            const Hash32& right = (i + 1 < level.size()) ? level[i + 1] : level[i];
            next.push_back(merkle_internal(left, right));
        }
        level = std::move(next);
    } while (level.size() > 1);
    return level[0];
}

}  // namespace poi
