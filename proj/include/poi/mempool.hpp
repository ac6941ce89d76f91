#pragma once

#include <unordered_set>
#include <vector>

#include "poi/records.hpp"

namespace poi {

/// Staging area for admitted records, one pool per record type.
/// Insertion order is preserved and selection is FIFO; selected records
/// stay in the pool until the containing block commits, so a failed
/// proposal leaves them available.
class Mempool {
public:
    struct InsertOutcome {
        enum class Kind { Ok, Invalid, Duplicate, PoolFull } kind;
        std::optional<ValidationError> error;  // set when kind == Invalid

        bool ok() const { return kind == Kind::Ok; }

        std::string to_string() const {
            switch (kind) {
                case Kind::Ok: return "ok";
                case Kind::Invalid: return error ? error->to_string() : "invalid";
                case Kind::Duplicate: return "Duplicate";
                case Kind::PoolFull: return "PoolFull";
            }
            return "?";
        }
    };

    struct Selection {
        std::vector<DataRecord> data;
        std::vector<ModelRecord> model;
        std::vector<ProofRecord> proof;
        std::vector<Hash32> keys;  // identity of every selected record

        bool empty() const { return data.empty() && model.empty() && proof.empty(); }
    };

    explicit Mempool(size_t capacity_per_pool = 10'000) : capacity_(capacity_per_pool) {}

    /// Validating insert: the full admission gate runs first.
    InsertOutcome insert(const AnyRecord& r) {
        if (auto e = admit(r)) return {InsertOutcome::Kind::Invalid, *e};
        return insert_admitted(r);
    }

    /// Store-only insert for records the caller has already admitted
    /// (the hub path; avoids validating twice).
    InsertOutcome insert_admitted(const AnyRecord& r) {
        Pool& pool = pool_for(record_kind(r));
        ContentHash key = record_identity(r);
        if (pool.keys.contains(key)) return {InsertOutcome::Kind::Duplicate, std::nullopt};
        if (pool.entries.size() >= capacity_) return {InsertOutcome::Kind::PoolFull, std::nullopt};
        pool.keys.insert(key);
        pool.entries.push_back({key, r});
        return {InsertOutcome::Kind::Ok, std::nullopt};
    }

    /// Oldest-first selection, up to max_per_lane records per lane.
    /// Non-destructive; pair with commit().
    Selection select_for_block(size_t max_per_lane) const {
        Selection s;
        for (const Entry& e : data_.entries) {
            if (s.data.size() >= max_per_lane) break;
            s.data.push_back(std::get<DataRecord>(e.record));
            s.keys.push_back(e.key);
        }
        for (const Entry& e : model_.entries) {
            if (s.model.size() >= max_per_lane) break;
            s.model.push_back(std::get<ModelRecord>(e.record));
            s.keys.push_back(e.key);
        }
        for (const Entry& e : proof_.entries) {
            if (s.proof.size() >= max_per_lane) break;
            s.proof.push_back(std::get<ProofRecord>(e.record));
            s.keys.push_back(e.key);
        }
        return s;
    }

    /// Remove committed records; called once the containing block is final.
    void commit(const std::vector<Hash32>& keys) {
        std::unordered_set<Hash32, Hash32Hasher> gone(keys.begin(), keys.end());
        for (Pool* pool : {&data_, &model_, &proof_}) {
            std::vector<Entry> kept;
            kept.reserve(pool->entries.size());
            for (Entry& e : pool->entries) {
                if (gone.contains(e.key)) {
                    pool->keys.erase(e.key);
                } else {
                    kept.push_back(std::move(e));
                }
            }
            pool->entries = std::move(kept);
        }
    }

    /// Drop one record by identity (audit eviction).
    bool evict(const Hash32& key) {
        for (Pool* pool : {&data_, &model_, &proof_}) {
            if (!pool->keys.erase(key)) continue;
            for (auto it = pool->entries.begin(); it != pool->entries.end(); ++it) {
                if (it->key == key) {
                    pool->entries.erase(it);
                    return true;
                }
            }
        }
        return false;
    }

    bool contains(const Hash32& key) const {
        return data_.keys.contains(key) || model_.keys.contains(key) ||
               proof_.keys.contains(key);
    }

    size_t data_size() const { return data_.entries.size(); }
    size_t model_size() const { return model_.entries.size(); }
    size_t proof_size() const { return proof_.entries.size(); }
    size_t size() const { return data_size() + model_size() + proof_size(); }
    size_t capacity() const { return capacity_; }

    /// Visit every stored record (test sweep hook).
    template <typename F>
    void for_each(F&& fn) const {
        for (const Pool* pool : {&data_, &model_, &proof_})
            for (const Entry& e : pool->entries) fn(e.record);
    }

    std::vector<ProofRecord> pending_proofs() const {
        std::vector<ProofRecord> out;
        out.reserve(proof_.entries.size());
        for (const Entry& e : proof_.entries) out.push_back(std::get<ProofRecord>(e.record));
        return out;
    }

private:
    struct Entry {
        Hash32 key;
        AnyRecord record;
    };
    struct Pool {
        std::vector<Entry> entries;
        std::unordered_set<Hash32, Hash32Hasher> keys;
    };

    Pool& pool_for(RecordKind k) {
        switch (k) {
            case RecordKind::Data: return data_;
            case RecordKind::Model: return model_;
            case RecordKind::Proof: return proof_;
        }
        return data_;
    }

    size_t capacity_;
    Pool data_, model_, proof_;
};

}  // namespace poi
