#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ldesc/core.hpp"

namespace ldesc {

struct CacheConfig {
    std::uint64_t capacity = 32 * 1024;
    std::uint32_t line_size = 128;
    std::uint32_t ways = 4;
    std::uint32_t mshr_entries = 32;
    Cycle pin_reset_period = 100000;

    std::uint64_t sets() const { return capacity / (std::uint64_t{line_size} * ways); }

    void validate() const {
        if (line_size == 0 || !is_pow2(line_size))
            throw Error(ErrorCode::INVALID_CONFIG, "cache line_size must be a power of two");
        if (ways == 0 || mshr_entries == 0 || pin_reset_period == 0)
            throw Error(ErrorCode::INVALID_CONFIG, "cache ways, mshr_entries and pin_reset_period must be >= 1");
        if (capacity == 0 || capacity % (std::uint64_t{line_size} * ways) != 0)
            throw Error(ErrorCode::INVALID_CONFIG, "cache capacity must be a positive multiple of line_size * ways");
    }
};

/// How a line is inserted. Order matters: later classes outrank earlier ones.
enum class InsertionClass { BYPASS, NORMAL, SOFT_PIN, HARD_PIN };

inline const char* to_string(InsertionClass c) {
    switch (c) {
        case InsertionClass::BYPASS: return "BYPASS";
        case InsertionClass::NORMAL: return "NORMAL";
        case InsertionClass::SOFT_PIN: return "SOFT_PIN";
        case InsertionClass::HARD_PIN: return "HARD_PIN";
    }
    return "?";
}

/// MSHR_FULL means the access was rejected without side effects; retry later.
enum class AccessOutcome { HIT, INFLIGHT_HIT, MISS, MSHR_FULL };

struct CacheStats {
    std::uint64_t accesses = 0;  // demand accesses that were accepted
    std::uint64_t hits = 0;
    std::uint64_t inflight_hits = 0;
    std::uint64_t misses = 0;  // primary misses (MSHR allocations)
    std::uint64_t bypassed = 0;
    std::uint64_t mshr_stalls = 0;
    std::uint64_t evictions = 0;
    std::uint64_t pin_resets = 0;
    std::uint64_t prefetches_issued = 0;
    std::uint64_t prefetches_useful = 0;
};

/// Set-associative cache with priority-class insertion, way-0 hard-pin
/// eviction, a periodic unpin timer and MSHR merging.
///
/// Victim choice: an invalid way if any; way 0 if every line in the set is
/// hard-pinned; otherwise the lowest-priority line, LRU among equals.
class Cache {
public:
    explicit Cache(CacheConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        lines_.assign(cfg_.sets() * cfg_.ways, Line{});
        next_reset_ = cfg_.pin_reset_period;
    }

    const CacheConfig& config() const { return cfg_; }
    const CacheStats& stats() const { return stats_; }

    Addr line_addr(Addr a) const { return a & ~Addr{cfg_.line_size - 1}; }

    /// Outcome `access` would produce, without changing any state.
    AccessOutcome probe(Addr a) const {
        const Addr line = line_addr(a);
        if (find(line)) return AccessOutcome::HIT;
        if (mshr_.count(line)) return AccessOutcome::INFLIGHT_HIT;
        if (mshr_.size() >= cfg_.mshr_entries) return AccessOutcome::MSHR_FULL;
        return AccessOutcome::MISS;
    }

    AccessOutcome access(Addr a, InsertionClass cls, Cycle now) {
        tick(now);
        const Addr line = line_addr(a);
        if (Line* l = find(line)) {
            ++stats_.accesses;
            ++stats_.hits;
            if (cls == InsertionClass::BYPASS) {
                ++stats_.bypassed;
            } else {
                l->lru = ++clock_;
                l->prio = std::max(l->prio, rank(cls));
            }
            if (l->prefetched) {
                l->prefetched = false;
                ++stats_.prefetches_useful;
            }
            return AccessOutcome::HIT;
        }
        if (auto it = mshr_.find(line); it != mshr_.end()) {
            ++stats_.accesses;
            ++stats_.inflight_hits;
            if (cls == InsertionClass::BYPASS) ++stats_.bypassed;
            merge(it->second, cls);
            if (it->second.prefetch && !it->second.demanded) ++stats_.prefetches_useful;
            it->second.demanded = true;
            return AccessOutcome::INFLIGHT_HIT;
        }
        if (mshr_.size() >= cfg_.mshr_entries) {
            ++stats_.mshr_stalls;
            return AccessOutcome::MSHR_FULL;
        }
        ++stats_.accesses;
        ++stats_.misses;
        if (cls == InsertionClass::BYPASS) ++stats_.bypassed;
        mshr_.emplace(line, Mshr{cls, false, true});
        return AccessOutcome::MISS;
    }

    /// Starts a prefetch of `a`. Returns false (and does nothing) if the line
    /// is resident, already in flight, or no MSHR is free.
    bool prefetch(Addr a, InsertionClass cls, Cycle now) {
        tick(now);
        const Addr line = line_addr(a);
        if (find(line) || mshr_.count(line) || mshr_.size() >= cfg_.mshr_entries) return false;
        mshr_.emplace(line, Mshr{cls, true, false});
        ++stats_.prefetches_issued;
        return true;
    }

    /// Completes the outstanding miss on `a` and installs the line unless it
    /// was a bypass. Returns the evicted line address, if any.
    std::optional<Addr> fill(Addr a, Cycle now) {
        tick(now);
        const Addr line = line_addr(a);
        auto it = mshr_.find(line);
        if (it == mshr_.end()) throw Error(ErrorCode::OUT_OF_RANGE, "fill without an outstanding MSHR entry");
        const Mshr entry = it->second;
        mshr_.erase(it);
        if (entry.cls == InsertionClass::BYPASS) return std::nullopt;
        if (Line* l = find(line)) {
            l->prio = std::max(l->prio, rank(entry.cls));
            return std::nullopt;
        }
        const std::uint64_t set = set_of(line);
        const std::uint32_t way = victim(set);
        Line& v = lines_[set * cfg_.ways + way];
        std::optional<Addr> evicted;
        if (v.valid) {
            evicted = v.tag;
            ++stats_.evictions;
        }
        v = Line{line, true, rank(entry.cls), ++clock_, entry.prefetch && !entry.demanded};
        return evicted;
    }

    /// Resets every priority to NORMAL once per pin_reset_period. Residency
    /// and LRU order are kept.
    void tick(Cycle now) {
        if (now < next_reset_) return;
        for (auto& l : lines_) l.prio = rank(InsertionClass::NORMAL);
        ++stats_.pin_resets;
        while (next_reset_ <= now) next_reset_ += cfg_.pin_reset_period;
    }

    bool resident(Addr a) const { return find(line_addr(a)) != nullptr; }
    bool inflight(Addr a) const { return mshr_.count(line_addr(a)) != 0; }
    std::size_t mshr_in_use() const { return mshr_.size(); }
    bool mshr_available() const { return mshr_.size() < cfg_.mshr_entries; }

    /// Way holding `a`, if resident.
    std::optional<std::uint32_t> way_of(Addr a) const {
        const Line* l = find(line_addr(a));
        if (!l) return std::nullopt;
        return static_cast<std::uint32_t>((l - lines_.data()) % cfg_.ways);
    }

    /// Current priority class of a resident line.
    std::optional<InsertionClass> priority_of(Addr a) const {
        const Line* l = find(line_addr(a));
        if (!l) return std::nullopt;
        return static_cast<InsertionClass>(l->prio);
    }

private:
    struct Line {
        Addr tag = 0;
        bool valid = false;
        std::uint8_t prio = 0;
        std::uint64_t lru = 0;
        bool prefetched = false;  // filled by a prefetch, not yet demanded
    };

    struct Mshr {
        InsertionClass cls;
        bool prefetch;
        bool demanded;
    };

    static std::uint8_t rank(InsertionClass c) { return static_cast<std::uint8_t>(c); }

    static void merge(Mshr& m, InsertionClass cls) {
        // A non-bypass requester makes the line allocate on fill.
        if (m.cls == InsertionClass::BYPASS || (cls != InsertionClass::BYPASS && cls > m.cls)) m.cls = cls;
    }

    std::uint64_t set_of(Addr line) const { return (line / cfg_.line_size) % cfg_.sets(); }

    const Line* find(Addr line) const {
        const std::uint64_t set = set_of(line);
        for (std::uint32_t w = 0; w < cfg_.ways; ++w) {
            const Line& l = lines_[set * cfg_.ways + w];
            if (l.valid && l.tag == line) return &l;
        }
        return nullptr;
    }
    Line* find(Addr line) { return const_cast<Line*>(std::as_const(*this).find(line)); }

    std::uint32_t victim(std::uint64_t set) const {
        const Line* s = &lines_[set * cfg_.ways];
        bool all_hard = true;
        for (std::uint32_t w = 0; w < cfg_.ways; ++w) {
            if (!s[w].valid) return w;
            all_hard = all_hard && s[w].prio == rank(InsertionClass::HARD_PIN);
        }
        if (all_hard) return 0;
        std::uint32_t best = 0;
        for (std::uint32_t w = 1; w < cfg_.ways; ++w) {
            if (s[w].prio < s[best].prio || (s[w].prio == s[best].prio && s[w].lru < s[best].lru)) best = w;
        }
        return best;
    }

    CacheConfig cfg_;
    std::vector<Line> lines_;
    std::map<Addr, Mshr> mshr_;
    CacheStats stats_;
    std::uint64_t clock_ = 0;
    Cycle next_reset_ = 0;
};

}  // namespace ldesc
