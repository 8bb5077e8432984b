#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ldesc/cache.hpp"
#include "ldesc/core.hpp"
#include "ldesc/descriptor.hpp"
#include "ldesc/grid.hpp"
#include "ldesc/metrics.hpp"
#include "ldesc/numa.hpp"
#include "ldesc/policy.hpp"
#include "ldesc/prefetch.hpp"
#include "ldesc/sched.hpp"
#include "ldesc/workload.hpp"

namespace ldesc {

struct Latencies {
    Cycle l1_hit = 1;
    Cycle l2_hit = 30;
    Cycle local_mem = 200;
    Cycle remote_mem = 300;
};

struct SystemConfig {
    std::uint32_t sm_count = 8;
    std::uint32_t zone_count = 1;
    CacheConfig l1{32 * 1024, 128, 4, 32, 100000};
    CacheConfig l2{256 * 1024, 128, 8, 128, 100000};  // total; split evenly into one slice per zone
    Latencies latency;
    double remote_link_capacity = 0.5;  // accesses per cycle per (source, destination) zone pair
    std::uint32_t max_resident_ctas_per_sm = 4;

    CacheConfig l2_slice() const {
        CacheConfig s = l2;
        s.capacity = l2.capacity / zone_count;
        return s;
    }

    void validate() const {
        if (sm_count == 0 || max_resident_ctas_per_sm == 0)
            throw Error(ErrorCode::INVALID_CONFIG, "sm_count and max_resident_ctas_per_sm must be >= 1");
        validate_zone_count(zone_count);
        if (sm_count % zone_count != 0)
            throw Error(ErrorCode::INVALID_CONFIG, "sm_count must be a multiple of zone_count");
        if (latency.l1_hit == 0 || latency.l2_hit == 0 || latency.local_mem == 0 || latency.remote_mem == 0)
            throw Error(ErrorCode::INVALID_CONFIG, "latencies must be >= 1 cycle");
        if (!(remote_link_capacity > 0.0))
            throw Error(ErrorCode::INVALID_CONFIG, "remote_link_capacity must be positive");
        l1.validate();
        l2_slice().validate();
        if (l1.line_size != l2.line_size) throw Error(ErrorCode::INVALID_CONFIG, "L1 and L2 line sizes differ");
    }
};

/// Named system presets: "desk", "desk-numa", "paper-single", "paper-numa".
inline std::optional<SystemConfig> preset(std::string_view name) {
    SystemConfig c;
    if (name == "desk") return c;
    if (name == "desk-numa") {
        c.sm_count = 16;
        c.zone_count = 4;
        return c;
    }
    if (name == "paper-single") {
        c.sm_count = 15;
        c.l2 = {768 * 1024, 128, 16, 128, 100000};
        return c;
    }
    if (name == "paper-numa") {
        c.sm_count = 64;
        c.zone_count = 4;
        c.l2 = {4 * 1024 * 1024, 128, 16, 128, 100000};
        return c;
    }
    return std::nullopt;
}

/// Which descriptor-driven mechanisms are switched on (scheduling is decided
/// by the Schedule handed to simulate()).
struct Features {
    bool cache_management = true;  // pin/bypass insertion classes; otherwise everything is NORMAL
    bool prefetch = true;
};

/// Home-zone policy for memory requests.
struct MemoryPlacement {
    MappingScheme scheme = MappingScheme::XOR_HASH;
    std::vector<ZoneMapping> per_descriptor;  // BITRANGE only; aligned with workload descriptors
};

struct AccessEvent {
    std::uint32_t sm = 0;
    CtaId cta = 0;
    std::uint32_t warp = 0;
    Addr addr = 0;
    Cycle cycle = 0;

    friend bool operator==(const AccessEvent&, const AccessEvent&) = default;
};

struct SimOptions {
    Features features;
    bool record_trace = false;
};

struct SimResult {
    SimMetrics metrics;
    std::vector<AccessEvent> trace;  // demand accesses in issue order, if recorded
};

namespace detail {

class Simulator {
public:
    Simulator(const Workload& w, const SystemConfig& cfg, const Schedule& sched, const MemoryPlacement& place,
              const PolicySet& policies, const SimOptions& opts)
        : w_(w), cfg_(cfg), sched_(sched), place_(place), policies_(policies), opts_(opts) {
        cfg_.validate();
        if (sched_.assignment.size() != w_.grid.cta_count() || sched_.sm_count != cfg_.sm_count ||
            w_.streams.size() != w_.grid.cta_count())
            throw Error(ErrorCode::CONFIG_MISMATCH, "schedule grid does not match workload grid");
        if (policies_.per_descriptor.size() != w_.descriptors.size())
            throw Error(ErrorCode::CONFIG_MISMATCH, "policy set does not match descriptors");
        if (place_.scheme == MappingScheme::BITRANGE && place_.per_descriptor.size() != w_.descriptors.size())
            throw Error(ErrorCode::CONFIG_MISMATCH, "placement does not cover every descriptor");

        line_size_ = cfg_.l1.line_size;
        zone_xor_ = ZoneMapping::xor_hash(cfg_.zone_count);
        for (std::uint32_t s = 0; s < cfg_.sm_count; ++s) sms_.emplace_back(cfg_.l1);
        for (std::uint32_t z = 0; z < cfg_.zone_count; ++z) {
            l2_.emplace_back(cfg_.l2_slice());
            l2_pending_.emplace_back();
        }
        link_free_.assign(std::size_t{cfg_.zone_count} * cfg_.zone_count, 0.0);
        zone_requests_.assign(cfg_.zone_count, 0);
        init_streams();
    }

    SimResult run() {
        Cycle now = 0;
        for (;;) {
            drain_events(now);
            if (all_done()) break;
            bool issued = false;
            for (std::uint32_t s = 0; s < cfg_.sm_count; ++s) issued = step(s, now) || issued;
            if (issued) {
                ++now;
                continue;
            }
            if (events_.empty()) {
                if (all_done()) break;
                throw Error(ErrorCode::CONFIG_MISMATCH, "simulation stalled with no pending events");
            }
            now = std::max(now + 1, events_.top().at);
        }
        return {collect(), std::move(trace_)};
    }

private:
    struct Warp {
        std::uint32_t id = 0;
        std::size_t pos = 0;
        bool busy = false;
    };
    struct Cta {
        CtaId id = 0;
        std::vector<Warp> warps;
    };
    struct Sm {
        explicit Sm(const CacheConfig& c) : l1(c) {}
        Cache l1;
        std::size_t next_dispatch = 0;
        std::vector<Cta> resident;
        std::size_t rr = 0;
        std::map<Addr, std::vector<std::pair<CtaId, std::uint32_t>>> waiters;
        std::map<std::size_t, StreamState> streams;                          // descriptor -> stream state
        std::map<std::pair<std::size_t, std::uint64_t>, std::uint64_t> remaining;  // (desc, dtile) -> CTAs left
        std::unordered_set<Addr> lines;
    };
    enum class Kind { WARP_DONE, L1_FILL, L2_FILL };
    struct Event {
        Cycle at;
        std::uint64_t seq;
        Kind kind;
        std::uint32_t unit;
        Addr line;
        CtaId cta;
        std::uint32_t warp;
        bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
    };

    void init_streams() {
        for (std::size_t d = 0; d < w_.descriptors.size(); ++d) {
            if (policies_.per_descriptor[d].prefetch != PrefetchPolicy::STRIDE) continue;
            for (std::uint32_t s = 0; s < cfg_.sm_count; ++s) {
                sms_[s].streams.emplace(d, make_stream_state(w_.descriptors[d]));
                for (CtaId c : sched_.ctas_on(s)) ++sms_[s].remaining[{d, dtile_of_cta(c, w_.descriptors[d], w_.grid).flat}];
            }
        }
    }

    void push(Cycle at, Kind k, std::uint32_t unit, Addr line, CtaId cta = 0, std::uint32_t warp = 0) {
        events_.push(Event{at, seq_++, k, unit, line, cta, warp});
    }

    bool all_done() const {
        for (std::uint32_t s = 0; s < cfg_.sm_count; ++s)
            if (!sms_[s].resident.empty() || sms_[s].next_dispatch < sched_.ctas_on(s).size()) return false;
        return true;
    }

    void drain_events(Cycle now) {
        while (!events_.empty() && events_.top().at <= now) {
            const Event e = events_.top();
            events_.pop();
            switch (e.kind) {
                case Kind::WARP_DONE: complete_warp(e.unit, e.cta, e.warp, e.at); break;
                case Kind::L2_FILL:
                    l2_[e.unit].fill(e.line, e.at);
                    l2_pending_[e.unit].erase(e.line);
                    break;
                case Kind::L1_FILL: {
                    Sm& sm = sms_[e.unit];
                    sm.l1.fill(e.line, e.at);
                    auto it = sm.waiters.find(e.line);
                    if (it == sm.waiters.end()) break;
                    const auto waiting = std::move(it->second);
                    sm.waiters.erase(it);
                    for (const auto& [cta, warp] : waiting) complete_warp(e.unit, cta, warp, e.at);
                    break;
                }
            }
        }
    }

    void complete_warp(std::uint32_t s, CtaId cta, std::uint32_t warp, Cycle at) {
        Sm& sm = sms_[s];
        auto it = std::find_if(sm.resident.begin(), sm.resident.end(), [&](const Cta& c) { return c.id == cta; });
        it->warps[warp].busy = false;
        last_completion_ = std::max(last_completion_, at);
        retire_if_done(s, it);
    }

    static bool finished(const Cta& c, const CtaStreams& streams) {
        for (const auto& wp : c.warps)
            if (wp.busy || wp.pos < streams[wp.id].size()) return false;
        return true;
    }

    void retire_if_done(std::uint32_t s, std::vector<Cta>::iterator it) {
        Sm& sm = sms_[s];
        if (!finished(*it, w_.streams[it->id])) return;
        const CtaId cta = it->id;
        sm.resident.erase(it);
        for (auto& [d, state] : sm.streams) {
            const std::uint64_t dt = dtile_of_cta(cta, w_.descriptors[d], w_.grid).flat;
            if (--sm.remaining[{d, dt}] == 0 && state.active_dtiles.count(dt)) retire_stream(dt, state);
        }
    }

    void refill(std::uint32_t s) {
        Sm& sm = sms_[s];
        const auto& queue = sched_.ctas_on(s);
        while (sm.resident.size() < cfg_.max_resident_ctas_per_sm && sm.next_dispatch < queue.size()) {
            Cta c{queue[sm.next_dispatch++], {}};
            for (std::uint32_t wp = 0; wp < w_.grid.warps_per_cta; ++wp) c.warps.push_back({wp, 0, false});
            sm.resident.push_back(std::move(c));
            retire_if_done(s, sm.resident.end() - 1);
        }
    }

    std::uint32_t sm_zone(std::uint32_t s) const { return zone_of_sm(s, cfg_.sm_count, cfg_.zone_count); }

    /// Home zone of `line`; `place` commits a first-touch placement.
    std::uint32_t home_zone(Addr line, std::optional<std::size_t> desc, std::uint32_t requester, bool place) {
        switch (place_.scheme) {
            case MappingScheme::BITRANGE:
                return zone_of_address(line, desc ? place_.per_descriptor[*desc] : zone_xor_, cfg_.zone_count);
            case MappingScheme::XOR_HASH: return zone_of_address(line, zone_xor_, cfg_.zone_count);
            case MappingScheme::FIRST_TOUCH:
                if (place) return pages_.touch(line, requester);
                return pages_.placed(line) ? pages_.zone_of(line) : requester;
        }
        return 0;
    }

    /// Sends a request for `line` from SM `s` to its home zone and schedules the L1 fill.
    /// Every L1 miss and prefetch counts as one memory access for the locality metrics.
    void send_request(std::uint32_t s, Addr line, std::uint32_t home, Cycle now) {
        const bool remote = home != sm_zone(s);
        ++memory_requests_;
        ++zone_requests_[home];
        if (!remote) ++local_requests_;
        Cycle t = now;
        if (remote) {
            ++remote_traffic_;
            double& free_at = link_free_[std::size_t{sm_zone(s)} * cfg_.zone_count + home];
            const double start = std::max(static_cast<double>(now), free_at);
            free_at = start + 1.0 / cfg_.remote_link_capacity;
            t = static_cast<Cycle>(std::ceil(start));
        }
        Cache& l2 = l2_[home];
        Cycle ready = 0;
        switch (l2.access(line, InsertionClass::NORMAL, t)) {
            case AccessOutcome::HIT: ready = t + cfg_.latency.l2_hit; break;
            case AccessOutcome::INFLIGHT_HIT: ready = std::max(t + cfg_.latency.l2_hit, l2_pending_[home].at(line)); break;
            case AccessOutcome::MISS:
                ready = t + (remote ? cfg_.latency.remote_mem : cfg_.latency.local_mem);
                l2_pending_[home][line] = ready;
                push(ready, Kind::L2_FILL, home, line);
                break;
            case AccessOutcome::MSHR_FULL: ready = t + (remote ? cfg_.latency.remote_mem : cfg_.latency.local_mem); break;
        }
        push(ready + cfg_.latency.l1_hit, Kind::L1_FILL, s, line);
    }

    bool l2_can_accept(Addr line, std::uint32_t home) const { return l2_[home].probe(line) != AccessOutcome::MSHR_FULL; }

    void issue_prefetches(std::uint32_t s, Addr addr, std::size_t d, Cycle now) {
        Sm& sm = sms_[s];
        const auto& desc = w_.descriptors[d];
        StreamState scratch = make_stream_state(desc);
        auto it = sm.streams.find(d);
        StreamState& state = it != sm.streams.end() ? it->second : scratch;
        const InsertionClass cls =
            opts_.features.cache_management ? InsertionClass::SOFT_PIN : InsertionClass::NORMAL;
        for (const auto& req : on_miss(addr, desc, cfg_.l1.capacity, line_size_, state)) {
            const Addr line = sm.l1.line_addr(req.addr);
            if (sm.l1.probe(line) != AccessOutcome::MISS) continue;
            const auto owner = owning_descriptor(w_.descriptors, line);
            const std::uint32_t home = home_zone(line, owner, sm_zone(s), false);
            if (!l2_can_accept(line, home)) continue;
            if (!sm.l1.prefetch(line, cls, now)) continue;
            send_request(s, line, home_zone(line, owner, sm_zone(s), true), now);
        }
    }

    /// Issues at most one warp access on SM `s`. Returns true if one issued.
    bool step(std::uint32_t s, Cycle now) {
        refill(s);
        Sm& sm = sms_[s];
        std::vector<std::pair<std::size_t, std::uint32_t>> slots;  // (resident index, warp)
        for (std::size_t i = 0; i < sm.resident.size(); ++i)
            for (std::uint32_t wp = 0; wp < sm.resident[i].warps.size(); ++wp) slots.emplace_back(i, wp);
        if (slots.empty()) return false;

        for (std::size_t k = 0; k < slots.size(); ++k) {
            const std::size_t idx = (sm.rr + k) % slots.size();
            Cta& cta = sm.resident[slots[idx].first];
            Warp& warp = cta.warps[slots[idx].second];
            const auto& stream = w_.streams[cta.id][warp.id];
            if (warp.busy || warp.pos >= stream.size()) continue;

            const Addr addr = stream[warp.pos];
            const Addr line = sm.l1.line_addr(addr);
            const auto owner = owning_descriptor(w_.descriptors, addr);
            InsertionClass cls = InsertionClass::NORMAL;
            if (owner && opts_.features.cache_management) cls = policies_.per_descriptor[*owner].insertion;

            const AccessOutcome probe = sm.l1.probe(addr);
            if (probe == AccessOutcome::MSHR_FULL) {
                ++mshr_stalls_;
                continue;
            }
            if (probe == AccessOutcome::MISS && !l2_can_accept(line, home_zone(line, owner, sm_zone(s), false))) {
                ++mshr_stalls_;
                continue;
            }

            const AccessOutcome out = sm.l1.access(addr, cls, now);
            warp.busy = true;
            ++warp.pos;
            sm.rr = idx + 1;
            sm.lines.insert(line);
            if (opts_.record_trace) trace_.push_back({s, cta.id, warp.id, addr, now});

            switch (out) {
                case AccessOutcome::HIT: push(now + cfg_.latency.l1_hit, Kind::WARP_DONE, s, line, cta.id, warp.id); break;
                case AccessOutcome::INFLIGHT_HIT: sm.waiters[line].emplace_back(cta.id, warp.id); break;
                case AccessOutcome::MISS: {
                    sm.waiters[line].emplace_back(cta.id, warp.id);
                    send_request(s, line, home_zone(line, owner, sm_zone(s), true), now);
                    if (owner && opts_.features.prefetch && policies_.per_descriptor[*owner].prefetch != PrefetchPolicy::NONE)
                        issue_prefetches(s, addr, *owner, now);
                    break;
                }
                case AccessOutcome::MSHR_FULL: break;
            }
            return true;
        }
        return false;
    }

    SimMetrics collect() const {
        SimMetrics m;
        std::uint64_t l2_acc = 0;
        std::uint64_t l2_hits = 0;
        for (const auto& c : l2_) {
            l2_acc += c.stats().accesses;
            l2_hits += c.stats().hits;
        }
        for (const auto& sm : sms_) {
            const auto& st = sm.l1.stats();
            m.demand_accesses += st.accesses;
            m.l1_hits += st.hits;
            m.l1_inflight_hits += st.inflight_hits;
            m.l1_misses += st.misses;
            m.prefetches_issued += st.prefetches_issued;
            m.prefetches_useful += st.prefetches_useful;
            m.working_set.push_back(sm.lines.size());
        }
        auto ratio = [](std::uint64_t a, std::uint64_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
        m.l1_hit_rate = ratio(m.l1_hits, m.demand_accesses);
        m.inflight_hit_rate = ratio(m.l1_inflight_hits, m.demand_accesses);
        m.l2_hit_rate = ratio(l2_hits, l2_acc);
        std::uint64_t ws = 0;
        for (auto v : m.working_set) ws += v;
        m.avg_working_set = ratio(ws, m.working_set.size());
        m.memory_requests = memory_requests_;
        m.access_efficiency = memory_requests_ == 0 ? 1.0 : ratio(local_requests_, memory_requests_);
        m.zone_access_distribution = normalize_distribution(zone_requests_);
        m.total_cycles = last_completion_;
        m.prefetch_accuracy = ratio(m.prefetches_useful, m.prefetches_issued);
        m.remote_traffic = remote_traffic_;
        m.mshr_stalls = mshr_stalls_;
        return m;
    }

    const Workload& w_;
    const SystemConfig& cfg_;
    const Schedule& sched_;
    const MemoryPlacement& place_;
    const PolicySet& policies_;
    const SimOptions& opts_;

    std::uint64_t line_size_ = 128;
    ZoneMapping zone_xor_;
    std::vector<Sm> sms_;
    std::vector<Cache> l2_;
    std::vector<std::map<Addr, Cycle>> l2_pending_;
    std::vector<double> link_free_;
    FirstTouchPlacement pages_;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
    std::uint64_t seq_ = 0;

    std::vector<std::uint64_t> zone_requests_;
    std::uint64_t memory_requests_ = 0;
    std::uint64_t local_requests_ = 0;
    std::uint64_t remote_traffic_ = 0;
    std::uint64_t mshr_stalls_ = 0;
    Cycle last_completion_ = 0;
    std::vector<AccessEvent> trace_;
};

}  // namespace detail

/// Cycle-level multi-SM run: each SM keeps up to max_resident CTAs from its
/// schedule queue and issues at most one warp access per cycle, round-robin
/// over warps with nothing outstanding. L1 misses go to the home zone's L2
/// slice; remote requests queue on the (source, home) link first.
inline SimResult simulate(const Workload& workload, const SystemConfig& config, const Schedule& schedule,
                          const MemoryPlacement& placement, const PolicySet& policies, const SimOptions& options = {}) {
    return detail::Simulator(workload, config, schedule, placement, policies, options).run();
}

}  // namespace ldesc
