#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ldesc/core.hpp"

namespace ldesc {

struct SimMetrics {
    double l1_hit_rate = 0.0;
    double inflight_hit_rate = 0.0;
    double l2_hit_rate = 0.0;
    std::vector<std::uint64_t> working_set;  // unique demand lines per SM
    double avg_working_set = 0.0;
    double access_efficiency = 1.0;  // local share of memory requests (demand misses and prefetches)
    std::vector<double> zone_access_distribution;
    Cycle total_cycles = 0;
    double prefetch_accuracy = 0.0;
    std::uint64_t remote_traffic = 0;  // requests that crossed a zone link

    std::uint64_t demand_accesses = 0;
    std::uint64_t l1_hits = 0;
    std::uint64_t l1_inflight_hits = 0;
    std::uint64_t l1_misses = 0;
    std::uint64_t memory_requests = 0;  // L1 misses plus prefetches sent toward memory
    std::uint64_t prefetches_issued = 0;
    std::uint64_t prefetches_useful = 0;
    std::uint64_t mshr_stalls = 0;
};

/// Distinct line-aligned addresses in each SM's demand trace.
inline std::vector<std::uint64_t> working_set(std::span<const std::vector<Addr>> per_sm, std::uint64_t line_size) {
    std::vector<std::uint64_t> out;
    out.reserve(per_sm.size());
    for (const auto& trace : per_sm) {
        std::unordered_set<Addr> lines;
        for (Addr a : trace) lines.insert(a / line_size);
        out.push_back(lines.size());
    }
    return out;
}

inline nlohmann::ordered_json to_json(const SimMetrics& m) {
    nlohmann::ordered_json j;
    j["l1_hit_rate"] = m.l1_hit_rate;
    j["inflight_hit_rate"] = m.inflight_hit_rate;
    j["l2_hit_rate"] = m.l2_hit_rate;
    j["working_set"] = m.working_set;
    j["avg_working_set"] = m.avg_working_set;
    j["access_efficiency"] = m.access_efficiency;
    j["zone_access_distribution"] = m.zone_access_distribution;
    j["total_cycles"] = m.total_cycles;
    j["prefetch_accuracy"] = m.prefetch_accuracy;
    j["remote_traffic"] = m.remote_traffic;
    j["demand_accesses"] = m.demand_accesses;
    j["l1_hits"] = m.l1_hits;
    j["l1_inflight_hits"] = m.l1_inflight_hits;
    j["l1_misses"] = m.l1_misses;
    j["memory_requests"] = m.memory_requests;
    j["prefetches_issued"] = m.prefetches_issued;
    j["prefetches_useful"] = m.prefetches_useful;
    j["mshr_stalls"] = m.mshr_stalls;
    return j;
}

inline std::string metrics_json_string(const SimMetrics& m) { return to_json(m).dump(2) + "\n"; }

}  // namespace ldesc
