#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldesc/core.hpp"
#include "ldesc/cta_grid.hpp"
#include "ldesc/descriptor.hpp"
#include "ldesc/grid.hpp"

namespace ldesc {

inline constexpr unsigned kMinLowBit = 7;   // keeps 128 B DRAM bursts in one zone
inline constexpr unsigned kMaxLowBit = 16;  // 64 KiB; coarser granularities are page-table territory
inline constexpr std::uint64_t kBurstBytes = 128;
inline constexpr std::uint64_t kPageBytes = 64 * 1024;

enum class MappingScheme { BITRANGE, XOR_HASH, FIRST_TOUCH };

inline const char* to_string(MappingScheme s) {
    switch (s) {
        case MappingScheme::BITRANGE: return "BITRANGE";
        case MappingScheme::XOR_HASH: return "XOR_HASH";
        case MappingScheme::FIRST_TOUCH: return "FIRST_TOUCH";
    }
    return "?";
}

/// Address-to-zone interleaving for one data structure.
struct ZoneMapping {
    MappingScheme scheme = MappingScheme::BITRANGE;
    unsigned low_bit = kMinLowBit;
    unsigned num_bits = 0;  // log2(zone_count); 0 only for a single zone

    static ZoneMapping bitrange(unsigned low_bit, std::uint32_t zone_count) {
        return {MappingScheme::BITRANGE, low_bit, log2_exact(zone_count)};
    }
    static ZoneMapping xor_hash(std::uint32_t zone_count) {
        return {MappingScheme::XOR_HASH, kMinLowBit, log2_exact(zone_count)};
    }

    std::uint32_t zone_count() const { return 1u << num_bits; }

    friend bool operator==(const ZoneMapping&, const ZoneMapping&) = default;
};

inline void validate_zone_count(std::uint32_t zone_count) {
    if (!is_pow2(zone_count))
        throw Error(ErrorCode::INVALID_CONFIG, "zone_count must be a power of two, got " + std::to_string(zone_count));
}

/// Page -> zone table filled by first touch.
class FirstTouchPlacement {
public:
    /// Places the page of `addr` in `zone` unless already placed; returns its zone.
    std::uint32_t touch(Addr addr, std::uint32_t zone) {
        return pages_.try_emplace(addr / kPageBytes, zone).first->second;
    }

    std::uint32_t zone_of(Addr addr) const {
        auto it = pages_.find(addr / kPageBytes);
        if (it == pages_.end()) throw Error(ErrorCode::UNPLACED_PAGE, "page of address never touched");
        return it->second;
    }

    bool placed(Addr addr) const { return pages_.count(addr / kPageBytes) != 0; }
    const std::map<std::uint64_t, std::uint32_t>& pages() const { return pages_; }

private:
    std::map<std::uint64_t, std::uint32_t> pages_;
};

/// Zone owning `addr`. BITRANGE uses the address bits [low_bit, low_bit+num_bits);
/// XOR_HASH folds three num_bits-wide fields starting at bit 7.
inline std::uint32_t zone_of_address(Addr addr, const ZoneMapping& m, std::uint32_t zone_count,
                                     const FirstTouchPlacement* pages = nullptr) {
    switch (m.scheme) {
        case MappingScheme::BITRANGE:
            return static_cast<std::uint32_t>((addr >> m.low_bit) % zone_count);
        case MappingScheme::XOR_HASH: {
            const unsigned nb = m.num_bits;
            const Addr h = (addr >> 7) ^ (addr >> (7 + nb)) ^ (addr >> (7 + 2 * nb));
            return static_cast<std::uint32_t>(h % zone_count);
        }
        case MappingScheme::FIRST_TOUCH:
            if (pages == nullptr) throw Error(ErrorCode::UNPLACED_PAGE, "no first-touch page table");
            return pages->zone_of(addr);
    }
    return 0;
}

/// Bytes of [run.start, run.end) held by each zone under BITRANGE(low_bit).
inline void accumulate_zone_bytes(const ByteRun& run, unsigned low_bit, std::uint32_t zone_count,
                                  std::vector<std::uint64_t>& acc) {
    const std::uint64_t stripe = std::uint64_t{1} << low_bit;
    const std::uint64_t period = stripe * zone_count;
    Addr a = run.start;
    const Addr end = run.end();
    auto partial = [&](Addr until) {
        while (a < until) {
            const Addr stripe_end = std::min(until, (a / stripe + 1) * stripe);
            acc[(a >> low_bit) % zone_count] += stripe_end - a;
            a = stripe_end;
        }
    };
    partial(std::min(end, ceil_div(a, period) * period));
    if (a < end) {
        const std::uint64_t full = (end - a) / period;
        for (auto& v : acc) v += full * stripe;
        a += full * period;
        partial(end);
    }
}

inline std::vector<std::uint64_t> dtile_zone_bytes(const TileIndex& dtile, const LocalityDescriptor& d,
                                                   unsigned low_bit, std::uint32_t zone_count) {
    std::vector<std::uint64_t> acc(zone_count, 0);
    for (const auto& run : dtile_byte_runs(dtile, d)) accumulate_zone_bytes(run, low_bit, zone_count, acc);
    return acc;
}

/// CTA -> zone map, indexed by CTA id.
using CtaPartition = std::vector<std::uint32_t>;

/// Places every C-tile in the zone holding most of its D-tile's bytes
/// (lowest zone id on ties).
inline CtaPartition numa_part(const LocalityDescriptor& d, unsigned low_bit, const CtaGrid& grid,
                              std::uint32_t zone_count) {
    CtaPartition part(grid.cta_count(), 0);
    const Dim3 counts = ctile_count(d, grid);
    for (std::uint64_t k = 0; k < counts.product(); ++k) {
        const TileIndex ct = make_tile_index(delinearize(k, counts), counts);
        const auto bytes = dtile_zone_bytes(dtile_of_ctile(ct, d, grid), d, low_bit, zone_count);
        const auto zone = static_cast<std::uint32_t>(std::max_element(bytes.begin(), bytes.end()) - bytes.begin());
        for (CtaId c : ctas_of_ctile(ct.coords, d, grid)) part[c] = zone;
    }
    return part;
}

/// Fraction of the structure's bytes that are local to the CTAs accessing
/// them, scaled by `weight`. A C-tile whose CTAs sit in several zones
/// contributes the mean over its CTAs.
inline double comp_util(double weight, const LocalityDescriptor& d, const CtaGrid& grid,
                        std::span<const std::uint32_t> partition, unsigned low_bit, std::uint32_t zone_count) {
    if (partition.size() != grid.cta_count())
        throw Error(ErrorCode::CONFIG_MISMATCH, "CTA partition does not cover the grid");
    const Dim3 counts = ctile_count(d, grid);
    double local = 0.0;
    for (std::uint64_t k = 0; k < counts.product(); ++k) {
        const TileIndex ct = make_tile_index(delinearize(k, counts), counts);
        const auto bytes = dtile_zone_bytes(dtile_of_ctile(ct, d, grid), d, low_bit, zone_count);
        const auto ctas = ctas_of_ctile(ct.coords, d, grid);
        std::uint64_t sum = 0;
        for (CtaId c : ctas) sum += bytes.at(partition[c]);
        local += static_cast<double>(sum) / static_cast<double>(ctas.size());
    }
    return weight * local / static_cast<double>(d.data.total_bytes());
}

struct PlacementOptions {
    /// Reject partitions whose busiest zone exceeds ceil(ctas/zones) * balance_slack.
    bool balance_guard = true;
    double balance_slack = 1.25;
};

struct NumaPlan {
    CtaPartition cta_partition;
    std::vector<ZoneMapping> mappings;                    // aligned with the input descriptors
    std::map<std::string, ZoneMapping> per_structure;     // highest-priority descriptor wins
    double utility = 0.0;
    bool balance_guard_relaxed = false;                   // every candidate failed the guard
};

inline bool partition_balanced(std::span<const std::uint32_t> part, std::uint32_t zone_count, double slack) {
    std::vector<std::uint64_t> load(zone_count, 0);
    for (auto z : part) ++load.at(z);
    const double limit = static_cast<double>(ceil_div(part.size(), zone_count)) * slack;
    return static_cast<double>(*std::max_element(load.begin(), load.end())) <= limit;
}

/// Coordinated CTA partitioning and per-structure bit selection.
///
/// Every low bit in [7,16] is tried for the top descriptor; its NUMA_PART
/// partition is then fixed while each remaining descriptor independently
/// picks its best low bit. Descriptor i (0-based) is weighted N - i. The
/// candidate with the highest total utility wins, smallest low bit on ties.
inline NumaPlan place_and_partition(std::span<const LocalityDescriptor> descs, const CtaGrid& grid,
                                    std::uint32_t zone_count, const PlacementOptions& opts = {}) {
    if (descs.empty()) throw Error(ErrorCode::INVALID_CONFIG, "descriptor set is empty");
    validate_zone_count(zone_count);
    const auto n = static_cast<double>(descs.size());

    auto search = [&](bool guarded) -> std::optional<NumaPlan> {
        std::optional<NumaPlan> best;
        for (unsigned hi = kMinLowBit; hi <= kMaxLowBit; ++hi) {
            CtaPartition part = numa_part(descs[0], hi, grid, zone_count);
            if (guarded && !partition_balanced(part, zone_count, opts.balance_slack)) continue;
            double util = comp_util(n, descs[0], grid, part, hi, zone_count);
            std::vector<unsigned> bits{hi};
            for (std::size_t i = 1; i < descs.size(); ++i) {
                unsigned best_bit = kMinLowBit;
                double best_util = 0.0;
                for (unsigned lo = kMinLowBit; lo <= kMaxLowBit; ++lo) {
                    const double u = comp_util(n - static_cast<double>(i), descs[i], grid, part, lo, zone_count);
                    if (u > best_util) {
                        best_util = u;
                        best_bit = lo;
                    }
                }
                util += best_util;
                bits.push_back(best_bit);
            }
            if (!best || util > best->utility) {
                NumaPlan plan;
                plan.cta_partition = std::move(part);
                plan.utility = util;
                for (unsigned b : bits) plan.mappings.push_back(ZoneMapping::bitrange(b, zone_count));
                best = std::move(plan);
            }
        }
        return best;
    };

    std::optional<NumaPlan> plan = search(opts.balance_guard);
    if (!plan) {
        plan = search(false);
        plan->balance_guard_relaxed = true;
    }
    for (std::size_t i = 0; i < descs.size(); ++i) plan->per_structure.try_emplace(descs[i].data.name, plan->mappings[i]);
    return *plan;
}

/// Grid split into zone_count contiguous X->Y->Z ranges of CTAs.
inline CtaPartition contiguous_partition(const CtaGrid& grid, std::uint32_t zone_count) {
    CtaPartition part(grid.cta_count());
    for (CtaId c = 0; c < part.size(); ++c)
        part[c] = static_cast<std::uint32_t>(c * zone_count / grid.cta_count());
    return part;
}

struct TouchEvent {
    CtaId cta = 0;
    Addr addr = 0;
};

struct FirstTouchResult {
    CtaPartition cta_partition;
    FirstTouchPlacement pages;
};

/// FirstTouch-Distrib baseline: contiguous CTA partition; each 64 KiB page
/// lives in the zone of the CTA that touches it first in `trace` order.
inline FirstTouchResult baseline_first_touch(const CtaGrid& grid, std::uint32_t zone_count,
                                             std::span<const TouchEvent> trace) {
    validate_zone_count(zone_count);
    FirstTouchResult r{contiguous_partition(grid, zone_count), {}};
    for (const auto& e : trace) r.pages.touch(e.addr, r.cta_partition.at(e.cta));
    return r;
}

/// Normalizes per-zone counts; an all-zero input maps to a uniform split.
inline std::vector<double> normalize_distribution(std::span<const std::uint64_t> counts) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    std::vector<double> out(counts.size(), counts.empty() ? 0.0 : 1.0 / static_cast<double>(counts.size()));
    if (total == 0) return out;
    for (std::size_t i = 0; i < counts.size(); ++i)
        out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return out;
}

}  // namespace ldesc
