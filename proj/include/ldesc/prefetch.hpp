#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "ldesc/core.hpp"
#include "ldesc/descriptor.hpp"
#include "ldesc/grid.hpp"

namespace ldesc {

enum class PrefetchKind { NEXTLINE, STRIDE };

struct PrefetchRequest {
    Addr addr = 0;
    Addr trigger_addr = 0;
    PrefetchKind kind = PrefetchKind::NEXTLINE;

    friend bool operator==(const PrefetchRequest&, const PrefetchRequest&) = default;
};

/// Per-SM, per-descriptor prefetch stream bookkeeping.
struct StreamState {
    std::set<std::uint64_t> active_dtiles;  // D-tile flat indices being prefetched
    std::uint64_t dtile_width = 0;          // bytes along X
};

inline StreamState make_stream_state(const LocalityDescriptor& d) { return {{}, dtile_width_bytes(d)}; }

/// floor(l1_size / (active_tiles * dtile_width)); 0 when the cache cannot hold one row per tile.
inline std::uint64_t prefetch_distance_factor(std::uint64_t l1_size, std::uint64_t active_tiles,
                                              std::uint64_t dtile_width) {
    if (active_tiles == 0 || dtile_width == 0) return 0;
    return l1_size / (active_tiles * dtile_width);
}

/// Prefetches triggered by a demand miss on `addr`.
///
/// NEARBY sharing prefetches the next line. COACCESSED + REGULAR prefetches
/// addr + factor * stride where factor shrinks as more D-tiles are streamed;
/// a zero factor degrades to next-line. Targets outside the structure are
/// dropped. Other descriptors yield nothing.
inline std::vector<PrefetchRequest> on_miss(Addr addr, const LocalityDescriptor& d, std::uint64_t l1_size,
                                            std::uint64_t line_size, StreamState& state) {
    if (d.ltype != LocalityType::INTER_THREAD || !d.sharing || !d.data.contains(addr)) return {};

    auto bounded = [&](Addr target, PrefetchKind kind) -> std::vector<PrefetchRequest> {
        if (target < addr || !d.data.contains(target)) return {};
        return {PrefetchRequest{target, addr, kind}};
    };

    if (*d.sharing == SharingType::NEARBY) return bounded(addr + line_size, PrefetchKind::NEXTLINE);
    if (!d.pattern.is_regular()) return {};

    state.active_dtiles.insert(dtile_of_address(addr, d).flat);
    const std::uint64_t factor = prefetch_distance_factor(l1_size, state.active_dtiles.size(), state.dtile_width);
    if (factor == 0) return bounded(addr + line_size, PrefetchKind::NEXTLINE);
    return bounded(addr + factor * d.pattern.stride_bytes, PrefetchKind::STRIDE);
}

/// Drops a D-tile from the active set once the SM is done with it.
inline void retire_stream(std::uint64_t dtile_flat, StreamState& state) {
    if (state.active_dtiles.erase(dtile_flat) == 0)
        throw Error(ErrorCode::UNKNOWN_STREAM, "D-tile " + std::to_string(dtile_flat) + " has no active stream");
}

}  // namespace ldesc
