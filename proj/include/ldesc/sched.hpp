#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ldesc/core.hpp"
#include "ldesc/cta_grid.hpp"
#include "ldesc/descriptor.hpp"

namespace ldesc {

/// CTAs per cluster along each axis.
struct ClusterDims {
    Dim3 dims{1, 1, 1};

    friend bool operator==(const ClusterDims&, const ClusterDims&) = default;
};

/// CTA -> SM assignment plus the order in which each SM dispatches its CTAs.
struct Schedule {
    std::uint32_t sm_count = 1;
    std::vector<std::uint32_t> assignment;       // indexed by CTA id
    std::vector<std::vector<CtaId>> dispatch;    // per SM, in launch order

    const std::vector<CtaId>& ctas_on(std::uint32_t sm) const { return dispatch.at(sm); }
};

/// Number of tiles of shape `tile` needed to cover `grid`.
inline std::uint64_t tile_count(const Dim3& tile, const CtaGrid& grid) {
    return ceil_div(grid.dims, tile).product();
}

/// Halves `tile` along its largest axis (ties: X, then Y, then Z), rounding up.
inline Dim3 split_largest_axis(Dim3 tile) {
    int axis = 0;
    for (int a = 1; a < 3; ++a)
        if (tile[a] > tile[axis]) axis = a;
    tile.at(axis) = ceil_div(tile[axis], 2);
    return tile;
}

/// Cluster formation from priority-sorted descriptors.
///
/// Step 1 splits each descriptor's C-tile until it yields at least `sm_num`
/// tiles (or reaches a single CTA). Step 2 starts from the top descriptor's
/// C-tile and merges in lower-priority C-tiles while at least `sm_num`
/// clusters remain. Descriptors are not modified.
inline ClusterDims form_clusters(std::span<const LocalityDescriptor> descs, const CtaGrid& grid,
                                 std::uint32_t sm_num) {
    if (descs.empty()) return {};
    const Dim3 unit{1, 1, 1};

    std::vector<Dim3> ct_dim;
    ct_dim.reserve(descs.size());
    for (const auto& d : descs) {
        Dim3 tile = d.tiles.ctile;
        while (tile_count(tile, grid) < sm_num && tile != unit) tile = split_largest_axis(tile);
        ct_dim.push_back(tile);
    }

    Dim3 cls = ct_dim.front();
    for (std::size_t i = 1; i < ct_dim.size(); ++i) {
        Dim3 merged;
        for (int a = 0; a < 3; ++a) merged.at(a) = cls[a] * std::max<std::uint64_t>(ct_dim[i][a] / cls[a], 1);
        if (tile_count(merged, grid) >= sm_num) cls = merged;
    }
    return {cls};
}

namespace detail {

inline Schedule empty_schedule(const CtaGrid& grid, std::uint32_t sm_count) {
    if (sm_count == 0) throw Error(ErrorCode::INVALID_CONFIG, "sm_count must be >= 1");
    Schedule s;
    s.sm_count = sm_count;
    s.assignment.assign(grid.cta_count(), 0);
    s.dispatch.assign(sm_count, {});
    return s;
}

inline void place(Schedule& s, CtaId cta, std::uint32_t sm) {
    s.assignment[cta] = sm;
    s.dispatch[sm].push_back(cta);
}

inline std::uint64_t cluster_id(CtaId cta, const ClusterDims& cls, const CtaGrid& grid) {
    const Dim3 c = grid.coords(cta);
    const Dim3 counts = ceil_div(grid.dims, cls.dims);
    return linearize({c.x / cls.dims.x, c.y / cls.dims.y, c.z / cls.dims.z}, counts);
}

/// CTAs grouped by cluster id, each group ascending.
inline std::map<std::uint64_t, std::vector<CtaId>> group_by_cluster(std::span<const CtaId> ctas,
                                                                    const ClusterDims& cls,
                                                                    const CtaGrid& grid) {
    std::map<std::uint64_t, std::vector<CtaId>> groups;
    for (CtaId c : ctas) groups[cluster_id(c, cls, grid)].push_back(c);
    return groups;
}

}  // namespace detail

/// Clusters enumerated X->Y->Z and dealt round-robin over SMs; an SM runs
/// its clusters one after another.
inline Schedule assign_clusters(const ClusterDims& cls, const CtaGrid& grid, std::uint32_t sm_num) {
    Schedule s = detail::empty_schedule(grid, sm_num);
    std::vector<CtaId> all(grid.cta_count());
    for (CtaId c = 0; c < all.size(); ++c) all[c] = c;
    std::uint64_t k = 0;
    for (const auto& [id, members] : detail::group_by_cluster(all, cls, grid)) {
        const auto sm = static_cast<std::uint32_t>(k++ % sm_num);
        for (CtaId c : members) detail::place(s, c, sm);
    }
    return s;
}

/// Default scheduler: CTA k (X->Y->Z) runs on SM k mod sm_num.
inline Schedule baseline_round_robin(const CtaGrid& grid, std::uint32_t sm_num) {
    Schedule s = detail::empty_schedule(grid, sm_num);
    for (CtaId c = 0; c < grid.cta_count(); ++c) detail::place(s, c, static_cast<std::uint32_t>(c % sm_num));
    return s;
}

/// Block CTA scheduling: consecutive pairs (2k, 2k+1) share SM k mod sm_num.
inline Schedule baseline_bcs(const CtaGrid& grid, std::uint32_t sm_num) {
    Schedule s = detail::empty_schedule(grid, sm_num);
    for (CtaId c = 0; c < grid.cta_count(); ++c)
        detail::place(s, c, static_cast<std::uint32_t>((c / 2) % sm_num));
    return s;
}

/// First SM of `zone` when SMs are split evenly and contiguously over zones.
inline std::uint32_t first_sm_of_zone(std::uint32_t zone, std::uint32_t sm_count, std::uint32_t zone_count) {
    return zone * (sm_count / zone_count);
}

inline std::uint32_t zone_of_sm(std::uint32_t sm, std::uint32_t sm_count, std::uint32_t zone_count) {
    return sm / (sm_count / zone_count);
}

/// NUMA scheduling: each zone's CTAs (per `partition`) are grouped into
/// clusters of shape `cls` and dealt round-robin over that zone's SMs.
/// With cls = (1,1,1) this is plain round-robin inside each zone.
inline Schedule assign_clusters_within_zones(const ClusterDims& cls, const CtaGrid& grid,
                                             std::span<const std::uint32_t> partition, std::uint32_t sm_count,
                                             std::uint32_t zone_count) {
    if (zone_count == 0 || sm_count % zone_count != 0)
        throw Error(ErrorCode::INVALID_CONFIG, "sm_count must be a multiple of zone_count");
    if (partition.size() != grid.cta_count())
        throw Error(ErrorCode::CONFIG_MISMATCH, "CTA partition does not cover the grid");
    Schedule s = detail::empty_schedule(grid, sm_count);
    const std::uint32_t per_zone = sm_count / zone_count;
    std::vector<std::vector<CtaId>> zone_ctas(zone_count);
    for (CtaId c = 0; c < partition.size(); ++c) zone_ctas.at(partition[c]).push_back(c);
    for (std::uint32_t z = 0; z < zone_count; ++z) {
        std::uint64_t k = 0;
        for (const auto& [id, members] : detail::group_by_cluster(zone_ctas[z], cls, grid)) {
            const auto sm = first_sm_of_zone(z, sm_count, zone_count) + static_cast<std::uint32_t>(k++ % per_zone);
            for (CtaId c : members) detail::place(s, c, sm);
        }
    }
    return s;
}

}  // namespace ldesc
