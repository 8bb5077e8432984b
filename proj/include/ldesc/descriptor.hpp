#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldesc/core.hpp"
#include "ldesc/cta_grid.hpp"

namespace ldesc {

/// Data structures must start on a 64 KiB boundary.
inline constexpr std::uint64_t kStructureAlignment = 64 * 1024;

enum class LocalityType { INTER_THREAD, INTRA_THREAD, NO_REUSE };

/// Meaningful only for INTER_THREAD descriptors.
enum class SharingType {
    COACCESSED,  // the whole D-tile is shared by every thread of its C-tile
    NEARBY,      // neighbouring threads touch neighbouring elements
};

struct AccessPattern {
    enum class Kind { REGULAR, IRREGULAR };

    Kind kind = Kind::IRREGULAR;
    std::uint64_t stride_bytes = 0;  // REGULAR only

    static AccessPattern regular(std::uint64_t stride) { return {Kind::REGULAR, stride}; }
    static AccessPattern irregular() { return {Kind::IRREGULAR, 0}; }

    bool is_regular() const { return kind == Kind::REGULAR; }
};

/// A row-major (X fastest) array in the global address space.
struct DataStructureRef {
    std::string name;
    Addr base = 0;
    std::uint64_t elem_size = 1;
    Dim3 dims{1, 1, 1};  // in elements

    std::uint64_t total_bytes() const { return dims.product() * elem_size; }
    Addr end() const { return base + total_bytes(); }
    bool contains(Addr a) const { return a >= base && a < end(); }
    bool overlaps(const DataStructureRef& o) const { return base < o.end() && o.base < end(); }
};

/// Tile geometry plus the compute-data map.
///
/// `compute_data_map` ranks the C-tile axes: the axis with the smallest rank is
/// traversed fastest when C-tiles are matched, in order, against D-tiles
/// enumerated X->Y->Z. A full map is a permutation of {1,2,3}; a partial map
/// such as (1,0,0) leaves rank-0 axes out of the enumeration.
struct TileSemantics {
    Dim3 dtile{1, 1, 1};  // elements
    Dim3 ctile{1, 1, 1};  // CTAs
    std::array<int, 3> compute_data_map{1, 2, 3};
};

struct LocalityDescriptor {
    DataStructureRef data;
    LocalityType ltype = LocalityType::NO_REUSE;
    TileSemantics tiles;
    std::optional<SharingType> sharing;
    AccessPattern pattern;
    std::uint32_t priority = 0;  // 0 is highest
};

inline Dim3 dtile_count(const LocalityDescriptor& d) { return ceil_div(d.data.dims, d.tiles.dtile); }

inline Dim3 ctile_count(const LocalityDescriptor& d, const CtaGrid& grid) {
    return ceil_div(grid.dims, d.tiles.ctile);
}

inline std::uint64_t dtile_width_bytes(const LocalityDescriptor& d) {
    return d.tiles.dtile.x * d.data.elem_size;
}

namespace detail {

inline bool valid_map(const std::array<int, 3>& m) {
    std::array<int, 3> sorted = m;
    std::sort(sorted.begin(), sorted.end());
    if (sorted == std::array<int, 3>{1, 2, 3}) return true;
    // Partial ranking: non-zero ranks must be exactly 1..k.
    int expect = 1;
    for (int r : sorted) {
        if (r < 0 || r > 3) return false;
        if (r == 0) continue;
        if (r != expect) return false;
        ++expect;
    }
    return expect > 1;
}

inline std::string desc_label(const LocalityDescriptor& d) { return "descriptor '" + d.data.name + "'"; }

}  // namespace detail

/// Checks one descriptor's type and tile invariants against `grid`.
inline void validate_descriptor(const LocalityDescriptor& d, const CtaGrid& grid) {
    const auto label = detail::desc_label(d);
    const auto& ds = d.data;
    if (ds.elem_size == 0 || ds.dims.x == 0 || ds.dims.y == 0 || ds.dims.z == 0)
        throw Error(ErrorCode::INVALID_DESCRIPTOR, label + ": empty data structure");
    if (ds.base % kStructureAlignment != 0)
        throw Error(ErrorCode::MISALIGNED_BASE, label + ": base address is not 64 KiB aligned");
    if (d.sharing.has_value() != (d.ltype == LocalityType::INTER_THREAD))
        throw Error(ErrorCode::INVALID_DESCRIPTOR,
                    label + ": sharing type is required for INTER_THREAD and forbidden otherwise");
    if (d.pattern.is_regular() &&
        (d.pattern.stride_bytes == 0 || d.pattern.stride_bytes % ds.elem_size != 0))
        throw Error(ErrorCode::INVALID_DESCRIPTOR,
                    label + ": REGULAR stride must be a positive multiple of the element size");

    const auto& t = d.tiles;
    for (int a = 0; a < 3; ++a) {
        if (t.dtile[a] == 0 || t.ctile[a] == 0)
            throw Error(ErrorCode::INVALID_TILE_SEMANTICS, label + ": tile dims must be >= 1");
        if (t.dtile[a] > ds.dims[a])
            throw Error(ErrorCode::INVALID_TILE_SEMANTICS,
                        label + ": D-tile " + to_string(t.dtile) + " exceeds data dims " + to_string(ds.dims));
        if (t.ctile[a] > grid.dims[a])
            throw Error(ErrorCode::INVALID_TILE_SEMANTICS,
                        label + ": C-tile " + to_string(t.ctile) + " exceeds grid " + to_string(grid.dims));
    }
    if (!detail::valid_map(t.compute_data_map))
        throw Error(ErrorCode::INVALID_TILE_SEMANTICS, label + ": compute-data map is not a valid ranking");

    const Dim3 ct = ctile_count(d, grid);
    for (int a = 0; a < 3; ++a) {
        if (t.compute_data_map[a] == 0 && ct[a] != 1)
            throw Error(ErrorCode::INVALID_TILE_SEMANTICS,
                        label + ": unranked axis of the compute-data map has more than one C-tile");
    }
    const Dim3 dt = dtile_count(d);
    if (dt.product() != ct.product())
        throw Error(ErrorCode::INVALID_TILE_SEMANTICS,
                    label + ": " + std::to_string(dt.product()) + " D-tiles vs " +
                        std::to_string(ct.product()) + " C-tiles");
}

/// Validates every descriptor and returns them sorted by priority (0 first).
/// The sort is stable, so equal priorities on disjoint ranges keep input order.
inline std::vector<LocalityDescriptor> validate_descriptor_set(std::span<const LocalityDescriptor> descs,
                                                               const CtaGrid& grid) {
    if (descs.empty()) throw Error(ErrorCode::INVALID_CONFIG, "descriptor set is empty");
    grid.validate();
    for (const auto& d : descs) validate_descriptor(d, grid);
    for (std::size_t i = 0; i < descs.size(); ++i) {
        for (std::size_t j = i + 1; j < descs.size(); ++j) {
            if (descs[i].priority == descs[j].priority && descs[i].data.overlaps(descs[j].data))
                throw Error(ErrorCode::OVERLAP_CONFLICT,
                            detail::desc_label(descs[i]) + " and " + detail::desc_label(descs[j]) +
                                " overlap with equal priority " + std::to_string(descs[i].priority));
        }
    }
    std::vector<LocalityDescriptor> out(descs.begin(), descs.end());
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.priority < b.priority; });
    return out;
}

/// Index of the highest-priority descriptor covering `addr`, if any. `descs`
/// must already be priority-sorted.
inline std::optional<std::size_t> owning_descriptor(std::span<const LocalityDescriptor> descs, Addr addr) {
    for (std::size_t i = 0; i < descs.size(); ++i)
        if (descs[i].data.contains(addr)) return i;
    return std::nullopt;
}

inline const char* to_string(LocalityType t) {
    switch (t) {
        case LocalityType::INTER_THREAD: return "INTER_THREAD";
        case LocalityType::INTRA_THREAD: return "INTRA_THREAD";
        case LocalityType::NO_REUSE: return "NO_REUSE";
    }
    return "?";
}

inline const char* to_string(SharingType s) {
    return s == SharingType::COACCESSED ? "COACCESSED" : "NEARBY";
}

}  // namespace ldesc
