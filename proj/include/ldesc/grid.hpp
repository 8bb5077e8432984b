#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "ldesc/core.hpp"
#include "ldesc/cta_grid.hpp"
#include "ldesc/descriptor.hpp"

namespace ldesc {

/// Tile coordinates plus the X->Y->Z flat index of those coordinates.
struct TileIndex {
    Dim3 coords;
    std::uint64_t flat = 0;

    friend bool operator==(const TileIndex&, const TileIndex&) = default;
};

/// Contiguous span of bytes inside one data structure.
struct ByteRun {
    Addr start = 0;
    std::uint64_t len = 0;

    Addr end() const { return start + len; }
    friend bool operator==(const ByteRun&, const ByteRun&) = default;
};

inline TileIndex make_tile_index(const Dim3& coords, const Dim3& counts) {
    return {coords, linearize(coords, counts)};
}

/// C-tile containing CTA `cta`.
inline TileIndex ctile_of_cta(const Dim3& cta, const LocalityDescriptor& d, const CtaGrid& grid) {
    if (!within(cta, grid.dims))
        throw Error(ErrorCode::OUT_OF_GRID, "CTA " + to_string(cta) + " outside grid " + to_string(grid.dims));
    const Dim3& ct = d.tiles.ctile;
    return make_tile_index({cta.x / ct.x, cta.y / ct.y, cta.z / ct.z}, ctile_count(d, grid));
}

inline TileIndex ctile_of_cta(CtaId cta, const LocalityDescriptor& d, const CtaGrid& grid) {
    return ctile_of_cta(grid.coords(cta), d, grid);
}

namespace detail {

/// Axes ordered by ascending compute-data rank; rank-0 axes are dropped.
inline std::vector<int> ranked_axes(const std::array<int, 3>& map) {
    std::vector<int> axes;
    for (int a = 0; a < 3; ++a)
        if (map[a] != 0) axes.push_back(a);
    std::stable_sort(axes.begin(), axes.end(), [&](int l, int r) { return map[l] < map[r]; });
    return axes;
}

}  // namespace detail

/// Position of a C-tile in the enumeration order selected by the compute-data map.
inline std::uint64_t ctile_enumeration_index(const Dim3& ctile, const LocalityDescriptor& d,
                                             const CtaGrid& grid) {
    const Dim3 counts = ctile_count(d, grid);
    std::uint64_t index = 0;
    std::uint64_t stride = 1;
    for (int axis : detail::ranked_axes(d.tiles.compute_data_map)) {
        index += ctile[axis] * stride;
        stride *= counts[axis];
    }
    return index;
}

/// Inverse of ctile_enumeration_index.
inline Dim3 ctile_from_enumeration_index(std::uint64_t k, const LocalityDescriptor& d, const CtaGrid& grid) {
    const Dim3 counts = ctile_count(d, grid);
    Dim3 c{0, 0, 0};
    for (int axis : detail::ranked_axes(d.tiles.compute_data_map)) {
        c.at(axis) = k % counts[axis];
        k /= counts[axis];
    }
    return c;
}

/// D-tile accessed by C-tile `ctile` under the descriptor's 1:1 compute-data map.
inline TileIndex dtile_of_ctile(const TileIndex& ctile, const LocalityDescriptor& d, const CtaGrid& grid) {
    if (!within(ctile.coords, ctile_count(d, grid)))
        throw Error(ErrorCode::OUT_OF_RANGE, "C-tile " + to_string(ctile.coords) + " out of range");
    const Dim3 dcounts = dtile_count(d);
    const std::uint64_t k = ctile_enumeration_index(ctile.coords, d, grid);
    if (k >= dcounts.product())
        throw Error(ErrorCode::OUT_OF_RANGE, "C-tile enumeration index exceeds D-tile count");
    return {delinearize(k, dcounts), k};
}

inline TileIndex ctile_of_dtile(const TileIndex& dtile, const LocalityDescriptor& d, const CtaGrid& grid) {
    const Dim3 c = ctile_from_enumeration_index(dtile.flat, d, grid);
    return make_tile_index(c, ctile_count(d, grid));
}

/// D-tile of `cta` (composition of ctile_of_cta and dtile_of_ctile).
inline TileIndex dtile_of_cta(CtaId cta, const LocalityDescriptor& d, const CtaGrid& grid) {
    return dtile_of_ctile(ctile_of_cta(cta, d, grid), d, grid);
}

/// Extent of a D-tile in elements, clipped at the structure edge.
inline Dim3 dtile_extent(const Dim3& dtile, const LocalityDescriptor& d) {
    const Dim3& t = d.tiles.dtile;
    const Dim3& n = d.data.dims;
    return {std::min(t.x, n.x - dtile.x * t.x), std::min(t.y, n.y - dtile.y * t.y),
            std::min(t.z, n.z - dtile.z * t.z)};
}

inline std::uint64_t dtile_bytes(const TileIndex& dtile, const LocalityDescriptor& d) {
    return dtile_extent(dtile.coords, d).product() * d.data.elem_size;
}

/// One ascending run per (y, z) row of the D-tile.
inline std::vector<ByteRun> dtile_byte_runs(const TileIndex& dtile, const LocalityDescriptor& d) {
    if (!within(dtile.coords, dtile_count(d)))
        throw Error(ErrorCode::OUT_OF_RANGE, "D-tile " + to_string(dtile.coords) + " out of range");
    const Dim3& t = d.tiles.dtile;
    const Dim3& n = d.data.dims;
    const Dim3 ext = dtile_extent(dtile.coords, d);
    const std::uint64_t es = d.data.elem_size;
    std::vector<ByteRun> runs;
    runs.reserve(ext.y * ext.z);
    for (std::uint64_t z = 0; z < ext.z; ++z) {
        for (std::uint64_t y = 0; y < ext.y; ++y) {
            const std::uint64_t elem =
                (dtile.coords.z * t.z + z) * n.y * n.x + (dtile.coords.y * t.y + y) * n.x + dtile.coords.x * t.x;
            runs.push_back({d.data.base + elem * es, ext.x * es});
        }
    }
    return runs;
}

/// D-tile containing byte address `addr`.
inline TileIndex dtile_of_address(Addr addr, const LocalityDescriptor& d) {
    if (!d.data.contains(addr)) throw Error(ErrorCode::OUT_OF_RANGE, "address outside " + d.data.name);
    const std::uint64_t elem = (addr - d.data.base) / d.data.elem_size;
    const Dim3& n = d.data.dims;
    const Dim3 e = delinearize(elem, n);
    const Dim3& t = d.tiles.dtile;
    return make_tile_index({e.x / t.x, e.y / t.y, e.z / t.z}, dtile_count(d));
}

/// CTA ids belonging to a C-tile, ascending.
inline std::vector<CtaId> ctas_of_ctile(const Dim3& ctile, const LocalityDescriptor& d, const CtaGrid& grid) {
    const Dim3& ct = d.tiles.ctile;
    std::vector<CtaId> out;
    for (std::uint64_t z = ctile.z * ct.z; z < std::min(grid.dims.z, (ctile.z + 1) * ct.z); ++z)
        for (std::uint64_t y = ctile.y * ct.y; y < std::min(grid.dims.y, (ctile.y + 1) * ct.y); ++y)
            for (std::uint64_t x = ctile.x * ct.x; x < std::min(grid.dims.x, (ctile.x + 1) * ct.x); ++x)
                out.push_back(grid.flat({x, y, z}));
    return out;
}

}  // namespace ldesc
