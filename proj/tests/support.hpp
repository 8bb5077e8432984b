#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ldesc/ldesc.hpp"

namespace ldesc::test {

inline DataStructureRef structure(std::string name, Addr base, std::uint64_t elem, Dim3 dims) {
    return {std::move(name), base, elem, dims};
}

inline LocalityDescriptor coaccessed(DataStructureRef ds, Dim3 dtile, Dim3 ctile, std::array<int, 3> map = {1, 2, 3},
                                     std::uint32_t priority = 0, AccessPattern pattern = AccessPattern::regular(128)) {
    LocalityDescriptor d;
    d.data = std::move(ds);
    d.ltype = LocalityType::INTER_THREAD;
    d.sharing = SharingType::COACCESSED;
    d.pattern = pattern;
    d.tiles = {dtile, ctile, map};
    d.priority = priority;
    return d;
}

inline LocalityDescriptor with_type(LocalityDescriptor d, LocalityType t, std::optional<SharingType> s = std::nullopt) {
    d.ltype = t;
    d.sharing = s;
    return d;
}

inline CtaGrid grid_of(Dim3 dims, std::uint32_t warps = 8) { return {dims, warps, 32}; }

/// The histo-style workload: 5 column D-tiles of 4 KiB, C-tiles are whole grid columns.
inline LocalityDescriptor histo_descriptor() {
    return coaccessed(structure("image", 0x10000000, 4, {1024, 5, 1}), {1024, 1, 1}, {1, 8, 1}, {1, 0, 0});
}

}  // namespace ldesc::test
