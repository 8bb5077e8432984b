#pragma once

#include <span>
#include <vector>

#include "ldesc/cache.hpp"
#include "ldesc/descriptor.hpp"

namespace ldesc {

enum class PrefetchPolicy { NONE, NEXTLINE, STRIDE };

inline const char* to_string(PrefetchPolicy p) {
    switch (p) {
        case PrefetchPolicy::NONE: return "NONE";
        case PrefetchPolicy::NEXTLINE: return "NEXTLINE";
        case PrefetchPolicy::STRIDE: return "STRIDE";
    }
    return "?";
}

struct DescriptorPolicy {
    bool schedule_with_clusters = false;
    InsertionClass insertion = InsertionClass::NORMAL;
    PrefetchPolicy prefetch = PrefetchPolicy::NONE;

    friend bool operator==(const DescriptorPolicy&, const DescriptorPolicy&) = default;
};

/// One policy per descriptor, aligned with the priority-sorted input.
struct PolicySet {
    std::vector<DescriptorPolicy> per_descriptor;

    /// Priority-ordered descriptors that drive cluster formation.
    std::vector<LocalityDescriptor> cluster_descriptors(std::span<const LocalityDescriptor> descs) const {
        std::vector<LocalityDescriptor> out;
        for (std::size_t i = 0; i < descs.size(); ++i)
            if (per_descriptor.at(i).schedule_with_clusters) out.push_back(descs[i]);
        return out;
    }
};

/// Locality type -> mechanisms:
///   INTER_THREAD   cluster scheduling + soft pinning, plus
///                  COACCESSED/REGULAR -> stride prefetch, NEARBY -> next-line
///   INTRA_THREAD   hard pinning
///   NO_REUSE       bypass
/// Overlapping descriptors are resolved at access time by priority.
inline DescriptorPolicy select_policy(const LocalityDescriptor& d) {
    switch (d.ltype) {
        case LocalityType::INTER_THREAD: {
            DescriptorPolicy p{true, InsertionClass::SOFT_PIN, PrefetchPolicy::NONE};
            if (d.sharing == SharingType::NEARBY)
                p.prefetch = PrefetchPolicy::NEXTLINE;
            else if (d.pattern.is_regular())
                p.prefetch = PrefetchPolicy::STRIDE;
            return p;
        }
        case LocalityType::INTRA_THREAD: return {false, InsertionClass::HARD_PIN, PrefetchPolicy::NONE};
        case LocalityType::NO_REUSE: return {false, InsertionClass::BYPASS, PrefetchPolicy::NONE};
    }
    return {};
}

inline PolicySet select_policies(std::span<const LocalityDescriptor> descs) {
    PolicySet set;
    set.per_descriptor.reserve(descs.size());
    for (const auto& d : descs) set.per_descriptor.push_back(select_policy(d));
    return set;
}

}  // namespace ldesc
