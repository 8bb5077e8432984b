#pragma once

#include <cstdint>

#include "ldesc/core.hpp"

namespace ldesc {

using CtaId = std::uint64_t;

/// 3D grid of cooperative thread arrays. CTA ids are X->Y->Z flat indices.
struct CtaGrid {
    Dim3 dims{1, 1, 1};
    std::uint32_t warps_per_cta = 8;
    std::uint32_t threads_per_warp = 32;

    std::uint64_t cta_count() const { return dims.product(); }
    CtaId flat(const Dim3& cta) const { return linearize(cta, dims); }
    Dim3 coords(CtaId id) const { return delinearize(id, dims); }

    void validate() const {
        if (dims.x == 0 || dims.y == 0 || dims.z == 0)
            throw Error(ErrorCode::INVALID_CONFIG, "grid dims must be >= 1, got " + to_string(dims));
        if (warps_per_cta == 0 || threads_per_warp == 0)
            throw Error(ErrorCode::INVALID_CONFIG, "warps_per_cta and threads_per_warp must be >= 1");
    }
};

}  // namespace ldesc
