#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ldesc {

using Addr = std::uint64_t;
using Cycle = std::uint64_t;

/// A 3D triple used both for extents (element/CTA counts) and for coordinates.
struct Dim3 {
    std::uint64_t x = 0;
    std::uint64_t y = 0;
    std::uint64_t z = 0;

    constexpr std::uint64_t product() const { return x * y * z; }

    constexpr std::uint64_t operator[](int axis) const {
        return axis == 0 ? x : (axis == 1 ? y : z);
    }
    constexpr std::uint64_t& at(int axis) {
        return axis == 0 ? x : (axis == 1 ? y : z);
    }

    friend constexpr bool operator==(const Dim3&, const Dim3&) = default;
};

inline std::string to_string(const Dim3& d) {
    return "(" + std::to_string(d.x) + "," + std::to_string(d.y) + "," + std::to_string(d.z) + ")";
}

constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

constexpr Dim3 ceil_div(const Dim3& a, const Dim3& b) {
    return {ceil_div(a.x, b.x), ceil_div(a.y, b.y), ceil_div(a.z, b.z)};
}

/// X-fastest linearization of `c` inside `extent`.
constexpr std::uint64_t linearize(const Dim3& c, const Dim3& extent) {
    return c.x + extent.x * (c.y + extent.y * c.z);
}

constexpr Dim3 delinearize(std::uint64_t flat, const Dim3& extent) {
    return {flat % extent.x, (flat / extent.x) % extent.y, flat / (extent.x * extent.y)};
}

constexpr bool within(const Dim3& c, const Dim3& extent) {
    return c.x < extent.x && c.y < extent.y && c.z < extent.z;
}

constexpr bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

constexpr unsigned log2_exact(std::uint64_t v) {
    unsigned n = 0;
    while (v > 1) {
        v >>= 1;
        ++n;
    }
    return n;
}

enum class ErrorCode {
    INVALID_TILE_SEMANTICS,
    OVERLAP_CONFLICT,
    MISALIGNED_BASE,
    INVALID_DESCRIPTOR,
    OUT_OF_GRID,
    OUT_OF_RANGE,
    UNPLACED_PAGE,
    UNKNOWN_STREAM,
    CONFIG_MISMATCH,
    INVALID_CONFIG,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::INVALID_TILE_SEMANTICS: return "InvalidTileSemantics";
        case ErrorCode::OVERLAP_CONFLICT: return "OverlapConflict";
        case ErrorCode::MISALIGNED_BASE: return "MisalignedBase";
        case ErrorCode::INVALID_DESCRIPTOR: return "InvalidDescriptor";
        case ErrorCode::OUT_OF_GRID: return "OutOfGrid";
        case ErrorCode::OUT_OF_RANGE: return "OutOfRange";
        case ErrorCode::UNPLACED_PAGE: return "UnplacedPage";
        case ErrorCode::UNKNOWN_STREAM: return "UnknownStream";
        case ErrorCode::CONFIG_MISMATCH: return "ConfigMismatch";
        case ErrorCode::INVALID_CONFIG: return "InvalidConfig";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// splitmix64 finalizer; used to derive independent RNG seeds.
constexpr std::uint64_t mix64(std::uint64_t v) {
    v += 0x9e3779b97f4a7c15ULL;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
}

}  // namespace ldesc
