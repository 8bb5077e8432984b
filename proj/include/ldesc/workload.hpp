#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ldesc/core.hpp"
#include "ldesc/cta_grid.hpp"
#include "ldesc/descriptor.hpp"
#include "ldesc/grid.hpp"

namespace ldesc {

using WarpStream = std::vector<Addr>;
using CtaStreams = std::vector<WarpStream>;  // one stream per warp

namespace detail {

inline std::vector<Addr> lines_of_runs(std::span<const ByteRun> runs, std::uint64_t line_size) {
    std::vector<Addr> lines;
    for (const auto& r : runs) {
        for (Addr a = r.start & ~(line_size - 1); a < r.end(); a += line_size)
            if (lines.empty() || lines.back() != a) lines.push_back(a);
    }
    return lines;
}

/// Byte offsets 0, stride, 2*stride, ... of the concatenated runs.
inline std::vector<Addr> strided_walk(std::span<const ByteRun> runs, std::uint64_t stride) {
    std::vector<Addr> out;
    std::uint64_t base_off = 0;
    std::uint64_t next = 0;
    for (const auto& r : runs) {
        while (next < base_off + r.len) {
            out.push_back(r.start + (next - base_off));
            next += stride;
        }
        base_off += r.len;
    }
    return out;
}

template <typename T>
std::vector<std::vector<T>> split_even(std::span<const T> v, std::size_t parts) {
    std::vector<std::vector<T>> out(parts);
    for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t lo = v.size() * p / parts;
        const std::size_t hi = v.size() * (p + 1) / parts;
        out[p].assign(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    return out;
}

/// Fisher-Yates with raw mt19937_64 draws, so sequences match across standard libraries.
inline void shuffle(std::vector<Addr>& v, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace detail

/// Per-warp address streams of one CTA for one descriptor.
///
/// COACCESSED: every CTA of the C-tile walks the whole D-tile (stride order
/// when REGULAR); its warps split the walk. NEARBY: each CTA gets its share of
/// the D-tile's lines widened by one line on each side. INTRA_THREAD: each
/// warp walks a private slice twice. NO_REUSE: each warp streams a private
/// slice once. IRREGULAR patterns shuffle the CTA's lines with a seed derived
/// from (seed, cta, structure).
inline CtaStreams generate_warp_accesses(const LocalityDescriptor& d, const CtaGrid& grid, CtaId cta,
                                         std::uint64_t seed, std::uint64_t line_size) {
    const TileIndex ct = ctile_of_cta(cta, d, grid);
    const TileIndex dt = dtile_of_ctile(ct, d, grid);
    const auto runs = dtile_byte_runs(dt, d);
    const auto lines = detail::lines_of_runs(runs, line_size);
    const auto members = ctas_of_ctile(ct.coords, d, grid);
    const std::size_t n = members.size();
    const std::size_t j = static_cast<std::size_t>(std::find(members.begin(), members.end(), cta) - members.begin());
    const std::size_t warps = grid.warps_per_cta;
    const std::uint64_t rng_seed = mix64(seed) ^ mix64(cta * 0x100000001b3ULL + d.data.base);

    auto share = [&](std::size_t widen) {
        const std::size_t lo = lines.size() * j / n;
        const std::size_t hi = lines.size() * (j + 1) / n;
        return std::vector<Addr>(lines.begin() + static_cast<std::ptrdiff_t>(lo >= widen ? lo - widen : 0),
                                 lines.begin() + static_cast<std::ptrdiff_t>(std::min(lines.size(), hi + widen)));
    };

    std::vector<Addr> walk;
    switch (d.ltype) {
        case LocalityType::INTER_THREAD:
            if (d.sharing == SharingType::NEARBY)
                walk = share(1);
            else if (d.pattern.is_regular())
                walk = detail::strided_walk(runs, d.pattern.stride_bytes);
            else
                walk = lines;
            break;
        case LocalityType::INTRA_THREAD:
        case LocalityType::NO_REUSE: walk = share(0); break;
    }
    if (!d.pattern.is_regular()) detail::shuffle(walk, rng_seed);

    CtaStreams out = detail::split_even<Addr>(walk, warps);
    if (d.ltype == LocalityType::INTRA_THREAD) {
        for (auto& w : out) {
            const std::size_t len = w.size();
            w.reserve(2 * len);
            for (std::size_t i = 0; i < len; ++i) w.push_back(w[i]);
        }
    }
    return out;
}

/// Concatenation of the per-warp streams, warp 0 first.
inline std::vector<Addr> generate_accesses(const LocalityDescriptor& d, const CtaGrid& grid, CtaId cta,
                                           std::uint64_t seed, std::uint64_t line_size) {
    std::vector<Addr> out;
    for (const auto& w : generate_warp_accesses(d, grid, cta, seed, line_size)) out.insert(out.end(), w.begin(), w.end());
    return out;
}

struct Workload {
    CtaGrid grid;
    std::vector<LocalityDescriptor> descriptors;  // priority-sorted
    std::vector<CtaStreams> streams;              // [cta][warp]

    std::uint64_t demand_accesses() const {
        std::uint64_t n = 0;
        for (const auto& cta : streams)
            for (const auto& w : cta) n += w.size();
        return n;
    }
};

/// Synthetic workload for priority-sorted descriptors. A descriptor whose
/// range overlaps a higher-priority one emits no accesses of its own; warps
/// interleave the streams of the remaining descriptors element by element.
inline Workload build_workload(std::span<const LocalityDescriptor> descs, const CtaGrid& grid, std::uint64_t seed,
                               std::uint64_t line_size) {
    Workload w{grid, {descs.begin(), descs.end()}, {}};
    std::vector<std::size_t> generators;
    for (std::size_t i = 0; i < descs.size(); ++i) {
        bool shadowed = false;
        for (std::size_t k = 0; k < i; ++k) shadowed = shadowed || descs[k].data.overlaps(descs[i].data);
        if (!shadowed) generators.push_back(i);
    }
    w.streams.resize(grid.cta_count());
    for (CtaId c = 0; c < grid.cta_count(); ++c) {
        std::vector<CtaStreams> per_desc;
        for (std::size_t i : generators) per_desc.push_back(generate_warp_accesses(descs[i], grid, c, seed, line_size));
        CtaStreams merged(grid.warps_per_cta);
        for (std::size_t wp = 0; wp < merged.size(); ++wp) {
            std::size_t longest = 0;
            for (const auto& s : per_desc) longest = std::max(longest, s[wp].size());
            for (std::size_t k = 0; k < longest; ++k)
                for (const auto& s : per_desc)
                    if (k < s[wp].size()) merged[wp].push_back(s[wp][k]);
        }
        w.streams[c] = std::move(merged);
    }
    return w;
}

}  // namespace ldesc
