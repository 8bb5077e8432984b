#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldesc/core.hpp"
#include "ldesc/simulator.hpp"
#include "ldesc/workload.hpp"

namespace ldesc {

inline std::string to_hex(Addr a) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    do {
        s.insert(s.begin(), digits[a & 0xf]);
        a >>= 4;
    } while (a != 0);
    return "0x" + s;
}

/// Parses "0x..." hex or plain decimal. Throws std::invalid_argument.
inline Addr parse_address(const std::string& s) {
    const bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
    const std::string digits = hex ? s.substr(2) : s;
    std::size_t used = 0;
    if (digits.empty() || digits.front() == '-' || digits.front() == '+')
        throw std::invalid_argument("bad address '" + s + "'");
    const Addr v = std::stoull(digits, &used, hex ? 16 : 10);
    if (used != digits.size()) throw std::invalid_argument("bad address '" + s + "'");
    return v;
}

/// One JSON object per line: {"sm","cta","warp","addr" (hex string),"cycle"}.
inline void write_trace_jsonl(std::ostream& os, std::span<const AccessEvent> events) {
    for (const auto& e : events) {
        nlohmann::ordered_json j;
        j["sm"] = e.sm;
        j["cta"] = e.cta;
        j["warp"] = e.warp;
        j["addr"] = to_hex(e.addr);
        j["cycle"] = e.cycle;
        os << j.dump() << '\n';
    }
}

inline std::vector<AccessEvent> read_trace_jsonl(std::istream& is) {
    std::vector<AccessEvent> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            AccessEvent e;
            e.sm = j.at("sm").get<std::uint32_t>();
            e.cta = j.at("cta").get<CtaId>();
            e.warp = j.at("warp").get<std::uint32_t>();
            e.addr = parse_address(j.at("addr").get<std::string>());
            e.cycle = j.at("cycle").get<Cycle>();
            out.push_back(e);
        } catch (const std::exception& ex) {
            throw Error(ErrorCode::INVALID_CONFIG, "trace line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

/// Rebuilds per-warp streams from a recorded trace (events in issue order).
inline Workload workload_from_trace(std::span<const LocalityDescriptor> descs, const CtaGrid& grid,
                                    std::span<const AccessEvent> events) {
    Workload w{grid, {descs.begin(), descs.end()}, {}};
    w.streams.assign(grid.cta_count(), CtaStreams(grid.warps_per_cta));
    for (const auto& e : events) {
        if (e.cta >= grid.cta_count() || e.warp >= grid.warps_per_cta)
            throw Error(ErrorCode::CONFIG_MISMATCH, "trace event for CTA " + std::to_string(e.cta) + " warp " +
                                                         std::to_string(e.warp) + " is outside the grid");
        if (!owning_descriptor(descs, e.addr))
            throw Error(ErrorCode::CONFIG_MISMATCH, "trace address " + to_hex(e.addr) + " is not in any data structure");
        w.streams[e.cta][e.warp].push_back(e.addr);
    }
    return w;
}

}  // namespace ldesc
