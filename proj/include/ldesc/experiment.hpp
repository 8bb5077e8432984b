#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ldesc/core.hpp"
#include "ldesc/descriptor.hpp"
#include "ldesc/numa.hpp"
#include "ldesc/policy.hpp"
#include "ldesc/sched.hpp"
#include "ldesc/simulator.hpp"
#include "ldesc/trace.hpp"
#include "ldesc/workload.hpp"

namespace ldesc {

enum class SchedulerKind { RR, BCS, LDESC };
enum class PlacementKind { LDESC, XOR, FIRST_TOUCH };

/// A named scheduler + mechanism combination used by `compare`.
struct PolicyVariant {
    std::string name;
    SchedulerKind scheduler = SchedulerKind::RR;
    Features features{false, false};
};

/// rr, bcs, ldesc-sched, ldesc-pref, ldesc-cache, ldesc.
inline std::optional<PolicyVariant> policy_variant(std::string_view name) {
    const std::string n(name);
    if (name == "rr") return PolicyVariant{n, SchedulerKind::RR, {false, false}};
    if (name == "bcs") return PolicyVariant{n, SchedulerKind::BCS, {false, false}};
    if (name == "ldesc-sched") return PolicyVariant{n, SchedulerKind::LDESC, {false, false}};
    if (name == "ldesc-pref") return PolicyVariant{n, SchedulerKind::RR, {false, true}};
    if (name == "ldesc-cache") return PolicyVariant{n, SchedulerKind::RR, {true, false}};
    if (name == "ldesc") return PolicyVariant{n, SchedulerKind::LDESC, {true, true}};
    return std::nullopt;
}

inline std::optional<PlacementKind> placement_kind(std::string_view name) {
    if (name == "ldesc") return PlacementKind::LDESC;
    if (name == "xor") return PlacementKind::XOR;
    if (name == "first_touch") return PlacementKind::FIRST_TOUCH;
    return std::nullopt;
}

struct ExperimentConfig {
    SystemConfig system;
    CtaGrid grid;
    std::vector<LocalityDescriptor> descriptors;  // priority-sorted after parsing
    std::string policy = "ldesc";
    PlacementKind placement = PlacementKind::LDESC;
    std::uint64_t seed = 1;
    PlacementOptions placement_options;
};

/// Config problems; `what()` starts with the JSON path of the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace config_detail {

using Json = nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

inline void allow_keys(const Json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (auto allowed : keys) known = known || k == allowed;
        if (!known) fail(path + "." + k, "unknown field");
    }
}

inline std::uint64_t get_uint(const Json& j, const std::string& path) {
    if (!j.is_number_unsigned()) fail(path, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::uint64_t get_positive(const Json& j, const std::string& path) {
    const auto v = get_uint(j, path);
    if (v == 0) fail(path, "must be >= 1");
    return v;
}

inline double get_double(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

inline bool get_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected true or false");
    return j.get<bool>();
}

inline std::string get_string(const Json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

inline Dim3 get_dim3(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) fail(path, "expected an array of 3 positive integers");
    return {get_positive(j[0], path + "[0]"), get_positive(j[1], path + "[1]"), get_positive(j[2], path + "[2]")};
}

inline Addr get_address(const Json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<Addr>();
    try {
        return parse_address(get_string(j, path));
    } catch (const std::invalid_argument&) {
        fail(path, "expected a hex string such as \"0x10000\"");
    } catch (const std::out_of_range&) {
        fail(path, "address out of range");
    }
}

inline void read_cache(const Json& j, const std::string& path, CacheConfig& c) {
    allow_keys(j, path, {"capacity", "line_size", "ways", "mshr_entries", "pin_reset_period"});
    if (j.contains("capacity")) c.capacity = get_positive(j["capacity"], path + ".capacity");
    if (j.contains("line_size")) c.line_size = static_cast<std::uint32_t>(get_positive(j["line_size"], path + ".line_size"));
    if (j.contains("ways")) c.ways = static_cast<std::uint32_t>(get_positive(j["ways"], path + ".ways"));
    if (j.contains("mshr_entries"))
        c.mshr_entries = static_cast<std::uint32_t>(get_positive(j["mshr_entries"], path + ".mshr_entries"));
    if (j.contains("pin_reset_period")) c.pin_reset_period = get_positive(j["pin_reset_period"], path + ".pin_reset_period");
}

inline void read_system(const Json& j, SystemConfig& s) {
    const std::string p = "system";
    allow_keys(j, p, {"sm_count", "zone_count", "l1", "l2", "latencies", "remote_link_capacity", "max_resident_ctas_per_sm"});
    if (j.contains("sm_count")) s.sm_count = static_cast<std::uint32_t>(get_positive(j["sm_count"], p + ".sm_count"));
    if (j.contains("zone_count")) s.zone_count = static_cast<std::uint32_t>(get_positive(j["zone_count"], p + ".zone_count"));
    if (j.contains("l1")) read_cache(j["l1"], p + ".l1", s.l1);
    if (j.contains("l2")) read_cache(j["l2"], p + ".l2", s.l2);
    if (j.contains("latencies")) {
        const auto& l = j["latencies"];
        const std::string lp = p + ".latencies";
        allow_keys(l, lp, {"l1_hit", "l2_hit", "local_mem", "remote_mem"});
        if (l.contains("l1_hit")) s.latency.l1_hit = get_positive(l["l1_hit"], lp + ".l1_hit");
        if (l.contains("l2_hit")) s.latency.l2_hit = get_positive(l["l2_hit"], lp + ".l2_hit");
        if (l.contains("local_mem")) s.latency.local_mem = get_positive(l["local_mem"], lp + ".local_mem");
        if (l.contains("remote_mem")) s.latency.remote_mem = get_positive(l["remote_mem"], lp + ".remote_mem");
    }
    if (j.contains("remote_link_capacity"))
        s.remote_link_capacity = get_double(j["remote_link_capacity"], p + ".remote_link_capacity");
    if (j.contains("max_resident_ctas_per_sm"))
        s.max_resident_ctas_per_sm =
            static_cast<std::uint32_t>(get_positive(j["max_resident_ctas_per_sm"], p + ".max_resident_ctas_per_sm"));
}

inline LocalityType get_locality(const Json& j, const std::string& path) {
    const auto s = get_string(j, path);
    if (s == "INTER_THREAD") return LocalityType::INTER_THREAD;
    if (s == "INTRA_THREAD") return LocalityType::INTRA_THREAD;
    if (s == "NO_REUSE") return LocalityType::NO_REUSE;
    fail(path, "expected INTER_THREAD, INTRA_THREAD or NO_REUSE");
}

inline SharingType get_sharing(const Json& j, const std::string& path) {
    const auto s = get_string(j, path);
    if (s == "COACCESSED") return SharingType::COACCESSED;
    if (s == "NEARBY") return SharingType::NEARBY;
    fail(path, "expected COACCESSED or NEARBY");
}

inline AccessPattern get_pattern(const Json& j, const std::string& path) {
    allow_keys(j, path, {"kind", "stride"});
    if (!j.contains("kind")) fail(path + ".kind", "missing");
    const auto kind = get_string(j["kind"], path + ".kind");
    if (kind == "IRREGULAR") {
        if (j.contains("stride")) fail(path + ".stride", "only valid for REGULAR patterns");
        return AccessPattern::irregular();
    }
    if (kind != "REGULAR") fail(path + ".kind", "expected REGULAR or IRREGULAR");
    if (!j.contains("stride")) fail(path + ".stride", "missing (required for REGULAR)");
    return AccessPattern::regular(get_positive(j["stride"], path + ".stride"));
}

}  // namespace config_detail

/// Builds an ExperimentConfig from parsed JSON. `preset_override` replaces the
/// config's "preset" field; explicit "system" fields are applied on top.
inline ExperimentConfig parse_experiment(const nlohmann::json& j, std::optional<std::string> preset_override = {}) {
    using namespace config_detail;
    allow_keys(j, "$", {"preset", "system", "grid", "data_structures", "descriptors", "policy", "placement", "seed",
                        "placement_options"});
    ExperimentConfig cfg;

    std::string preset_name = "desk";
    if (j.contains("preset")) preset_name = get_string(j["preset"], "preset");
    if (preset_override) preset_name = *preset_override;
    auto sys = preset(preset_name);
    if (!sys) fail(preset_override ? "--preset" : "preset", "unknown preset '" + preset_name + "'");
    cfg.system = *sys;
    if (j.contains("system")) read_system(j["system"], cfg.system);
    try {
        cfg.system.validate();
    } catch (const Error& e) {
        fail("system", e.what());
    }

    if (!j.contains("grid")) fail("grid", "missing");
    {
        const auto& g = j["grid"];
        allow_keys(g, "grid", {"dims", "warps_per_cta", "threads_per_warp"});
        if (!g.contains("dims")) fail("grid.dims", "missing");
        cfg.grid.dims = get_dim3(g["dims"], "grid.dims");
        if (g.contains("warps_per_cta"))
            cfg.grid.warps_per_cta = static_cast<std::uint32_t>(get_positive(g["warps_per_cta"], "grid.warps_per_cta"));
        if (g.contains("threads_per_warp"))
            cfg.grid.threads_per_warp =
                static_cast<std::uint32_t>(get_positive(g["threads_per_warp"], "grid.threads_per_warp"));
    }

    std::vector<DataStructureRef> structures;
    if (!j.contains("data_structures") || !j["data_structures"].is_array())
        fail("data_structures", "expected an array");
    for (std::size_t i = 0; i < j["data_structures"].size(); ++i) {
        const auto& s = j["data_structures"][i];
        const std::string p = "data_structures[" + std::to_string(i) + "]";
        allow_keys(s, p, {"name", "base", "elem_size", "dims"});
        for (auto key : {"name", "base", "elem_size", "dims"})
            if (!s.contains(key)) fail(p + "." + key, "missing");
        DataStructureRef ds;
        ds.name = get_string(s["name"], p + ".name");
        ds.base = get_address(s["base"], p + ".base");
        ds.elem_size = get_positive(s["elem_size"], p + ".elem_size");
        ds.dims = get_dim3(s["dims"], p + ".dims");
        for (const auto& other : structures)
            if (other.name == ds.name) fail(p + ".name", "duplicate data structure '" + ds.name + "'");
        structures.push_back(ds);
    }

    if (!j.contains("descriptors") || !j["descriptors"].is_array() || j["descriptors"].empty())
        fail("descriptors", "expected a non-empty array");
    std::vector<LocalityDescriptor> descs;
    for (std::size_t i = 0; i < j["descriptors"].size(); ++i) {
        const auto& d = j["descriptors"][i];
        const std::string p = "descriptors[" + std::to_string(i) + "]";
        allow_keys(d, p, {"data", "locality", "sharing", "pattern", "dtile", "ctile", "compute_data_map", "priority"});
        for (auto key : {"data", "locality", "dtile", "ctile"})
            if (!d.contains(key)) fail(p + "." + key, "missing");
        LocalityDescriptor ld;
        const auto name = get_string(d["data"], p + ".data");
        auto it = std::find_if(structures.begin(), structures.end(), [&](const auto& s) { return s.name == name; });
        if (it == structures.end()) fail(p + ".data", "unknown data structure '" + name + "'");
        ld.data = *it;
        ld.ltype = get_locality(d["locality"], p + ".locality");
        if (d.contains("sharing")) ld.sharing = get_sharing(d["sharing"], p + ".sharing");
        ld.pattern = d.contains("pattern") ? get_pattern(d["pattern"], p + ".pattern") : AccessPattern::irregular();
        ld.tiles.dtile = get_dim3(d["dtile"], p + ".dtile");
        ld.tiles.ctile = get_dim3(d["ctile"], p + ".ctile");
        if (d.contains("compute_data_map")) {
            const auto& m = d["compute_data_map"];
            if (!m.is_array() || m.size() != 3) fail(p + ".compute_data_map", "expected an array of 3 ranks");
            for (int a = 0; a < 3; ++a)
                ld.tiles.compute_data_map[a] =
                    static_cast<int>(get_uint(m[a], p + ".compute_data_map[" + std::to_string(a) + "]"));
        }
        if (d.contains("priority")) ld.priority = static_cast<std::uint32_t>(get_uint(d["priority"], p + ".priority"));
        try {
            validate_descriptor(ld, cfg.grid);
        } catch (const Error& e) {
            fail(p, e.what());
        }
        descs.push_back(ld);
    }
    try {
        cfg.descriptors = validate_descriptor_set(descs, cfg.grid);
    } catch (const Error& e) {
        fail("descriptors", e.what());
    }

    if (j.contains("policy")) {
        cfg.policy = get_string(j["policy"], "policy");
        if (!policy_variant(cfg.policy)) fail("policy", "unknown policy '" + cfg.policy + "'");
    }
    if (j.contains("placement")) {
        const auto name = get_string(j["placement"], "placement");
        auto k = placement_kind(name);
        if (!k) fail("placement", "expected ldesc, xor or first_touch");
        cfg.placement = *k;
    }
    if (j.contains("seed")) cfg.seed = get_uint(j["seed"], "seed");
    if (j.contains("placement_options")) {
        const auto& o = j["placement_options"];
        allow_keys(o, "placement_options", {"balance_guard", "balance_slack"});
        if (o.contains("balance_guard"))
            cfg.placement_options.balance_guard = get_bool(o["balance_guard"], "placement_options.balance_guard");
        if (o.contains("balance_slack")) {
            cfg.placement_options.balance_slack = get_double(o["balance_slack"], "placement_options.balance_slack");
            if (cfg.placement_options.balance_slack < 1.0) fail("placement_options.balance_slack", "must be >= 1");
        }
    }
    return cfg;
}

/// Reads and parses a config file. JSON syntax errors report line and column.
inline ExperimentConfig load_experiment(const std::string& path, std::optional<std::string> preset_override = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_experiment(j, std::move(preset_override));
}

struct ExperimentRun {
    Workload workload;
    Schedule schedule;
    MemoryPlacement placement;
    std::optional<NumaPlan> plan;
    SimResult result;
};

/// Schedule + placement for `policy` on `cfg`.
///
/// Single-zone systems ignore placement. On NUMA systems, "ldesc" placement
/// partitions CTAs with the coordinated search and, for the ldesc scheduler,
/// forms clusters inside each zone; rr/bcs keep their global order.
/// "first_touch" always uses contiguous zone partitions with round-robin
/// inside each zone.
inline ExperimentRun plan_experiment(const ExperimentConfig& cfg, const PolicyVariant& policy) {
    const auto& sys = cfg.system;
    const auto policies = select_policies(cfg.descriptors);
    const auto cluster_descs = policies.cluster_descriptors(cfg.descriptors);
    ExperimentRun run;

    auto global_schedule = [&] {
        switch (policy.scheduler) {
            case SchedulerKind::RR: return baseline_round_robin(cfg.grid, sys.sm_count);
            case SchedulerKind::BCS: return baseline_bcs(cfg.grid, sys.sm_count);
            case SchedulerKind::LDESC:
                return assign_clusters(form_clusters(cluster_descs, cfg.grid, sys.sm_count), cfg.grid, sys.sm_count);
        }
        return baseline_round_robin(cfg.grid, sys.sm_count);
    };

    if (sys.zone_count > 1 && cfg.placement == PlacementKind::FIRST_TOUCH) {
        run.placement.scheme = MappingScheme::FIRST_TOUCH;
        run.schedule = assign_clusters_within_zones({}, cfg.grid, contiguous_partition(cfg.grid, sys.zone_count),
                                                    sys.sm_count, sys.zone_count);
    } else if (sys.zone_count > 1 && cfg.placement == PlacementKind::LDESC) {
        run.plan = place_and_partition(cfg.descriptors, cfg.grid, sys.zone_count, cfg.placement_options);
        run.placement.scheme = MappingScheme::BITRANGE;
        run.placement.per_descriptor = run.plan->mappings;
        if (policy.scheduler == SchedulerKind::LDESC) {
            const std::uint32_t per_zone = sys.sm_count / sys.zone_count;
            run.schedule = assign_clusters_within_zones(form_clusters(cluster_descs, cfg.grid, per_zone), cfg.grid,
                                                        run.plan->cta_partition, sys.sm_count, sys.zone_count);
        } else {
            run.schedule = global_schedule();
        }
    } else {
        run.placement.scheme = MappingScheme::XOR_HASH;
        run.schedule = global_schedule();
    }
    return run;
}

/// Runs one experiment. With `trace_in`, the recorded per-warp streams replace
/// the synthetic workload; every event must sit on its scheduled SM.
inline ExperimentRun run_experiment(const ExperimentConfig& cfg, const PolicyVariant& policy,
                                    const std::vector<AccessEvent>* trace_in = nullptr, bool record_trace = false) {
    ExperimentRun run = plan_experiment(cfg, policy);
    if (trace_in) {
        run.workload = workload_from_trace(cfg.descriptors, cfg.grid, *trace_in);
        for (const auto& e : *trace_in)
            if (e.sm != run.schedule.assignment[e.cta])
                throw Error(ErrorCode::CONFIG_MISMATCH, "trace places CTA " + std::to_string(e.cta) + " on SM " +
                                                            std::to_string(e.sm) + " but the schedule uses SM " +
                                                            std::to_string(run.schedule.assignment[e.cta]));
    } else {
        run.workload = build_workload(cfg.descriptors, cfg.grid, cfg.seed, cfg.system.l1.line_size);
    }
    SimOptions opts{policy.features, record_trace};
    run.result = simulate(run.workload, cfg.system, run.schedule, run.placement, select_policies(cfg.descriptors), opts);
    return run;
}

inline nlohmann::ordered_json schedule_to_json(const Schedule& s) {
    nlohmann::ordered_json j;
    j["sm_count"] = s.sm_count;
    j["assignment"] = s.assignment;
    return j;
}

inline nlohmann::ordered_json plan_to_json(const NumaPlan& p) {
    nlohmann::ordered_json j;
    j["partition"] = p.cta_partition;
    nlohmann::ordered_json maps = nlohmann::ordered_json::object();
    for (const auto& [name, m] : p.per_structure) maps[name] = {{"scheme", to_string(m.scheme)}, {"low_bit", m.low_bit}};
    j["mappings"] = maps;
    j["utility"] = p.utility;
    j["balance_guard_relaxed"] = p.balance_guard_relaxed;
    return j;
}

}  // namespace ldesc
