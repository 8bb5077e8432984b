// ldesc-sim: run, compare and sweep locality-descriptor experiments.

#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldesc/ldesc.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSim = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const char* kCsvMetrics = "l1_hit_rate,inflight_hit_rate,avg_working_set,access_efficiency,total_cycles,prefetch_accuracy";

std::string csv_metrics(const ldesc::SimMetrics& m) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::fixed << std::setprecision(6) << m.l1_hit_rate << ',' << m.inflight_hit_rate << ','
       << m.avg_working_set << ',' << m.access_efficiency << ',' << m.total_cycles << ',' << m.prefetch_accuracy;
    return os.str();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::uint64_t parse_uint(const std::string& s, const std::string& what) {
    try {
        if (s.empty() || s.front() == '-' || s.front() == '+') throw std::invalid_argument(s);
        std::size_t used = 0;
        const auto v = std::stoull(s, &used, 10);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw UsageError(what + ": '" + s + "' is not a non-negative integer");
    }
}

/// "1,2,4" or "1..5" (inclusive), or a mix of both.
std::vector<std::uint64_t> parse_values(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(s)) {
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_uint(item, "--values"));
            continue;
        }
        const auto lo = parse_uint(item.substr(0, dots), "--values");
        const auto hi = parse_uint(item.substr(dots + 2), "--values");
        if (hi < lo) throw UsageError("--values: empty range '" + item + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
    if (out.empty()) throw UsageError("--values: no values given");
    return out;
}

ldesc::PolicyVariant require_policy(const std::string& name) {
    auto p = ldesc::policy_variant(name);
    if (!p) throw UsageError("unknown policy '" + name + "' (expected rr, bcs, ldesc, ldesc-sched, ldesc-pref, ldesc-cache)");
    return *p;
}

void apply_axis(ldesc::ExperimentConfig& cfg, const std::string& axis, std::uint64_t v) {
    const auto u32 = static_cast<std::uint32_t>(v);
    if (axis == "sm_count")
        cfg.system.sm_count = u32;
    else if (axis == "zone_count")
        cfg.system.zone_count = u32;
    else if (axis == "l1_capacity")
        cfg.system.l1.capacity = v;
    else if (axis == "pin_reset_period")
        cfg.system.l1.pin_reset_period = v;
    else if (axis == "seed")
        cfg.seed = v;
    else
        throw UsageError("unknown sweep axis '" + axis + "' (expected sm_count, zone_count, l1_capacity, pin_reset_period, seed)");
    try {
        cfg.system.validate();
    } catch (const ldesc::Error& e) {
        throw UsageError(axis + "=" + std::to_string(v) + ": " + e.what());
    }
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

template <typename T, typename F>
std::vector<T> fan_out(std::size_t n, F job) {
    std::vector<std::future<T>> futures;
    futures.reserve(n);
    for (std::size_t i = 0; i < n; ++i) futures.push_back(std::async(std::launch::async, job, i));
    std::vector<T> out;
    out.reserve(n);
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Locality-descriptor GPU memory-hierarchy simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path, preset, policies_arg, axis, values_arg;
    std::string trace_out, trace_in, schedule_out, plan_out;

    auto* run = app.add_subcommand("run", "Simulate one configuration and write metrics JSON");
    auto* compare = app.add_subcommand("compare", "Compare policies on one configuration (CSV)");
    auto* sweep = app.add_subcommand("sweep", "Sweep one system parameter (CSV)");
    for (auto* sub : {run, compare, sweep}) {
        sub->add_option("config", config_path, "Experiment JSON config")->required();
        sub->add_option("--out", out_path, "Output file (default stdout)");
        sub->add_option("--preset", preset, "System preset: desk, desk-numa, paper-single, paper-numa");
    }
    run->add_option("--trace-out", trace_out, "Write the demand access trace as JSONL");
    run->add_option("--trace-in", trace_in, "Replay per-warp streams from a JSONL trace");
    run->add_option("--schedule-out", schedule_out, "Write the CTA-to-SM schedule as JSON");
    run->add_option("--plan-out", plan_out, "Write the NUMA placement plan as JSON");
    compare->add_option("--policies", policies_arg, "Comma-separated policies")->required();
    sweep->add_option("--axis", axis, "sm_count, zone_count, l1_capacity, pin_reset_period or seed")->required();
    sweep->add_option("--values", values_arg, "Comma-separated values or lo..hi")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    std::optional<std::string> preset_override;
    if (!preset.empty()) preset_override = preset;

    ldesc::ExperimentConfig cfg;
    std::vector<ldesc::AccessEvent> replay;
    std::vector<ldesc::PolicyVariant> policies;
    std::vector<std::uint64_t> values;
    try {
        cfg = ldesc::load_experiment(config_path, preset_override);
        if (compare->parsed()) {
            for (const auto& name : split_list(policies_arg)) policies.push_back(require_policy(name));
            if (policies.size() < 2) throw UsageError("--policies needs at least two policies");
        }
        if (sweep->parsed()) {
            values = parse_values(values_arg);
            for (auto v : values) {
                auto probe = cfg;
                apply_axis(probe, axis, v);
            }
        }
        if (!trace_in.empty()) {
            std::ifstream in(trace_in);
            if (!in) throw UsageError(trace_in + ": cannot open file");
            replay = ldesc::read_trace_jsonl(in);
        }
    } catch (const std::exception& e) {
        std::cerr << "ldesc-sim: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (run->parsed()) {
            const auto policy = require_policy(cfg.policy);
            auto r = ldesc::run_experiment(cfg, policy, trace_in.empty() ? nullptr : &replay, !trace_out.empty());
            write_output(out_path, ldesc::metrics_json_string(r.result.metrics));
            if (!trace_out.empty()) {
                std::ofstream t(trace_out, std::ios::binary);
                if (!t) throw std::runtime_error("cannot write " + trace_out);
                ldesc::write_trace_jsonl(t, r.result.trace);
            }
            if (!schedule_out.empty()) write_output(schedule_out, ldesc::schedule_to_json(r.schedule).dump(2) + "\n");
            if (!plan_out.empty()) {
                const auto j = r.plan ? ldesc::plan_to_json(*r.plan) : nlohmann::ordered_json(nullptr);
                write_output(plan_out, j.dump(2) + "\n");
            }
        } else if (compare->parsed()) {
            const auto rows = fan_out<std::string>(policies.size(), [&](std::size_t i) {
                const auto r = ldesc::run_experiment(cfg, policies[i]);
                return policies[i].name + "," + csv_metrics(r.result.metrics);
            });
            std::string csv = std::string("policy,") + kCsvMetrics + "\n";
            for (const auto& row : rows) csv += row + "\n";
            write_output(out_path, csv);
        } else {
            const auto policy = require_policy(cfg.policy);
            const auto rows = fan_out<std::string>(values.size(), [&](std::size_t i) {
                auto c = cfg;
                apply_axis(c, axis, values[i]);
                const auto r = ldesc::run_experiment(c, policy);
                return std::to_string(values[i]) + "," + csv_metrics(r.result.metrics) + "," +
                       std::to_string(r.result.metrics.demand_accesses);
            });
            std::string csv = axis + "," + kCsvMetrics + ",demand_accesses\n";
            for (const auto& row : rows) csv += row + "\n";
            write_output(out_path, csv);
        }
    } catch (const std::exception& e) {
        std::cerr << "ldesc-sim: " << e.what() << '\n';
        return kExitSim;
    }
    return kExitOk;
}
