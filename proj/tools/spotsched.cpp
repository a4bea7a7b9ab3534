// spotsched: command-line front end for the simulator, sweeps and bound checks.

#include <spotsched/adversary.hpp>
#include <spotsched/engine.hpp>
#include <spotsched/experiment.hpp>
#include <spotsched/ingest.hpp>
#include <spotsched/oracle.hpp>
#include <spotsched/policies.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace spotsched;

namespace {

struct JobOptions {
    std::string trace;
    double cost_ratio = 4.0;
    double compute_length = 100.0;
    double deadline = 200.0;
    std::optional<double> delay;
    bool bill_delay = true;
    std::uint64_t seed = 0;
};

void add_job_options(CLI::App& cmd, JobOptions& o, bool with_k = true) {
    cmd.add_option("--trace", o.trace, "Canonical trace file or synthetic spec (bernoulli:0.7, markov:0.1:0.2, ...)")
        ->required();
    if (with_k) {
        cmd.add_option("--K", o.cost_ratio, "On-demand to spot price ratio")->capture_default_str();
    }
    cmd.add_option("--L", o.compute_length, "Compute length in steps")->capture_default_str();
    cmd.add_option("--D", o.deadline, "Deadline in steps")->capture_default_str();
    cmd.add_option("--delay", o.delay, "Changeover delay in steps (default 1% of L)");
    cmd.add_option("--bill-delay", o.bill_delay, "Bill changeover time")->capture_default_str();
    cmd.add_option("--seed", o.seed, "Base seed (SPOTSCHED_SEED overrides)")->envname("SPOTSCHED_SEED");
}

SpotTrace resolve_trace(const std::string& arg, double deadline, std::uint64_t seed) {
    if (fs::exists(arg)) {
        return load_trace(arg);
    }
    const auto horizon = static_cast<std::size_t>(std::ceil(deadline - kEps));
    return TraceSpec{arg}.materialize(std::max<std::size_t>(horizon, 1), seed);
}

CostModel cost_model(const JobOptions& o) {
    return CostModel(o.cost_ratio, o.delay.value_or(0.01 * o.compute_length), o.bill_delay);
}

void ensure_dir(const fs::path& dir) {
    if (!dir.empty()) {
        fs::create_directories(dir);
    }
}

std::ofstream open_out(const fs::path& path) {
    ensure_dir(path.parent_path());
    std::ofstream out(path);
    if (!out) {
        throw Error(fmt::format("cannot write '{}'", path.string()));
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& kind, const fs::path& in_path, const fs::path& out_path,
               const std::string& mapping_path, const SpotLakeSelector& selector, double step_seconds) {
    std::ifstream in(in_path);
    if (!in) {
        throw Error(fmt::format("cannot read '{}'", in_path.string()));
    }
    SpotTrace trace = [&] {
        if (kind == "spotlake") {
            const ColumnMapping columns = mapping_path.empty() ? ColumnMapping{} : load_column_mapping(mapping_path);
            return parse_spotlake(in, selector, columns);
        }
        if (kind == "skypilot-availability") {
            return parse_skypilot_availability(in);
        }
        if (kind == "skypilot-preemption") {
            std::vector<std::string> warnings;
            SpotTrace t = parse_skypilot_preemption(in, step_seconds, &warnings);
            for (const auto& w : warnings) {
                fmt::print(stderr, "warning: {}\n", w);
            }
            return t;
        }
        if (kind == "canonical") {
            return read_trace(in);
        }
        throw InvalidArgument(fmt::format("unknown trace kind '{}'", kind));
    }();
    ensure_dir(out_path.parent_path());
    save_trace(trace, out_path);
    const TraceStats st = trace_stats(trace);
    fmt::print("{} steps, availability {:.4f}, {} spot segments\n", st.horizon, st.fraction, st.segments);
    return 0;
}

int cmd_simulate(const JobOptions& o, const std::string& policy_id, int runs, const std::string& out_dir,
                 bool write_logs) {
    const Job job(o.compute_length, o.deadline);
    const CostModel cm = cost_model(o);
    const SpotTrace trace = resolve_trace(o.trace, o.deadline, o.seed);
    const auto policy = make_policy(policy_id, o.seed);
    const int n = policy->randomized() ? runs : 1;

    if (write_logs) {
        ensure_dir(out_dir);
        for (int i = 0; i < n; ++i) {
            const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
            const ExecutionLog log = run(*policy, trace, job, cm, SimConfig{}, seed);
            auto csv = open_out(fs::path(out_dir) / fmt::format("run-{}-{}.csv", policy_id, seed));
            write_log_csv(log, csv);
            auto json = open_out(fs::path(out_dir) / fmt::format("run-{}-{}.json", policy_id, seed));
            write_log_totals_json(log, json);
        }
    }
    SimConfig cfg;
    cfg.monte_carlo_runs = n;
    cfg.base_seed = o.seed;
    cfg.record_steps = false;
    const RunStats st = run_monte_carlo(*policy, trace, job, cm, cfg);
    const double opt = opt_cost_with_delays(trace, job, cm);
    fmt::print("policy {} runs {} mean_cost {} stddev {} opt_cost {} savings_pct {:.4f} overhead_pct {:.4f}"
               " violations {}\n",
               policy_id, n, st.mean_cost, st.stddev_cost, opt,
               cost_savings_pct(st.mean_cost, o.cost_ratio, o.compute_length, cm.changeover_delay(),
                                cm.bill_during_changeover()),
               overhead_to_opt_pct(st.mean_cost, opt), st.violations);
    return st.violations == 0 ? 0 : 1;
}

int cmd_opt(const JobOptions& o) {
    const Job job(o.compute_length, o.deadline);
    const CostModel cm = cost_model(o);
    const SpotTrace trace = resolve_trace(o.trace, o.deadline, o.seed);
    fmt::print("available_spot {}\nopt_delay_free {}\nopt_with_delays {}\n", available_spot_time(trace, job),
               opt_cost_delay_free(trace, job, o.cost_ratio), opt_cost_with_delays(trace, job, cm));
    return 0;
}

int cmd_stats(const std::string& trace_arg, double horizon, std::uint64_t seed) {
    const SpotTrace trace = resolve_trace(trace_arg, horizon, seed);
    const TraceStats st = trace_stats(trace);
    fmt::print("horizon {}\nfraction {}\nsegments {}\nmean_segment {}\nmax_segment {}\ngaps {}\nmean_gap {}\n",
               st.horizon, st.fraction, st.segments, st.mean_segment, st.max_segment, st.gaps, st.mean_gap);
    return 0;
}

int cmd_sweep(ExperimentConfig cfg) {
    apply_environment(cfg);
    const auto rows = sweep(cfg);
    const fs::path path = fs::path(cfg.out_dir) / "results.csv";
    auto out = open_out(path);
    write_results_csv(rows, out);
    const auto failed = std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.status != "ok"; });
    fmt::print("{} rows ({} failed cells) -> {}\n", rows.size(), failed, path.string());
    return 0;
}

int cmd_verify(const VerifyConfig& cfg, const std::string& out_dir) {
    const auto certs = verify_bounds(cfg);
    const fs::path path = fs::path(out_dir) / "certificates.json";
    auto out = open_out(path);
    write_certificates(certs, out);
    bool all = true;
    for (const auto& c : certs) {
        fmt::print("{} {}\n", c.passed ? "PASS" : "FAIL", c.name);
        all = all && c.passed;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deadline-constrained spot/on-demand scheduling simulator"};
    app.require_subcommand(1);

    // ingest
    std::string ingest_kind;
    std::string ingest_in;
    std::string ingest_out;
    std::string mapping;
    SpotLakeSelector selector;
    double preempt_step = 600.0;
    auto* ingest = app.add_subcommand("ingest", "Convert a dataset file to the canonical trace format");
    ingest->add_option("kind", ingest_kind, "spotlake | skypilot-availability | skypilot-preemption | canonical")
        ->required();
    ingest->add_option("in", ingest_in)->required()->check(CLI::ExistingFile);
    ingest->add_option("out", ingest_out)->required();
    ingest->add_option("--mapping", mapping, "Column mapping file (spotlake)")->check(CLI::ExistingFile);
    ingest->add_option("--provider", selector.provider);
    ingest->add_option("--region", selector.region);
    ingest->add_option("--zone", selector.zone);
    ingest->add_option("--instance", selector.instance);
    ingest->add_option("--step-seconds", preempt_step, "Grid for preemption logs")->capture_default_str();

    // simulate
    JobOptions sim;
    std::string policy_id = "ross-greedy";
    int runs = 100;
    std::string sim_out = "logs";
    bool write_logs = false;
    auto* simulate = app.add_subcommand("simulate", "Run one policy on one trace");
    add_job_options(*simulate, sim);
    simulate->add_option("--policy", policy_id)->capture_default_str();
    simulate->add_option("--runs", runs, "Monte Carlo runs for randomized policies")->capture_default_str();
    simulate->add_option("--out", sim_out, "Directory for per-run logs")->capture_default_str();
    simulate->add_flag("--logs", write_logs, "Write per-run step logs");

    // opt
    JobOptions opt;
    auto* opt_cmd = app.add_subcommand("opt", "Hindsight optimal cost of a trace");
    add_job_options(*opt_cmd, opt);

    // stats
    std::string stats_trace;
    double stats_horizon = 1000.0;
    std::uint64_t stats_seed = 0;
    auto* stats = app.add_subcommand("stats", "Availability statistics of a trace");
    stats->add_option("--trace", stats_trace)->required();
    stats->add_option("--D", stats_horizon, "Horizon for synthetic specs")->capture_default_str();
    stats->add_option("--seed", stats_seed)->envname("SPOTSCHED_SEED");

    // sweep
    std::string config_path;
    ExperimentConfig sweep_cfg;
    std::vector<std::string> sweep_traces;
    std::vector<std::string> sweep_policies;
    std::vector<double> sweep_k;
    std::optional<double> sweep_l;
    std::optional<double> sweep_delay;
    std::optional<bool> sweep_bill;
    std::optional<int> sweep_runs;
    std::optional<std::uint64_t> sweep_seed;
    std::optional<std::string> sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run the (trace, policy, K, L/D) grid and write results.csv");
    sweep_cmd->add_option("--config", config_path, "Key=value experiment file")->check(CLI::ExistingFile);
    sweep_cmd->add_option("--trace", sweep_traces, "Trace file or synthetic spec; repeatable");
    sweep_cmd->add_option("--policy", sweep_policies, "Policy id; repeatable");
    sweep_cmd->add_option("--K", sweep_k, "K grid");
    sweep_cmd->add_option("--L", sweep_l);
    sweep_cmd->add_option("--delay", sweep_delay, "Changeover delay in steps");
    sweep_cmd->add_option("--bill-delay", sweep_bill);
    sweep_cmd->add_option("--runs", sweep_runs);
    sweep_cmd->add_option("--seed", sweep_seed);
    sweep_cmd->add_option("--out", sweep_out, "Output directory");

    // verify-bounds
    VerifyConfig verify_cfg;
    std::string verify_out = ".";
    auto* verify = app.add_subcommand("verify-bounds", "Check the competitive-ratio bounds and write certificates.json");
    verify->add_option("--K", verify_cfg.k_grid)->capture_default_str();
    verify->add_option("--tol", verify_cfg.tolerance, "Relative tolerance")->capture_default_str();
    verify->add_option("--L", verify_cfg.compute_length)->capture_default_str();
    verify->add_option("--runs", verify_cfg.runs)->capture_default_str();
    verify->add_option("--seed", verify_cfg.seed)->envname("SPOTSCHED_SEED");
    verify->add_option("--out", verify_out)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            return cmd_ingest(ingest_kind, ingest_in, ingest_out, mapping, selector, preempt_step);
        }
        if (*simulate) {
            return cmd_simulate(sim, policy_id, runs, sim_out, write_logs);
        }
        if (*opt_cmd) {
            return cmd_opt(opt);
        }
        if (*stats) {
            return cmd_stats(stats_trace, stats_horizon, stats_seed);
        }
        if (*sweep_cmd) {
            if (!config_path.empty()) {
                sweep_cfg = load_config(config_path);
            }
            if (!sweep_traces.empty()) {
                sweep_cfg.traces.clear();
                for (const auto& t : sweep_traces) {
                    sweep_cfg.traces.push_back(fs::exists(t) ? "file:" + t : t);
                }
            }
            if (!sweep_policies.empty()) {
                sweep_cfg.policies = sweep_policies;
            }
            if (!sweep_k.empty()) {
                sweep_cfg.k_grid = sweep_k;
            }
            if (sweep_l) {
                sweep_cfg.compute_length = *sweep_l;
            }
            if (sweep_delay) {
                sweep_cfg.changeover = *sweep_delay;
            }
            if (sweep_bill) {
                sweep_cfg.bill_changeover = *sweep_bill;
            }
            if (sweep_runs) {
                sweep_cfg.runs = *sweep_runs;
            }
            if (sweep_seed) {
                sweep_cfg.seed = *sweep_seed;
            }
            if (sweep_out) {
                sweep_cfg.out_dir = *sweep_out;
            }
            return cmd_sweep(std::move(sweep_cfg));
        }
        if (*verify) {
            return cmd_verify(verify_cfg, verify_out);
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
    return 0;
}
