#pragma once

/// @file experiment.hpp
/// Sweeps, metrics, result tables and bound certificates.

#include <spotsched/core.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace spotsched {

/// 100 (1 - cost / (K (L + d))); d only counts when billed.
[[nodiscard]] double cost_savings_pct(double alg_cost, double cost_ratio, double compute_length, double changeover,
                                      bool billed);

/// 100 (cost / opt - 1). Throws InvalidArgument unless opt > 0.
[[nodiscard]] double overhead_to_opt_pct(double alg_cost, double opt_cost);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least squares fit y = slope x + intercept.
[[nodiscard]] LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Trace sources
// ---------------------------------------------------------------------------

/// `file:<path>`, `bernoulli:<p>`, `markov:<p_up>:<p_down>`,
/// `segments:<up_min>:<up_max>:<down_min>:<down_max>`.
struct TraceSpec {
    std::string spec;

    [[nodiscard]] bool synthetic() const;
    /// File stem or the spec with ':' replaced by '-'.
    [[nodiscard]] std::string id() const;
    /// Loads or generates. Synthetic traces get `horizon` steps of `step_seconds`.
    [[nodiscard]] SpotTrace materialize(std::size_t horizon, std::uint64_t seed, double step_seconds = 60.0) const;
};

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::vector<std::string> traces;
    std::vector<std::string> policies{"greedy", "uniform-progress", "ross-greedy", "ross-uniform"};
    std::vector<double> k_grid{1.9, 2.8, 3.7, 4.6, 5.5, 6.4, 7.3, 8.2, 9.1, 10.0};
    /// L/D values; empty means five points from the trace's availability
    /// fraction up to 0.9.
    std::vector<double> ld_grid;
    double compute_length = 100.0;
    /// Steps. The default is 1% of the default L.
    double changeover = 1.0;
    bool bill_changeover = true;
    int runs = 100;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    /// Compare against the all-available-spot optimum instead of the
    /// delay-aware one.
    bool delay_free_opt = false;
    /// Synthetic trace length; 0 sizes it to the largest deadline.
    std::size_t horizon = 0;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws InvalidArgument on K <= 1, L/D outside (0, 1], empty lists and so on.
void validate(const ExperimentConfig& cfg);

/// Flat key=value file; list values are comma separated. `#` starts a comment.
[[nodiscard]] ExperimentConfig parse_config(std::istream& in);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(const ExperimentConfig& cfg, std::ostream& out);

/// Applies SPOTSCHED_SEED if set.
void apply_environment(ExperimentConfig& cfg);

/// L/D grid used for a trace with the given availability fraction.
[[nodiscard]] std::vector<double> default_ld_grid(double availability_fraction);

struct ResultRow {
    std::string trace_id;
    std::string policy;
    double cost_ratio = 0.0;
    double compute_length = 0.0;
    double deadline = 0.0;
    double mean_cost = 0.0;
    double cost_stddev = 0.0;
    double opt_cost = 0.0;
    double cost_savings_pct = 0.0;
    double overhead_to_opt_pct = 0.0;
    int runs = 0;
    std::uint64_t seed = 0;
    std::string status = "ok";
};

inline constexpr std::string_view kResultsVersionLine = "# spotsched-results v1";
inline constexpr std::string_view kResultsHeader =
    "trace_id,policy,K,L,D,mean_cost,cost_stddev,opt_cost,cost_savings_pct,overhead_to_opt_pct,runs,seed,status";

/// Runs every (trace, policy, K, L/D) cell. Cell failures land in `status`.
/// Trace i is generated with seed `seed + i`; synthetic trace ids carry it
/// as a `-s<seed>` suffix.
[[nodiscard]] std::vector<ResultRow> sweep(const ExperimentConfig& cfg);

/// Sorts by (trace, policy, K, L, D) and writes the versioned CSV.
void write_results_csv(std::vector<ResultRow> rows, std::ostream& out);
[[nodiscard]] std::vector<ResultRow> read_results_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------

struct VerifyConfig {
    std::vector<double> k_grid{2.0, 4.0, 9.0};
    double tolerance = 0.05;
    double compute_length = 200.0;
    int runs = 1000;
    std::uint64_t seed = 0;
};

struct Certificate {
    std::string name;
    bool passed = false;
    std::string json;  ///< one JSON object
};

/// Killer slope, parametric-adversary sqrt K check, minimax and fluid bound.
[[nodiscard]] std::vector<Certificate> verify_bounds(const VerifyConfig& cfg);

/// JSON document {"passed": ..., "certificates": [...]}.
void write_certificates(const std::vector<Certificate>& certs, std::ostream& out);

}  // namespace spotsched
