#pragma once

/// @file oracle.hpp
/// Hindsight-optimal costs and the numeric side of the competitive analysis.

#include <spotsched/core.hpp>

#include <string>
#include <vector>

namespace spotsched {

// ---------------------------------------------------------------------------
// Hindsight optimum
// ---------------------------------------------------------------------------

/// Available spot time in [0, D), counting a fractional last step pro rata.
[[nodiscard]] double available_spot_time(const SpotTrace& trace, const Job& job);

/// min(L, A) + K max(0, L - A) with A the available spot time before D.
[[nodiscard]] double opt_cost_delay_free(const SpotTrace& trace, const Job& job, double cost_ratio);

/// Exact optimum under the engine's step rules including changeover.
///
/// A forward dynamic program over (mode, steps into the current rental,
/// busy steps, completed changeovers). Rentals abandoned before their
/// changeover finishes are never better than idling and are skipped.
/// Throws InvalidArgument if no schedule meets the deadline.
[[nodiscard]] double opt_cost_with_delays(const SpotTrace& trace, const Job& job, const CostModel& cm);

// ---------------------------------------------------------------------------
// Two-phase game against the parametric adversary
// ---------------------------------------------------------------------------

/// Adversary on-demand volume that exactly starves the algorithm: delta (1 - alpha / z).
[[nodiscard]] double gamma_star(double z, double delta, double alpha);

/// Expected algorithm cost for a window of `delta` inside a phase of length
/// `z` when the adversary supplies `alpha` spot and rents `gamma` on-demand.
[[nodiscard]] double expected_alg_cost(double z, double delta, double alpha, double gamma, double cost_ratio,
                                       double compute_length);

/// Adversary cost L + (K - 1) gamma.
[[nodiscard]] double adversary_cost(double gamma, double cost_ratio, double compute_length);

/// Ratio of expected_alg_cost to adversary_cost at one (alpha, gamma).
[[nodiscard]] double game_ratio(double cost_ratio, double alpha, double gamma, double z, double delta,
                                double compute_length);

/// Max of the ratio over the adversary's two strategies: pure spot
/// (gamma = 0) and catch-up (gamma = gamma_star).
[[nodiscard]] double cr_function(double cost_ratio, double alpha, double z, double delta, double compute_length);

/// Window length that makes the ratio independent of alpha for a given z.
[[nodiscard]] double delta_star(double z, double cost_ratio, double compute_length);

/// rho^2 + rho ((K+1)/((K-1) z/L) - 1) - 1/((K-1) z/L) evaluated at rho = delta / z.
[[nodiscard]] double delta_star_residual(double z, double delta, double cost_ratio, double compute_length);

struct MinimaxPoint {
    double z = 0.0;
    double delta = 0.0;
    double rho = 0.0;
    double value = 0.0;
};

struct MinimaxOptions {
    int alpha_points = 21;
    /// Replace gamma in {0, gamma_star} by a uniform grid over [0, L].
    bool full_gamma_grid = false;
    int gamma_points = 41;
    /// Successively halve the grid around the incumbent down to this
    /// fraction of L. Zero disables refinement.
    double refine_to = 1e-4;
    double tolerance = 0.02;
};

struct MinimaxResult {
    double cost_ratio = 0.0;
    double compute_length = 0.0;
    double deadline = 0.0;
    double resolution = 0.0;
    MinimaxOptions options;
    MinimaxPoint coarse;   ///< argmin on the initial grid
    MinimaxPoint point;    ///< argmin after refinement
    double worst_alpha = 0.0;
    double worst_gamma = 0.0;
    double theory_value = 0.0;
    double theory_z = 0.0;
    double theory_delta = 0.0;
    std::size_t evaluations = 0;
    bool within_tolerance = false;
};

/// Worst case over the adversary's grid for a fixed (z, delta).
[[nodiscard]] double adversary_max(double cost_ratio, double z, double delta, double compute_length,
                                   const MinimaxOptions& options, double* worst_alpha = nullptr,
                                   double* worst_gamma = nullptr);

/// min over z in [delta, min(L, D - L + delta)] and delta in [0, L] of adversary_max.
/// `resolution` is the grid spacing in steps. Throws InvalidArgument on
/// non-positive resolution.
[[nodiscard]] MinimaxResult minimax_search(double cost_ratio, double compute_length, double deadline,
                                           double resolution, const MinimaxOptions& options = {});

/// JSON certificate: inputs, grid, argmin and worst response, value, theory, verdict.
[[nodiscard]] std::string minimax_certificate_json(const MinimaxResult& result);

// ---------------------------------------------------------------------------
// Fluid lower bound
// ---------------------------------------------------------------------------

/// p[i] is the probability of on-demand over [i dt, (i + 1) dt). p must be
/// 1 from `last_random` on.
struct OnDemandProfile {
    std::vector<double> p;
    double dt = 1.0;
    double last_random = 0.0;  ///< T
};

/// max(1 + (K - 1) s, K / (1 + (K - 1) s)).
[[nodiscard]] double fluid_bound_scalar(double s, double cost_ratio);

/// 1 + (K - 1)(2 - D / L).
[[nodiscard]] double tight_deadline_bound(double cost_ratio, double compute_length, double deadline);

/// Integral of p over [0, upto).
[[nodiscard]] double profile_mass(const OnDemandProfile& profile, double upto);

/// Lower bound on any policy playing `profile`. Adds the tight-deadline
/// term when D is below the critical threshold, after checking that T is
/// reachable (T <= D - L + integral of p over [0, T)).
[[nodiscard]] double fluid_lower_bound(const OnDemandProfile& profile, double cost_ratio, double compute_length,
                                       double deadline);

}  // namespace spotsched
