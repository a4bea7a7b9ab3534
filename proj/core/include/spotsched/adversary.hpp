#pragma once

/// @file adversary.hpp
/// Adaptive and synthetic spot availability.

#include <spotsched/core.hpp>
#include <spotsched/engine.hpp>
#include <spotsched/policies.hpp>

#include <cstdint>
#include <optional>
#include <variant>

namespace spotsched {

// ---------------------------------------------------------------------------
// Synthetic traces
// ---------------------------------------------------------------------------

struct BernoulliTrace {
    double p = 0.5;
};

/// Two-state chain. p_up: unavailable -> available; p_down: available -> unavailable.
struct MarkovTrace {
    double p_up = 0.1;
    double p_down = 0.1;
};

/// Alternating runs with uniformly drawn lengths in steps.
struct SegmentTrace {
    int up_min = 1;
    int up_max = 10;
    int down_min = 1;
    int down_max = 10;
};

using SyntheticKind = std::variant<BernoulliTrace, MarkovTrace, SegmentTrace>;

/// Same (kind, horizon, step, seed) gives the same trace.
[[nodiscard]] SpotTrace generate_synthetic_trace(const SyntheticKind& kind, std::size_t horizon,
                                                 double step_seconds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Adaptive killer
// ---------------------------------------------------------------------------

struct KillerResult {
    ExecutionLog log;
    SpotTrace trace;   ///< realized availability over ceil(D) steps
    double opt_cost = 0.0;
    double ratio = 0.0;
};

/// Spot is offered exactly when the policy would not take it. Rejects
/// randomized policies.
[[nodiscard]] KillerResult run_adaptive_killer(const Policy& policy, const Job& job, const CostModel& cm);

struct ObliviousKillerResult {
    SpotTrace trace;
    double opt_cost = 0.0;
    RunStats stats;
    double ratio = 0.0;  ///< mean cost / OPT
};

/// Builds the killer trace against a copy of `policy` seeded with
/// `replica_seed`, then replays it for seeds base_seed + i. Works for
/// randomized policies: the trace cannot see the replayed runs' draws.
[[nodiscard]] ObliviousKillerResult run_oblivious_killer(const Policy& policy, const Job& job, const CostModel& cm,
                                                         std::uint64_t replica_seed, int runs,
                                                         std::uint64_t base_seed);

// ---------------------------------------------------------------------------
// Parametric adversary
// ---------------------------------------------------------------------------

enum class GammaMode : std::uint8_t {
    Zero,           ///< pure spot
    MatchRealized,  ///< catch up to the policy's realized progress at z
    Fixed,          ///< use `gamma` as given
};

struct ParametricAdversary {
    double z = 0.0;      ///< phase-1 length, steps
    int alpha = 0;       ///< spot steps supplied in phase 1
    GammaMode mode = GammaMode::Zero;
    double gamma = 0.0;  ///< on-demand volume for GammaMode::Fixed
};

struct ParametricRun {
    double alg_cost = 0.0;
    double adv_cost = 0.0;
    double gamma = 0.0;           ///< realized adversary on-demand volume
    double epsilon = 0.0;         ///< spot supplied after z that the policy could take
    double progress_at_z = 0.0;
    double adversary_slack = 0.0; ///< time left over after the adversary's own schedule
    bool adversary_feasible = false;
    ExecutionLog log;
    std::optional<SpotTrace> trace;  ///< set when the run was recorded
};

/// Phase 1 places alpha spot steps at floor(j z / alpha). From z on, with
/// B = L - alpha - gamma spot still owed to itself, the adversary offers
/// spot whenever B exceeds the policy's remaining work or B no longer fits
/// in the time left. Requires d = 0. Rejects specs the adversary itself
/// cannot finish by D.
[[nodiscard]] ParametricRun build_parametric_run(const ParametricAdversary& spec, Policy& policy, const Job& job,
                                                 const CostModel& cm, std::uint64_t seed);

struct ParametricStats {
    double mean_alg_cost = 0.0;
    double mean_adv_cost = 0.0;
    double ratio = 0.0;  ///< mean_alg_cost / mean_adv_cost
    double mean_epsilon = 0.0;
    int infeasible = 0;
};

[[nodiscard]] ParametricStats run_parametric_monte_carlo(const ParametricAdversary& spec, const Policy& policy,
                                                         const Job& job, const CostModel& cm, int runs,
                                                         std::uint64_t base_seed);

// ---------------------------------------------------------------------------
// Tight-deadline adversary
// ---------------------------------------------------------------------------

struct TightRun {
    double alg_cost = 0.0;
    double adv_cost = 0.0;
    double ratio = 0.0;
    ExecutionLog log;
    std::optional<SpotTrace> trace;  ///< set when the run was recorded
};

/// Spot on [0, T). Afterwards spot is offered only when the policy would
/// not take it, or when the adversary's own remaining work no longer fits
/// otherwise. The adversary runs on spot only, so its cost is L.
[[nodiscard]] TightRun run_tight_deadline_adversary(Policy& policy, double last_free, const Job& job,
                                                    const CostModel& cm, std::uint64_t seed);

struct TightStats {
    double mean_alg_cost = 0.0;
    double adv_cost = 0.0;
    double ratio = 0.0;
};

[[nodiscard]] TightStats run_tight_monte_carlo(const Policy& policy, double last_free, const Job& job,
                                               const CostModel& cm, int runs, std::uint64_t base_seed);

/// Largest T the tight-deadline analysis lets a window policy keep random:
/// D - L + L / (1 + sqrt K).
[[nodiscard]] double tight_adversary_horizon(const Job& job, double cost_ratio);

}  // namespace spotsched
