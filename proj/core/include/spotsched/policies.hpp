#pragma once

/// @file policies.hpp
/// Online scheduling policies as step-wise decision functions.
///
/// A policy sees only the present: current time, whether spot is available
/// right now, progress so far and what it is currently renting. It never
/// sees future trace contents.

#include <spotsched/core.hpp>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace spotsched {

enum class Action : std::uint8_t { Idle, RunSpot, RunOnDemand };

std::string_view to_string(Action a) noexcept;
[[nodiscard]] Rental rental_for(Action a) noexcept;

struct DecisionContext {
    double t = 0.0;
    bool spot_available_now = false;
    double phi = 0.0;
    const Job* job = nullptr;
    const CostModel* cost_model = nullptr;
    Rental rental = Rental::Idle;
    double changeover_remaining = 0.0;

    [[nodiscard]] ProgressState state() const noexcept { return {t, phi, rental, changeover_remaining}; }
    [[nodiscard]] double remaining() const noexcept { return job->compute_length() - phi; }
    [[nodiscard]] bool no_return() const noexcept {
        return point_of_no_return_reached(*job, state(), *cost_model);
    }
    [[nodiscard]] bool spot_safe() const noexcept {
        return spot_available_now && spot_entry_safe(*job, state(), *cost_model);
    }
};

/// Forces on-demand once the point of no return is reached, unless the
/// action is a spot rental that is still safe.
[[nodiscard]] Action apply_no_return_override(const DecisionContext& ctx, Action proposed) noexcept;

// ---------------------------------------------------------------------------
// Stateless decision rules
// ---------------------------------------------------------------------------

/// Wait on spot until slack runs out, then on-demand to completion.
[[nodiscard]] Action decide_greedy(const DecisionContext& ctx) noexcept;

/// Run only when behind the line phi = (L/D) t; spot if available, else on-demand.
[[nodiscard]] Action decide_uniform_progress(const DecisionContext& ctx) noexcept;

[[nodiscard]] Action decide_on_demand_only(const DecisionContext& ctx) noexcept;

enum class WarmUp : std::uint8_t { Greedy, Uniform, None };

std::string_view to_string(WarmUp w) noexcept;

/// Warm-up step: greedy runs every step (spot else on-demand); uniform only
/// when behind the uniform-progress line.
[[nodiscard]] Action warmup_decide(WarmUp kind, const DecisionContext& ctx) noexcept;

// ---------------------------------------------------------------------------
// ROSS
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

/// Half-open step interval [start, end).
struct Interval {
    double start = 0.0;
    double end = 0.0;

    [[nodiscard]] bool contains(double t) const noexcept { return t + kEps >= start && t + kEps < end; }
    [[nodiscard]] double length() const noexcept { return end - start; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Uniformly places a window of `delta` steps inside [xi1, xi1 + remaining];
/// the start is drawn from the step-aligned values in [xi1, xi1 + remaining - delta].
[[nodiscard]] Interval sample_interval(double xi1, double remaining, double delta, Rng& rng);

enum class RossPhase : std::uint8_t { WarmUp, RandomWindow, CatchUp, Committed, Done };

std::string_view to_string(RossPhase p) noexcept;

struct RossState {
    RossPhase phase = RossPhase::WarmUp;
    WarmUp warmup = WarmUp::Greedy;
    double xi1 = 0.0;
    double xi2 = 0.0;
    double delta = 0.0;          ///< on-demand window length, whole steps
    double window_end = 0.0;     ///< end of the randomized phase
    Interval on_demand_window;   ///< I(delta)
    std::uint64_t rng_seed = 0;
    /// Phases entered, in order; used to check monotonicity.
    std::vector<RossPhase> history{RossPhase::WarmUp};
};

/// One ROSS decision. Mutates `state` in place (phase changes, window draw).
[[nodiscard]] Action decide_ross(const DecisionContext& ctx, RossState& state, Rng& rng);

/// delta = remaining / (1 + sqrt K), before step rounding.
[[nodiscard]] double ross_delta(double remaining, double cost_ratio);

// ---------------------------------------------------------------------------
// Policy objects
// ---------------------------------------------------------------------------

class Policy {
public:
    virtual ~Policy() = default;

    [[nodiscard]] virtual std::string_view id() const noexcept = 0;
    [[nodiscard]] virtual Action decide(const DecisionContext& ctx) = 0;
    [[nodiscard]] virtual std::unique_ptr<Policy> clone() const = 0;
    /// Resets per-run state and reseeds the policy's randomness.
    virtual void reset(std::uint64_t seed) { (void)seed; }
    [[nodiscard]] virtual bool randomized() const noexcept { return false; }
    /// Would the policy rent spot in `ctx`? Must not change the policy.
    /// The default decides on a clone.
    [[nodiscard]] virtual bool probe_spot(const DecisionContext& ctx) const;
};

class GreedyPolicy final : public Policy {
public:
    std::string_view id() const noexcept override { return "greedy"; }
    Action decide(const DecisionContext& ctx) override { return decide_greedy(ctx); }
    bool probe_spot(const DecisionContext& ctx) const override { return decide_greedy(ctx) == Action::RunSpot; }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<GreedyPolicy>(*this); }
};

class UniformProgressPolicy final : public Policy {
public:
    std::string_view id() const noexcept override { return "uniform-progress"; }
    Action decide(const DecisionContext& ctx) override { return decide_uniform_progress(ctx); }
    bool probe_spot(const DecisionContext& ctx) const override { return decide_uniform_progress(ctx) == Action::RunSpot; }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<UniformProgressPolicy>(*this); }
};

class OnDemandPolicy final : public Policy {
public:
    std::string_view id() const noexcept override { return "on-demand"; }
    Action decide(const DecisionContext& ctx) override { return decide_on_demand_only(ctx); }
    bool probe_spot(const DecisionContext& ctx) const override { return decide_on_demand_only(ctx) == Action::RunSpot; }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<OnDemandPolicy>(*this); }
};

/// ROSS with a greedy, uniform, or no warm-up. With no warm-up the
/// randomized window starts at t = 0 and is capped at D - L + delta so it
/// always fits before the point of no return.
class RossPolicy final : public Policy {
public:
    explicit RossPolicy(WarmUp warmup, std::uint64_t seed = 0);

    std::string_view id() const noexcept override;
    Action decide(const DecisionContext& ctx) override { return decide_ross(ctx, state_, rng_); }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<RossPolicy>(*this); }
    void reset(std::uint64_t seed) override;
    bool randomized() const noexcept override { return true; }
    bool probe_spot(const DecisionContext& ctx) const override;

    [[nodiscard]] const RossState& state() const noexcept { return state_; }

private:
    RossState state_;
    Rng rng_;
};

/// Identifiers accepted by make_policy.
[[nodiscard]] const std::vector<std::string>& policy_ids();

/// Builds a policy by identifier: greedy, uniform-progress, on-demand,
/// ross-greedy, ross-uniform, ross-window.
[[nodiscard]] std::unique_ptr<Policy> make_policy(std::string_view id, std::uint64_t seed = 0);

/// Asks a copy of `policy` what it would do if spot were available now.
/// The original is left untouched.
[[nodiscard]] bool would_take_spot(const Policy& policy, DecisionContext ctx);

}  // namespace spotsched
