#pragma once

/// @file engine.hpp
/// Discrete-time simulation loop.
///
/// Each step i covers [i, i + 1). At the start of a step the engine reads
/// availability, preempts a spot rental that lost its instance, asks the
/// policy for an action, applies the changeover if the rental changes, and
/// then accrues progress and cost for the rest of the step. The final step
/// may be partially used; its cost is prorated.

#include <spotsched/core.hpp>
#include <spotsched/policies.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spotsched {

struct SimConfig {
    int monte_carlo_runs = 1;
    std::uint64_t base_seed = 0;
    bool record_steps = true;
};

struct StepRecord {
    std::size_t step = 0;
    double t = 0.0;
    Action action = Action::Idle;   ///< what the policy asked for
    Rental effective = Rental::Idle;
    double progress = 0.0;
    double cost = 0.0;
    double changeover = 0.0;        ///< changeover time spent in this step
    bool spot_fault = false;        ///< RunSpot requested while unavailable
    bool overridden = false;        ///< engine forced on-demand
};

struct ExecutionLog {
    std::string policy_id;
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    bool completed = false;
    double completion_time = 0.0;   ///< C

    double spot_time = 0.0;         ///< running on spot, changeover excluded
    double on_demand_time = 0.0;
    double idle_time = 0.0;
    double spot_changeover_time = 0.0;
    double on_demand_changeover_time = 0.0;
    double total_cost = 0.0;
    double progress = 0.0;

    int transitions = 0;
    int preemptions = 0;
    int spot_faults = 0;
    int overrides = 0;

    [[nodiscard]] double changeover_time() const noexcept {
        return spot_changeover_time + on_demand_changeover_time;
    }
};

/// What availability sources may look at: the realized past and present.
struct RunView {
    std::size_t step = 0;
    const ProgressState* state = nullptr;
    const Policy* policy = nullptr;
    const Job* job = nullptr;
    const CostModel* cost_model = nullptr;
    const ExecutionLog* log = nullptr;

    [[nodiscard]] DecisionContext context(bool spot_available) const noexcept;
};

/// Supplies availability step by step. A static trace ignores the view;
/// adversaries use it to react to the run.
class AvailabilitySource {
public:
    virtual ~AvailabilitySource() = default;
    [[nodiscard]] virtual bool available(const RunView& view) = 0;
    [[nodiscard]] virtual std::size_t horizon() const noexcept = 0;
};

class TraceSource final : public AvailabilitySource {
public:
    explicit TraceSource(const SpotTrace& trace) : trace_(trace) {}
    bool available(const RunView& view) override { return trace_.available(view.step); }
    std::size_t horizon() const noexcept override { return trace_.size(); }

private:
    const SpotTrace& trace_;
};

struct StepOutcome {
    double progress = 0.0;
    double changeover = 0.0;
    double running = 0.0;  ///< time spent running after the changeover
    double cost = 0.0;
    double used = 1.0;     ///< fraction of the step consumed
    bool preempted = false;
    bool transitioned = false;
};

/// Applies one step's transition and accrual to `state`. `target` must
/// already be feasible (no spot when unavailable). Shared with the offline
/// oracles' test harness so every consumer uses identical step rules.
StepOutcome advance_step(ProgressState& state, Rental target, bool spot_available, const Job& job,
                         const CostModel& cm);

/// Runs `policy` against `source` until the job completes.
/// Throws DeadlineViolated, TraceTooShort, InvalidArgument.
ExecutionLog run(Policy& policy, AvailabilitySource& source, const Job& job, const CostModel& cm,
                 bool record_steps = true);

/// Resets `policy` with `seed` and runs it over a static trace.
ExecutionLog run(Policy& policy, const SpotTrace& trace, const Job& job, const CostModel& cm,
                 const SimConfig& cfg, std::uint64_t seed);

[[nodiscard]] double total_cost(const ExecutionLog& log) noexcept;

struct VerificationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerificationReport {
    std::vector<VerificationCheck> checks;

    [[nodiscard]] bool all_passed() const noexcept;
    [[nodiscard]] const VerificationCheck* find(std::string_view name) const noexcept;
};

/// Re-derives every ExecutionLog invariant from the per-step records.
[[nodiscard]] VerificationReport verify_log(const ExecutionLog& log, const Job& job, const CostModel& cm);

struct RunStats {
    double mean_cost = 0.0;
    double stddev_cost = 0.0;
    double min_cost = 0.0;
    double max_cost = 0.0;
    int violations = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> costs;
};

/// Runs seeds base_seed + i for i in [0, N) and aggregates in index order.
[[nodiscard]] RunStats run_monte_carlo(const Policy& policy, const SpotTrace& trace, const Job& job,
                                       const CostModel& cm, const SimConfig& cfg);

/// Aggregates a cost sample (population of runs) into RunStats.
[[nodiscard]] RunStats summarize_costs(std::vector<double> costs, std::vector<std::uint64_t> seeds,
                                       int violations = 0);

/// CSV `step,t,action,effective,progress,cost,changeover`.
void write_log_csv(const ExecutionLog& log, std::ostream& out);
/// JSON object with the log totals.
void write_log_totals_json(const ExecutionLog& log, std::ostream& out);

}  // namespace spotsched
