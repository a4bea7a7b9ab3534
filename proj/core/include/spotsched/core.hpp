#pragma once

/// @file core.hpp
/// Domain types and closed-form scheduling math shared by every module.
///
/// All durations are expressed in trace steps. A job of compute length L
/// needs L steps of running time; the deadline D is the number of steps
/// available. Conversions from seconds happen once, at the edges (see
/// Job::from_seconds).

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spotsched {

/// Tolerance for floating-point comparisons of step quantities.
inline constexpr double kEps = 1e-9;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A policy let the job miss its deadline. Always a policy bug.
class DeadlineViolated : public Error {
public:
    using Error::Error;
};

class TraceTooShort : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class Rental : std::uint8_t { Idle, Spot, OnDemand };

std::string_view to_string(Rental r) noexcept;

/// A single deadline-constrained job: L steps of compute due within D steps.
class Job {
public:
    Job(double compute_length, double deadline);

    /// Converts seconds to whole steps, rounding L up and D down.
    static Job from_seconds(double compute_seconds, double deadline_seconds, double step_seconds);

    [[nodiscard]] double compute_length() const noexcept { return compute_; }
    [[nodiscard]] double deadline() const noexcept { return deadline_; }
    [[nodiscard]] double initial_slack() const noexcept { return deadline_ - compute_; }

private:
    double compute_;
    double deadline_;
};

/// Pricing: spot costs 1 per step, on-demand costs K per step.
class CostModel {
public:
    explicit CostModel(double cost_ratio, double changeover_delay = 0.0, bool bill_during_changeover = true);

    [[nodiscard]] double cost_ratio() const noexcept { return cost_ratio_; }
    [[nodiscard]] static constexpr double spot_rate() noexcept { return 1.0; }
    [[nodiscard]] double changeover_delay() const noexcept { return changeover_; }
    [[nodiscard]] bool bill_during_changeover() const noexcept { return bill_; }

    /// Price per step of a rental; Idle is free.
    [[nodiscard]] double rate(Rental r) const noexcept;

    [[nodiscard]] CostModel with_changeover(double delay) const { return CostModel(cost_ratio_, delay, bill_); }

private:
    double cost_ratio_;
    double changeover_;
    bool bill_;
};

using MetaMap = std::map<std::string, std::string>;

/// Step-sampled spot availability. Step i covers [i, i + 1) in step units.
class SpotTrace {
public:
    SpotTrace(double step_seconds, std::vector<std::uint8_t> availability, MetaMap meta = {});

    [[nodiscard]] double step_seconds() const noexcept { return step_seconds_; }
    [[nodiscard]] std::size_t size() const noexcept { return availability_.size(); }
    [[nodiscard]] bool available(std::size_t step) const { return availability_.at(step) != 0; }
    [[nodiscard]] const std::vector<std::uint8_t>& availability() const noexcept { return availability_; }
    [[nodiscard]] const MetaMap& meta() const noexcept { return meta_; }
    MetaMap& meta() noexcept { return meta_; }

    /// Number of available steps among the first `steps` steps.
    [[nodiscard]] std::size_t available_steps(std::size_t steps) const;

    /// Throws TraceTooShort unless the trace covers the job's deadline.
    void require_horizon(const Job& job) const;

    friend bool operator==(const SpotTrace&, const SpotTrace&) = default;

private:
    double step_seconds_;
    std::vector<std::uint8_t> availability_;
    MetaMap meta_;
};

/// Mutable per-run progress. `phi` is completed compute; `t` elapsed steps.
struct ProgressState {
    double t = 0.0;
    double phi = 0.0;
    Rental rental = Rental::Idle;
    double changeover_remaining = 0.0;
};

// ---------------------------------------------------------------------------
// Closed-form operations
// ---------------------------------------------------------------------------

/// (D - t) - (L - phi).
[[nodiscard]] double slack(const Job& job, const ProgressState& state) noexcept;

/// True once one more idle step could leave less slack than a changeover
/// into on-demand needs. From this point the run must keep making progress.
[[nodiscard]] bool point_of_no_return_reached(const Job& job, const ProgressState& state,
                                              const CostModel& cm) noexcept;

/// True if renting spot now still leaves at least one changeover of slack
/// after the spot changeover completes.
[[nodiscard]] bool spot_entry_safe(const Job& job, const ProgressState& state, const CostModel& cm) noexcept;

/// (1 + 2 sqrt K) / (1 + sqrt K); rejects K <= 1.
[[nodiscard]] double critical_threshold(double cost_ratio);

/// Competitive ratio guaranteed by the randomized policy.
[[nodiscard]] double theoretical_cr_ross(const Job& job, double cost_ratio);

/// Lower bound on the competitive ratio of any online policy.
[[nodiscard]] double theoretical_cr_lower_bound(const Job& job, double cost_ratio);

/// True when D >= critical_threshold(K) * L.
[[nodiscard]] bool loose_deadline(const Job& job, double cost_ratio);

void require_cost_ratio(double cost_ratio);

}  // namespace spotsched
