#include <spotsched/core.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace spotsched {

std::string_view to_string(Rental r) noexcept {
    switch (r) {
    case Rental::Idle:
        return "idle";
    case Rental::Spot:
        return "spot";
    case Rental::OnDemand:
        return "on-demand";
    }
    return "?";
}

Job::Job(double compute_length, double deadline) : compute_(compute_length), deadline_(deadline) {
    if (!(compute_length > 0.0) || !std::isfinite(compute_length)) {
        throw InvalidArgument(fmt::format("compute length must be positive, got {}", compute_length));
    }
    if (!(deadline >= compute_length) || !std::isfinite(deadline)) {
        throw InvalidArgument(fmt::format("deadline {} is shorter than compute length {}", deadline, compute_length));
    }
}

Job Job::from_seconds(double compute_seconds, double deadline_seconds, double step_seconds) {
    if (!(step_seconds > 0.0)) {
        throw InvalidArgument("step_seconds must be positive");
    }
    // Round L up and D down: the job never appears easier than it is.
    const double l = std::ceil(compute_seconds / step_seconds - kEps);
    const double d = std::floor(deadline_seconds / step_seconds + kEps);
    return Job(l, d);
}

CostModel::CostModel(double cost_ratio, double changeover_delay, bool bill_during_changeover)
    : cost_ratio_(cost_ratio), changeover_(changeover_delay), bill_(bill_during_changeover) {
    require_cost_ratio(cost_ratio);
    if (!(changeover_delay >= 0.0) || !std::isfinite(changeover_delay)) {
        throw InvalidArgument(fmt::format("changeover delay must be >= 0, got {}", changeover_delay));
    }
}

double CostModel::rate(Rental r) const noexcept {
    switch (r) {
    case Rental::Spot:
        return spot_rate();
    case Rental::OnDemand:
        return cost_ratio_;
    case Rental::Idle:
        break;
    }
    return 0.0;
}

SpotTrace::SpotTrace(double step_seconds, std::vector<std::uint8_t> availability, MetaMap meta)
    : step_seconds_(step_seconds), availability_(std::move(availability)), meta_(std::move(meta)) {
    if (!(step_seconds_ > 0.0)) {
        throw InvalidArgument("trace step_seconds must be positive");
    }
    if (availability_.empty()) {
        throw InvalidArgument("trace availability must not be empty");
    }
    for (auto& a : availability_) {
        a = a != 0 ? 1 : 0;
    }
}

std::size_t SpotTrace::available_steps(std::size_t steps) const {
    const auto n = std::min(steps, availability_.size());
    return static_cast<std::size_t>(std::count(availability_.begin(), availability_.begin() + static_cast<long>(n), 1));
}

void SpotTrace::require_horizon(const Job& job) const {
    if (static_cast<double>(availability_.size()) + kEps < job.deadline()) {
        throw TraceTooShort(fmt::format("trace covers {} steps but the deadline is {}", availability_.size(),
                                        job.deadline()));
    }
}

double slack(const Job& job, const ProgressState& state) noexcept {
    return (job.deadline() - state.t) - (job.compute_length() - state.phi);
}

bool point_of_no_return_reached(const Job& job, const ProgressState& state, const CostModel& cm) noexcept {
    // Idling one more step burns a full step of slack; what must survive it
    // is one changeover into on-demand.
    return slack(job, state) < cm.changeover_delay() + 1.0 - kEps;
}

bool spot_entry_safe(const Job& job, const ProgressState& state, const CostModel& cm) noexcept {
    const double d = cm.changeover_delay();
    const double needed = state.rental == Rental::Spot ? state.changeover_remaining : d;
    return slack(job, state) - needed >= d - kEps;
}

void require_cost_ratio(double cost_ratio) {
    if (!(cost_ratio > 1.0) || !std::isfinite(cost_ratio)) {
        throw InvalidArgument(fmt::format("cost ratio K must be > 1, got {}", cost_ratio));
    }
}

double critical_threshold(double cost_ratio) {
    require_cost_ratio(cost_ratio);
    const double r = std::sqrt(cost_ratio);
    return (1.0 + 2.0 * r) / (1.0 + r);
}

bool loose_deadline(const Job& job, double cost_ratio) {
    return job.deadline() >= critical_threshold(cost_ratio) * job.compute_length();
}

double theoretical_cr_ross(const Job& job, double cost_ratio) {
    if (loose_deadline(job, cost_ratio)) {
        return std::sqrt(cost_ratio);
    }
    return 1.0 + (cost_ratio - 1.0) * (2.0 - job.deadline() / job.compute_length());
}

double theoretical_cr_lower_bound(const Job& job, double cost_ratio) {
    // The bound is matching; kept as its own entry point so callers name
    // which side of the game they mean.
    return theoretical_cr_ross(job, cost_ratio);
}

}  // namespace spotsched
