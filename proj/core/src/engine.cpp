#include <spotsched/engine.hpp>

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace spotsched {

DecisionContext RunView::context(bool spot_available) const noexcept {
    DecisionContext ctx;
    ctx.t = state->t;
    ctx.spot_available_now = spot_available;
    ctx.phi = state->phi;
    ctx.job = job;
    ctx.cost_model = cost_model;
    ctx.rental = state->rental;
    ctx.changeover_remaining = state->changeover_remaining;
    return ctx;
}

StepOutcome advance_step(ProgressState& state, Rental target, bool spot_available, const Job& job,
                         const CostModel& cm) {
    StepOutcome out;
    if (state.rental == Rental::Spot && !spot_available) {
        state.rental = Rental::Idle;
        state.changeover_remaining = 0.0;
        out.preempted = true;
        out.transitioned = true;
    }
    if (target == Rental::Spot && !spot_available) {
        throw InvalidArgument("cannot rent spot in a step where it is unavailable");
    }
    if (target != state.rental) {
        out.transitioned = true;
        state.rental = target;
        state.changeover_remaining = target == Rental::Idle ? 0.0 : cm.changeover_delay();
    }

    if (state.rental == Rental::Idle) {
        state.t += 1.0;
        return out;
    }

    const double co = std::min(state.changeover_remaining, 1.0);
    state.changeover_remaining -= co;
    const double remaining = job.compute_length() - state.phi;
    double gain = std::min(1.0 - co, remaining);
    bool finished = false;
    if (gain >= remaining - kEps) {
        gain = remaining;
        finished = true;
    }
    out.changeover = co;
    out.running = gain;
    out.progress = gain;
    out.used = finished ? co + gain : 1.0;
    const double billed = gain + (cm.bill_during_changeover() ? co : 0.0);
    out.cost = cm.rate(state.rental) * billed;

    state.phi = finished ? job.compute_length() : state.phi + gain;
    state.t += out.used;
    return out;
}

ExecutionLog run(Policy& policy, AvailabilitySource& source, const Job& job, const CostModel& cm,
                 bool record_steps) {
    if (job.initial_slack() < cm.changeover_delay() - kEps) {
        throw InvalidArgument(fmt::format("deadline slack {} cannot absorb a changeover of {}", job.initial_slack(),
                                          cm.changeover_delay()));
    }
    ExecutionLog log;
    log.policy_id = std::string(policy.id());

    ProgressState st;
    const double compute = job.compute_length();
    const auto max_steps = static_cast<std::size_t>(std::ceil(job.deadline() - kEps));

    for (std::size_t step = 0;; ++step) {
        if (st.phi >= compute - kEps) {
            break;
        }
        if (step >= max_steps) {
            throw DeadlineViolated(fmt::format("policy '{}' reached the deadline {} with progress {} of {}",
                                               log.policy_id, job.deadline(), st.phi, compute));
        }
        if (step >= source.horizon()) {
            throw TraceTooShort(fmt::format("availability ends at step {} before the job completed", step));
        }
        st.t = static_cast<double>(step);

        const RunView view{step, &st, &policy, &job, &cm, &log};
        const bool available = source.available(view);
        if (st.rental == Rental::Spot && !available) {
            st.rental = Rental::Idle;
            st.changeover_remaining = 0.0;
            ++log.preemptions;
            ++log.transitions;
        }

        const DecisionContext ctx = view.context(available);
        const Action requested = policy.decide(ctx);
        Action act = requested;
        const bool fault = act == Action::RunSpot && !available;
        if (fault) {
            act = Action::Idle;
            ++log.spot_faults;
        }
        const Action safe = apply_no_return_override(ctx, act);
        const bool overridden = safe != act;
        if (overridden) {
            ++log.overrides;
        }

        const StepOutcome out = advance_step(st, rental_for(safe), available, job, cm);
        if (out.transitioned) {
            ++log.transitions;
        }
        switch (st.rental) {
        case Rental::Idle:
            log.idle_time += out.used;
            break;
        case Rental::Spot:
            log.spot_time += out.running;
            log.spot_changeover_time += out.changeover;
            break;
        case Rental::OnDemand:
            log.on_demand_time += out.running;
            log.on_demand_changeover_time += out.changeover;
            break;
        }
        log.total_cost += out.cost;
        log.progress += out.progress;

        if (record_steps) {
            log.steps.push_back(StepRecord{step, static_cast<double>(step), requested, st.rental, out.progress,
                                           out.cost, out.changeover, fault, overridden});
        }
    }

    log.completed = true;
    log.completion_time = st.t;
    if (log.completion_time > job.deadline() + kEps) {
        throw DeadlineViolated(fmt::format("policy '{}' completed at {} after the deadline {}", log.policy_id,
                                           log.completion_time, job.deadline()));
    }
    return log;
}

ExecutionLog run(Policy& policy, const SpotTrace& trace, const Job& job, const CostModel& cm,
                 const SimConfig& cfg, std::uint64_t seed) {
    trace.require_horizon(job);
    policy.reset(seed);
    TraceSource source(trace);
    ExecutionLog log = run(policy, source, job, cm, cfg.record_steps);
    log.seed = seed;
    return log;
}

double total_cost(const ExecutionLog& log) noexcept {
    return log.total_cost;
}

bool VerificationReport::all_passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const VerificationCheck* VerificationReport::find(std::string_view name) const noexcept {
    const auto it = std::find_if(checks.begin(), checks.end(), [&](const auto& c) { return c.name == name; });
    return it == checks.end() ? nullptr : &*it;
}

namespace {

bool close(double a, double b) {
    return std::abs(a - b) <= 1e-6 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

VerificationReport verify_log(const ExecutionLog& log, const Job& job, const CostModel& cm) {
    VerificationReport report;
    auto add = [&](std::string name, bool ok, std::string detail = {}) {
        report.checks.push_back({std::move(name), ok, std::move(detail)});
    };

    add("completed", log.completed);

    double progress = 0.0;
    double cost = 0.0;
    double time = 0.0;
    bool idle_ok = true;
    bool step_ok = true;
    for (const auto& s : log.steps) {
        progress += s.progress;
        cost += s.cost;
        time += s.effective == Rental::Idle ? 1.0 : s.changeover + s.progress;
        if (s.effective == Rental::Idle && (s.progress != 0.0 || s.cost != 0.0)) {
            idle_ok = false;
        }
        if (s.progress < 0.0 || s.progress + s.changeover > 1.0 + kEps) {
            step_ok = false;
        }
    }

    add("progress_conservation", close(progress, job.compute_length()) && close(log.progress, progress),
        fmt::format("sum of step progress {} vs L {}", progress, job.compute_length()));
    add("deadline", log.completion_time <= job.deadline() + kEps,
        fmt::format("C = {} vs D = {}", log.completion_time, job.deadline()));
    add("cost_conservation", close(cost, log.total_cost),
        fmt::format("sum of step cost {} vs total {}", cost, log.total_cost));

    const double billed = cm.bill_during_changeover()
                              ? log.spot_changeover_time + cm.cost_ratio() * log.on_demand_changeover_time
                              : 0.0;
    const double decomposed = log.spot_time + cm.cost_ratio() * log.on_demand_time + billed;
    add("cost_decomposition", close(decomposed, log.total_cost),
        fmt::format("spot + K*on-demand (+ billed changeover) = {} vs total {}", decomposed, log.total_cost));
    add("idle_has_no_progress", idle_ok);
    add("step_progress_bounds", step_ok);
    add("time_accounting", close(time, log.completion_time),
        fmt::format("accounted time {} vs C {}", time, log.completion_time));
    return report;
}

RunStats summarize_costs(std::vector<double> costs, std::vector<std::uint64_t> seeds, int violations) {
    RunStats stats;
    stats.violations = violations;
    stats.seeds = std::move(seeds);
    stats.costs = std::move(costs);
    const auto n = stats.costs.size();
    if (n == 0) {
        return stats;
    }
    const double sum = std::accumulate(stats.costs.begin(), stats.costs.end(), 0.0);
    stats.mean_cost = sum / static_cast<double>(n);
    double sq = 0.0;
    for (double c : stats.costs) {
        sq += (c - stats.mean_cost) * (c - stats.mean_cost);
    }
    stats.stddev_cost = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
    const auto [lo, hi] = std::minmax_element(stats.costs.begin(), stats.costs.end());
    stats.min_cost = *lo;
    stats.max_cost = *hi;
    return stats;
}

RunStats run_monte_carlo(const Policy& policy, const SpotTrace& trace, const Job& job, const CostModel& cm,
                         const SimConfig& cfg) {
    if (cfg.monte_carlo_runs < 1) {
        throw InvalidArgument("monte_carlo_runs must be >= 1");
    }
    trace.require_horizon(job);
    SimConfig quiet = cfg;
    quiet.record_steps = false;

    std::vector<double> costs;
    std::vector<std::uint64_t> seeds;
    costs.reserve(static_cast<std::size_t>(cfg.monte_carlo_runs));
    int violations = 0;
    auto instance = policy.clone();
    for (int i = 0; i < cfg.monte_carlo_runs; ++i) {
        const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(i);
        seeds.push_back(seed);
        try {
            costs.push_back(run(*instance, trace, job, cm, quiet, seed).total_cost);
        } catch (const DeadlineViolated&) {
            ++violations;
        }
    }
    return summarize_costs(std::move(costs), std::move(seeds), violations);
}

void write_log_csv(const ExecutionLog& log, std::ostream& out) {
    out << "step,t,action,effective,progress,cost,changeover\n";
    for (const auto& s : log.steps) {
        out << fmt::format("{},{},{},{},{},{},{}\n", s.step, s.t, to_string(s.action), to_string(s.effective),
                           s.progress, s.cost, s.changeover);
    }
}

void write_log_totals_json(const ExecutionLog& log, std::ostream& out) {
    nlohmann::ordered_json j;
    j["policy"] = log.policy_id;
    j["seed"] = log.seed;
    j["completed"] = log.completed;
    j["completion_time"] = log.completion_time;
    j["spot_time"] = log.spot_time;
    j["on_demand_time"] = log.on_demand_time;
    j["idle_time"] = log.idle_time;
    j["changeover_time"] = log.changeover_time();
    j["total_cost"] = log.total_cost;
    j["transitions"] = log.transitions;
    j["preemptions"] = log.preemptions;
    j["spot_faults"] = log.spot_faults;
    j["overrides"] = log.overrides;
    out << j.dump(2) << '\n';
}

}  // namespace spotsched
