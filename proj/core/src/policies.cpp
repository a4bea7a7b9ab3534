#include <spotsched/policies.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace spotsched {

std::string_view to_string(Action a) noexcept {
    switch (a) {
    case Action::Idle:
        return "idle";
    case Action::RunSpot:
        return "spot";
    case Action::RunOnDemand:
        return "on-demand";
    }
    return "?";
}

Rental rental_for(Action a) noexcept {
    switch (a) {
    case Action::RunSpot:
        return Rental::Spot;
    case Action::RunOnDemand:
        return Rental::OnDemand;
    case Action::Idle:
        break;
    }
    return Rental::Idle;
}

std::string_view to_string(WarmUp w) noexcept {
    switch (w) {
    case WarmUp::Greedy:
        return "greedy";
    case WarmUp::Uniform:
        return "uniform";
    case WarmUp::None:
        return "none";
    }
    return "?";
}

std::string_view to_string(RossPhase p) noexcept {
    switch (p) {
    case RossPhase::WarmUp:
        return "warm-up";
    case RossPhase::RandomWindow:
        return "random-window";
    case RossPhase::CatchUp:
        return "catch-up";
    case RossPhase::Committed:
        return "committed";
    case RossPhase::Done:
        return "done";
    }
    return "?";
}

Action apply_no_return_override(const DecisionContext& ctx, Action proposed) noexcept {
    if (!ctx.no_return()) {
        return proposed;
    }
    if (proposed == Action::RunSpot && ctx.spot_safe()) {
        return proposed;
    }
    return Action::RunOnDemand;
}

Action decide_greedy(const DecisionContext& ctx) noexcept {
    // Greedy only ever rents on-demand after committing to it.
    if (ctx.rental == Rental::OnDemand) {
        return Action::RunOnDemand;
    }
    const bool no_return = ctx.no_return();
    if (ctx.spot_available_now && (!no_return || ctx.spot_safe())) {
        return Action::RunSpot;
    }
    return no_return ? Action::RunOnDemand : Action::Idle;
}

namespace {

bool behind_uniform_line(const DecisionContext& ctx) noexcept {
    const double target = ctx.job->compute_length() * ctx.t / ctx.job->deadline();
    return ctx.phi + kEps < target;
}

}  // namespace

Action warmup_decide(WarmUp kind, const DecisionContext& ctx) noexcept {
    const Action run = ctx.spot_available_now ? Action::RunSpot : Action::RunOnDemand;
    switch (kind) {
    case WarmUp::Greedy:
        return run;
    case WarmUp::Uniform:
        return behind_uniform_line(ctx) ? run : Action::Idle;
    case WarmUp::None:
        break;
    }
    return Action::Idle;
}

Action decide_uniform_progress(const DecisionContext& ctx) noexcept {
    return apply_no_return_override(ctx, warmup_decide(WarmUp::Uniform, ctx));
}

Action decide_on_demand_only(const DecisionContext& ctx) noexcept {
    (void)ctx;
    return Action::RunOnDemand;
}

double ross_delta(double remaining, double cost_ratio) {
    return remaining / (1.0 + std::sqrt(cost_ratio));
}

Interval sample_interval(double xi1, double remaining, double delta, Rng& rng) {
    if (!(delta > 0.0)) {
        throw InvalidArgument(fmt::format("window length must be positive, got {}", delta));
    }
    if (delta > remaining + kEps) {
        throw InvalidArgument(fmt::format("window length {} exceeds remaining work {}", delta, remaining));
    }
    const auto last = static_cast<long long>(std::floor(remaining - delta + kEps));
    std::uniform_int_distribution<long long> offset(0, last);
    const double start = xi1 + static_cast<double>(offset(rng));
    return {start, start + delta};
}

namespace {

void enter(RossState& st, RossPhase phase) {
    st.phase = phase;
    st.history.push_back(phase);
}

void open_window(const DecisionContext& ctx, RossState& st, Rng& rng) {
    const Job& job = *ctx.job;
    const double remaining = ctx.remaining();
    double delta = std::ceil(ross_delta(remaining, ctx.cost_model->cost_ratio()) - kEps);
    double length = std::ceil(remaining - kEps);
    if (st.warmup == WarmUp::None) {
        // Cap the randomized phase so it ends no later than the point of no
        // return even if the window never sees spot.
        const double cap = std::floor((job.deadline() - ctx.t) - remaining + delta + kEps);
        length = std::min(length, cap);
    }
    length = std::max(length, 0.0);
    delta = std::min(delta, length);

    st.xi1 = ctx.t;
    st.delta = delta;
    st.window_end = ctx.t + length;
    st.on_demand_window = delta > 0.0 ? sample_interval(ctx.t, length, delta, rng) : Interval{ctx.t, ctx.t};
    enter(st, RossPhase::RandomWindow);
}

}  // namespace

Action decide_ross(const DecisionContext& ctx, RossState& st, Rng& rng) {
    if (ctx.remaining() <= kEps) {
        if (st.phase != RossPhase::Done) {
            enter(st, RossPhase::Done);
        }
        return Action::Idle;
    }

    if (st.phase == RossPhase::WarmUp) {
        bool exit_warmup = st.warmup == WarmUp::None;
        if (!exit_warmup) {
            const double ratio = (ctx.job->deadline() - ctx.t) / ctx.remaining();
            exit_warmup = ratio >= critical_threshold(ctx.cost_model->cost_ratio()) - 1e-12;
        }
        if (!exit_warmup) {
            return apply_no_return_override(ctx, warmup_decide(st.warmup, ctx));
        }
        open_window(ctx, st, rng);
    }

    if (st.phase == RossPhase::RandomWindow) {
        if (ctx.t + kEps < st.window_end) {
            Action a = Action::RunOnDemand;
            if (!st.on_demand_window.contains(ctx.t)) {
                a = ctx.spot_available_now ? Action::RunSpot : Action::Idle;
            }
            return apply_no_return_override(ctx, a);
        }
        enter(st, RossPhase::CatchUp);
    }

    if (st.phase == RossPhase::CatchUp) {
        if (!ctx.no_return()) {
            return ctx.spot_available_now ? Action::RunSpot : Action::Idle;
        }
        st.xi2 = ctx.t;
        enter(st, RossPhase::Committed);
    }

    return Action::RunOnDemand;
}

RossPolicy::RossPolicy(WarmUp warmup, std::uint64_t seed) {
    state_.warmup = warmup;
    reset(seed);
}

std::string_view RossPolicy::id() const noexcept {
    switch (state_.warmup) {
    case WarmUp::Greedy:
        return "ross-greedy";
    case WarmUp::Uniform:
        return "ross-uniform";
    case WarmUp::None:
        return "ross-window";
    }
    return "ross";
}

void RossPolicy::reset(std::uint64_t seed) {
    const WarmUp w = state_.warmup;
    state_ = RossState{};
    state_.warmup = w;
    state_.rng_seed = seed;
    rng_.seed(seed);
}

const std::vector<std::string>& policy_ids() {
    static const std::vector<std::string> ids{"greedy",      "uniform-progress", "on-demand",
                                              "ross-greedy", "ross-uniform",     "ross-window"};
    return ids;
}

std::unique_ptr<Policy> make_policy(std::string_view id, std::uint64_t seed) {
    if (id == "greedy") {
        return std::make_unique<GreedyPolicy>();
    }
    if (id == "uniform-progress") {
        return std::make_unique<UniformProgressPolicy>();
    }
    if (id == "on-demand") {
        return std::make_unique<OnDemandPolicy>();
    }
    if (id == "ross-greedy") {
        return std::make_unique<RossPolicy>(WarmUp::Greedy, seed);
    }
    if (id == "ross-uniform") {
        return std::make_unique<RossPolicy>(WarmUp::Uniform, seed);
    }
    if (id == "ross-window") {
        return std::make_unique<RossPolicy>(WarmUp::None, seed);
    }
    throw InvalidArgument(fmt::format("unknown policy '{}'", id));
}

bool Policy::probe_spot(const DecisionContext& ctx) const {
    auto probe = clone();
    return probe->decide(ctx) == Action::RunSpot;
}

bool RossPolicy::probe_spot(const DecisionContext& ctx) const {
    RossState st = state_;
    if (st.phase != RossPhase::WarmUp) {
        // The generator is only drawn when the window opens.
        static thread_local Rng unused;
        return decide_ross(ctx, st, unused) == Action::RunSpot;
    }
    Rng rng = rng_;
    return decide_ross(ctx, st, rng) == Action::RunSpot;
}

bool would_take_spot(const Policy& policy, DecisionContext ctx) {
    ctx.spot_available_now = true;
    return policy.probe_spot(ctx);
}

}  // namespace spotsched
