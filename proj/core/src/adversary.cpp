#include <spotsched/adversary.hpp>
#include <spotsched/oracle.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace spotsched {

namespace {

using Rng64 = std::mt19937_64;

// Portable draws; the standard distributions are implementation-defined.
double unit(Rng64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int uniform_between(Rng64& rng, int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(rng() % span);
}

void require_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument(fmt::format("{} must be a probability, got {}", name, p));
    }
}

std::size_t horizon_steps(const Job& job) {
    return static_cast<std::size_t>(std::ceil(job.deadline() - kEps));
}

void require_delay_free(const CostModel& cm, const char* what) {
    if (cm.changeover_delay() != 0.0) {
        throw InvalidArgument(fmt::format("the {} is defined for d = 0 only", what));
    }
}

}  // namespace

SpotTrace generate_synthetic_trace(const SyntheticKind& kind, std::size_t horizon, double step_seconds,
                                   std::uint64_t seed) {
    if (horizon == 0) {
        throw InvalidArgument("synthetic trace horizon must be positive");
    }
    Rng64 rng(seed);
    std::vector<std::uint8_t> avail(horizon, 0);
    MetaMap meta;
    meta["seed"] = std::to_string(seed);

    if (const auto* b = std::get_if<BernoulliTrace>(&kind)) {
        require_probability(b->p, "bernoulli p");
        for (auto& a : avail) {
            a = unit(rng) < b->p ? 1 : 0;
        }
        meta["generator"] = fmt::format("bernoulli({})", b->p);
    } else if (const auto* m = std::get_if<MarkovTrace>(&kind)) {
        require_probability(m->p_up, "markov p_up");
        require_probability(m->p_down, "markov p_down");
        if (m->p_up + m->p_down <= 0.0) {
            throw InvalidArgument("markov chain needs p_up + p_down > 0");
        }
        bool up = unit(rng) < m->p_up / (m->p_up + m->p_down);
        for (auto& a : avail) {
            a = up ? 1 : 0;
            up = up ? unit(rng) >= m->p_down : unit(rng) < m->p_up;
        }
        meta["generator"] = fmt::format("markov({},{})", m->p_up, m->p_down);
    } else {
        const auto& s = std::get<SegmentTrace>(kind);
        if (s.up_min < 1 || s.down_min < 1 || s.up_min > s.up_max || s.down_min > s.down_max) {
            throw InvalidArgument("segment lengths need 1 <= min <= max");
        }
        const double mean_up = 0.5 * (s.up_min + s.up_max);
        const double mean_down = 0.5 * (s.down_min + s.down_max);
        bool up = unit(rng) < mean_up / (mean_up + mean_down);
        std::size_t i = 0;
        while (i < horizon) {
            const int len = up ? uniform_between(rng, s.up_min, s.up_max) : uniform_between(rng, s.down_min, s.down_max);
            for (int k = 0; k < len && i < horizon; ++k, ++i) {
                avail[i] = up ? 1 : 0;
            }
            up = !up;
        }
        meta["generator"] = fmt::format("segments({},{},{},{})", s.up_min, s.up_max, s.down_min, s.down_max);
    }
    return SpotTrace(step_seconds, std::move(avail), std::move(meta));
}

// ---------------------------------------------------------------------------
// Killer
// ---------------------------------------------------------------------------

namespace {

class KillerSource final : public AvailabilitySource {
public:
    explicit KillerSource(std::size_t horizon) : avail_(horizon, 0) {}

    bool available(const RunView& view) override {
        const bool a = !would_take_spot(*view.policy, view.context(true));
        avail_[view.step] = a ? 1 : 0;
        return a;
    }
    std::size_t horizon() const noexcept override { return avail_.size(); }

    std::vector<std::uint8_t> take() { return std::move(avail_); }

private:
    std::vector<std::uint8_t> avail_;
};

SpotTrace killer_trace(Policy& policy, const Job& job, const CostModel& cm, ExecutionLog* log_out) {
    KillerSource source(horizon_steps(job));
    ExecutionLog log = run(policy, source, job, cm, log_out != nullptr);
    MetaMap meta{{"generator", "adaptive-killer"}, {"policy", log.policy_id}};
    if (log_out != nullptr) {
        *log_out = std::move(log);
    }
    return SpotTrace(1.0, source.take(), std::move(meta));
}

}  // namespace

KillerResult run_adaptive_killer(const Policy& policy, const Job& job, const CostModel& cm) {
    if (policy.randomized()) {
        throw InvalidArgument(
            fmt::format("the adaptive killer needs a deterministic policy; '{}' is randomized", policy.id()));
    }
    auto instance = policy.clone();
    instance->reset(0);
    ExecutionLog log;
    SpotTrace trace = killer_trace(*instance, job, cm, &log);
    const double opt = opt_cost_with_delays(trace, job, cm);
    const double cost = log.total_cost;
    return {std::move(log), std::move(trace), opt, cost / opt};
}

ObliviousKillerResult run_oblivious_killer(const Policy& policy, const Job& job, const CostModel& cm,
                                           std::uint64_t replica_seed, int runs, std::uint64_t base_seed) {
    auto replica = policy.clone();
    replica->reset(replica_seed);
    SpotTrace trace = killer_trace(*replica, job, cm, nullptr);
    trace.meta()["replica_seed"] = std::to_string(replica_seed);

    ObliviousKillerResult out{std::move(trace), 0.0, {}, 0.0};
    out.opt_cost = opt_cost_with_delays(out.trace, job, cm);
    SimConfig cfg;
    cfg.monte_carlo_runs = runs;
    cfg.base_seed = base_seed;
    cfg.record_steps = false;
    out.stats = run_monte_carlo(policy, out.trace, job, cm, cfg);
    out.ratio = out.stats.mean_cost / out.opt_cost;
    return out;
}

// ---------------------------------------------------------------------------
// Parametric adversary
// ---------------------------------------------------------------------------

namespace {

class ParametricSource final : public AvailabilitySource {
public:
    ParametricSource(const ParametricAdversary& spec, const Job& job)
        : spec_(spec), job_(job), z_(static_cast<std::size_t>(std::llround(spec.z))),
          avail_(horizon_steps(job), 0) {
        for (int j = 0; j < spec.alpha; ++j) {
            const auto at = static_cast<std::size_t>(
                std::floor(static_cast<double>(j) * static_cast<double>(z_) / spec.alpha + kEps));
            avail_[at] = 1;
        }
    }

    bool available(const RunView& view) override {
        const std::size_t t = view.step;
        if (t < z_) {
            return avail_[t] != 0;
        }
        settle(view.state->phi);
        const double r = job_.compute_length() - view.state->phi;
        const double left = job_.deadline() - static_cast<double>(t);
        const bool ahead = budget_ > r + kEps;
        const bool a = budget_ > kEps && (ahead || budget_ >= left - kEps);
        if (a) {
            if (ahead) {
                epsilon_ += std::min(1.0, budget_);
            }
            budget_ = std::max(0.0, budget_ - 1.0);
        }
        avail_[t] = a ? 1 : 0;
        return a;
    }
    std::size_t horizon() const noexcept override { return avail_.size(); }

    /// Fixes gamma and the owed budget the first time z is reached.
    void settle(double phi) {
        if (settled_) {
            return;
        }
        settled_ = true;
        progress_at_z_ = phi;
        switch (spec_.mode) {
        case GammaMode::Zero:
            gamma_ = 0.0;
            break;
        case GammaMode::MatchRealized:
            gamma_ = std::max(0.0, phi - spec_.alpha);
            break;
        case GammaMode::Fixed:
            gamma_ = spec_.gamma;
            break;
        }
        budget_ = std::max(0.0, job_.compute_length() - spec_.alpha - gamma_);
    }

    /// Hands the owed spot to the adversary after the policy finished.
    /// Returns the leftover time, negative if the adversary cannot finish.
    double finish(double completion) {
        const auto from = static_cast<std::size_t>(std::ceil(completion - kEps));
        const double room = job_.deadline() - static_cast<double>(from);
        double owed = budget_;
        for (std::size_t t = from; t < avail_.size() && owed > kEps; ++t) {
            avail_[t] = 1;
            owed -= 1.0;
        }
        return room - budget_;
    }

    double gamma() const noexcept { return gamma_; }
    double epsilon() const noexcept { return epsilon_; }
    double progress_at_z() const noexcept { return progress_at_z_; }
    std::vector<std::uint8_t> take() { return std::move(avail_); }

private:
    ParametricAdversary spec_;
    Job job_;
    std::size_t z_;
    std::vector<std::uint8_t> avail_;
    bool settled_ = false;
    double gamma_ = 0.0;
    double budget_ = 0.0;
    double epsilon_ = 0.0;
    double progress_at_z_ = 0.0;
};

void validate(const ParametricAdversary& spec, const Job& job, const CostModel& cm) {
    require_delay_free(cm, "parametric adversary");
    const double l = job.compute_length();
    if (!(spec.z >= 1.0) || spec.z > job.deadline() + kEps) {
        throw InvalidArgument(fmt::format("phase length z = {} must lie in [1, D]", spec.z));
    }
    if (spec.alpha < 0 || spec.alpha > std::llround(spec.z) || spec.alpha > l + kEps) {
        throw InvalidArgument(fmt::format("alpha = {} must lie in [0, min(z, L)]", spec.alpha));
    }
    if (spec.mode == GammaMode::Fixed && (spec.gamma < 0.0 || spec.gamma > l - spec.alpha + kEps)) {
        throw InvalidArgument(fmt::format("gamma = {} must lie in [0, L - alpha]", spec.gamma));
    }
    const double gamma = spec.mode == GammaMode::Fixed ? spec.gamma : 0.0;
    if (spec.mode != GammaMode::MatchRealized &&
        job.deadline() - std::round(spec.z) < l - spec.alpha - gamma - kEps) {
        throw InvalidArgument("infeasible adversary: its own spot after z does not fit before D");
    }
}

ParametricRun parametric_once(const ParametricAdversary& spec, Policy& policy, const Job& job,
                              const CostModel& cm, std::uint64_t seed, bool record) {
    ParametricSource source(spec, job);
    policy.reset(seed);
    ParametricRun out;
    out.log = run(policy, source, job, cm, record);
    out.log.seed = seed;
    source.settle(job.compute_length());
    out.adversary_slack = source.finish(out.log.completion_time);
    out.adversary_feasible = out.adversary_slack >= -kEps;
    out.alg_cost = out.log.total_cost;
    out.gamma = source.gamma();
    out.adv_cost = adversary_cost(out.gamma, cm.cost_ratio(), job.compute_length());
    out.epsilon = source.epsilon();
    out.progress_at_z = source.progress_at_z();
    if (record) {
        out.trace = SpotTrace(1.0, source.take(), {{"generator", "parametric-adversary"}});
    }
    return out;
}

}  // namespace

ParametricRun build_parametric_run(const ParametricAdversary& spec, Policy& policy, const Job& job,
                                   const CostModel& cm, std::uint64_t seed) {
    validate(spec, job, cm);
    return parametric_once(spec, policy, job, cm, seed, true);
}

ParametricStats run_parametric_monte_carlo(const ParametricAdversary& spec, const Policy& policy, const Job& job,
                                           const CostModel& cm, int runs, std::uint64_t base_seed) {
    validate(spec, job, cm);
    if (runs < 1) {
        throw InvalidArgument("runs must be >= 1");
    }
    auto instance = policy.clone();
    ParametricStats stats;
    double alg = 0.0;
    double adv = 0.0;
    double eps = 0.0;
    for (int i = 0; i < runs; ++i) {
        const auto r = parametric_once(spec, *instance, job, cm, base_seed + static_cast<std::uint64_t>(i), false);
        alg += r.alg_cost;
        adv += r.adv_cost;
        eps += r.epsilon;
        stats.infeasible += r.adversary_feasible ? 0 : 1;
    }
    stats.mean_alg_cost = alg / runs;
    stats.mean_adv_cost = adv / runs;
    stats.mean_epsilon = eps / runs;
    stats.ratio = stats.mean_alg_cost / stats.mean_adv_cost;
    return stats;
}

// ---------------------------------------------------------------------------
// Tight-deadline adversary
// ---------------------------------------------------------------------------

namespace {

class TightSource final : public AvailabilitySource {
public:
    TightSource(double last_free, const Job& job) : last_free_(last_free), job_(job), avail_(horizon_steps(job), 0) {}

    bool available(const RunView& view) override {
        const double t = static_cast<double>(view.step);
        const double need = job_.compute_length() - progress_;
        bool a = true;
        if (t + kEps >= last_free_) {
            const bool forced = need > kEps && need >= job_.deadline() - t - kEps;
            a = forced || !would_take_spot(*view.policy, view.context(true));
        }
        if (a) {
            progress_ += std::min(1.0, std::max(0.0, need));
        }
        avail_[view.step] = a ? 1 : 0;
        return a;
    }
    std::size_t horizon() const noexcept override { return avail_.size(); }

    void finish(double completion) {
        double need = job_.compute_length() - progress_;
        for (auto t = static_cast<std::size_t>(std::ceil(completion - kEps)); t < avail_.size() && need > kEps; ++t) {
            avail_[t] = 1;
            need -= 1.0;
        }
    }
    std::vector<std::uint8_t> take() { return std::move(avail_); }

private:
    double last_free_;
    Job job_;
    std::vector<std::uint8_t> avail_;
    double progress_ = 0.0;
};

TightRun tight_once(Policy& policy, double last_free, const Job& job, const CostModel& cm, std::uint64_t seed,
                    bool record) {
    TightSource source(last_free, job);
    policy.reset(seed);
    TightRun out;
    out.log = run(policy, source, job, cm, record);
    out.log.seed = seed;
    out.alg_cost = out.log.total_cost;
    out.adv_cost = job.compute_length();
    out.ratio = out.alg_cost / out.adv_cost;
    if (record) {
        source.finish(out.log.completion_time);
        out.trace = SpotTrace(1.0, source.take(), {{"generator", "tight-deadline-adversary"}});
    }
    return out;
}

void validate_tight(double last_free, const Job& job, const CostModel& cm) {
    require_delay_free(cm, "tight-deadline adversary");
    if (!(last_free >= 0.0) || last_free > job.deadline() + kEps) {
        throw InvalidArgument(fmt::format("T = {} must lie in [0, D]", last_free));
    }
}

}  // namespace

TightRun run_tight_deadline_adversary(Policy& policy, double last_free, const Job& job, const CostModel& cm,
                                      std::uint64_t seed) {
    validate_tight(last_free, job, cm);
    return tight_once(policy, last_free, job, cm, seed, true);
}

TightStats run_tight_monte_carlo(const Policy& policy, double last_free, const Job& job, const CostModel& cm,
                                 int runs, std::uint64_t base_seed) {
    validate_tight(last_free, job, cm);
    if (runs < 1) {
        throw InvalidArgument("runs must be >= 1");
    }
    auto instance = policy.clone();
    double total = 0.0;
    for (int i = 0; i < runs; ++i) {
        total += tight_once(*instance, last_free, job, cm, base_seed + static_cast<std::uint64_t>(i), false).alg_cost;
    }
    TightStats stats;
    stats.mean_alg_cost = total / runs;
    stats.adv_cost = job.compute_length();
    stats.ratio = stats.mean_alg_cost / stats.adv_cost;
    return stats;
}

double tight_adversary_horizon(const Job& job, double cost_ratio) {
    const double delta = std::ceil(ross_delta(job.compute_length(), cost_ratio) - kEps);
    return std::min(job.deadline(), job.deadline() - job.compute_length() + delta);
}

}  // namespace spotsched
