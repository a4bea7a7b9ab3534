#include <spotsched/oracle.hpp>

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace spotsched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double available_spot_time(const SpotTrace& trace, const Job& job) {
    const double deadline = job.deadline();
    const auto whole = static_cast<std::size_t>(std::floor(deadline + kEps));
    double a = static_cast<double>(trace.available_steps(whole));
    const double frac = deadline - static_cast<double>(whole);
    if (frac > kEps && whole < trace.size() && trace.available(whole)) {
        a += frac;
    }
    return a;
}

double opt_cost_delay_free(const SpotTrace& trace, const Job& job, double cost_ratio) {
    require_cost_ratio(cost_ratio);
    trace.require_horizon(job);
    const double l = job.compute_length();
    const double a = available_spot_time(trace, job);
    return std::min(l, a) + cost_ratio * std::max(0.0, l - a);
}

double opt_cost_with_delays(const SpotTrace& trace, const Job& job, const CostModel& cm) {
    trace.require_horizon(job);
    const double l = job.compute_length();
    const double deadline = job.deadline();
    const double d = cm.changeover_delay();
    const bool billed = cm.bill_during_changeover();
    if (job.initial_slack() < d - kEps) {
        throw InvalidArgument("no schedule can absorb a changeover before the deadline");
    }

    const auto steps = static_cast<int>(std::ceil(deadline - kEps));
    const int cap = std::max(1, static_cast<int>(std::ceil(d - kEps)));
    // With whole-step delays progress is an integer, so b can hold it
    // directly and the changeover count drops out of the state.
    const bool whole = std::abs(d - std::round(d)) < 1e-9;
    const bool track_n = d > 0.0 && !whole;
    const int entry_gain = whole ? cap - static_cast<int>(std::lround(d)) : cap;
    const int nmax = track_n ? std::min(steps, static_cast<int>(std::floor((deadline - l) / d + kEps))) : 0;

    const std::size_t nb = static_cast<std::size_t>(steps) + 1;
    const std::size_t nn = static_cast<std::size_t>(nmax) + 1;
    const std::size_t nk = static_cast<std::size_t>(cap) + 1;
    const std::size_t size = 3 * nk * nb * nn;
    auto index = [&](int mode, int k, int b, int n) {
        return ((static_cast<std::size_t>(mode) * nk + static_cast<std::size_t>(k)) * nb +
                static_cast<std::size_t>(b)) * nn + static_cast<std::size_t>(n);
    };

    std::vector<double> cur(size, kInf);
    std::vector<double> next(size, kInf);
    cur[index(0, 0, 0, 0)] = 0.0;
    double best = kInf;

    for (int i = 0; i < steps; ++i) {
        std::fill(next.begin(), next.end(), kInf);
        const bool avail = trace.available(static_cast<std::size_t>(i));
        const int bmax = std::min(i, steps);
        for (int mode = 0; mode < 3; ++mode) {
            for (int k = 0; k <= (mode == 0 ? 0 : cap); ++k) {
                for (int b = 0; b <= bmax; ++b) {
                    for (int n = 0; n <= nmax; ++n) {
                        const double c = cur[index(mode, k, b, n)];
                        if (c == kInf) {
                            continue;
                        }
                        const bool settled = mode == 0 || k >= cap;
                        if (settled) {
                            double& slot = next[index(0, 0, b, n)];
                            slot = std::min(slot, c);
                        }
                        const double progress = b - (track_n ? n * d : 0.0);
                        const double remaining = l - progress;
                        for (int target = 1; target <= 2; ++target) {
                            if (target == 1 && !avail) {
                                continue;
                            }
                            const bool cont = mode == target;
                            if (!cont && !settled) {
                                continue;
                            }
                            const int k0 = cont ? k : 0;
                            const double co = std::clamp(d - k0, 0.0, 1.0);
                            const double gain = 1.0 - co;
                            const double rate = target == 1 ? 1.0 : cm.cost_ratio();
                            if (gain >= remaining - kEps) {
                                if (i + co + remaining <= deadline + kEps) {
                                    best = std::min(best, c + rate * (billed ? co + remaining : remaining));
                                }
                                continue;
                            }
                            const double nc = c + rate * (billed ? 1.0 : gain);
                            int k1 = cap;
                            int b1 = b;
                            int n1 = n;
                            if (k0 >= cap) {
                                b1 = b + 1;
                            } else if (k0 + 1 >= cap) {
                                b1 = b + entry_gain;
                                n1 = track_n ? n + 1 : n;
                            } else {
                                k1 = k0 + 1;
                            }
                            if (n1 > nmax || b1 > steps) {
                                continue;
                            }
                            double& slot = next[index(target, k1, b1, n1)];
                            slot = std::min(slot, nc);
                        }
                    }
                }
            }
        }
        std::swap(cur, next);
    }

    if (best == kInf) {
        throw InvalidArgument("no schedule completes the job by its deadline");
    }
    return best;
}

// ---------------------------------------------------------------------------
// Game
// ---------------------------------------------------------------------------

double gamma_star(double z, double delta, double alpha) {
    if (z <= 0.0) {
        return 0.0;
    }
    return delta * (1.0 - alpha / z);
}

double expected_alg_cost(double z, double delta, double alpha, double gamma, double cost_ratio,
                         double compute_length) {
    const double gs = gamma_star(z, delta, alpha);
    if (gamma < gs) {
        return compute_length + (cost_ratio - 1.0) * delta;
    }
    const double overlap = z > 0.0 ? alpha * (1.0 - delta / z) : 0.0;
    return compute_length + (cost_ratio - 1.0) * (compute_length - overlap);
}

double adversary_cost(double gamma, double cost_ratio, double compute_length) {
    return compute_length + (cost_ratio - 1.0) * gamma;
}

double game_ratio(double cost_ratio, double alpha, double gamma, double z, double delta, double compute_length) {
    return expected_alg_cost(z, delta, alpha, gamma, cost_ratio, compute_length) /
           adversary_cost(gamma, cost_ratio, compute_length);
}

double cr_function(double cost_ratio, double alpha, double z, double delta, double compute_length) {
    const double s1 = game_ratio(cost_ratio, alpha, 0.0, z, delta, compute_length);
    const double s2 = game_ratio(cost_ratio, alpha, gamma_star(z, delta, alpha), z, delta, compute_length);
    return std::max(s1, s2);
}

double delta_star(double z, double cost_ratio, double compute_length) {
    require_cost_ratio(cost_ratio);
    if (!(z > 0.0)) {
        throw InvalidArgument(fmt::format("delta_star needs z > 0, got {}", z));
    }
    const double b = compute_length * (cost_ratio + 1.0) / (cost_ratio - 1.0) - z;
    const double c = z * compute_length / (cost_ratio - 1.0);
    const double root = std::sqrt(b * b + 4.0 * c);
    // Rationalized form of (-b + root) / 2; no cancellation when b > 0.
    return b > 0.0 ? 2.0 * c / (b + root) : 0.5 * (root - b);
}

double delta_star_residual(double z, double delta, double cost_ratio, double compute_length) {
    const double rho = delta / z;
    const double w = (cost_ratio - 1.0) * (z / compute_length);
    return rho * rho + rho * ((cost_ratio + 1.0) / w - 1.0) - 1.0 / w;
}

double adversary_max(double cost_ratio, double z, double delta, double compute_length,
                     const MinimaxOptions& options, double* worst_alpha, double* worst_gamma) {
    double best = -kInf;
    const int na = z > 0.0 ? std::max(2, options.alpha_points) : 1;
    auto consider = [&](double alpha, double gamma) {
        const double r = game_ratio(cost_ratio, alpha, gamma, z, delta, compute_length);
        if (r > best) {
            best = r;
            if (worst_alpha != nullptr) {
                *worst_alpha = alpha;
            }
            if (worst_gamma != nullptr) {
                *worst_gamma = gamma;
            }
        }
    };
    for (int a = 0; a < na; ++a) {
        const double alpha = na == 1 ? 0.0 : z * a / (na - 1);
        const double gs = gamma_star(z, delta, alpha);
        consider(alpha, 0.0);
        consider(alpha, gs);
        if (options.full_gamma_grid) {
            const int ng = std::max(2, options.gamma_points);
            for (int g = 0; g < ng; ++g) {
                consider(alpha, compute_length * g / (ng - 1));
            }
        }
    }
    return best;
}

MinimaxResult minimax_search(double cost_ratio, double compute_length, double deadline, double resolution,
                             const MinimaxOptions& options) {
    require_cost_ratio(cost_ratio);
    const Job job(compute_length, deadline);
    if (!(resolution > 0.0)) {
        throw InvalidArgument(fmt::format("grid resolution must be positive, got {}", resolution));
    }
    const double l = compute_length;
    auto zmax = [&](double delta) { return std::min(l, deadline - l + delta); };

    MinimaxResult res;
    res.cost_ratio = cost_ratio;
    res.compute_length = l;
    res.deadline = deadline;
    res.resolution = resolution;
    res.options = options;

    MinimaxPoint incumbent;
    incumbent.value = kInf;
    auto evaluate = [&](double z, double delta) {
        ++res.evaluations;
        const double v = adversary_max(cost_ratio, z, delta, l, options);
        if (v < incumbent.value) {
            incumbent = {z, delta, z > 0.0 ? delta / z : 0.0, v};
        }
    };

    const auto nd = static_cast<int>(std::floor(l / resolution + kEps));
    for (int i = 0; i <= nd + 1; ++i) {
        const double delta = std::min(l, i * resolution);
        const double top = zmax(delta);
        for (int j = 0;; ++j) {
            const double z = std::min(top, delta + j * resolution);
            evaluate(z, delta);
            if (z >= top) {
                break;
            }
        }
        if (delta >= l) {
            break;
        }
    }
    res.coarse = incumbent;

    for (double h = resolution / 2.0; options.refine_to > 0.0 && h >= options.refine_to * l; h /= 2.0) {
        const MinimaxPoint center = incumbent;
        for (int a = -4; a <= 4; ++a) {
            const double delta = std::clamp(center.delta + a * h, 0.0, l);
            const double top = zmax(delta);
            for (int b = -4; b <= 4; ++b) {
                evaluate(std::clamp(center.z + b * h, delta, top), delta);
            }
            evaluate(top, delta);
        }
    }
    res.point = incumbent;
    (void)adversary_max(cost_ratio, res.point.z, res.point.delta, l, options, &res.worst_alpha, &res.worst_gamma);

    res.theory_value = theoretical_cr_ross(job, cost_ratio);
    res.theory_delta = l / (1.0 + std::sqrt(cost_ratio));
    res.theory_z = std::min(l, deadline - l + res.theory_delta);
    const bool value_ok = std::abs(res.point.value - res.theory_value) <= options.tolerance * res.theory_value;
    bool location_ok = true;
    if (loose_deadline(job, cost_ratio)) {
        location_ok = std::abs(res.point.z - res.theory_z) <= 0.05 * res.theory_z &&
                      std::abs(res.point.delta - res.theory_delta) <= 0.05 * res.theory_delta;
    }
    res.within_tolerance = value_ok && location_ok;
    return res;
}

std::string minimax_certificate_json(const MinimaxResult& r) {
    auto point = [](const MinimaxPoint& p) {
        return nlohmann::ordered_json{{"z", p.z}, {"delta", p.delta}, {"rho", p.rho}, {"value", p.value}};
    };
    nlohmann::ordered_json j;
    j["kind"] = "minimax";
    j["inputs"] = {{"K", r.cost_ratio}, {"L", r.compute_length}, {"D", r.deadline}};
    j["grid"] = {{"resolution", r.resolution},
                 {"alpha_points", r.options.alpha_points},
                 {"gamma", r.options.full_gamma_grid ? "grid" : "two-point"},
                 {"refine_to", r.options.refine_to},
                 {"evaluations", r.evaluations}};
    j["coarse_argmin"] = point(r.coarse);
    j["argmin"] = point(r.point);
    j["argmax"] = {{"alpha", r.worst_alpha}, {"gamma", r.worst_gamma}};
    j["value"] = r.point.value;
    j["theory"] = {{"value", r.theory_value}, {"z", r.theory_z}, {"delta", r.theory_delta}};
    j["tolerance"] = r.options.tolerance;
    j["verdict"] = r.within_tolerance ? "pass" : "fail";
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Fluid lower bound
// ---------------------------------------------------------------------------

double fluid_bound_scalar(double s, double cost_ratio) {
    const double first = 1.0 + (cost_ratio - 1.0) * s;
    return std::max(first, cost_ratio / first);
}

double tight_deadline_bound(double cost_ratio, double compute_length, double deadline) {
    return 1.0 + (cost_ratio - 1.0) * (2.0 - deadline / compute_length);
}

double profile_mass(const OnDemandProfile& profile, double upto) {
    double mass = 0.0;
    for (std::size_t i = 0; i < profile.p.size(); ++i) {
        const double lo = static_cast<double>(i) * profile.dt;
        if (lo >= upto) {
            break;
        }
        mass += profile.p[i] * (std::min(upto, lo + profile.dt) - lo);
    }
    return mass;
}

double fluid_lower_bound(const OnDemandProfile& profile, double cost_ratio, double compute_length, double deadline) {
    require_cost_ratio(cost_ratio);
    const Job job(compute_length, deadline);
    if (!(profile.dt > 0.0)) {
        throw InvalidArgument("profile dt must be positive");
    }
    if (profile.last_random < 0.0 || profile.last_random > deadline + kEps) {
        throw InvalidArgument(fmt::format("profile T = {} must lie in [0, D]", profile.last_random));
    }
    if (static_cast<double>(profile.p.size()) * profile.dt > deadline + kEps) {
        throw InvalidArgument("profile extends past the deadline");
    }
    for (std::size_t i = 0; i < profile.p.size(); ++i) {
        const double v = profile.p[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidArgument(fmt::format("profile value {} at step {} is not a probability", v, i));
        }
        if (static_cast<double>(i) * profile.dt + kEps >= profile.last_random && v != 1.0) {
            throw InvalidArgument(fmt::format("profile must be 1 from T = {} on", profile.last_random));
        }
    }

    const double s = profile_mass(profile, deadline) / compute_length;
    double bound = fluid_bound_scalar(s, cost_ratio);
    if (!loose_deadline(job, cost_ratio)) {
        const double t = profile.last_random;
        const double early = profile_mass(profile, t);
        if (t > deadline - compute_length + early + kEps) {
            throw InvalidArgument(
                fmt::format("T = {} passes the point of no return when no spot ever appears", t));
        }
        const double spot_share = (t - early) / compute_length;
        bound = std::max(bound, 1.0 + (cost_ratio - 1.0) * (1.0 - spot_share));
    }
    return bound;
}

}  // namespace spotsched
