#include <spotsched/adversary.hpp>
#include <spotsched/engine.hpp>
#include <spotsched/experiment.hpp>
#include <spotsched/ingest.hpp>
#include <spotsched/oracle.hpp>
#include <spotsched/policies.hpp>

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

namespace spotsched {

double cost_savings_pct(double alg_cost, double cost_ratio, double compute_length, double changeover, bool billed) {
    const double on_demand = cost_ratio * (compute_length + (billed ? changeover : 0.0));
    return 100.0 * (1.0 - alg_cost / on_demand);
}

double overhead_to_opt_pct(double alg_cost, double opt_cost) {
    if (!(opt_cost > 0.0)) {
        throw InvalidArgument(fmt::format("OPT cost must be positive, got {}", opt_cost));
    }
    return 100.0 * (alg_cost / opt_cost - 1.0);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InvalidArgument("line fit needs two or more paired points");
    }
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw InvalidArgument("line fit needs distinct x values");
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

// ---------------------------------------------------------------------------
// Trace specs
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            std::string part(s.substr(start, i - start));
            const auto b = part.find_first_not_of(" \t");
            const auto e = part.find_last_not_of(" \t");
            out.push_back(b == std::string::npos ? std::string{} : part.substr(b, e - b + 1));
            start = i + 1;
        }
    }
    return out;
}

double to_double(const std::string& s, std::string_view what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw InvalidArgument(fmt::format("bad {} '{}'", what, s));
    }
    return v;
}

std::uint64_t to_u64(const std::string& s, std::string_view what) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || s.front() == '-') {
        throw InvalidArgument(fmt::format("bad {} '{}'", what, s));
    }
    return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string& s, std::string_view what) {
    if (s == "1" || s == "true" || s == "yes") {
        return true;
    }
    if (s == "0" || s == "false" || s == "no") {
        return false;
    }
    throw InvalidArgument(fmt::format("bad {} '{}'", what, s));
}

SyntheticKind synthetic_kind(const std::vector<std::string>& parts) {
    const std::string& kind = parts.front();
    auto want = [&](std::size_t n) {
        if (parts.size() != n + 1) {
            throw InvalidArgument(fmt::format("trace '{}' needs {} parameters", kind, n));
        }
    };
    if (kind == "bernoulli") {
        want(1);
        return BernoulliTrace{to_double(parts[1], "bernoulli p")};
    }
    if (kind == "markov") {
        want(2);
        return MarkovTrace{to_double(parts[1], "markov p_up"), to_double(parts[2], "markov p_down")};
    }
    if (kind == "segments") {
        want(4);
        auto i = [&](std::size_t k) { return static_cast<int>(to_double(parts[k], "segment length")); };
        return SegmentTrace{i(1), i(2), i(3), i(4)};
    }
    throw InvalidArgument(fmt::format("unknown trace kind '{}'", kind));
}

}  // namespace

bool TraceSpec::synthetic() const {
    return spec.rfind("file:", 0) != 0;
}

std::string TraceSpec::id() const {
    if (!synthetic()) {
        return std::filesystem::path(spec.substr(5)).stem().string();
    }
    std::string out = spec;
    std::replace(out.begin(), out.end(), ':', '-');
    std::replace(out.begin(), out.end(), ',', '_');
    return out;
}

SpotTrace TraceSpec::materialize(std::size_t horizon, std::uint64_t seed, double step_seconds) const {
    if (!synthetic()) {
        return load_trace(spec.substr(5));
    }
    SpotTrace t = generate_synthetic_trace(synthetic_kind(split(spec, ':')), horizon, step_seconds, seed);
    t.meta()["spec"] = spec;
    return t;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void validate(const ExperimentConfig& cfg) {
    if (cfg.traces.empty()) {
        throw InvalidArgument("config lists no traces");
    }
    if (cfg.policies.empty()) {
        throw InvalidArgument("config lists no policies");
    }
    for (const auto& p : cfg.policies) {
        (void)make_policy(p);
    }
    if (cfg.k_grid.empty()) {
        throw InvalidArgument("K grid is empty");
    }
    for (double k : cfg.k_grid) {
        require_cost_ratio(k);
    }
    for (double ld : cfg.ld_grid) {
        if (!(ld > 0.0 && ld <= 1.0)) {
            throw InvalidArgument(fmt::format("L/D = {} must lie in (0, 1]", ld));
        }
    }
    if (!(cfg.compute_length > 0.0)) {
        throw InvalidArgument("L must be positive");
    }
    if (!(cfg.changeover >= 0.0)) {
        throw InvalidArgument("changeover delay must be >= 0");
    }
    if (cfg.runs < 1) {
        throw InvalidArgument("runs must be >= 1");
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        if (eq == std::string::npos) {
            throw InvalidArgument(fmt::format("config line {}: expected key=value", lineno));
        }
        const std::string key = split(line.substr(0, eq), '\0').front();
        std::string value = line.substr(eq + 1);
        if (!value.empty() && value.back() == '\r') {
            value.pop_back();
        }
        value = split(value, '\0').front();
        auto list = [&] {
            std::vector<std::string> items;
            for (auto& s : split(value, ',')) {
                if (!s.empty()) {
                    items.push_back(std::move(s));
                }
            }
            return items;
        };
        auto doubles = [&] {
            std::vector<double> out;
            for (const auto& s : list()) {
                out.push_back(to_double(s, key));
            }
            return out;
        };
        if (key == "traces") {
            cfg.traces = list();
        } else if (key == "policies") {
            cfg.policies = list();
        } else if (key == "K") {
            cfg.k_grid = doubles();
        } else if (key == "LD") {
            cfg.ld_grid = doubles();
        } else if (key == "L") {
            cfg.compute_length = to_double(value, key);
        } else if (key == "delay") {
            cfg.changeover = to_double(value, key);
        } else if (key == "bill_delay") {
            cfg.bill_changeover = to_bool(value, key);
        } else if (key == "runs") {
            cfg.runs = static_cast<int>(to_u64(value, key));
        } else if (key == "seed") {
            cfg.seed = to_u64(value, key);
        } else if (key == "out") {
            cfg.out_dir = value;
        } else if (key == "delay_free_opt") {
            cfg.delay_free_opt = to_bool(value, key);
        } else if (key == "horizon") {
            cfg.horizon = static_cast<std::size_t>(to_u64(value, key));
        } else {
            throw InvalidArgument(fmt::format("config line {}: unknown key '{}'", lineno, key));
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(fmt::format("cannot read config '{}'", path.string()));
    }
    return parse_config(in);
}

void write_config(const ExperimentConfig& cfg, std::ostream& out) {
    out << fmt::format("traces = {}\n", fmt::join(cfg.traces, ","));
    out << fmt::format("policies = {}\n", fmt::join(cfg.policies, ","));
    out << fmt::format("K = {}\n", fmt::join(cfg.k_grid, ","));
    out << fmt::format("LD = {}\n", fmt::join(cfg.ld_grid, ","));
    out << fmt::format("L = {}\n", cfg.compute_length);
    out << fmt::format("delay = {}\n", cfg.changeover);
    out << fmt::format("bill_delay = {}\n", cfg.bill_changeover);
    out << fmt::format("runs = {}\n", cfg.runs);
    out << fmt::format("seed = {}\n", cfg.seed);
    out << fmt::format("out = {}\n", cfg.out_dir);
    out << fmt::format("delay_free_opt = {}\n", cfg.delay_free_opt);
    out << fmt::format("horizon = {}\n", cfg.horizon);
}

void apply_environment(ExperimentConfig& cfg) {
    if (const char* s = std::getenv("SPOTSCHED_SEED"); s != nullptr && *s != '\0') {
        cfg.seed = to_u64(s, "SPOTSCHED_SEED");
    }
}

std::vector<double> default_ld_grid(double availability_fraction) {
    constexpr double top = 0.9;
    const double lo = std::clamp(availability_fraction, 0.05, top);
    if (lo >= top - 1e-9) {
        return {top};
    }
    std::vector<double> grid;
    for (int i = 0; i < 5; ++i) {
        grid.push_back(lo + (top - lo) * i / 4.0);
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

std::vector<ResultRow> sweep(const ExperimentConfig& cfg) {
    validate(cfg);
    std::vector<ResultRow> rows;
    const double l = cfg.compute_length;

    for (std::size_t ti = 0; ti < cfg.traces.size(); ++ti) {
        const TraceSpec spec{cfg.traces[ti]};
        double min_ld = 0.05;
        if (!cfg.ld_grid.empty()) {
            min_ld = *std::min_element(cfg.ld_grid.begin(), cfg.ld_grid.end());
        }
        const std::size_t horizon =
            cfg.horizon > 0 ? cfg.horizon : static_cast<std::size_t>(std::floor(l / min_ld + kEps)) + 1;
        const std::uint64_t trace_seed = cfg.seed + ti;
        const SpotTrace trace = spec.materialize(horizon, trace_seed);
        const std::string trace_id = spec.synthetic() ? fmt::format("{}-s{}", spec.id(), trace_seed) : spec.id();
        const std::vector<double> lds = cfg.ld_grid.empty() ? default_ld_grid(trace_stats(trace).fraction) : cfg.ld_grid;

        for (const auto& policy_id : cfg.policies) {
            for (double k : cfg.k_grid) {
                for (double ld : lds) {
                    ResultRow row;
                    row.trace_id = trace_id;
                    row.policy = policy_id;
                    row.cost_ratio = k;
                    row.compute_length = l;
                    row.deadline = std::floor(l / ld + kEps);
                    row.seed = cfg.seed;
                    try {
                        const Job job(l, row.deadline);
                        const CostModel cm(k, cfg.changeover, cfg.bill_changeover);
                        trace.require_horizon(job);
                        row.opt_cost = cfg.delay_free_opt || cfg.changeover == 0.0
                                           ? opt_cost_delay_free(trace, job, k)
                                           : opt_cost_with_delays(trace, job, cm);
                        const auto policy = make_policy(policy_id, cfg.seed);
                        SimConfig sim;
                        sim.monte_carlo_runs = policy->randomized() ? cfg.runs : 1;
                        sim.base_seed = cfg.seed;
                        sim.record_steps = false;
                        const RunStats stats = run_monte_carlo(*policy, trace, job, cm, sim);
                        row.runs = sim.monte_carlo_runs;
                        if (stats.violations > 0) {
                            row.status = "deadline-violated";
                        } else {
                            row.mean_cost = stats.mean_cost;
                            row.cost_stddev = stats.stddev_cost;
                            row.cost_savings_pct =
                                cost_savings_pct(row.mean_cost, k, l, cfg.changeover, cfg.bill_changeover);
                            row.overhead_to_opt_pct = overhead_to_opt_pct(row.mean_cost, row.opt_cost);
                        }
                    } catch (const TraceTooShort&) {
                        row.status = "trace-too-short";
                    } catch (const InvalidArgument&) {
                        row.status = "invalid";
                    } catch (const Error&) {
                        row.status = "error";
                    }
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

void write_results_csv(std::vector<ResultRow> rows, std::ostream& out) {
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.trace_id, a.policy, a.cost_ratio, a.compute_length, a.deadline) <
               std::tie(b.trace_id, b.policy, b.cost_ratio, b.compute_length, b.deadline);
    });
    out << kResultsVersionLine << '\n' << kResultsHeader << '\n';
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.trace_id, r.policy, r.cost_ratio,
                           r.compute_length, r.deadline, r.mean_cost, r.cost_stddev, r.opt_cost, r.cost_savings_pct,
                           r.overhead_to_opt_pct, r.runs, r.seed, r.status);
    }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kResultsVersionLine) {
        throw ParseError("results file lacks the version line");
    }
    if (!std::getline(in, line) || line != kResultsHeader) {
        throw ParseError("results file has an unexpected header");
    }
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 13) {
            throw ParseError(fmt::format("results row has {} fields: {}", f.size(), line));
        }
        ResultRow r;
        r.trace_id = f[0];
        r.policy = f[1];
        r.cost_ratio = to_double(f[2], "K");
        r.compute_length = to_double(f[3], "L");
        r.deadline = to_double(f[4], "D");
        r.mean_cost = to_double(f[5], "mean_cost");
        r.cost_stddev = to_double(f[6], "cost_stddev");
        r.opt_cost = to_double(f[7], "opt_cost");
        r.cost_savings_pct = to_double(f[8], "cost_savings_pct");
        r.overhead_to_opt_pct = to_double(f[9], "overhead_to_opt_pct");
        r.runs = static_cast<int>(to_u64(f[10], "runs"));
        r.seed = to_u64(f[11], "seed");
        r.status = f[12];
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------

namespace {

using Json = nlohmann::ordered_json;

Certificate make_cert(std::string name, bool passed, Json body) {
    body["name"] = name;
    body["verdict"] = passed ? "pass" : "fail";
    return {std::move(name), passed, body.dump()};
}

Certificate killer_certificate(const std::string& policy_id, const VerifyConfig& cfg) {
    const Job job(cfg.compute_length, 2.0 * cfg.compute_length);
    const auto policy = make_policy(policy_id);
    std::vector<double> ratios;
    for (double k : cfg.k_grid) {
        ratios.push_back(run_adaptive_killer(*policy, job, CostModel(k)).ratio);
    }
    Json body{{"policy", policy_id}, {"L", job.compute_length()}, {"D", job.deadline()}, {"K", cfg.k_grid},
              {"ratios", ratios}};
    bool passed = false;
    if (cfg.k_grid.size() >= 3) {
        const LineFit fit = fit_line(cfg.k_grid, ratios);
        body["slope"] = fit.slope;
        body["r2"] = fit.r2;
        passed = fit.slope >= 0.4 && fit.r2 >= 0.95;
    } else {
        passed = std::is_sorted(ratios.begin(), ratios.end());
    }
    return make_cert("adaptive-killer/" + policy_id, passed, std::move(body));
}

Certificate parametric_certificate(double k, const VerifyConfig& cfg) {
    const double l = cfg.compute_length;
    const Job job(l, 2.0 * l);
    const CostModel cm(k);
    const RossPolicy policy(WarmUp::Greedy);
    double worst = 0.0;
    Json points = Json::array();
    for (GammaMode mode : {GammaMode::Zero, GammaMode::MatchRealized}) {
        for (int i = 0; i <= 20; ++i) {
            ParametricAdversary spec;
            spec.z = l;
            spec.alpha = static_cast<int>(std::lround(l * i / 20.0));
            spec.mode = mode;
            const auto stats = run_parametric_monte_carlo(spec, policy, job, cm, cfg.runs, cfg.seed);
            worst = std::max(worst, stats.ratio);
            points.push_back({{"alpha", spec.alpha},
                              {"gamma", mode == GammaMode::Zero ? "zero" : "match"},
                              {"ratio", stats.ratio}});
        }
    }
    const double target = std::sqrt(k);
    const bool passed = worst <= target * (1.0 + cfg.tolerance) && worst >= target * (1.0 - cfg.tolerance);
    Json body{{"K", k}, {"L", l}, {"D", 2.0 * l}, {"runs", cfg.runs}, {"max_ratio", worst},
              {"sqrt_K", target}, {"tolerance", cfg.tolerance}, {"points", points}};
    return make_cert(fmt::format("parametric-adversary/K={}", k), passed, std::move(body));
}

Certificate minimax_cert(double k, const VerifyConfig& cfg) {
    const double l = cfg.compute_length;
    MinimaxOptions opt;
    opt.tolerance = cfg.tolerance;
    const MinimaxResult r = minimax_search(k, l, 2.0 * l, 0.02 * l, opt);
    return make_cert(fmt::format("minimax/K={}", k), r.within_tolerance, Json::parse(minimax_certificate_json(r)));
}

Certificate fluid_certificate(double k, const VerifyConfig& cfg) {
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    constexpr int n = 10000;
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        const double v = fluid_bound_scalar(s, k);
        if (v < best) {
            best = v;
            best_s = s;
        }
    }
    const double target = std::sqrt(k);
    const bool passed = std::abs(best - target) <= cfg.tolerance * target;
    Json body{{"K", k}, {"min_bound", best}, {"argmin_s", best_s}, {"sqrt_K", target}, {"tolerance", cfg.tolerance}};
    return make_cert(fmt::format("fluid-lower-bound/K={}", k), passed, std::move(body));
}

}  // namespace

std::vector<Certificate> verify_bounds(const VerifyConfig& cfg) {
    if (cfg.k_grid.empty()) {
        throw InvalidArgument("K grid is empty");
    }
    for (double k : cfg.k_grid) {
        require_cost_ratio(k);
    }
    if (!(cfg.tolerance >= 0.0)) {
        throw InvalidArgument("tolerance must be >= 0");
    }
    if (cfg.runs < 1) {
        throw InvalidArgument("runs must be >= 1");
    }
    std::vector<Certificate> certs;
    certs.push_back(killer_certificate("greedy", cfg));
    certs.push_back(killer_certificate("uniform-progress", cfg));
    for (double k : cfg.k_grid) {
        certs.push_back(parametric_certificate(k, cfg));
        certs.push_back(minimax_cert(k, cfg));
        certs.push_back(fluid_certificate(k, cfg));
    }
    return certs;
}

void write_certificates(const std::vector<Certificate>& certs, std::ostream& out) {
    Json doc;
    doc["passed"] = std::all_of(certs.begin(), certs.end(), [](const Certificate& c) { return c.passed; });
    doc["certificates"] = Json::array();
    for (const auto& c : certs) {
        doc["certificates"].push_back(Json::parse(c.json));
    }
    out << doc.dump(2) << '\n';
}

}  // namespace spotsched
