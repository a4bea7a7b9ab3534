#include <spotsched/engine.hpp>
#include <spotsched/policies.hpp>

#include "brute_force.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace spotsched;

namespace {

SpotTrace constant_trace(std::size_t n, bool up) {
    return SpotTrace(1.0, std::vector<std::uint8_t>(n, up ? 1 : 0));
}

ExecutionLog run_id(std::string_view id, const SpotTrace& trace, const Job& job, const CostModel& cm,
                    std::uint64_t seed = 0) {
    auto p = make_policy(id);
    return run(*p, trace, job, cm, SimConfig{}, seed);
}

/// Scripted policy for engine-only checks.
class Script final : public Policy {
public:
    explicit Script(std::vector<Action> actions) : actions_(std::move(actions)) {}
    std::string_view id() const noexcept override { return "script"; }
    Action decide(const DecisionContext& ctx) override {
        const auto i = static_cast<std::size_t>(ctx.t);
        return i < actions_.size() ? actions_[i] : Action::RunOnDemand;
    }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<Script>(*this); }

private:
    std::vector<Action> actions_;
};

}  // namespace

TEST(Run, GreedyAllSpot) {
    const auto log = run_id("greedy", constant_trace(20, true), Job(10.0, 20.0), CostModel(3.0));
    EXPECT_DOUBLE_EQ(log.total_cost, 10.0);
    EXPECT_DOUBLE_EQ(log.completion_time, 10.0);
}

TEST(Run, GreedyNoSpotSwitchesAtNoReturn) {
    const auto log = run_id("greedy", constant_trace(15, false), Job(10.0, 15.0), CostModel(3.0));
    EXPECT_DOUBLE_EQ(log.idle_time, 5.0);
    EXPECT_DOUBLE_EQ(log.on_demand_time, 10.0);
    EXPECT_DOUBLE_EQ(log.total_cost, 30.0);
    EXPECT_DOUBLE_EQ(log.completion_time, 15.0);
}

TEST(Run, OnDemandWithBilledChangeover) {
    const Job job(10.0, 15.0);
    const auto log = run_id("on-demand", constant_trace(15, true), job, CostModel(3.0, 0.1));
    EXPECT_NEAR(log.total_cost, 3.0 * 10.1, 1e-12);
    EXPECT_NEAR(log.completion_time, 10.1, 1e-12);
    EXPECT_NEAR(log.changeover_time(), 0.1, 1e-12);
    EXPECT_TRUE(verify_log(log, job, CostModel(3.0, 0.1)).all_passed());
}

TEST(Run, FractionalLastStepIsProrated) {
    const Job job(2.5, 5.0);
    const auto log = run_id("greedy", constant_trace(5, true), job, CostModel(2.0));
    EXPECT_DOUBLE_EQ(log.total_cost, 2.5);
    EXPECT_DOUBLE_EQ(log.completion_time, 2.5);
}

TEST(Run, PreemptionCountsAsTransition) {
    const Job job(3.0, 10.0);
    const SpotTrace trace(1.0, {1, 0, 1, 1, 1, 0, 0, 0, 0, 0});
    const auto log = run_id("greedy", trace, job, CostModel(4.0));
    EXPECT_EQ(log.preemptions, 1);
    EXPECT_DOUBLE_EQ(log.total_cost, 3.0);
    EXPECT_DOUBLE_EQ(log.completion_time, 4.0);
}

TEST(Run, SpotRequestWhileUnavailableIsDowngraded) {
    Script p({Action::RunSpot, Action::RunSpot, Action::RunOnDemand, Action::RunOnDemand});
    const Job job(2.0, 4.0);
    const auto log = run(p, SpotTrace(1.0, {0, 0, 0, 0}), job, CostModel(2.0), SimConfig{}, 0);
    EXPECT_EQ(log.spot_faults, 2);
    EXPECT_EQ(log.steps[0].effective, Rental::Idle);
    EXPECT_TRUE(log.steps[0].spot_fault);
    EXPECT_DOUBLE_EQ(log.total_cost, 4.0);
}

TEST(Run, EngineOverridesIdleAtNoReturn) {
    Script p(std::vector<Action>(10, Action::Idle));
    const Job job(5.0, 7.0);
    const auto log = run(p, constant_trace(7, false), job, CostModel(2.0), SimConfig{}, 0);
    EXPECT_GT(log.overrides, 0);
    EXPECT_LE(log.completion_time, 7.0);
    EXPECT_TRUE(verify_log(log, job, CostModel(2.0)).all_passed());
}

TEST(Run, Errors) {
    const Job job(10.0, 20.0);
    EXPECT_THROW((void)run_id("greedy", constant_trace(19, true), job, CostModel(2.0)), TraceTooShort);
    // Initial slack below one changeover.
    EXPECT_THROW((void)run_id("greedy", constant_trace(20, true), Job(10.0, 10.5), CostModel(2.0, 1.0)),
                 InvalidArgument);
}

TEST(TotalCost, Examples) {
    const auto spot = run_id("greedy", constant_trace(10, true), Job(10.0, 10.0), CostModel(3.0));
    EXPECT_DOUBLE_EQ(total_cost(spot), 10.0);
    std::vector<std::uint8_t> a(10, 0);
    std::fill(a.begin(), a.begin() + 4, 1);
    const auto mixed = run_id("greedy", SpotTrace(1.0, a), Job(10.0, 10.0), CostModel(3.0));
    EXPECT_DOUBLE_EQ(total_cost(mixed), 22.0);
    double sum = 0.0;
    for (const auto& s : mixed.steps) {
        sum += s.cost;
    }
    EXPECT_DOUBLE_EQ(sum, total_cost(mixed));
}

TEST(VerifyLog, DetectsTampering) {
    const Job job(10.0, 20.0);
    const CostModel cm(3.0, 0.5);
    const auto log = run_id("ross-uniform", testkit::random_trace(20, 4), job, cm, 11);
    EXPECT_TRUE(verify_log(log, job, cm).all_passed());

    auto late = log;
    late.completion_time = 21.0;
    const auto r1 = verify_log(late, job, cm);
    ASSERT_NE(r1.find("deadline"), nullptr);
    EXPECT_FALSE(r1.find("deadline")->passed);

    auto cheap = log;
    cheap.total_cost -= 1.0;
    const auto r2 = verify_log(cheap, job, cm);
    ASSERT_NE(r2.find("cost_conservation"), nullptr);
    EXPECT_FALSE(r2.find("cost_conservation")->passed);

    auto idle = log;
    for (auto& s : idle.steps) {
        if (s.effective == Rental::Idle) {
            s.progress = 0.5;
            break;
        }
    }
    if (log.idle_time > 0.0) {
        EXPECT_FALSE(verify_log(idle, job, cm).all_passed());
    }
}

TEST(MonteCarlo, DeterministicPolicyHasZeroVariance) {
    SimConfig cfg;
    cfg.monte_carlo_runs = 100;
    const auto st = run_monte_carlo(GreedyPolicy{}, testkit::random_trace(40, 8), Job(10.0, 40.0), CostModel(3.0), cfg);
    EXPECT_DOUBLE_EQ(st.stddev_cost, 0.0);
    EXPECT_EQ(st.seeds.size(), 100u);
}

TEST(MonteCarlo, RossAllSpotIsDeltaDeterministic) {
    SimConfig cfg;
    cfg.monte_carlo_runs = 10000;
    cfg.record_steps = false;
    // delta = 30 / 3 = 10 exactly.
    const auto st = run_monte_carlo(RossPolicy(WarmUp::Greedy), constant_trace(60, true), Job(30.0, 60.0),
                                    CostModel(4.0), cfg);
    EXPECT_DOUBLE_EQ(st.mean_cost, 60.0);
    EXPECT_DOUBLE_EQ(st.stddev_cost, 0.0);
}

TEST(MonteCarlo, FixedSeedReproduces) {
    SimConfig cfg;
    cfg.monte_carlo_runs = 50;
    cfg.base_seed = 77;
    const auto trace = testkit::random_trace(60, 2, 0.4);
    const Job job(25.0, 60.0);
    const auto a = run_monte_carlo(RossPolicy(WarmUp::Uniform), trace, job, CostModel(5.0, 0.25), cfg);
    const auto b = run_monte_carlo(RossPolicy(WarmUp::Uniform), trace, job, CostModel(5.0, 0.25), cfg);
    EXPECT_EQ(a.costs, b.costs);
    EXPECT_EQ(a.mean_cost, b.mean_cost);
    EXPECT_GT(a.stddev_cost, 0.0);
}

TEST(Properties, OnDemandCostMonotoneInDelay) {
    const Job job(10.0, 20.0);
    double prev = 0.0;
    for (double d = 0.0; d <= 2.0; d += 0.125) {
        const double c = run_id("on-demand", constant_trace(20, true), job, CostModel(3.0, d)).total_cost;
        EXPECT_GE(c, prev);
        prev = c;
    }
}

TEST(Properties, OnlineContract) {
    // Decisions up to step i depend only on trace[0..i].
    const Job job(30.0, 60.0);
    const CostModel cm(4.0, 0.3);
    const auto base = testkit::random_trace(60, 21, 0.5);
    for (const auto& id : policy_ids()) {
        for (std::size_t cut : {5u, 17u, 33u}) {
            auto a = base.availability();
            for (std::size_t i = cut + 1; i < a.size(); ++i) {
                a[i] = 1 - a[i];
            }
            const auto l1 = run_id(id, base, job, cm, 9);
            const auto l2 = run_id(id, SpotTrace(1.0, a), job, cm, 9);
            for (std::size_t i = 0; i <= cut && i < l1.steps.size() && i < l2.steps.size(); ++i) {
                ASSERT_EQ(l1.steps[i].action, l2.steps[i].action) << id << " step " << i;
            }
        }
    }
}

TEST(Properties, IdenticalInputsGiveIdenticalLogs) {
    const Job job(30.0, 60.0);
    const CostModel cm(4.0, 0.3);
    const auto trace = testkit::random_trace(60, 5);
    for (const auto& id : policy_ids()) {
        std::ostringstream a;
        std::ostringstream b;
        write_log_csv(run_id(id, trace, job, cm, 3), a);
        write_log_csv(run_id(id, trace, job, cm, 3), b);
        EXPECT_EQ(a.str(), b.str()) << id;
    }
}

TEST(Export, CsvAndTotals) {
    const auto log = run_id("greedy", SpotTrace(1.0, {1, 0, 1, 1}), Job(2.0, 4.0), CostModel(2.0));
    std::ostringstream csv;
    write_log_csv(log, csv);
    std::istringstream lines(csv.str());
    std::string header;
    std::getline(lines, header);
    EXPECT_EQ(header, "step,t,action,effective,progress,cost,changeover");
    std::ostringstream json;
    write_log_totals_json(log, json);
    EXPECT_NE(json.str().find("\"total_cost\""), std::string::npos);
}
