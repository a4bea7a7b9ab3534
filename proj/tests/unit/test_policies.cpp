#include <spotsched/engine.hpp>
#include <spotsched/policies.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace spotsched;

namespace {

DecisionContext ctx_at(const Job& job, const CostModel& cm, double t, double phi, bool spot,
                       Rental rental = Rental::Idle) {
    DecisionContext c;
    c.t = t;
    c.phi = phi;
    c.spot_available_now = spot;
    c.job = &job;
    c.cost_model = &cm;
    c.rental = rental;
    return c;
}

SpotTrace constant_trace(std::size_t n, bool up) {
    return SpotTrace(1.0, std::vector<std::uint8_t>(n, up ? 1 : 0));
}

double run_cost(std::string_view id, const SpotTrace& trace, const Job& job, const CostModel& cm,
                std::uint64_t seed = 0) {
    auto p = make_policy(id);
    return run(*p, trace, job, cm, SimConfig{}, seed).total_cost;
}

}  // namespace

TEST(Greedy, Examples) {
    const Job job(10.0, 15.0);
    const CostModel cm(4.0);
    EXPECT_EQ(decide_greedy(ctx_at(job, cm, 0.0, 0.0, true)), Action::RunSpot);
    EXPECT_EQ(decide_greedy(ctx_at(job, cm, 0.0, 0.0, false)), Action::Idle);
    EXPECT_EQ(decide_greedy(ctx_at(job, cm, 5.0, 0.0, false)), Action::RunOnDemand);
}

TEST(Greedy, StaysOnDemandOnceCommitted) {
    const Job job(10.0, 15.0);
    const CostModel cm(4.0);
    EXPECT_EQ(decide_greedy(ctx_at(job, cm, 6.0, 1.0, true, Rental::OnDemand)), Action::RunOnDemand);
}

TEST(UniformProgress, Examples) {
    const Job job(10.0, 20.0);
    const CostModel cm(4.0);
    EXPECT_EQ(decide_uniform_progress(ctx_at(job, cm, 10.0, 4.0, true)), Action::RunSpot);
    EXPECT_EQ(decide_uniform_progress(ctx_at(job, cm, 10.0, 4.0, false)), Action::RunOnDemand);
    EXPECT_EQ(decide_uniform_progress(ctx_at(job, cm, 10.0, 6.0, true)), Action::Idle);
    // on the line is not behind
    EXPECT_EQ(decide_uniform_progress(ctx_at(job, cm, 10.0, 5.0, true)), Action::Idle);
}

TEST(UniformProgress, AllSpotCostsL) {
    EXPECT_DOUBLE_EQ(run_cost("uniform-progress", constant_trace(20, true), Job(10.0, 20.0), CostModel(4.0)), 10.0);
}

TEST(OnDemandOnly, Costs) {
    const Job job(10.0, 20.0);
    EXPECT_EQ(decide_on_demand_only(ctx_at(job, CostModel(4.0), 3.0, 1.0, true)), Action::RunOnDemand);
    EXPECT_DOUBLE_EQ(run_cost("on-demand", constant_trace(20, true), job, CostModel(4.0)), 40.0);
    EXPECT_DOUBLE_EQ(run_cost("on-demand", constant_trace(20, false), job, CostModel(4.0, 0.5)), 4.0 * 10.5);
    EXPECT_DOUBLE_EQ(run_cost("on-demand", constant_trace(20, false), job, CostModel(4.0, 0.5, false)), 40.0);
}

TEST(WarmUp, Examples) {
    const Job job(10.0, 20.0);
    const CostModel cm(4.0);
    EXPECT_EQ(warmup_decide(WarmUp::Greedy, ctx_at(job, cm, 0.0, 0.0, true)), Action::RunSpot);
    EXPECT_EQ(warmup_decide(WarmUp::Greedy, ctx_at(job, cm, 0.0, 0.0, false)), Action::RunOnDemand);
    EXPECT_EQ(warmup_decide(WarmUp::Uniform, ctx_at(job, cm, 4.0, 2.0, false)), Action::Idle);
    EXPECT_EQ(warmup_decide(WarmUp::Uniform, ctx_at(job, cm, 4.0, 1.0, false)), Action::RunOnDemand);
}

TEST(SampleInterval, DegenerateSupport) {
    Rng rng(3);
    const Interval i = sample_interval(7.0, 5.0, 5.0, rng);
    EXPECT_DOUBLE_EQ(i.start, 7.0);
    EXPECT_DOUBLE_EQ(i.end, 12.0);
}

TEST(SampleInterval, Rejections) {
    Rng rng(0);
    EXPECT_THROW((void)sample_interval(0.0, 5.0, 6.0, rng), InvalidArgument);
    EXPECT_THROW((void)sample_interval(0.0, 5.0, 0.0, rng), InvalidArgument);
}

TEST(SampleInterval, UniformStartMean) {
    Rng rng(12345);
    double sum = 0.0;
    std::set<double> seen;
    constexpr int n = 100000;
    for (int i = 0; i < n; ++i) {
        const Interval iv = sample_interval(0.0, 100.0, 25.0, rng);
        ASSERT_GE(iv.start, 0.0);
        ASSERT_LE(iv.start, 75.0);
        ASSERT_DOUBLE_EQ(iv.length(), 25.0);
        ASSERT_EQ(iv.start, std::floor(iv.start));
        sum += iv.start;
        seen.insert(iv.start);
    }
    EXPECT_NEAR(sum / n, 37.5, 1.0);
    EXPECT_EQ(seen.size(), 76u);
}

TEST(SampleInterval, SeedDeterminism) {
    Rng a(99);
    Rng b(99);
    EXPECT_EQ(sample_interval(0.0, 50.0, 10.0, a), sample_interval(0.0, 50.0, 10.0, b));
}

TEST(Ross, DeltaFormula) {
    EXPECT_DOUBLE_EQ(ross_delta(9.0, 4.0), 3.0);
}

TEST(Ross, WindowStateAfterWarmUpExit) {
    const Job job(12.0, 30.0);
    const CostModel cm(4.0);
    RossState st;
    Rng rng(5);
    // D/L = 2.5 > 5/3: the window opens at once.
    (void)decide_ross(ctx_at(job, cm, 0.0, 0.0, false), st, rng);
    EXPECT_EQ(st.phase, RossPhase::RandomWindow);
    EXPECT_DOUBLE_EQ(st.xi1, 0.0);
    EXPECT_DOUBLE_EQ(st.delta, 4.0);  // ceil(12 / 3)
    EXPECT_DOUBLE_EQ(st.window_end, 12.0);
    EXPECT_GE(st.on_demand_window.start, 0.0);
    EXPECT_LE(st.on_demand_window.start, 8.0);
    EXPECT_DOUBLE_EQ(st.on_demand_window.length(), 4.0);
}

TEST(Ross, WarmsUpWhileRatioBelowThreshold) {
    const Job job(10.0, 15.0);  // 1.5 < 5/3
    const CostModel cm(4.0);
    RossState st;
    Rng rng(1);
    EXPECT_EQ(decide_ross(ctx_at(job, cm, 0.0, 0.0, false), st, rng), Action::RunOnDemand);
    EXPECT_EQ(st.phase, RossPhase::WarmUp);
    // (15 - 5) / (10 - 4) = 1.667 >= 5/3: exit
    (void)decide_ross(ctx_at(job, cm, 5.0, 4.0, false), st, rng);
    EXPECT_EQ(st.phase, RossPhase::RandomWindow);
    EXPECT_DOUBLE_EQ(st.xi1, 5.0);
}

TEST(Ross, NoSpotEverCostsKL) {
    const Job job(10.0, 20.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (auto id : {"ross-greedy", "ross-uniform", "ross-window"}) {
            EXPECT_DOUBLE_EQ(run_cost(id, constant_trace(20, false), job, CostModel(4.0), seed), 40.0) << id;
        }
    }
    EXPECT_DOUBLE_EQ(run_cost("greedy", constant_trace(20, false), job, CostModel(4.0)), 40.0);
    EXPECT_DOUBLE_EQ(run_cost("uniform-progress", constant_trace(20, false), job, CostModel(4.0)), 40.0);
}

TEST(Ross, AllSpotCostsLPlusKMinusOneDelta) {
    // delta = ceil(10 / 3) = 4 once rounded to whole steps.
    const Job small(10.0, 20.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        EXPECT_DOUBLE_EQ(run_cost("ross-greedy", constant_trace(20, true), small, CostModel(4.0), seed), 22.0);
    }
    // delta = 30 / 3 = 10 exactly: cost 30 + 3 * 10 = 60, ratio sqrt(K) = 2.
    const Job exact(30.0, 60.0);
    EXPECT_DOUBLE_EQ(run_cost("ross-greedy", constant_trace(60, true), exact, CostModel(4.0), 7), 60.0);
    EXPECT_DOUBLE_EQ(run_cost("greedy", constant_trace(60, true), exact, CostModel(4.0)), 30.0);
}

TEST(Ross, PhasesAreMonotone) {
    const Job job(20.0, 35.0);
    const CostModel cm(4.0);
    std::vector<std::uint8_t> a(35);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = (i % 7) < 2 ? 1 : 0;
    }
    const SpotTrace trace(1.0, a);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RossPolicy p(WarmUp::Uniform);
        (void)run(p, trace, job, cm, SimConfig{}, seed);
        const auto& h = p.state().history;
        EXPECT_TRUE(std::is_sorted(h.begin(), h.end()));
        EXPECT_EQ(std::adjacent_find(h.begin(), h.end()), h.end());
    }
}

TEST(Registry, KnownIdsRoundTrip) {
    for (const auto& id : policy_ids()) {
        EXPECT_EQ(make_policy(id)->id(), id);
    }
    EXPECT_THROW((void)make_policy("nope"), InvalidArgument);
    EXPECT_TRUE(make_policy("ross-greedy")->randomized());
    EXPECT_FALSE(make_policy("greedy")->randomized());
}

TEST(Probe, DoesNotDisturbPolicy) {
    const Job job(10.0, 20.0);
    const CostModel cm(4.0);
    RossPolicy p(WarmUp::Greedy, 17);
    RossPolicy q(WarmUp::Greedy, 17);
    for (int t = 0; t < 10; ++t) {
        const auto c = ctx_at(job, cm, t, t / 2.0, t % 3 == 0);
        (void)would_take_spot(p, c);
        EXPECT_EQ(p.decide(c), q.decide(c));
    }
    EXPECT_EQ(p.state().on_demand_window, q.state().on_demand_window);
}
