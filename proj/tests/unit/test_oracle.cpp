#include <spotsched/engine.hpp>
#include <spotsched/oracle.hpp>
#include <spotsched/policies.hpp>

#include "brute_force.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace spotsched;
using spotsched::testkit::brute_force_opt;
using spotsched::testkit::enumerate_opt;
using spotsched::testkit::random_trace;

TEST(OptDelayFree, Examples) {
    std::vector<std::uint8_t> a(12, 0);
    std::fill(a.begin(), a.begin() + 6, 1);
    EXPECT_DOUBLE_EQ(opt_cost_delay_free(SpotTrace(1.0, a), Job(10.0, 12.0), 3.0), 18.0);
    EXPECT_DOUBLE_EQ(opt_cost_delay_free(SpotTrace(1.0, std::vector<std::uint8_t>(12, 1)), Job(10.0, 12.0), 7.0),
                     10.0);
}

TEST(OptDelayFree, CountsFractionalDeadlineStep) {
    const SpotTrace t(1.0, {0, 0, 1, 1});
    EXPECT_DOUBLE_EQ(available_spot_time(t, Job(1.0, 3.5)), 1.5);
}

TEST(OptWithDelays, Examples) {
    const Job job(10.0, 15.0);
    const CostModel cm(3.0, 0.1);
    // A segment of 11 steps covers the changeover plus L on spot.
    std::vector<std::uint8_t> a(15, 0);
    std::fill(a.begin(), a.begin() + 11, 1);
    EXPECT_NEAR(opt_cost_with_delays(SpotTrace(1.0, a), job, cm), 10.1, 1e-12);
    EXPECT_NEAR(brute_force_opt(SpotTrace(1.0, a), job, cm), 10.1, 1e-12);
    // A segment of exactly L leaves 0.1 for on-demand, which pays its own changeover.
    a[10] = 0;
    const SpotTrace t(1.0, a);
    EXPECT_NEAR(opt_cost_with_delays(t, job, cm), 9.9 + 0.1 + 3.0 * 0.2, 1e-12);
    EXPECT_NEAR(brute_force_opt(t, job, cm), 10.6, 1e-12);
    EXPECT_DOUBLE_EQ(opt_cost_with_delays(t, job, CostModel(3.0)), opt_cost_delay_free(t, job, 3.0));
}

TEST(OptWithDelays, Infeasible) {
    EXPECT_THROW((void)opt_cost_with_delays(SpotTrace(1.0, {1, 1}), Job(2.0, 2.0), CostModel(2.0, 0.5)),
                 InvalidArgument);
}

TEST(BruteForce, EnumerationAgreesWithMemoizedSearch) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 60; ++i) {
        const std::size_t n = 4 + rng() % 5;
        const double l = 1.0 + static_cast<double>(rng() % (n - 1));
        const auto trace = random_trace(n, rng());
        const double d = (rng() % 3) * 0.5;
        const CostModel cm(2.5, d, rng() % 2 == 0);
        const Job job(l, static_cast<double>(n));
        if (job.initial_slack() < d) {
            continue;
        }
        EXPECT_DOUBLE_EQ(enumerate_opt(trace, job, cm), brute_force_opt(trace, job, cm));
    }
}

TEST(OptWithDelays, MatchesBruteForceOnSmallTraces) {
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = 2 + rng() % 15;
        const double l = 1.0 + static_cast<double>(rng() % n);
        const double d = std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}[rng() % 5];
        const CostModel cm(1.0 + 0.5 * static_cast<double>(1 + rng() % 18), d, rng() % 2 == 0);
        const Job job(l, static_cast<double>(n));
        if (job.initial_slack() < d) {
            continue;
        }
        const auto trace = random_trace(n, rng(), 0.2 + 0.6 * static_cast<double>(rng() % 4) / 3.0);
        const double bf = brute_force_opt(trace, job, cm);
        ASSERT_NEAR(opt_cost_with_delays(trace, job, cm), bf, 1e-9) << "case " << i;
        if (d == 0.0) {
            ASSERT_NEAR(opt_cost_delay_free(trace, job, cm.cost_ratio()), bf, 1e-9);
        }
        ++checked;
    }
    EXPECT_GT(checked, 200);
}

TEST(OptWithDelays, FractionalDeadlineAndDelay) {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 3 + rng() % 8;
        const double deadline = static_cast<double>(n) - 0.5;
        const double l = 0.5 + static_cast<double>(rng() % (n - 2));
        const CostModel cm(3.0, 0.3 * static_cast<double>(rng() % 3), true);
        const Job job(l, deadline);
        if (job.initial_slack() < cm.changeover_delay()) {
            continue;
        }
        const auto trace = random_trace(n, rng());
        ASSERT_NEAR(opt_cost_with_delays(trace, job, cm), brute_force_opt(trace, job, cm), 1e-9) << i;
    }
}

TEST(OptWithDelays, OrderingAgainstDelayFreeAndOnDemand) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const auto trace = random_trace(60, rng(), 0.5);
        const Job job(30.0, 60.0);
        const CostModel cm(4.0, 0.3 * static_cast<double>(i % 4));
        const double free = opt_cost_delay_free(trace, job, 4.0);
        const double delayed = opt_cost_with_delays(trace, job, cm);
        EXPECT_LE(free, delayed + 1e-9);
        EXPECT_LE(delayed, 4.0 * (30.0 + cm.changeover_delay()) + 1e-9);
    }
}

TEST(OptWithDelays, LowerBoundsEveryPolicy) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 40; ++i) {
        const auto trace = random_trace(50, rng(), 0.3 + 0.1 * (i % 5));
        const Job job(20.0, 50.0);
        const CostModel cm(3.0, i % 2 == 0 ? 0.0 : 0.2);
        const double opt = opt_cost_with_delays(trace, job, cm);
        for (const auto& id : policy_ids()) {
            auto p = make_policy(id);
            const auto log = run(*p, trace, job, cm, SimConfig{}, static_cast<std::uint64_t>(i));
            EXPECT_GE(log.total_cost, opt - 1e-9) << id;
        }
    }
}
