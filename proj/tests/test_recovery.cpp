#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace foreco;
using namespace foreco::testing;

namespace {

Trace moving_trace(std::size_t n = 400) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 0.02 * static_cast<double>(i);
        rows.push_back({std::sin(t), 0.5 * std::cos(1.3 * t), 0.1 * t});
    }
    return Trace::from_rows(from_ms(20.0), rows, JointUnit::Radians);
}

Trace arm_trace() {
    TraceSpec spec;
    spec.duration_s = 40.0;
    spec.dim = 3;
    return generate_trace(spec);
}

RecoveryConfig cfg_with(std::size_t record, double tau = 0.0) {
    RecoveryConfig c;
    c.record_len = record;
    c.tolerance_ms = tau;
    return c;
}

Forecaster oracle_for(const Trace& t) { return Forecaster(OracleForecaster{&t, t.dim(), 1}, "oracle"); }

}  // namespace

TEST(Recovery, NoLossesIsIdentity) {
    const Trace t = moving_trace();
    const auto out = all_delivered(t.size(), 3.0);
    for (const auto& p : {RecoveryPolicy::repeat_last(cfg_with(1)), RecoveryPolicy::drop(cfg_with(1)),
                          RecoveryPolicy::foreco(Forecaster(MaModel(3, 5), "ma"), cfg_with(5))}) {
        const ExecutedStream s = run_recovery(t, out, p);
        EXPECT_EQ(s.stats.on_time, t.size());
        EXPECT_EQ(rmse(s, t), 0.0);
        for (std::size_t i = 0; i < t.size(); ++i) {
            ASSERT_TRUE(s.commands[i]);
            EXPECT_EQ(s.commands[i]->joints, t[i].joints);
            EXPECT_EQ(s.commands[i]->provenance, Provenance::Original);
        }
    }
}

TEST(Recovery, ProvenanceMatchesStats) {
    const Trace t = moving_trace();
    auto out = all_delivered(t.size());
    lose(out, 50, 7);
    lose(out, 200, 3);
    out[300].result = Delivered{45.0, 1, 0.0};  // late
    const ExecutedStream s =
        run_recovery(t, out, RecoveryPolicy::foreco(Forecaster(MaModel(3, 4), "ma"), cfg_with(4)));
    EXPECT_EQ(s.stats.total(), t.size());
    EXPECT_EQ(s.stats.forecast, 11u);
    EXPECT_EQ(s.stats.on_time, t.size() - 11);
    std::size_t forecasts = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        ASSERT_TRUE(s.commands[i]);
        EXPECT_EQ(s.commands[i]->seq, t[i].seq);
        EXPECT_EQ(s.commands[i]->gen_time, t[i].gen_time);
        forecasts += s.commands[i]->provenance == Provenance::Forecast;
    }
    EXPECT_EQ(forecasts, s.stats.forecast);
}

TEST(Recovery, DatasetKeepsLateCommands) {
    const Trace t = moving_trace(50);
    auto out = all_delivered(t.size());
    lose(out, 10, 2);
    out[20].result = Delivered{100.0, 3, 0.0};
    const ExecutedStream s = run_recovery(t, out, RecoveryPolicy::repeat_last(cfg_with(1)));
    EXPECT_EQ(s.dataset.size(), 48u);
    const auto late = std::find_if(s.dataset.begin(), s.dataset.end(), [](const Command& c) { return c.seq == 20; });
    ASSERT_NE(late, s.dataset.end());
    EXPECT_EQ(*late->arrival_time, t[20].gen_time + from_ms(100.0));
    EXPECT_EQ(s.commands[20]->provenance, Provenance::RepeatLast);
}

TEST(Recovery, DeadlineBoundaryIsInclusive) {
    const Trace t = moving_trace(10);
    for (double tau : {0.0, 2.5}) {
        auto out = all_delivered(t.size());
        out[5].result = Delivered{20.0 + tau, 0, 0.0};
        out[6].result = Delivered{20.0 + tau + 0.001, 0, 0.0};
        const ExecutedStream s = run_recovery(t, out, RecoveryPolicy::repeat_last(cfg_with(1, tau)));
        EXPECT_EQ(s.commands[5]->provenance, Provenance::Original) << tau;
        EXPECT_EQ(s.commands[6]->provenance, Provenance::RepeatLast) << tau;
    }
}

TEST(Recovery, RepeatLastHoldsPreviousCommand) {
    const Trace t = moving_trace(30);
    auto out = all_delivered(t.size());
    lose(out, 10, 5);
    const ExecutedStream s = run_recovery(t, out, RecoveryPolicy::repeat_last(cfg_with(1)));
    for (std::size_t i = 10; i < 15; ++i) EXPECT_EQ(s.commands[i]->joints, t[9].joints);
    EXPECT_EQ(s.stats.repeated, 5u);
}

TEST(Recovery, DropLeavesGaps) {
    const Trace t = moving_trace(30);
    auto out = all_delivered(t.size());
    lose(out, 0, 2);
    lose(out, 10, 3);
    const ExecutedStream s = run_recovery(t, out, RecoveryPolicy::drop(cfg_with(1)));
    EXPECT_EQ(s.stats.dropped, 5u);
    EXPECT_FALSE(s.commands[0]);
    EXPECT_FALSE(s.commands[11]);
    // Empty slots hold the last executed command, which matches RepeatLast
    // once something has been executed.
    const ExecutedStream r = run_recovery(t, out, RecoveryPolicy::repeat_last(cfg_with(1)));
    double acc = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t k = 0; k < 3; ++k) acc += std::pow(t[0].joints[k] - t[i].joints[k], 2);
    }
    for (std::size_t i = 10; i < 13; ++i) {
        for (std::size_t k = 0; k < 3; ++k) acc += std::pow(t[9].joints[k] - t[i].joints[k], 2);
    }
    EXPECT_NEAR(rmse(s, t), std::sqrt(acc / 30.0), 1e-15);
}

TEST(Recovery, BootstrapFallsBackToRepeatLast) {
    const Trace t = moving_trace(40);
    auto out = all_delivered(t.size());
    lose(out, 2, 2);
    lose(out, 20, 2);
    const ExecutedStream s =
        run_recovery(t, out, RecoveryPolicy::foreco(Forecaster(MaModel(3, 2), "ma"), cfg_with(10)));
    EXPECT_EQ(s.commands[2]->provenance, Provenance::RepeatLast);
    EXPECT_EQ(s.commands[3]->provenance, Provenance::RepeatLast);
    EXPECT_EQ(s.commands[20]->provenance, Provenance::Forecast);
    EXPECT_EQ(s.stats.repeated, 2u);
    EXPECT_EQ(s.stats.forecast, 2u);
}

TEST(Recovery, ForecastsFeedLaterForecasts) {
    const Trace t = moving_trace(40);
    auto out = all_delivered(t.size());
    lose(out, 20, 2);
    const ExecutedStream s =
        run_recovery(t, out, RecoveryPolicy::foreco(Forecaster(MaModel(3, 2), "ma"), cfg_with(2)));
    const auto& f1 = s.commands[20]->joints;
    const auto& f2 = s.commands[21]->joints;
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_DOUBLE_EQ(f1[k], 0.5 * (t[18].joints[k] + t[19].joints[k]));
        EXPECT_DOUBLE_EQ(f2[k], 0.5 * (t[19].joints[k] + f1[k]));
    }
}

TEST(Recovery, PerfectOracleIsExact) {
    const Trace t = moving_trace(500);
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto out = all_delivered(t.size());
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (rng.uniform() < 0.3) lose(out, i, 1 + static_cast<std::size_t>(rng.uniform() * 30));
        }
        const ExecutedStream s = run_recovery(t, out, RecoveryPolicy::foreco(oracle_for(t), cfg_with(1)));
        EXPECT_EQ(rmse(s, t), 0.0);
    }
}

TEST(Recovery, VarBeatsRepeatLastOnShortBurst) {
    const Trace t = arm_trace();
    const auto [train, test] = split_dataset(t, 0.5);
    const Forecaster var(fit_var_ols(train, 2), "var");
    const auto out = controlled_loss_outcomes(test.size(), 5, 8, 2, 12);
    const double f = rmse(run_recovery(test, out, RecoveryPolicy::foreco(var, cfg_with(2))), test);
    const double r = rmse(run_recovery(test, out, RecoveryPolicy::repeat_last(cfg_with(2))), test);
    EXPECT_LT(f, r);
}

TEST(Recovery, ErrorGrowsWithBurstLength) {
    const Trace t = arm_trace();
    const auto [train, test] = split_dataset(t, 0.5);
    const Forecaster var(fit_var_ols(train, 2), "var");
    double prev = 0.0;
    for (std::size_t len : {1u, 5u, 10u, 25u}) {
        auto out = all_delivered(test.size());
        lose(out, 100, len);
        const double r = rmse(run_recovery(test, out, RecoveryPolicy::repeat_last(cfg_with(2))), test);
        EXPECT_GT(r, prev) << len;
        prev = r;
    }
}

TEST(Recovery, ConfigErrors) {
    const Trace t = moving_trace(20);
    const auto out = all_delivered(t.size());
    EXPECT_THROW((void)run_recovery(t, all_delivered(5), RecoveryPolicy::repeat_last(cfg_with(1))), Error);
    EXPECT_THROW((void)run_recovery(t, out, RecoveryPolicy::foreco(Forecaster(MaModel(2, 1), "ma"), cfg_with(1))),
                 Error);
    EXPECT_THROW((void)run_recovery(t, out, RecoveryPolicy::foreco(Forecaster(MaModel(3, 4), "ma"), cfg_with(2))),
                 Error);
    RecoveryPolicy missing;
    missing.mode = RecoveryMode::FoReCo;
    EXPECT_THROW((void)run_recovery(t, out, missing), Error);
}

TEST(Rmse, ReferenceExample) {
    std::vector<std::vector<double>> a(25, {0.0, 0.0}), b(25, {0.0, 0.0});
    for (auto& r : b) r = {0.6, 0.8};
    const Trace ta = Trace::from_rows(from_ms(20.0), a, JointUnit::Radians);
    const Trace tb = Trace::from_rows(from_ms(20.0), b, JointUnit::Radians);
    EXPECT_DOUBLE_EQ(rmse(ta, tb), 1.0);
    EXPECT_EQ(rmse(ta, tb), rmse(tb, ta));
    EXPECT_EQ(rmse(ta, ta), 0.0);
}
