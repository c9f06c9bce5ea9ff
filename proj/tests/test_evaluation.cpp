#include <gtest/gtest.h>

#include <array>
#include <filesystem>
#include <fstream>

#include "test_support.hpp"

using namespace foreco;
using namespace foreco::testing;
namespace fs = std::filesystem;

namespace {

Trace short_trace(std::uint64_t seed = 3, double seconds = 6.0) {
    TraceSpec spec;
    spec.duration_s = seconds;
    spec.seed = seed;
    spec.dim = 3;
    return generate_trace(spec);
}

SweepGrid tiny_grid() {
    SweepGrid g;
    g.probs = {0.0, 0.9};
    g.durations = {1, 32};
    g.robot_counts = {1, 25};
    g.repetitions = 3;
    return g;
}

RecoveryConfig record(std::size_t r) {
    RecoveryConfig c;
    c.record_len = r;
    return c;
}

}  // namespace

// ---- window study -------------------------------------------------------------

TEST(WindowCurve, OracleIsExact) {
    const Trace t = short_trace();
    const auto curve = window_rmse_curve(Forecaster(OracleForecaster{&t, 3, 1}, "oracle"), t, 10);
    for (double v : curve) EXPECT_EQ(v, 0.0);
}

TEST(WindowCurve, GrowsWithWindowForRepeatLast) {
    const Trace t = short_trace();
    const auto curve = window_rmse_curve(Forecaster(MaModel(3, 1), "ma"), t, 25);
    for (std::size_t w = 1; w < curve.size(); ++w) EXPECT_GE(curve[w], curve[w - 1]);
}

TEST(WindowCurve, ShortTestTraceIsRejected) {
    const Trace t = short_trace(3, 0.2);
    EXPECT_THROW((void)window_rmse_curve(Forecaster(MaModel(3, 5), "ma"), t, 10), Error);
}

TEST(WindowStudy, VarBeatsMaOnSmoothMotion) {
    const Trace train = short_trace(1, 60.0);
    const Trace test = short_trace(2, 20.0);
    const std::array families{ModelFamily::Var, ModelFamily::Ma};
    WindowStudyOptions opts;
    opts.r_max = 6;
    opts.stride = 5;
    const auto rows = forecast_window_study(train, test, 5, families, opts);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].score_by_record_len.size(), 6u);
    EXPECT_EQ(rows[1].best_record_len, 1u);
    EXPECT_LT(rows[0].curve.front(), rows[1].curve.front());
    const double best = rows[0].score_by_record_len[rows[0].best_record_len - 1];
    for (double s : rows[0].score_by_record_len) EXPECT_GE(s, best);
}

// ---- controlled losses --------------------------------------------------------

TEST(ControlledLoss, PlacesDisjointBurstsAfterBootstrap) {
    const auto out = controlled_loss_outcomes(1500, 25, 12, 20, 77);
    ASSERT_EQ(out.size(), 1500u);
    std::size_t lost = 0;
    std::size_t runs = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out[i].delivered()) {
            EXPECT_GE(i, 20u);
            ++lost;
            if (i == 0 || out[i - 1].delivered()) ++runs;
        } else {
            EXPECT_EQ(*out[i].delay_ms(), 0.0);
        }
    }
    EXPECT_EQ(lost, 300u);
    EXPECT_LE(runs, 12u);
    EXPECT_EQ(out, controlled_loss_outcomes(1500, 25, 12, 20, 77));
    EXPECT_NE(out, controlled_loss_outcomes(1500, 25, 12, 20, 78));
}

TEST(ControlledLoss, RejectsBurstsThatDoNotFit) {
    EXPECT_THROW((void)controlled_loss_outcomes(100, 25, 5, 0, 1), Error);
    EXPECT_THROW((void)controlled_loss_outcomes(100, 5, 1, 100, 1), Error);
    EXPECT_THROW((void)controlled_loss_outcomes(100, 0, 1, 0, 1), Error);
}

// ---- sweep ------------------------------------------------------------------------

TEST(Sweep, ShapeAndOrdering) {
    const Trace t = short_trace();
    const auto r = run_sweep(t, tiny_grid(), ChannelConfig{}, RecoveryPolicy::repeat_last(record(1)),
                             RecoveryPolicy::drop(record(1)));
    EXPECT_EQ(r.cells.size(), 8u);
    EXPECT_EQ(r.policies[0], "repeat_last");
    EXPECT_EQ(r.policies[1], "drop");
    const SweepCell& c = r.at(1, 0, 1);
    EXPECT_EQ(c.robots, 25u);
    EXPECT_EQ(c.prob, 0.0);
    EXPECT_EQ(c.duration, 32.0);
    for (const auto& cell : r.cells) {
        for (std::size_t k = 0; k < 2; ++k) {
            ASSERT_EQ(cell.rmse[k].size(), 3u);
            double mean = 0.0;
            for (double v : cell.rmse[k]) mean += v / 3.0;
            EXPECT_NEAR(cell.mean[k], mean, 1e-15);
        }
    }
}

TEST(Sweep, CleanChannelIsExact) {
    const Trace t = short_trace();
    const auto r = run_sweep(t, tiny_grid(), ChannelConfig{}, RecoveryPolicy::repeat_last(record(1)),
                             RecoveryPolicy::drop(record(1)));
    for (std::size_t d = 0; d < 2; ++d) {
        EXPECT_EQ(r.at(0, 0, d).mean[0], 0.0);
        EXPECT_EQ(r.at(0, 0, d).stddev[0], 0.0);
    }
}

TEST(Sweep, InterferenceHurtsRepeatLast) {
    const Trace t = short_trace();
    const auto r = run_sweep(t, tiny_grid(), ChannelConfig{}, RecoveryPolicy::repeat_last(record(1)),
                             RecoveryPolicy::drop(record(1)));
    EXPECT_GT(r.at(1, 1, 1).mean[0], r.at(1, 0, 0).mean[0]);
    EXPECT_GT(r.at(1, 1, 1).mean[0], r.at(0, 1, 0).mean[0]);
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
    const Trace t = short_trace();
    const auto fit = fit_var_ols(short_trace(9, 60.0), 3);
    const auto a = run_sweep(t, tiny_grid(), ChannelConfig{}, RecoveryPolicy::foreco(Forecaster(fit, "var"), record(3)),
                             RecoveryPolicy::repeat_last(record(3)), 1);
    const auto b = run_sweep(t, tiny_grid(), ChannelConfig{}, RecoveryPolicy::foreco(Forecaster(fit, "var"), record(3)),
                             RecoveryPolicy::repeat_last(record(3)), 4);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Sweep, GridValidation) {
    SweepGrid g = tiny_grid();
    g.probs = {1.5};
    EXPECT_THROW(g.validate(), Error);
    g = tiny_grid();
    g.repetitions = 0;
    EXPECT_THROW(g.validate(), Error);
    g = tiny_grid();
    g.robot_counts.clear();
    EXPECT_THROW(g.validate(), Error);
    const SweepGrid back = sweep_grid_from_json(to_json(tiny_grid()));
    EXPECT_EQ(to_json(back), to_json(tiny_grid()));
}

TEST(Sweep, OutputsAreCompleteAndAtomic) {
    const Trace t = short_trace();
    const auto r = run_sweep(t, tiny_grid(), ChannelConfig{}, RecoveryPolicy::repeat_last(record(1)),
                             RecoveryPolicy::drop(record(1)));
    const fs::path dir = fs::temp_directory_path() / "foreco_sweep_outputs";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto written = write_sweep_outputs(r, dir);
    EXPECT_EQ(written.size(), 5u);
    for (const auto& entry : fs::directory_iterator(dir)) EXPECT_NE(entry.path().extension(), ".tmp");
    std::ifstream in(dir / "rmse_repeat_last_25.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "prob,1,32");
    std::ifstream js(dir / "sweep_result.json");
    const Json j = Json::parse(js);
    EXPECT_EQ(j["cells"].size(), 8u);
    EXPECT_EQ(j["cells"][0]["repeat_last"]["rmse"].size(), 3u);
    fs::remove_all(dir);
}

TEST(Sweep, WorkerExceptionsPropagate) {
    const Trace t = short_trace();
    // Window 3 forecaster with R = 3 but a 2-joint model: rejected up front.
    EXPECT_THROW((void)run_sweep(t, tiny_grid(), ChannelConfig{},
                                 RecoveryPolicy::foreco(Forecaster(MaModel(2, 3), "ma"), record(3)),
                                 RecoveryPolicy::repeat_last(record(3)), 2),
                 Error);
}

// ---- synthetic traces ----------------------------------------------------------------

TEST(Trajectory, ConstantProfileRowsAreIdentical) {
    TraceSpec spec;
    spec.profile = TraceProfile::Constant;
    const Trace t = generate_trace(spec);
    EXPECT_EQ(t.size(), 1500u);
    for (const auto& c : t) EXPECT_EQ(c.joints, t[0].joints);
}

TEST(Trajectory, SeedDeterminesTrace) {
    TraceSpec spec;
    EXPECT_EQ(generate_trace(spec), generate_trace(spec));
    TraceSpec other = spec;
    other.seed = 2;
    EXPECT_NE(generate_trace(spec).samples(), generate_trace(other).samples());
}

TEST(Trajectory, PickAndPlaceStaysSmooth) {
    TraceSpec spec;
    spec.noise_std = 0.0;
    spec.duration_s = 60.0;
    const Trace t = generate_trace(spec);
    EXPECT_EQ(t.size(), 3000u);
    EXPECT_EQ(t.dim(), 6u);
    double max_step = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        for (std::size_t k = 0; k < 6; ++k) max_step = std::max(max_step, std::abs(t[i].joints[k] - t[i - 1].joints[k]));
    }
    EXPECT_LE(max_step, 0.04 + 1e-12);
    EXPECT_GT(max_step, 0.0);
}

TEST(Trajectory, ProfileNames) {
    EXPECT_EQ(parse_profile("sine-mix"), TraceProfile::SineMix);
    EXPECT_THROW((void)parse_profile("zigzag"), Error);
}
