#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "foreco/core.hpp"
#include "foreco/ols.hpp"
#include "foreco/random.hpp"
#include "foreco/recovery.hpp"
#include "foreco/var_model.hpp"

namespace foreco {

namespace detail {

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace detail

/// sqrt(mean_i sum_k (c_i^k - c-hat_i^k)^2) in the trace's joint unit.
///
/// An empty slot is scored with the last executed command; before anything
/// was executed the robot is taken to sit at the reference start pose.
[[nodiscard]] inline double rmse(const ExecutedStream& executed, const Trace& reference) {
    if (executed.commands.size() != reference.size()) {
        throw Error(ErrorKind::Config, "executed stream and reference differ in length");
    }
    if (reference.empty()) return 0.0;
    const std::vector<double>* held = &reference[0].joints;
    double acc = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (const auto& slot = executed.commands[i]) {
            if (slot->joints.size() != reference.dim()) {
                throw Error(ErrorKind::Config, "executed command dimension differs from reference");
            }
            held = &slot->joints;
        }
        acc += detail::squared_distance(*held, reference[i].joints);
    }
    return std::sqrt(acc / static_cast<double>(reference.size()));
}

/// Same metric between two complete traces; symmetric in its arguments.
[[nodiscard]] inline double rmse(const Trace& a, const Trace& b) {
    if (a.size() != b.size() || a.dim() != b.dim()) {
        throw Error(ErrorKind::Config, "traces differ in length or dimension");
    }
    if (a.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += detail::squared_distance(a[i].joints, b[i].joints);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

/// curve[w-1] is the RMSE over windows of w consecutive closed-loop forecasts,
/// each window seeded with true history and started every `stride` samples.
[[nodiscard]] inline std::vector<double> window_rmse_curve(const Forecaster& model, const Trace& test,
                                                           std::size_t window_max, std::size_t stride = 1) {
    if (window_max < 1) throw Error(ErrorKind::Config, "window_max must be >= 1");
    if (stride < 1) throw Error(ErrorKind::Config, "stride must be >= 1");
    const std::size_t warmup = std::max<std::size_t>(model.window(), 1);
    if (test.size() < warmup + window_max) {
        throw Error(ErrorKind::InsufficientData, "test trace is shorter than history plus window");
    }
    std::vector<double> sq(window_max, 0.0);
    std::size_t starts = 0;
    std::vector<Command> history;
    for (std::size_t s = warmup; s + window_max <= test.size(); s += stride) {
        history.assign(test.samples().begin() + static_cast<std::ptrdiff_t>(s - warmup),
                       test.samples().begin() + static_cast<std::ptrdiff_t>(s));
        for (std::size_t h = 0; h < window_max; ++h) {
            Command next = model.predict(history, test.period());
            sq[h] += detail::squared_distance(next.joints, test[s + h].joints);
            history.push_back(std::move(next));
        }
        ++starts;
    }
    std::vector<double> curve(window_max);
    double cumulative = 0.0;
    for (std::size_t w = 1; w <= window_max; ++w) {
        cumulative += sq[w - 1];
        curve[w - 1] = std::sqrt(cumulative / static_cast<double>(starts * w));
    }
    return curve;
}

/// Outcomes for `count` commands where `bursts` runs of `burst_len`
/// consecutive commands are lost and everything else arrives with zero delay.
/// Slots [first_slot, count) are cut into `bursts` equal strata and each run
/// starts at a uniform position inside its own stratum, so runs never overlap.
[[nodiscard]] inline std::vector<ChannelOutcome> controlled_loss_outcomes(std::size_t count, std::size_t burst_len,
                                                                         std::size_t bursts, std::size_t first_slot,
                                                                         std::uint64_t seed) {
    if (bursts < 1 || burst_len < 1) throw Error(ErrorKind::Config, "need at least one burst of length >= 1");
    if (first_slot >= count || (count - first_slot) / bursts < burst_len) {
        throw Error(ErrorKind::Config, "bursts do not fit in the trace");
    }
    std::vector<ChannelOutcome> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i].seq = static_cast<std::int64_t>(i);
        out[i].result = Delivered{};
    }
    const std::size_t stratum = (count - first_slot) / bursts;
    Rng rng(seed);
    for (std::size_t b = 0; b < bursts; ++b) {
        const auto slack = static_cast<double>(stratum - burst_len + 1);
        const std::size_t start = first_slot + b * stratum + static_cast<std::size_t>(rng.uniform() * slack);
        for (std::size_t k = 0; k < burst_len; ++k) out[start + k].result = Lost{LossCause::RtxExceeded};
    }
    return out;
}

enum class ModelFamily { Var, Ma };

[[nodiscard]] constexpr std::string_view to_string(ModelFamily f) noexcept {
    return f == ModelFamily::Var ? "var" : "ma";
}

struct WindowStudyRow {
    ModelFamily family = ModelFamily::Var;
    std::size_t best_record_len = 1;
    /// RMSE per forecasting window for the best record length.
    std::vector<double> curve;
    /// Mean of the curve for R = 1..r_max; the best R minimises it.
    std::vector<double> score_by_record_len;
};

struct WindowStudyOptions {
    std::size_t r_max = 20;
    std::size_t stride = 1;
    OlsOptions ols;
};

/// For each family, fits R = 1..r_max on `train` (VAR by least squares, MA
/// needs no fit), scores closed-loop window RMSE on `test` and keeps the best R.
[[nodiscard]] inline std::vector<WindowStudyRow> forecast_window_study(
    const Trace& train, const Trace& test, std::size_t window_max,
    std::span<const ModelFamily> families, const WindowStudyOptions& opts = {}) {
    if (train.dim() != test.dim()) throw Error(ErrorKind::Config, "train and test dimensions differ");
    std::vector<WindowStudyRow> rows;
    for (ModelFamily family : families) {
        WindowStudyRow row;
        row.family = family;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 1; r <= opts.r_max; ++r) {
            const Forecaster model = family == ModelFamily::Var
                                         ? Forecaster(fit_var_ols(train, r, opts.ols), "var")
                                         : Forecaster(MaModel(train.dim(), r), "ma");
            auto curve = window_rmse_curve(model, test, window_max, opts.stride);
            double score = 0.0;
            for (double v : curve) score += v;
            score /= static_cast<double>(curve.size());
            row.score_by_record_len.push_back(score);
            if (score < best) {
                best = score;
                row.best_record_len = r;
                row.curve = std::move(curve);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace foreco
