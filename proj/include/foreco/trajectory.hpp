#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "foreco/core.hpp"
#include "foreco/random.hpp"

namespace foreco {

enum class TraceProfile { PickAndPlace, SineMix, Constant };

[[nodiscard]] inline TraceProfile parse_profile(std::string_view name) {
    if (name == "pick-and-place") return TraceProfile::PickAndPlace;
    if (name == "sine-mix") return TraceProfile::SineMix;
    if (name == "constant") return TraceProfile::Constant;
    throw Error(ErrorKind::Config, "unknown trace profile '" + std::string(name) +
                                       "' (expected pick-and-place, sine-mix or constant)");
}

struct TraceSpec {
    TraceProfile profile = TraceProfile::PickAndPlace;
    double duration_s = 30.0;
    double period_ms = 20.0;
    std::size_t dim = 6;
    std::uint64_t seed = 1;
    /// Std of white measurement noise added to every joint (not to Constant).
    double noise_std = 1e-3;
    /// Duration of each acceleration ramp of a move (pick-and-place only).
    double ramp_s = 0.2;

    [[nodiscard]] std::size_t samples() const {
        return static_cast<std::size_t>(std::llround(duration_s * 1000.0 / period_ms));
    }
};

namespace detail {

/// Position along a move with a trapezoidal velocity whose acceleration
/// ramps are cosine-shaped; maps [0, 1] onto [0, 1] with zero end velocities.
[[nodiscard]] inline double smooth_trapezoid(double tau, double ramp) {
    tau = std::clamp(tau, 0.0, 1.0);
    const double pi = std::numbers::pi;
    auto ramp_area = [&](double x) { return x / 2.0 - ramp / (2.0 * pi) * std::sin(pi * x / ramp); };
    double area = 0.0;
    if (tau < ramp) {
        area = ramp_area(tau);
    } else if (tau <= 1.0 - ramp) {
        area = ramp / 2.0 + (tau - ramp);
    } else {
        area = (1.0 - ramp) - ramp_area(1.0 - tau);
    }
    return area / (1.0 - ramp);
}

inline std::vector<std::vector<double>> pick_and_place_rows(const TraceSpec& spec, Rng& rng) {
    const std::size_t n = spec.samples();
    const std::size_t d = spec.dim;
    auto pose = [&](std::array<double, 6> base, double jitter) {
        std::vector<double> p(d);
        for (std::size_t k = 0; k < d; ++k) {
            p[k] = base[k % 6] * (1.0 + 0.1 * static_cast<double>(k / 6)) +
                   jitter * (2.0 * rng.uniform() - 1.0);
        }
        return p;
    };
    // Joint-space poses of a six-axis arm, in radians.
    constexpr std::array<double, 6> home{0.0, 0.3, -1.2, 0.0, 0.9, 0.0};
    constexpr std::array<double, 6> pick{0.8, -0.35, -0.6, 0.25, 0.7, 0.8};
    constexpr std::array<double, 6> place{-0.7, -0.2, -0.75, -0.3, 0.8, -0.7};
    constexpr std::array<double, 6> lift{0.0, 0.15, -0.25, 0.0, -0.15, 0.0};

    const double dt = spec.period_ms / 1000.0;
    std::vector<std::vector<double>> rows;
    rows.reserve(n);
    std::vector<double> current = pose(home, 0.0);

    auto dwell = [&](double seconds) {
        const auto steps = static_cast<std::size_t>(seconds / dt);
        for (std::size_t s = 0; s < steps && rows.size() < n; ++s) rows.push_back(current);
    };
    auto move_to = [&](const std::vector<double>& target) {
        double span = 0.0;
        for (std::size_t k = 0; k < d; ++k) span = std::max(span, std::abs(target[k] - current[k]));
        // Operator speed varies between moves; 0.04 rad per command is the ceiling.
        const double v_max = std::min(0.5 + 0.7 * rng.uniform(), 0.04 / dt);
        // The controller limits acceleration, so ramps last a fixed time.
        const double ramp_s = spec.ramp_s;
        const double seconds = std::max(2.0 * ramp_s, span / v_max + ramp_s);
        const double ramp = std::min(0.5, ramp_s / seconds);
        const auto steps = std::max<std::size_t>(2, static_cast<std::size_t>(seconds / dt));
        const std::vector<double> from = current;
        for (std::size_t s = 1; s <= steps && rows.size() < n; ++s) {
            const double u = smooth_trapezoid(static_cast<double>(s) / static_cast<double>(steps), ramp);
            for (std::size_t k = 0; k < d; ++k) current[k] = from[k] + u * (target[k] - from[k]);
            rows.push_back(current);
        }
        current = target;
    };
    auto above = [&](const std::vector<double>& p) {
        std::vector<double> q = p;
        for (std::size_t k = 0; k < d; ++k) q[k] += lift[k % 6];
        return q;
    };

    dwell(0.2 + 0.3 * rng.uniform());
    while (rows.size() < n) {
        const auto pick_pose = pose(pick, 0.06);
        const auto place_pose = pose(place, 0.06);
        move_to(above(pick_pose));
        move_to(pick_pose);
        dwell(0.3 + 0.4 * rng.uniform());
        move_to(above(pick_pose));
        move_to(above(place_pose));
        move_to(place_pose);
        dwell(0.3 + 0.4 * rng.uniform());
        move_to(above(place_pose));
        move_to(pose(home, 0.03));
        dwell(0.2 + 0.5 * rng.uniform());
    }
    return rows;
}

inline std::vector<std::vector<double>> sine_mix_rows(const TraceSpec& spec, Rng& rng) {
    const std::size_t n = spec.samples();
    const std::size_t d = spec.dim;
    constexpr std::size_t kSources = 3;
    std::array<double, kSources> freq{};
    std::array<double, kSources> phase{};
    for (std::size_t s = 0; s < kSources; ++s) {
        freq[s] = 0.05 + 0.45 * rng.uniform();
        phase[s] = 2.0 * std::numbers::pi * rng.uniform();
    }
    // Every joint mixes the same sources, so joints are correlated.
    std::vector<std::array<double, kSources>> mix(d);
    for (auto& m : mix) {
        for (double& w : m) w = 0.2 + 0.6 * rng.uniform();
    }
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * spec.period_ms / 1000.0;
        for (std::size_t k = 0; k < d; ++k) {
            double v = 0.0;
            for (std::size_t s = 0; s < kSources; ++s) {
                v += mix[k][s] * std::sin(2.0 * std::numbers::pi * freq[s] * t + phase[s]);
            }
            rows[i][k] = v;
        }
    }
    return rows;
}

}  // namespace detail

/// Synthetic joint trajectory at a fixed period, reproducible from spec.seed.
[[nodiscard]] inline Trace generate_trace(const TraceSpec& spec) {
    if (spec.dim < 1) throw Error(ErrorKind::Config, "trace dimension must be >= 1");
    if (!(spec.period_ms > 0.0)) throw Error(ErrorKind::Config, "period must be > 0");
    if (spec.samples() < 1) throw Error(ErrorKind::Config, "duration yields no samples");
    Rng rng(spec.seed);
    std::vector<std::vector<double>> rows;
    switch (spec.profile) {
        case TraceProfile::PickAndPlace: rows = detail::pick_and_place_rows(spec, rng); break;
        case TraceProfile::SineMix: rows = detail::sine_mix_rows(spec, rng); break;
        case TraceProfile::Constant: {
            std::vector<double> pose(spec.dim);
            for (double& v : pose) v = 2.0 * rng.uniform() - 1.0;
            rows.assign(spec.samples(), pose);
            break;
        }
    }
    if (spec.profile != TraceProfile::Constant && spec.noise_std > 0.0) {
        for (auto& row : rows) {
            for (double& v : row) v += spec.noise_std * rng.normal();
        }
    }
    return Trace::from_rows(from_ms(spec.period_ms), rows, JointUnit::Radians);
}

}  // namespace foreco
