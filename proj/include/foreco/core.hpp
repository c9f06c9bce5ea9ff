#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "foreco/error.hpp"

namespace foreco {

/// Internal time base. Public APIs take and return milliseconds as double.
using Micros = std::chrono::microseconds;

[[nodiscard]] inline Micros from_ms(double ms) {
    return Micros{static_cast<std::int64_t>(std::llround(ms * 1000.0))};
}

[[nodiscard]] constexpr double to_ms(Micros t) noexcept {
    return static_cast<double>(t.count()) / 1000.0;
}

enum class Provenance { Original, Forecast, RepeatLast };

[[nodiscard]] constexpr std::string_view to_string(Provenance p) noexcept {
    switch (p) {
        case Provenance::Original: return "original";
        case Provenance::Forecast: return "forecast";
        case Provenance::RepeatLast: return "repeat_last";
    }
    return "unknown";
}

enum class JointUnit { Radians, Meters, Mixed };

[[nodiscard]] constexpr std::string_view to_string(JointUnit u) noexcept {
    switch (u) {
        case JointUnit::Radians: return "radians";
        case JointUnit::Meters: return "meters";
        case JointUnit::Mixed: return "mixed";
    }
    return "unknown";
}

/// One joint-state sample c_i. An absent arrival time means the command was lost.
struct Command {
    std::int64_t seq = 0;
    std::vector<double> joints;
    Micros gen_time{0};
    std::optional<Micros> arrival_time;
    Provenance provenance = Provenance::Original;

    [[nodiscard]] bool lost() const noexcept { return !arrival_time.has_value(); }

    [[nodiscard]] std::optional<Micros> delay() const {
        if (!arrival_time) return std::nullopt;
        return *arrival_time - gen_time;
    }

    [[nodiscard]] double gen_time_ms() const noexcept { return to_ms(gen_time); }

    [[nodiscard]] std::optional<double> delay_ms() const {
        if (auto d = delay()) return to_ms(*d);
        return std::nullopt;
    }

    bool operator==(const Command&) const = default;
};

/// Commands sampled every period, gen_time(i) = gen_time(0) + i * period.
///
/// Sequence numbers are contiguous from the first sample's seq. A trace cut
/// out of a longer one keeps its original seq and gen_time values.
class Trace {
public:
    Trace() = default;

    Trace(Micros period, std::size_t dim, std::vector<Command> samples,
          JointUnit unit = JointUnit::Radians)
        : period_(period), dim_(dim), samples_(std::move(samples)), unit_(unit) {
        validate();
    }

    /// Builds a trace of Original commands from joint rows starting at `start`.
    [[nodiscard]] static Trace from_rows(Micros period, const std::vector<std::vector<double>>& rows,
                                         JointUnit unit = JointUnit::Radians,
                                         Micros start = Micros{0}, std::int64_t first_seq = 0) {
        if (rows.empty()) throw Error(ErrorKind::InvalidTrace, "trace has no rows");
        std::vector<Command> samples;
        samples.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            Command c;
            c.seq = first_seq + static_cast<std::int64_t>(i);
            c.joints = rows[i];
            c.gen_time = start + period * static_cast<std::int64_t>(i);
            samples.push_back(std::move(c));
        }
        return Trace(period, rows.front().size(), std::move(samples), unit);
    }

    [[nodiscard]] Micros period() const noexcept { return period_; }
    [[nodiscard]] double period_ms() const noexcept { return to_ms(period_); }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
    [[nodiscard]] JointUnit unit() const noexcept { return unit_; }
    [[nodiscard]] const std::vector<Command>& samples() const noexcept { return samples_; }
    [[nodiscard]] const Command& operator[](std::size_t i) const { return samples_[i]; }
    [[nodiscard]] auto begin() const noexcept { return samples_.begin(); }
    [[nodiscard]] auto end() const noexcept { return samples_.end(); }

    [[nodiscard]] Trace slice(std::size_t first, std::size_t count) const {
        if (first + count > samples_.size()) {
            throw Error(ErrorKind::OutOfRange, "trace slice exceeds trace length");
        }
        auto b = samples_.begin() + static_cast<std::ptrdiff_t>(first);
        return Trace(period_, dim_, std::vector<Command>(b, b + static_cast<std::ptrdiff_t>(count)),
                     unit_);
    }

    bool operator==(const Trace&) const = default;

private:
    void validate() const {
        if (period_.count() <= 0) throw Error(ErrorKind::InvalidTrace, "period must be positive");
        if (dim_ == 0) throw Error(ErrorKind::InvalidTrace, "dimension must be at least 1");
        if (samples_.empty()) return;
        const Command& first = samples_.front();
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            const Command& c = samples_[i];
            const auto step = static_cast<std::int64_t>(i);
            if (c.joints.size() != dim_) {
                throw Error(ErrorKind::InvalidTrace,
                            "sample " + std::to_string(i) + " has " +
                                std::to_string(c.joints.size()) + " joints, expected " +
                                std::to_string(dim_));
            }
            if (c.seq != first.seq + step) {
                throw Error(ErrorKind::InvalidTrace, "non-contiguous seq at sample " + std::to_string(i));
            }
            if (c.gen_time != first.gen_time + period_ * step) {
                throw Error(ErrorKind::InvalidTrace,
                            "gen_time off the period grid at sample " + std::to_string(i));
            }
            if (c.arrival_time && *c.arrival_time < c.gen_time) {
                throw Error(ErrorKind::InvalidTrace,
                            "arrival precedes generation at sample " + std::to_string(i));
            }
        }
    }

    Micros period_{20000};
    std::size_t dim_ = 1;
    std::vector<Command> samples_;
    JointUnit unit_ = JointUnit::Radians;
};

/// Tolerance tau, record length R and transport bound D.
struct RecoveryConfig {
    double tolerance_ms = 0.0;
    std::size_t record_len = 1;
    double transport_bound_ms = 0.0;

    void validate() const {
        if (!(tolerance_ms >= 0.0)) throw Error(ErrorKind::Config, "tolerance must be >= 0");
        if (record_len < 1) throw Error(ErrorKind::Config, "record length must be >= 1");
        if (!(transport_bound_ms >= 0.0)) throw Error(ErrorKind::Config, "transport bound must be >= 0");
    }
};

/// Splits into the first floor(alpha * H) samples and the remainder.
[[nodiscard]] inline std::pair<Trace, Trace> split_dataset(const Trace& trace, double alpha) {
    if (trace.empty()) throw Error(ErrorKind::InvalidTrace, "cannot split an empty trace");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorKind::Config, "alpha must lie in (0, 1)");
    }
    const std::size_t h = trace.size();
    if (h < 2) throw Error(ErrorKind::InvalidTrace, "split needs at least 2 samples");
    // The 1e-9 guards products like 0.29 * 100 = 28.999999999999996.
    const auto head = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(h) + 1e-9));
    if (head < 1 || head >= h) {
        throw Error(ErrorKind::InvalidTrace, "alpha leaves one side of the split empty");
    }
    return {trace.slice(0, head), trace.slice(head, h - head)};
}

/// Indicator 1 - 1{delay > tau}: delivered and delay <= tolerance.
[[nodiscard]] inline bool is_on_time(const Command& cmd, const RecoveryConfig& cfg) {
    const auto d = cmd.delay_ms();
    return d.has_value() && *d <= cfg.tolerance_ms;
}

}  // namespace foreco
