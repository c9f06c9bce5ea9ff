#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <span>
#include <variant>
#include <vector>

#include "foreco/channel.hpp"
#include "foreco/core.hpp"
#include "foreco/random.hpp"

namespace foreco {

struct Delivered {
    double delay_ms = 0.0;  ///< wait + service + transport
    std::uint32_t rtx_count = 0;
    double waited_ms = 0.0;

    bool operator==(const Delivered&) const = default;
};

enum class LossCause { RtxExceeded, QueueOverflow };

[[nodiscard]] constexpr std::string_view to_string(LossCause c) noexcept {
    return c == LossCause::RtxExceeded ? "rtx_exceeded" : "queue_overflow";
}

struct Lost {
    LossCause cause = LossCause::RtxExceeded;

    bool operator==(const Lost&) const = default;
};

struct ChannelOutcome {
    std::int64_t seq = 0;
    std::variant<Delivered, Lost> result;

    [[nodiscard]] bool delivered() const noexcept { return std::holds_alternative<Delivered>(result); }
    [[nodiscard]] const Delivered* as_delivered() const noexcept { return std::get_if<Delivered>(&result); }
    [[nodiscard]] const Lost* as_lost() const noexcept { return std::get_if<Lost>(&result); }

    [[nodiscard]] std::optional<double> delay_ms() const noexcept {
        if (const auto* d = as_delivered()) return d->delay_ms;
        return std::nullopt;
    }

    bool operator==(const ChannelOutcome&) const = default;
};

namespace detail {

/// Single-server FIFO queue with deterministic arrivals every `period` and
/// hyperexponential service. Q counts the frame in service.
class ChannelSimulator {
public:
    explicit ChannelSimulator(const ChannelConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
        cfg_.validate();
        rtx_ = retransmission_distribution(cfg_);
        for (std::uint32_t j = 0; j < cfg_.mac.max_rtx; ++j) {
            branch_mean_ms_.push_back(mean_delay_given_rtx(j, cfg_.mac));
        }
        failed_frame_ = from_ms(failed_frame_ms(cfg_.mac));
    }

    [[nodiscard]] std::vector<ChannelOutcome> run(std::int64_t first_seq, Micros start, Micros period,
                                                  std::size_t count) {
        frames_.assign(count, Frame{});
        outcomes_.assign(count, ChannelOutcome{});
        for (std::size_t i = 0; i < count; ++i) {
            Frame& f = frames_[i];
            f.arrival = start + period * static_cast<std::int64_t>(i);
            // Three draws per frame, even for dropped ones, so frame i always
            // sees the same random numbers whatever happens to earlier frames.
            f.branch = static_cast<std::uint32_t>(rng_.categorical(rtx_));
            const double service_u = rng_.uniform();
            const double transport_u = rng_.uniform();
            if (f.branch < cfg_.mac.max_rtx) {
                f.service = from_ms(-branch_mean_ms_[f.branch] * std::log1p(-service_u));
            } else {
                f.service = failed_frame_;
            }
            f.transport = cfg_.transport_bound_ms > 0.0
                              ? from_ms(cfg_.transport_bound_ms * (1.0 - transport_u))
                              : Micros{0};
            outcomes_[i].seq = first_seq + static_cast<std::int64_t>(i);
            events_.push(Event{f.arrival, EventKind::Arrival, i});
        }

        while (!events_.empty()) {
            const Event ev = events_.top();
            events_.pop();
            if (ev.kind == EventKind::Departure) {
                depart(ev.frame, ev.time);
            } else {
                arrive(ev.frame, ev.time);
            }
        }
        return std::move(outcomes_);
    }

private:
    // Departures sort before arrivals at the same instant, freeing the slot first.
    enum class EventKind : int { Departure = 0, Arrival = 1 };

    struct Event {
        Micros time;
        EventKind kind;
        std::size_t frame;

        bool operator>(const Event& o) const noexcept {
            if (time != o.time) return time > o.time;
            if (kind != o.kind) return kind > o.kind;
            return frame > o.frame;
        }
    };

    struct Frame {
        Micros arrival{0};
        Micros service{0};
        Micros transport{0};
        Micros service_start{0};
        std::uint32_t branch = 0;
    };

    void arrive(std::size_t i, Micros now) {
        if (in_system_ >= cfg_.queue_cap) {
            outcomes_[i].result = Lost{LossCause::QueueOverflow};
            return;
        }
        ++in_system_;
        if (busy_) {
            waiting_.push_back(i);
        } else {
            start_service(i, now);
        }
    }

    void start_service(std::size_t i, Micros now) {
        busy_ = true;
        frames_[i].service_start = now;
        events_.push(Event{now + frames_[i].service, EventKind::Departure, i});
    }

    void depart(std::size_t i, Micros now) {
        const Frame& f = frames_[i];
        if (f.branch < cfg_.mac.max_rtx) {
            outcomes_[i].result = Delivered{to_ms(now - f.arrival + f.transport), f.branch,
                                            to_ms(f.service_start - f.arrival)};
        } else {
            outcomes_[i].result = Lost{LossCause::RtxExceeded};
        }
        --in_system_;
        busy_ = false;
        if (!waiting_.empty()) {
            const std::size_t next = waiting_.front();
            waiting_.pop_front();
            start_service(next, now);
        }
    }

    ChannelConfig cfg_;
    Rng rng_;
    std::vector<double> rtx_;
    std::vector<double> branch_mean_ms_;
    Micros failed_frame_{0};
    std::vector<Frame> frames_;
    std::vector<ChannelOutcome> outcomes_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::deque<std::size_t> waiting_;
    std::uint32_t in_system_ = 0;
    bool busy_ = false;
};

}  // namespace detail

/// Runs every command of `trace` through the G/HEXP/1/Q access-point queue.
/// Reproducible for a fixed cfg.seed.
[[nodiscard]] inline std::vector<ChannelOutcome> simulate_channel(const Trace& trace,
                                                                  const ChannelConfig& cfg) {
    if (trace.empty()) return {};
    if (std::abs(trace.period_ms() - cfg.period_ms) > 1e-9) {
        throw Error(ErrorKind::Config, "trace period does not match channel period");
    }
    return detail::ChannelSimulator(cfg).run(trace.samples().front().seq,
                                             trace.samples().front().gen_time, trace.period(),
                                             trace.size());
}

/// Simulates `count` commands sent every cfg.period_ms starting at t = 0.
[[nodiscard]] inline std::vector<ChannelOutcome> simulate_arrivals(const ChannelConfig& cfg,
                                                                   std::size_t count) {
    return detail::ChannelSimulator(cfg).run(0, Micros{0}, from_ms(cfg.period_ms), count);
}

/// Copies `trace` with arrival times filled from `outcomes` (lost commands stay without one).
[[nodiscard]] inline Trace apply_outcomes(const Trace& trace, std::span<const ChannelOutcome> outcomes) {
    if (outcomes.size() != trace.size()) throw Error(ErrorKind::Config, "outcome count differs from trace length");
    std::vector<Command> samples = trace.samples();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i].arrival_time.reset();
        if (const auto* d = outcomes[i].as_delivered()) {
            samples[i].arrival_time = samples[i].gen_time + from_ms(d->delay_ms);
        }
    }
    return Trace(trace.period(), trace.dim(), std::move(samples), trace.unit());
}

/// Counts per retransmission branch; bin m+2 holds RtxExceeded losses.
/// Queue overflows are not counted.
[[nodiscard]] inline std::vector<std::size_t> rtx_histogram(std::span<const ChannelOutcome> outcomes,
                                                            std::uint32_t max_rtx) {
    std::vector<std::size_t> bins(max_rtx + 1u, 0);
    for (const auto& o : outcomes) {
        if (const auto* d = o.as_delivered()) {
            ++bins.at(d->rtx_count);
        } else if (o.as_lost()->cause == LossCause::RtxExceeded) {
            ++bins[max_rtx];
        }
    }
    return bins;
}

struct CausalityCheck {
    double analytic = 0.0;
    double empirical = 0.0;
    /// Binomial standard error of `empirical` around `analytic`.
    double std_error = 0.0;
    std::size_t pairs = 0;
};

/// Probability that two consecutive commands need the same number of
/// retransmissions and are both delivered: sum_{j<=m+1} a_j^2.
/// The empirical side draws `n_samples` disjoint consecutive pairs.
[[nodiscard]] inline CausalityCheck verify_causality_prob(const ChannelConfig& cfg, std::size_t n_samples) {
    if (n_samples < 10000) throw Error(ErrorKind::Config, "causality check needs at least 1e4 samples");
    cfg.validate();
    const auto a = retransmission_distribution(cfg);
    const std::uint32_t last = cfg.mac.max_rtx;
    CausalityCheck out;
    for (std::uint32_t j = 0; j < last; ++j) out.analytic += a[j] * a[j];
    Rng rng(derive_seed(cfg.seed, 0xCA05A1));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t j1 = rng.categorical(a);
        const std::size_t j2 = rng.categorical(a);
        if (j1 == j2 && j1 < last) ++hits;
    }
    out.pairs = n_samples;
    out.empirical = static_cast<double>(hits) / static_cast<double>(n_samples);
    out.std_error = std::sqrt(out.analytic * (1.0 - out.analytic) / static_cast<double>(n_samples));
    return out;
}

struct UnboundedDelayCheck {
    double analytic_loss = 0.0;         ///< a_{m+2}
    double empirical_exceed = 0.0;      ///< fraction lost, i.e. beyond every K
    double empirical_exceed_k = 0.0;    ///< fraction lost or delivered later than K
    double overflow_fraction = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Runs `n_samples` commands through the queue and compares the lost
/// fraction with a_{m+2}.
[[nodiscard]] inline UnboundedDelayCheck verify_unbounded_delay(const ChannelConfig& cfg, double k_ms,
                                                                std::size_t n_samples) {
    if (n_samples < 10000) throw Error(ErrorKind::Config, "unbounded-delay check needs at least 1e4 samples");
    const auto a = retransmission_distribution(cfg);
    const auto outcomes = simulate_arrivals(cfg, n_samples);
    std::size_t lost = 0;
    std::size_t beyond_k = 0;
    std::size_t overflow = 0;
    for (const auto& o : outcomes) {
        if (const auto* l = o.as_lost()) {
            ++lost;
            ++beyond_k;
            if (l->cause == LossCause::QueueOverflow) ++overflow;
        } else if (o.as_delivered()->delay_ms > k_ms) {
            ++beyond_k;
        }
    }
    const double n = static_cast<double>(n_samples);
    UnboundedDelayCheck out;
    out.analytic_loss = a[cfg.mac.max_rtx];
    out.empirical_exceed = static_cast<double>(lost) / n;
    out.empirical_exceed_k = static_cast<double>(beyond_k) / n;
    out.overflow_fraction = static_cast<double>(overflow) / n;
    out.std_error = std::sqrt(out.analytic_loss * (1.0 - out.analytic_loss) / n);
    out.samples = n_samples;
    return out;
}

}  // namespace foreco
