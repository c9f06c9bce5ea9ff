#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "foreco/channel_sim.hpp"
#include "foreco/core.hpp"
#include "foreco/var_model.hpp"

namespace foreco {

enum class RecoveryMode { FoReCo, RepeatLast, Drop };

[[nodiscard]] constexpr std::string_view to_string(RecoveryMode m) noexcept {
    switch (m) {
        case RecoveryMode::FoReCo: return "foreco";
        case RecoveryMode::RepeatLast: return "repeat_last";
        case RecoveryMode::Drop: return "drop";
    }
    return "unknown";
}

struct RecoveryPolicy {
    RecoveryMode mode = RecoveryMode::RepeatLast;
    std::optional<Forecaster> model;
    RecoveryConfig cfg;

    [[nodiscard]] static RecoveryPolicy foreco(Forecaster model, RecoveryConfig cfg) {
        return {RecoveryMode::FoReCo, std::move(model), cfg};
    }
    [[nodiscard]] static RecoveryPolicy repeat_last(RecoveryConfig cfg) {
        return {RecoveryMode::RepeatLast, std::nullopt, cfg};
    }
    [[nodiscard]] static RecoveryPolicy drop(RecoveryConfig cfg) {
        return {RecoveryMode::Drop, std::nullopt, cfg};
    }

    void validate(std::size_t trace_dim) const {
        cfg.validate();
        if (mode != RecoveryMode::FoReCo) return;
        if (!model) throw Error(ErrorKind::Config, "FoReCo policy needs a forecaster");
        if (model->dim() != trace_dim) {
            throw Error(ErrorKind::Config, "forecaster dimension " + std::to_string(model->dim()) +
                                               " does not match trace dimension " +
                                               std::to_string(trace_dim));
        }
        if (model->window() > cfg.record_len) {
            throw Error(ErrorKind::Config, "forecaster window exceeds the record length R");
        }
    }
};

struct RecoveryStats {
    std::size_t on_time = 0;
    std::size_t forecast = 0;
    std::size_t repeated = 0;
    std::size_t dropped = 0;

    [[nodiscard]] std::size_t total() const noexcept { return on_time + forecast + repeated + dropped; }
    bool operator==(const RecoveryStats&) const = default;
};

/// The executed command stream c-hat, one slot per original command.
/// An empty slot means nothing was executed (the robot keeps its last command).
struct ExecutedStream {
    std::vector<std::optional<Command>> commands;
    RecoveryStats stats;
    /// Every delivered command, on time or late, with its arrival time; the
    /// training data a deployed recovery loop would accumulate.
    std::vector<Command> dataset;

    bool operator==(const ExecutedStream&) const = default;
};

/// Delivered and arrived within the slot deadline: delay <= period + tau.
[[nodiscard]] inline bool replay_deadline(const ChannelOutcome& outcome, double slot_gen_ms,
                                          double period_ms, const RecoveryConfig& cfg) {
    const auto* d = outcome.as_delivered();
    if (!d) return false;
    const Micros gen = from_ms(slot_gen_ms);
    return gen + from_ms(d->delay_ms) <= gen + from_ms(period_ms) + from_ms(cfg.tolerance_ms);
}

/// Replays `trace` through the channel `outcomes` and applies the recovery
/// policy slot by slot.
///
/// Late or lost commands are replaced by a forecast over the last executed
/// commands (FoReCo), the previous executed command (RepeatLast) or nothing
/// (Drop). The first R slots are never forecast; misses there fall back to
/// RepeatLast.
[[nodiscard]] inline ExecutedStream run_recovery(const Trace& trace,
                                                 std::span<const ChannelOutcome> outcomes,
                                                 const RecoveryPolicy& policy) {
    if (outcomes.size() != trace.size()) {
        throw Error(ErrorKind::Config, "outcome count differs from trace length");
    }
    policy.validate(trace.dim());
    const std::size_t record = policy.cfg.record_len;

    ExecutedStream out;
    out.commands.reserve(trace.size());
    std::vector<Command> executed;  // history of c-hat, without empty slots
    executed.reserve(trace.size());

    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Command& original = trace[i];
        const ChannelOutcome& outcome = outcomes[i];
        if (const auto* d = outcome.as_delivered()) {
            Command received = original;
            received.arrival_time = original.gen_time + from_ms(d->delay_ms);
            out.dataset.push_back(received);
            if (replay_deadline(outcome, original.gen_time_ms(), trace.period_ms(), policy.cfg)) {
                executed.push_back(std::move(received));
                out.commands.emplace_back(executed.back());
                ++out.stats.on_time;
                continue;
            }
        }

        std::optional<Command> substitute;
        if (policy.mode == RecoveryMode::FoReCo && i >= record &&
            executed.size() >= std::max<std::size_t>(policy.model->window(), 1)) {
            substitute = policy.model->predict(executed, trace.period());
            substitute->provenance = Provenance::Forecast;
            ++out.stats.forecast;
        } else if (policy.mode != RecoveryMode::Drop && !executed.empty()) {
            substitute = executed.back();
            substitute->provenance = Provenance::RepeatLast;
            ++out.stats.repeated;
        }

        if (!substitute) {
            ++out.stats.dropped;
            out.commands.emplace_back(std::nullopt);
            continue;
        }
        substitute->seq = original.seq;
        substitute->gen_time = original.gen_time;
        substitute->arrival_time.reset();
        executed.push_back(std::move(*substitute));
        out.commands.emplace_back(executed.back());
    }
    return out;
}

}  // namespace foreco
