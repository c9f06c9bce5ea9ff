#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <span>
#include <string>

#include "foreco/channel_sim.hpp"
#include "foreco/model_json.hpp"

namespace foreco {

/// Flat document; every field is optional and falls back to the defaults.
[[nodiscard]] inline ChannelConfig channel_config_from_json(const Json& j,
                                                            const ChannelConfig& base = {}) {
    ChannelConfig c = base;
    try {
        c.mac.t_s_ms = j.value("t_s_ms", c.mac.t_s_ms);
        c.mac.t_col_ms = j.value("t_col_ms", c.mac.t_col_ms);
        c.mac.slot_ms = j.value("slot_ms", c.mac.slot_ms);
        c.mac.w0 = j.value("w0", c.mac.w0);
        c.mac.max_window_exp = j.value("max_window_exp", c.mac.max_window_exp);
        c.mac.max_rtx = j.value("max_rtx", c.mac.max_rtx);
        c.interference.p_if = j.value("p_if", c.interference.p_if);
        c.interference.t_if_slots = j.value("t_if_slots", c.interference.t_if_slots);
        c.interference.n_stations = j.value("n_stations", c.interference.n_stations);
        c.attempt_prob = j.value("attempt_prob", c.attempt_prob);
        c.queue_cap = j.value("queue_cap", c.queue_cap);
        c.period_ms = j.value("period_ms", c.period_ms);
        c.transport_bound_ms = j.value("transport_bound_ms", c.transport_bound_ms);
        c.seed = j.value("seed", c.seed);
        if (j.contains("a_j") && !j["a_j"].is_null()) c.rtx_override = j["a_j"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("malformed channel config: ") + e.what());
    }
    c.validate();
    return c;
}

[[nodiscard]] inline Json to_json(const ChannelConfig& c) {
    Json j;
    j["t_s_ms"] = c.mac.t_s_ms;
    j["t_col_ms"] = c.mac.t_col_ms;
    j["slot_ms"] = c.mac.slot_ms;
    j["w0"] = c.mac.w0;
    j["max_window_exp"] = c.mac.max_window_exp;
    j["max_rtx"] = c.mac.max_rtx;
    j["p_if"] = c.interference.p_if;
    j["t_if_slots"] = c.interference.t_if_slots;
    j["n_stations"] = c.interference.n_stations;
    j["attempt_prob"] = c.attempt_prob;
    j["queue_cap"] = c.queue_cap;
    j["period_ms"] = c.period_ms;
    j["transport_bound_ms"] = c.transport_bound_ms;
    j["seed"] = c.seed;
    if (c.rtx_override) j["a_j"] = *c.rtx_override;
    return j;
}

/// `seq,status,delay_ms,rtx,cause`; delay and rtx are empty for lost commands.
inline void write_outcomes_csv(std::ostream& out, std::span<const ChannelOutcome> outcomes) {
    out << "seq,status,delay_ms,rtx,cause\n";
    char buf[64];
    for (const auto& o : outcomes) {
        out << o.seq << ',';
        if (const auto* d = o.as_delivered()) {
            std::snprintf(buf, sizeof buf, "%.3f", d->delay_ms);
            out << "delivered," << buf << ',' << d->rtx_count << ",\n";
        } else {
            out << "lost,,," << to_string(o.as_lost()->cause) << '\n';
        }
    }
}

inline void write_outcomes_csv(const std::string& path, std::span<const ChannelOutcome> outcomes) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write outcome file: " + path);
    write_outcomes_csv(out, outcomes);
}

}  // namespace foreco
