#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "foreco/error.hpp"

namespace foreco {

/// 802.11 MAC timing. Defaults approximate 802.11n at 2.4 GHz.
struct MacParams {
    double t_s_ms = 0.3;     ///< successful transmission time T_s
    double t_col_ms = 0.35;  ///< collision time T_col
    double slot_ms = 0.009;  ///< average slot time
    std::uint32_t w0 = 16;   ///< initial backoff window W_0
    std::uint32_t max_window_exp = 6;  ///< W_k = min(2^k W_0, 2^max_window_exp W_0)
    std::uint32_t max_rtx = 7;         ///< m+2: failed attempts after which a frame is dropped

    void validate() const {
        if (!(t_s_ms > 0.0) || !(t_col_ms > 0.0) || !(slot_ms > 0.0)) {
            throw Error(ErrorKind::Config, "MAC times must be positive");
        }
        if (w0 < 2) throw Error(ErrorKind::Config, "W_0 must be >= 2");
        if (max_rtx < 1) throw Error(ErrorKind::Config, "max_rtx must be >= 1");
        if (max_window_exp > 20) throw Error(ErrorKind::Config, "max_window_exp is unreasonably large");
    }

    [[nodiscard]] double window(std::uint32_t k) const noexcept {
        const double cap = std::ldexp(static_cast<double>(w0), static_cast<int>(max_window_exp));
        return std::min(std::ldexp(static_cast<double>(w0), static_cast<int>(std::min(k, 60u))), cap);
    }

    /// Mean backoff sum sigma * sum_{k=0}^{j} (W_k - 1) / 2.
    [[nodiscard]] double backoff_ms(std::uint32_t j) const noexcept {
        double acc = 0.0;
        for (std::uint32_t k = 0; k <= j; ++k) acc += (window(k) - 1.0) / 2.0;
        return slot_ms * acc;
    }
};

struct InterferenceParams {
    double p_if = 0.0;        ///< probability the interferer emits per opportunity
    double t_if_slots = 0.0;  ///< active duration T_if in slots
    std::uint32_t n_stations = 1;

    void validate() const {
        if (!(p_if >= 0.0 && p_if <= 1.0)) throw Error(ErrorKind::Config, "p_if must lie in [0, 1]");
        if (!(t_if_slots >= 0.0)) throw Error(ErrorKind::Config, "T_if must be >= 0");
        if (n_stations < 1) throw Error(ErrorKind::Config, "n_stations must be >= 1");
    }
};

struct ChannelConfig {
    MacParams mac;
    InterferenceParams interference;
    /// Fixed per-slot attempt probability of every contending station.
    double attempt_prob = 0.05;
    /// Q, counting the frame in service.
    std::uint32_t queue_cap = 64;
    double period_ms = 20.0;
    double transport_bound_ms = 0.0;
    std::uint64_t seed = 1;
    /// Explicit a_0..a_{m+2}, bypassing the geometric failure model.
    std::optional<std::vector<double>> rtx_override;

    void validate() const {
        mac.validate();
        interference.validate();
        if (!(attempt_prob >= 0.0 && attempt_prob <= 1.0)) {
            throw Error(ErrorKind::Config, "attempt_prob must lie in [0, 1]");
        }
        if (queue_cap < 1) throw Error(ErrorKind::Config, "queue capacity must be >= 1");
        if (!(period_ms > 0.0)) throw Error(ErrorKind::Config, "period must be > 0");
        if (!(transport_bound_ms >= 0.0)) throw Error(ErrorKind::Config, "transport bound must be >= 0");
        if (rtx_override) {
            if (rtx_override->size() != mac.max_rtx + 1u) {
                throw Error(ErrorKind::Config, "a_j must hold max_rtx + 1 probabilities");
            }
            double sum = 0.0;
            for (double a : *rtx_override) {
                if (!(a >= 0.0)) throw Error(ErrorKind::Config, "a_j entries must be >= 0");
                sum += a;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::Config, "a_j must sum to 1");
        }
    }
};

/// p = 1 - (1 - p_col)(1 - p_int) with p_col = 1 - (1 - q)^(n-1) and
/// p_int = p_if * min(1, T_if / (T_if + T_s / slot)).
[[nodiscard]] inline double attempt_failure_prob(const ChannelConfig& cfg) {
    const auto& itf = cfg.interference;
    const double p_col =
        1.0 - std::pow(1.0 - cfg.attempt_prob, static_cast<double>(itf.n_stations - 1));
    double duty = 0.0;
    if (std::isinf(itf.t_if_slots)) {
        duty = 1.0;
    } else if (itf.t_if_slots > 0.0) {
        duty = std::min(1.0, itf.t_if_slots / (itf.t_if_slots + cfg.mac.t_s_ms / cfg.mac.slot_ms));
    }
    const double p_int = itf.p_if * duty;
    return 1.0 - (1.0 - p_col) * (1.0 - p_int);
}

/// a_j = p^j (1 - p) for j <= m+1; the loss mass a_{m+2} is the remainder.
[[nodiscard]] inline std::vector<double> rtx_distribution(double p, std::uint32_t max_rtx) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Config, "failure probability must lie in [0, 1]");
    std::vector<double> a(max_rtx + 1u, 0.0);
    double pj = 1.0;
    double delivered = 0.0;
    for (std::uint32_t j = 0; j < max_rtx; ++j) {
        a[j] = pj * (1.0 - p);
        delivered += a[j];
        pj *= p;
    }
    a[max_rtx] = std::max(0.0, 1.0 - delivered);
    return a;
}

/// The a_j vector in effect for `cfg`: the override when present, else the geometric model.
[[nodiscard]] inline std::vector<double> retransmission_distribution(const ChannelConfig& cfg) {
    if (cfg.rtx_override) return *cfg.rtx_override;
    return rtx_distribution(attempt_failure_prob(cfg), cfg.mac.max_rtx);
}

/// E_j[Delta_W] = T_s + j T_col + sigma * sum_{k=0}^{j} (W_k - 1) / 2.
[[nodiscard]] inline double mean_delay_given_rtx(std::uint32_t j, const MacParams& mac) {
    if (j + 1 > mac.max_rtx) {
        throw Error(ErrorKind::OutOfRange, "j = " + std::to_string(j) + " exceeds m+1 = " +
                                               std::to_string(mac.max_rtx - 1));
    }
    return mac.t_s_ms + static_cast<double>(j) * mac.t_col_ms + mac.backoff_ms(j);
}

/// Airtime burnt by a frame that exhausts its retransmissions:
/// (m+2) T_col + sigma * sum_{k=0}^{m+1} (W_k - 1) / 2.
[[nodiscard]] inline double failed_frame_ms(const MacParams& mac) {
    return static_cast<double>(mac.max_rtx) * mac.t_col_ms + mac.backoff_ms(mac.max_rtx - 1);
}

struct DelayBound {
    double bound_ms = 0.0;
    /// 1 - a_{m+2}; with probability a_{m+2} the delay is infinite.
    double delivery_prob = 0.0;
    /// sum_j a_j E_j / (1 - a_{m+2}): mean wireless delay of a delivered frame.
    double mixture_ms = 0.0;
};

/// D + (1 / (1 - a_{m+2})) sum_{j<=m+1} a_j E_j[Delta_W].
[[nodiscard]] inline DelayBound expected_delay_bound(const ChannelConfig& cfg) {
    cfg.validate();
    const auto a = retransmission_distribution(cfg);
    const std::uint32_t last = cfg.mac.max_rtx;
    const double delivery = 1.0 - a[last];
    if (!(delivery > 0.0)) throw Error(ErrorKind::AlwaysLost, "every frame exhausts its retransmissions");
    double acc = 0.0;
    for (std::uint32_t j = 0; j < last; ++j) acc += a[j] * mean_delay_given_rtx(j, cfg.mac);
    DelayBound out;
    out.delivery_prob = delivery;
    out.mixture_ms = acc / delivery;
    out.bound_ms = cfg.transport_bound_ms + out.mixture_ms;
    return out;
}

}  // namespace foreco
