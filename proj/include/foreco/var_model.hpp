#pragma once

#include <concepts>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "foreco/core.hpp"

namespace foreco {

namespace detail {

inline void require_history(std::span<const Command> history, std::size_t needed, std::size_t dim) {
    if (history.size() < needed || history.empty()) {
        throw Error(ErrorKind::InsufficientHistory,
                    "history has " + std::to_string(history.size()) + " commands, need " +
                        std::to_string(needed == 0 ? 1 : needed));
    }
    for (const Command& c : history.last(needed == 0 ? 1 : needed)) {
        if (c.joints.size() != dim) {
            throw Error(ErrorKind::Config, "history command dimension does not match model");
        }
    }
}

inline Command forecast_command(const Command& last, Micros period, std::vector<double> joints) {
    Command out;
    out.seq = last.seq + 1;
    out.gen_time = last.gen_time + period;
    out.joints = std::move(joints);
    out.provenance = Provenance::Forecast;
    return out;
}

}  // namespace detail

/// y_t = b + sum_{i=1..lag} A_i y_{t-i} + e_t.
///
/// coeffs[0] multiplies the most recent command. n_params() follows the
/// d^2 * lag convention used by the AIC; the d bias terms are not counted.
struct VarModel {
    std::size_t dim = 0;
    std::size_t lag = 0;
    Eigen::VectorXd bias;
    std::vector<Eigen::MatrixXd> coeffs;
    Eigen::MatrixXd residual_cov;
    std::string trainer = "ols";
    std::optional<std::string> trained_at;

    [[nodiscard]] static VarModel zeros(std::size_t dim, std::size_t lag) {
        VarModel m;
        m.dim = dim;
        m.lag = lag;
        m.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        m.coeffs.assign(lag, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                   static_cast<Eigen::Index>(dim)));
        m.residual_cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                               static_cast<Eigen::Index>(dim));
        return m;
    }

    [[nodiscard]] std::size_t n_params() const noexcept { return dim * dim * lag; }
    [[nodiscard]] std::size_t window() const noexcept { return lag; }

    [[nodiscard]] bool finite() const {
        if (!bias.allFinite() || !residual_cov.allFinite()) return false;
        for (const auto& a : coeffs) {
            if (!a.allFinite()) return false;
        }
        return true;
    }

    /// One-step forecast from the last `lag` entries of `history` (oldest first).
    [[nodiscard]] Eigen::VectorXd predict_vector(std::span<const Command> history) const {
        const auto d = static_cast<Eigen::Index>(dim);
        Eigen::VectorXd y = bias;
        const std::size_t n = history.size();
        for (std::size_t i = 0; i < lag; ++i) {
            const auto& past = history[n - 1 - i].joints;
            const Eigen::MatrixXd& a = coeffs[i];
            for (Eigen::Index k = 0; k < d; ++k) {
                double acc = 0.0;
                for (Eigen::Index l = 0; l < d; ++l) acc += a(k, l) * past[static_cast<std::size_t>(l)];
                y[k] += acc;
            }
        }
        return y;
    }

    [[nodiscard]] Command predict(std::span<const Command> history, Micros period) const {
        detail::require_history(history, lag, dim);
        const Eigen::VectorXd y = predict_vector(history);
        return detail::forecast_command(history.back(), period,
                                        std::vector<double>(y.data(), y.data() + y.size()));
    }
};

/// Mean of the last `window` commands.
struct MaModel {
    std::size_t dim = 0;
    std::size_t window_len = 1;

    MaModel() = default;
    MaModel(std::size_t d, std::size_t window) : dim(d), window_len(window) {
        if (window < 1) throw Error(ErrorKind::Config, "moving-average window must be >= 1");
    }

    [[nodiscard]] std::size_t window() const noexcept { return window_len; }

    [[nodiscard]] Command predict(std::span<const Command> history, Micros period) const {
        detail::require_history(history, window_len, dim);
        std::vector<double> mean(dim, 0.0);
        for (const Command& c : history.last(window_len)) {
            for (std::size_t k = 0; k < dim; ++k) mean[k] += c.joints[k];
        }
        for (double& v : mean) v /= static_cast<double>(window_len);
        return detail::forecast_command(history.back(), period, std::move(mean));
    }
};

template <class F>
concept ForecasterLike = requires(const F& f, std::span<const Command> h, Micros p) {
    { f.window() } -> std::convertible_to<std::size_t>;
    { f.dim } -> std::convertible_to<std::size_t>;
    { f.predict(h, p) } -> std::same_as<Command>;
};

/// Type-erased, immutable, shareable forecaster f({c_j}, w).
class Forecaster {
public:
    template <ForecasterLike F>
    Forecaster(F model, std::string name)  // NOLINT(google-explicit-constructor)
        : impl_(std::make_shared<const Model<F>>(std::move(model))), name_(std::move(name)) {}

    [[nodiscard]] std::size_t window() const { return impl_->window(); }
    [[nodiscard]] std::size_t dim() const { return impl_->dim(); }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

    [[nodiscard]] Command predict(std::span<const Command> history, Micros period) const {
        return impl_->predict(history, period);
    }

private:
    struct Concept {
        virtual ~Concept() = default;
        [[nodiscard]] virtual std::size_t window() const = 0;
        [[nodiscard]] virtual std::size_t dim() const = 0;
        [[nodiscard]] virtual Command predict(std::span<const Command>, Micros) const = 0;
    };

    template <class F>
    struct Model final : Concept {
        explicit Model(F m) : model(std::move(m)) {}
        [[nodiscard]] std::size_t window() const override { return model.window(); }
        [[nodiscard]] std::size_t dim() const override { return model.dim; }
        [[nodiscard]] Command predict(std::span<const Command> h, Micros p) const override {
            return model.predict(h, p);
        }
        F model;
    };

    std::shared_ptr<const Concept> impl_;
    std::string name_;
};

}  // namespace foreco
