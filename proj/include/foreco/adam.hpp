#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "foreco/ols.hpp"

namespace foreco {

/// Denominators used to de-bias the Adam moment estimates.
enum class BiasCorrection {
    /// 1 - beta^(alpha H), with alpha H the number of training samples.
    FixedExponent,
    /// 1 - beta^t, with t the 1-based optimizer step.
    PerStep,
};

struct AdamConfig {
    double step_size = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    BiasCorrection bias_correction = BiasCorrection::FixedExponent;
    /// Called after every epoch with the stacked parameter matrix (see LaggedDesign).
    std::function<void(std::size_t epoch, const Eigen::MatrixXd& weights)> on_epoch;

    void validate() const {
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
            throw Error(ErrorKind::Config, "Adam betas must lie in (0, 1)");
        }
        // A zero step size is accepted and leaves the initial weights untouched.
        if (!(step_size >= 0.0)) throw Error(ErrorKind::Config, "Adam step size must be >= 0");
        if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "Adam epsilon must be > 0");
        if (batch_size < 1) throw Error(ErrorKind::Config, "Adam batch size must be >= 1");
    }
};

struct AdamReport {
    VarModel model;
    /// Mean squared one-step error over the whole training set, after each epoch.
    std::vector<double> epoch_loss;
    std::size_t steps = 0;
};

/// Mini-batch Adam on the per-batch loss sum_rows sum_k r^2 / B, starting from zero weights.
///
/// Batches are taken in trace order without shuffling, so runs are deterministic.
[[nodiscard]] inline AdamReport train_var_adam(const Trace& train, std::size_t lag,
                                               const AdamConfig& cfg) {
    cfg.validate();
    const std::size_t d = train.dim();
    if (train.size() < min_samples_for_lag(lag, d)) {
        throw Error(ErrorKind::InsufficientData,
                    "VAR(" + std::to_string(lag) + ") needs " +
                        std::to_string(min_samples_for_lag(lag, d)) + " samples");
    }
    const LaggedDesign design = lagged_design(train, lag, lag);
    const Eigen::Index rows = design.x.rows();
    const Eigen::Index cols = design.x.cols();
    const auto dd = static_cast<Eigen::Index>(d);

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(cols, dd);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cols, dd);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(cols, dd);

    const double alpha_h = static_cast<double>(train.size());
    const double fixed_c1 = 1.0 - std::pow(cfg.beta1, alpha_h);
    const double fixed_c2 = 1.0 - std::pow(cfg.beta2, alpha_h);
    const auto batch = static_cast<Eigen::Index>(cfg.batch_size);

    AdamReport report;
    report.epoch_loss.reserve(cfg.epochs);
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (Eigen::Index start = 0; start < rows; start += batch) {
            const Eigen::Index b = std::min(batch, rows - start);
            const auto xb = design.x.middleRows(start, b);
            const Eigen::MatrixXd resid = design.y.middleRows(start, b) - xb * w;
            const double loss = resid.squaredNorm() / static_cast<double>(b);
            ++step;
            if (!std::isfinite(loss)) {
                throw DivergedError(step, "Adam loss became non-finite at step " + std::to_string(step));
            }
            const Eigen::MatrixXd grad = (-2.0 / static_cast<double>(b)) * (xb.transpose() * resid);
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
            double c1 = fixed_c1;
            double c2 = fixed_c2;
            if (cfg.bias_correction == BiasCorrection::PerStep) {
                c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
                c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            }
            w.array() -= cfg.step_size * (m.array() / c1) /
                         ((v.array() / c2).sqrt() + cfg.epsilon);
        }
        const double epoch_loss =
            (design.y - design.x * w).squaredNorm() / static_cast<double>(rows);
        if (!std::isfinite(epoch_loss)) {
            throw DivergedError(step, "Adam loss became non-finite at step " + std::to_string(step));
        }
        report.epoch_loss.push_back(epoch_loss);
        if (cfg.on_epoch) cfg.on_epoch(epoch + 1, w);
    }
    report.steps = step;
    report.model = detail::finish_fit(design, w, d, lag, "adam");
    return report;
}

[[nodiscard]] inline VarModel fit_var_adam(const Trace& train, std::size_t lag, const AdamConfig& cfg) {
    return train_var_adam(train, lag, cfg).model;
}

}  // namespace foreco
