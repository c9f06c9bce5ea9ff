#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "foreco/ols.hpp"

namespace foreco {

/// Gaussian log-likelihood of the one-step residuals of `model` on `data`
/// (target rows lag..H-1) under the model's residual covariance.
[[nodiscard]] inline double residual_log_likelihood(const VarModel& model, const Trace& data) {
    if (model.dim != data.dim()) throw Error(ErrorKind::Config, "model and data dimensions differ");
    if (data.size() <= model.lag) {
        throw Error(ErrorKind::InsufficientData, "data must be longer than the model lag");
    }
    const LaggedDesign design = lagged_design(data, model.lag, model.lag);
    const Eigen::MatrixXd resid = design.y - design.x * to_param_matrix(model);

    // Degeneracy is judged against the spread of the data itself.
    const Eigen::MatrixXd centered = design.y.rowwise() - design.y.colwise().mean();
    const double scale =
        (centered.colwise().squaredNorm() / static_cast<double>(design.y.rows())).maxCoeff();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.residual_cov,
                                                             Eigen::EigenvaluesOnly);
    if (!model.residual_cov.allFinite() || eig.info() != Eigen::Success ||
        !(eig.eigenvalues().minCoeff() > 1e-12 * scale)) {
        throw Error(ErrorKind::DegenerateCovariance, "residual covariance is not invertible");
    }

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(model.residual_cov);
    const double log_det = eig.eigenvalues().array().log().sum();
    const double d = static_cast<double>(model.dim);
    const Eigen::MatrixXd solved = ldlt.solve(resid.transpose());
    const double quad = (resid.transpose().array() * solved.array()).sum();
    const double n = static_cast<double>(resid.rows());
    return -0.5 * (n * (d * std::log(2.0 * std::numbers::pi) + log_det) + quad);
}

/// 2 p - log L with p = d^2 * lag.
[[nodiscard]] inline double aic(const VarModel& model, const Trace& data) {
    return 2.0 * static_cast<double>(model.n_params()) - residual_log_likelihood(model, data);
}

struct LikelihoodRatio {
    double value = 0.0;
    /// Natural log of the ratio; always finite.
    double log_value = 0.0;
    bool overflow = false;
};

/// L_{l+1} / L_l = exp((AIC_l - AIC_{l+1}) / 2 + d^2).
[[nodiscard]] inline LikelihoodRatio likelihood_ratio(double aic_l, double aic_l_plus_1,
                                                      std::size_t dim) {
    const double d2 = static_cast<double>(dim * dim);
    LikelihoodRatio r;
    r.log_value = (aic_l - aic_l_plus_1) / 2.0 + d2;
    if (r.log_value > std::log(std::numeric_limits<double>::max())) {
        r.value = std::numeric_limits<double>::infinity();
        r.overflow = true;
    } else {
        r.value = std::exp(r.log_value);
    }
    return r;
}

struct LagSelection {
    std::size_t best_lag = 0;
    std::size_t first_lag = 1;
    /// aic_curve[i] is the AIC of lag first_lag + i.
    std::vector<double> aic_curve;

    [[nodiscard]] double aic_at(std::size_t lag) const { return aic_curve.at(lag - first_lag); }
};

/// Fits every lag in [min_lag, max_lag] on the shared target rows max_lag..H-1
/// and keeps the smallest AIC (ties go to the smaller lag).
[[nodiscard]] inline LagSelection select_lag(const Trace& train, std::size_t max_lag,
                                             std::size_t min_lag = 1, const OlsOptions& opts = {}) {
    if (max_lag < 1 || min_lag > max_lag) throw Error(ErrorKind::Config, "invalid lag range");
    const std::size_t offset_needed = min_samples_for_lag(max_lag, train.dim());
    if (train.size() < offset_needed) {
        throw Error(ErrorKind::InsufficientData,
                    "lag selection up to " + std::to_string(max_lag) + " needs " +
                        std::to_string(offset_needed) + " samples");
    }
    LagSelection out;
    out.first_lag = min_lag;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
        const std::size_t skip = max_lag - lag;
        const Trace window = train.slice(skip, train.size() - skip);
        const VarModel model = fit_var_ols(window, lag, opts);
        const double value = aic(model, window);
        out.aic_curve.push_back(value);
        if (value < best) {
            best = value;
            out.best_lag = lag;
        }
    }
    return out;
}

}  // namespace foreco
