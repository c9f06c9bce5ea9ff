#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "foreco/core.hpp"
#include "foreco/var_model.hpp"

namespace foreco {

/// Regression problem Y = X P for a VAR of order `lag`.
///
/// Row r targets sample t = first_target + r and holds
/// [1, y_{t-1}, ..., y_{t-lag}]. P stacks the bias row on top of
/// A_1^T, ..., A_lag^T, so P has 1 + d*lag rows and d columns.
struct LaggedDesign {
    Eigen::MatrixXd x;
    Eigen::MatrixXd y;
};

[[nodiscard]] inline LaggedDesign lagged_design(const Trace& trace, std::size_t lag,
                                                std::size_t first_target) {
    if (first_target < lag || first_target >= trace.size()) {
        throw Error(ErrorKind::InsufficientData, "no target rows for the requested lag");
    }
    const std::size_t d = trace.dim();
    const auto rows = static_cast<Eigen::Index>(trace.size() - first_target);
    const auto cols = static_cast<Eigen::Index>(1 + d * lag);
    LaggedDesign out{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, static_cast<Eigen::Index>(d))};
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = first_target + static_cast<std::size_t>(r);
        out.x(r, 0) = 1.0;
        for (std::size_t i = 1; i <= lag; ++i) {
            const auto& past = trace[t - i].joints;
            for (std::size_t l = 0; l < d; ++l) {
                out.x(r, static_cast<Eigen::Index>(1 + (i - 1) * d + l)) = past[l];
            }
        }
        for (std::size_t k = 0; k < d; ++k) out.y(r, static_cast<Eigen::Index>(k)) = trace[t].joints[k];
    }
    return out;
}

[[nodiscard]] inline Eigen::MatrixXd to_param_matrix(const VarModel& m) {
    const auto d = static_cast<Eigen::Index>(m.dim);
    Eigen::MatrixXd p(1 + d * static_cast<Eigen::Index>(m.lag), d);
    p.row(0) = m.bias.transpose();
    for (std::size_t i = 0; i < m.lag; ++i) {
        p.block(1 + static_cast<Eigen::Index>(i) * d, 0, d, d) = m.coeffs[i].transpose();
    }
    return p;
}

[[nodiscard]] inline VarModel from_param_matrix(const Eigen::MatrixXd& p, std::size_t dim,
                                                std::size_t lag) {
    VarModel m = VarModel::zeros(dim, lag);
    const auto d = static_cast<Eigen::Index>(dim);
    m.bias = p.row(0).transpose();
    for (std::size_t i = 0; i < lag; ++i) {
        m.coeffs[i] = p.block(1 + static_cast<Eigen::Index>(i) * d, 0, d, d).transpose();
    }
    return m;
}

[[nodiscard]] inline std::string describe_design_column(std::size_t column, std::size_t dim) {
    if (column == 0) return "bias";
    return "lag " + std::to_string((column - 1) / dim + 1) + " joint " +
           std::to_string((column - 1) % dim + 1);
}

/// Minimum number of samples for a determined VAR(lag) least-squares fit.
[[nodiscard]] constexpr std::size_t min_samples_for_lag(std::size_t lag, std::size_t dim) noexcept {
    return lag + dim * lag + 1;
}

struct OlsOptions {
    /// |R_ii| <= threshold * max|R_jj| marks column i as dependent.
    double rank_threshold = 1e-10;
    /// Retry rank-deficient problems with a small ridge penalty instead of throwing.
    bool ridge_fallback = false;
    /// Ridge strength relative to the largest squared pivot.
    double ridge_lambda = 1e-8;
};

namespace detail {

inline VarModel finish_fit(const LaggedDesign& design, const Eigen::MatrixXd& params,
                           std::size_t dim, std::size_t lag, std::string trainer) {
    VarModel m = from_param_matrix(params, dim, lag);
    const Eigen::MatrixXd resid = design.y - design.x * params;
    m.residual_cov = (resid.transpose() * resid) / static_cast<double>(design.x.rows());
    m.residual_cov = 0.5 * (m.residual_cov + m.residual_cov.transpose()).eval();
    m.trainer = std::move(trainer);
    return m;
}

}  // namespace detail

/// Solves a lagged design by Householder QR, checking the R diagonal for rank loss.
[[nodiscard]] inline Eigen::MatrixXd solve_least_squares(const LaggedDesign& design, std::size_t dim,
                                                         const OlsOptions& opts = {}) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(design.x);
    const Eigen::Index cols = design.x.cols();
    const auto diag = qr.matrixQR().diagonal().head(cols).cwiseAbs();
    const double max_pivot = diag.maxCoeff();
    for (Eigen::Index i = 0; i < cols; ++i) {
        if (!(diag[i] > opts.rank_threshold * max_pivot)) {
            if (!opts.ridge_fallback) {
                const auto col = static_cast<std::size_t>(i);
                throw RankDeficientError(col, "design matrix is rank deficient at column " +
                                                  std::to_string(col) + " (" +
                                                  describe_design_column(col, dim) + ")");
            }
            const double lambda = opts.ridge_lambda * max_pivot * max_pivot;
            Eigen::MatrixXd xa(design.x.rows() + cols, cols);
            xa << design.x, std::sqrt(lambda) * Eigen::MatrixXd::Identity(cols, cols);
            Eigen::MatrixXd ya(design.y.rows() + cols, design.y.cols());
            ya << design.y, Eigen::MatrixXd::Zero(cols, design.y.cols());
            return Eigen::HouseholderQR<Eigen::MatrixXd>(xa).solve(ya);
        }
    }
    return qr.solve(design.y);
}

/// Least-squares VAR fit over every target row of `train` (rows lag..H-1).
[[nodiscard]] inline VarModel fit_var_ols(const Trace& train, std::size_t lag,
                                          const OlsOptions& opts = {}) {
    const std::size_t d = train.dim();
    if (train.size() < min_samples_for_lag(lag, d)) {
        throw Error(ErrorKind::InsufficientData,
                    "VAR(" + std::to_string(lag) + ") on d=" + std::to_string(d) + " needs " +
                        std::to_string(min_samples_for_lag(lag, d)) + " samples, got " +
                        std::to_string(train.size()));
    }
    const LaggedDesign design = lagged_design(train, lag, lag);
    return detail::finish_fit(design, solve_least_squares(design, d, opts), d, lag, "ols");
}

/// Summed squared one-step residuals of `model` over target rows lag..H-1.
[[nodiscard]] inline double training_sse(const VarModel& model, const Trace& data) {
    const LaggedDesign design = lagged_design(data, model.lag, model.lag);
    return (design.y - design.x * to_param_matrix(model)).squaredNorm();
}

}  // namespace foreco
