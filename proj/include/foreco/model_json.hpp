#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "foreco/var_model.hpp"

namespace foreco {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::vector<double> flatten_row_major(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
    return out;
}

inline Eigen::MatrixXd unflatten_row_major(const Json& j, std::size_t dim, const char* what) {
    const auto values = j.get<std::vector<double>>();
    if (values.size() != dim * dim) {
        throw Error(ErrorKind::Config, std::string(what) + " must hold dim*dim values");
    }
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) m(r, c) = values[static_cast<std::size_t>(r * d + c)];
    }
    return m;
}

}  // namespace detail

/// Matrices are stored row-major; numbers use the shortest decimal form that
/// parses back to the same double.
[[nodiscard]] inline Json to_json(const VarModel& m) {
    Json j;
    j["kind"] = "var";
    j["dim"] = m.dim;
    j["lag"] = m.lag;
    j["bias"] = std::vector<double>(m.bias.data(), m.bias.data() + m.bias.size());
    Json coeffs = Json::array();
    for (const auto& a : m.coeffs) coeffs.push_back(detail::flatten_row_major(a));
    j["coeffs"] = std::move(coeffs);
    j["residual_cov"] = detail::flatten_row_major(m.residual_cov);
    j["trainer"] = m.trainer;
    j["trained_at"] = m.trained_at ? Json(*m.trained_at) : Json(nullptr);
    return j;
}

[[nodiscard]] inline VarModel var_model_from_json(const Json& j) {
    try {
        if (j.value("kind", std::string("var")) != "var") {
            throw Error(ErrorKind::Config, "model document is not a VAR model");
        }
        const auto dim = j.at("dim").get<std::size_t>();
        const auto lag = j.at("lag").get<std::size_t>();
        if (dim == 0) throw Error(ErrorKind::Config, "model dim must be >= 1");
        VarModel m = VarModel::zeros(dim, lag);
        const auto bias = j.at("bias").get<std::vector<double>>();
        if (bias.size() != dim) throw Error(ErrorKind::Config, "bias must hold dim values");
        m.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(dim));
        const Json& coeffs = j.at("coeffs");
        if (coeffs.size() != lag) throw Error(ErrorKind::Config, "coeffs must hold lag matrices");
        for (std::size_t i = 0; i < lag; ++i) m.coeffs[i] = detail::unflatten_row_major(coeffs[i], dim, "coeffs");
        m.residual_cov = detail::unflatten_row_major(j.at("residual_cov"), dim, "residual_cov");
        m.trainer = j.value("trainer", std::string("ols"));
        if (j.contains("trained_at") && j["trained_at"].is_string()) {
            m.trained_at = j["trained_at"].get<std::string>();
        }
        if (!m.finite()) throw Error(ErrorKind::Config, "model holds non-finite values");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("malformed model document: ") + e.what());
    }
}

[[nodiscard]] inline Json to_json(const MaModel& m) {
    Json j;
    j["kind"] = "ma";
    j["dim"] = m.dim;
    j["window"] = m.window_len;
    return j;
}

/// Accepts either a VAR document or {"kind": "ma", "dim": d, "window": R}.
[[nodiscard]] inline Forecaster forecaster_from_json(const Json& j) {
    const std::string kind = j.value("kind", std::string("var"));
    if (kind == "ma") {
        try {
            return Forecaster(MaModel(j.at("dim").get<std::size_t>(), j.at("window").get<std::size_t>()),
                              "ma");
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Config, std::string("malformed MA document: ") + e.what());
        }
    }
    return Forecaster(var_model_from_json(j), "var");
}

[[nodiscard]] inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open file: " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Config, path + ": " + e.what());
    }
}

}  // namespace foreco
