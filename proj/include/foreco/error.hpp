#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace foreco {

enum class ErrorKind {
    InvalidTrace,
    InsufficientData,
    RankDeficient,
    Diverged,
    InsufficientHistory,
    DegenerateCovariance,
    OutOfRange,
    AlwaysLost,
    Config,
    Io,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidTrace: return "invalid_trace";
        case ErrorKind::InsufficientData: return "insufficient_data";
        case ErrorKind::RankDeficient: return "rank_deficient";
        case ErrorKind::Diverged: return "diverged";
        case ErrorKind::InsufficientHistory: return "insufficient_history";
        case ErrorKind::DegenerateCovariance: return "degenerate_covariance";
        case ErrorKind::OutOfRange: return "out_of_range";
        case ErrorKind::AlwaysLost: return "always_lost";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

/// Base of every exception thrown by the library. `kind()` is stable and
/// is what the CLI reports in its machine-readable error line.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Least-squares design matrix lost rank at `column()` (0 is the bias column).
class RankDeficientError : public Error {
public:
    RankDeficientError(std::size_t column, const std::string& what)
        : Error(ErrorKind::RankDeficient, what), column_(column) {}

    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// Adam produced a non-finite loss at optimizer step `iteration()`.
class DivergedError : public Error {
public:
    DivergedError(std::size_t iteration, const std::string& what)
        : Error(ErrorKind::Diverged, what), iteration_(iteration) {}

    [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

}  // namespace foreco
