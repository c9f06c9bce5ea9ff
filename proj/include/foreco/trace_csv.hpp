#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "foreco/core.hpp"

namespace foreco {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        while (used < s.size() && (s[used] == ' ' || s[used] == '\r')) ++used;
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidTrace,
                    "line " + std::to_string(line_no) + ": not a number: '" + s + "'");
    }
}

inline void format_fixed6(std::ostream& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out << buf;
}

}  // namespace detail

/// Reads `t_ms,j1,...,jd`. The period is taken from the first two rows;
/// single-row files fall back to `period_hint`.
[[nodiscard]] inline Trace read_trace_csv(std::istream& in, JointUnit unit = JointUnit::Radians,
                                          Micros period_hint = Micros{20000}) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::InvalidTrace, "empty trace file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header.front() != "t_ms") {
        throw Error(ErrorKind::InvalidTrace, "trace header must be 't_ms,j1,...,jd'");
    }
    const std::size_t dim = header.size() - 1;

    std::vector<Micros> times;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != dim + 1) {
            throw Error(ErrorKind::InvalidTrace, "line " + std::to_string(line_no) + ": expected " +
                                                     std::to_string(dim + 1) + " fields");
        }
        times.push_back(from_ms(detail::parse_double(fields[0], line_no)));
        std::vector<double> row(dim);
        for (std::size_t k = 0; k < dim; ++k) row[k] = detail::parse_double(fields[k + 1], line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorKind::InvalidTrace, "trace file has no data rows");

    const Micros period = rows.size() > 1 ? times[1] - times[0] : period_hint;
    if (period.count() <= 0) throw Error(ErrorKind::InvalidTrace, "timestamps must increase");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] != times[0] + period * static_cast<std::int64_t>(i)) {
            throw Error(ErrorKind::InvalidTrace,
                        "row " + std::to_string(i) + " is off the fixed period grid");
        }
    }
    return Trace::from_rows(period, rows, unit, times[0]);
}

[[nodiscard]] inline Trace read_trace_csv(const std::string& path,
                                          JointUnit unit = JointUnit::Radians) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open trace file: " + path);
    return read_trace_csv(in, unit);
}

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << "t_ms";
    for (std::size_t k = 1; k <= trace.dim(); ++k) out << ",j" << k;
    out << '\n';
    for (const Command& c : trace) {
        detail::format_fixed6(out, c.gen_time_ms());
        for (double v : c.joints) {
            out << ',';
            detail::format_fixed6(out, v);
        }
        out << '\n';
    }
}

inline void write_trace_csv(const std::string& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write trace file: " + path);
    write_trace_csv(out, trace);
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

}  // namespace foreco
