#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "foreco/channel_io.hpp"
#include "foreco/channel_sim.hpp"
#include "foreco/evaluation.hpp"
#include "foreco/model_json.hpp"
#include "foreco/random.hpp"
#include "foreco/recovery.hpp"

namespace foreco {

struct SweepGrid {
    std::vector<double> probs{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    /// Interferer active time T_if, in slots.
    std::vector<double> durations{1, 2, 4, 8, 16, 32};
    std::vector<std::uint32_t> robot_counts{5, 15, 25};
    std::size_t repetitions = 40;
    std::uint64_t master_seed = 1;

    [[nodiscard]] std::size_t cells() const noexcept {
        return probs.size() * durations.size() * robot_counts.size();
    }

    void validate() const {
        if (probs.empty() || durations.empty() || robot_counts.empty()) {
            throw Error(ErrorKind::Config, "sweep axes must be non-empty");
        }
        if (repetitions < 1) throw Error(ErrorKind::Config, "sweep needs at least one repetition");
        for (double p : probs) {
            if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Config, "sweep probability outside [0, 1]");
        }
        for (double d : durations) {
            if (!(d >= 0.0)) throw Error(ErrorKind::Config, "sweep duration must be >= 0");
        }
        for (auto n : robot_counts) {
            if (n < 1) throw Error(ErrorKind::Config, "robot count must be >= 1");
        }
    }
};

struct SweepCell {
    std::uint32_t robots = 1;
    double prob = 0.0;
    double duration = 0.0;
    /// Per-repetition RMSE, indexed like SweepResult::policies.
    std::array<std::vector<double>, 2> rmse;
    std::array<double, 2> mean{};
    std::array<double, 2> stddev{};
};

struct SweepResult {
    SweepGrid grid;
    std::array<std::string, 2> policies;
    /// Robot count outermost, then probability, then duration.
    std::vector<SweepCell> cells;

    [[nodiscard]] std::size_t index(std::size_t robot, std::size_t prob, std::size_t duration) const noexcept {
        return (robot * grid.probs.size() + prob) * grid.durations.size() + duration;
    }
    [[nodiscard]] const SweepCell& at(std::size_t robot, std::size_t prob, std::size_t duration) const {
        return cells.at(index(robot, prob, duration));
    }
};

namespace detail {

inline void summarize(SweepCell& cell) {
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& v = cell.rmse[k];
        double sum = 0.0;
        for (double x : v) sum += x;
        const double mean = sum / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        cell.mean[k] = mean;
        cell.stddev[k] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
}

}  // namespace detail

/// Runs every (cell, repetition) of the grid on `jobs` worker threads.
///
/// Each task builds its channel from `channel` with the cell's robot count,
/// probability and duration and seed derive_seed(master, cell, rep); both
/// policies replay the same outcomes. Results land in fixed slots, so they do
/// not depend on scheduling.
[[nodiscard]] inline SweepResult run_sweep(const Trace& trace, const SweepGrid& grid,
                                           const ChannelConfig& channel, const RecoveryPolicy& first,
                                           const RecoveryPolicy& second, std::size_t jobs = 1) {
    grid.validate();
    channel.validate();
    first.validate(trace.dim());
    second.validate(trace.dim());

    SweepResult result;
    result.grid = grid;
    result.policies = {std::string(to_string(first.mode)), std::string(to_string(second.mode))};
    result.cells.resize(grid.cells());
    for (std::size_t r = 0; r < grid.robot_counts.size(); ++r) {
        for (std::size_t p = 0; p < grid.probs.size(); ++p) {
            for (std::size_t d = 0; d < grid.durations.size(); ++d) {
                SweepCell& cell = result.cells[result.index(r, p, d)];
                cell.robots = grid.robot_counts[r];
                cell.prob = grid.probs[p];
                cell.duration = grid.durations[d];
                cell.rmse[0].assign(grid.repetitions, 0.0);
                cell.rmse[1].assign(grid.repetitions, 0.0);
            }
        }
    }

    const std::size_t tasks = result.cells.size() * grid.repetitions;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) {
            const std::size_t c = t / grid.repetitions;
            const std::size_t rep = t % grid.repetitions;
            SweepCell& cell = result.cells[c];
            try {
                ChannelConfig cfg = channel;
                cfg.interference.n_stations = cell.robots;
                cfg.interference.p_if = cell.prob;
                cfg.interference.t_if_slots = cell.duration;
                cfg.seed = derive_seed(grid.master_seed, c, rep);
                const auto outcomes = simulate_channel(trace, cfg);
                cell.rmse[0][rep] = rmse(run_recovery(trace, outcomes, first), trace);
                cell.rmse[1][rep] = rmse(run_recovery(trace, outcomes, second), trace);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(tasks);
            }
        }
    };

    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(tasks, 1));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& cell : result.cells) detail::summarize(cell);
    return result;
}

/// Grid fields of a sweep spec; missing axes keep their defaults.
[[nodiscard]] inline SweepGrid sweep_grid_from_json(const Json& j) {
    SweepGrid g;
    try {
        if (j.contains("probs")) g.probs = j["probs"].get<std::vector<double>>();
        if (j.contains("durations")) g.durations = j["durations"].get<std::vector<double>>();
        if (j.contains("robot_counts")) g.robot_counts = j["robot_counts"].get<std::vector<std::uint32_t>>();
        g.repetitions = j.value("repetitions", g.repetitions);
        g.master_seed = j.value("master_seed", g.master_seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("malformed sweep spec: ") + e.what());
    }
    g.validate();
    return g;
}

[[nodiscard]] inline Json to_json(const SweepGrid& g) {
    Json j;
    j["probs"] = g.probs;
    j["durations"] = g.durations;
    j["robot_counts"] = g.robot_counts;
    j["repetitions"] = g.repetitions;
    j["master_seed"] = g.master_seed;
    return j;
}

[[nodiscard]] inline Json to_json(const SweepResult& r) {
    Json j;
    j["grid"] = to_json(r.grid);
    j["policies"] = r.policies;
    Json cells = Json::array();
    for (const auto& c : r.cells) {
        Json cell;
        cell["robots"] = c.robots;
        cell["prob"] = c.prob;
        cell["duration"] = c.duration;
        for (std::size_t k = 0; k < 2; ++k) {
            cell[r.policies[k]] = {{"mean", c.mean[k]}, {"std", c.stddev[k]}, {"rmse", c.rmse[k]}};
        }
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);
    return j;
}

/// Writes to a sibling temporary file and renames it into place, so an
/// interrupted run never leaves a truncated file behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::Io, "cannot rename into " + path.string());
    }
}

/// Mean-RMSE matrix for one policy and robot count: probabilities as rows,
/// durations as columns.
[[nodiscard]] inline std::string sweep_matrix_csv(const SweepResult& r, std::size_t policy, std::size_t robot) {
    std::string out = "prob";
    char buf[64];
    for (double d : r.grid.durations) {
        std::snprintf(buf, sizeof buf, ",%g", d);
        out += buf;
    }
    out += '\n';
    for (std::size_t p = 0; p < r.grid.probs.size(); ++p) {
        std::snprintf(buf, sizeof buf, "%g", r.grid.probs[p]);
        out += buf;
        for (std::size_t d = 0; d < r.grid.durations.size(); ++d) {
            std::snprintf(buf, sizeof buf, ",%.9g", r.at(robot, p, d).mean[policy]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

/// sweep_result.json plus rmse_{policy}_{robots}.csv for every policy and
/// robot count; returns the paths written.
inline std::vector<std::filesystem::path> write_sweep_outputs(const SweepResult& r,
                                                              const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> written;
    for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t robot = 0; robot < r.grid.robot_counts.size(); ++robot) {
            const auto path = dir / ("rmse_" + r.policies[k] + "_" + std::to_string(r.grid.robot_counts[robot]) + ".csv");
            write_file_atomic(path, sweep_matrix_csv(r, k, robot));
            written.push_back(path);
        }
    }
    // Last, so its presence marks a complete run.
    const auto json_path = dir / "sweep_result.json";
    write_file_atomic(json_path, to_json(r).dump(2) + "\n");
    written.push_back(json_path);
    return written;
}

}  // namespace foreco
