#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cli_support.hpp"

namespace fs = std::filesystem;
using namespace foreco;
using namespace foreco::cli;

namespace {

std::string format_row(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string trace_csv_string(const Trace& trace) {
    std::ostringstream out;
    write_trace_csv(out, trace);
    return out.str();
}

std::string executed_csv_string(const ExecutedStream& ex, const Trace& trace) {
    std::string out = "seq,provenance";
    for (std::size_t k = 1; k <= trace.dim(); ++k) out += ",j" + std::to_string(k);
    out += '\n';
    for (std::size_t i = 0; i < ex.commands.size(); ++i) {
        const auto& slot = ex.commands[i];
        out += std::to_string(trace[i].seq);
        if (!slot) {
            out += ",none";
            for (std::size_t k = 0; k < trace.dim(); ++k) out += ',';
            out += '\n';
            continue;
        }
        out += ',';
        out += to_string(slot->provenance);
        for (double v : slot->joints) out += ',' + format_row("%.6f", v);
        out += '\n';
    }
    return out;
}

Json stats_json(const ExecutedStream& ex, std::span<const ChannelOutcome> outcomes, std::uint32_t max_rtx) {
    std::size_t lost = 0;
    std::size_t overflow = 0;
    for (const auto& o : outcomes) {
        if (const auto* l = o.as_lost()) {
            ++lost;
            if (l->cause == LossCause::QueueOverflow) ++overflow;
        }
    }
    Json j;
    j["commands"] = ex.commands.size();
    j["on_time"] = ex.stats.on_time;
    j["forecast"] = ex.stats.forecast;
    j["repeated"] = ex.stats.repeated;
    j["dropped"] = ex.stats.dropped;
    j["late"] = outcomes.size() - lost - ex.stats.on_time;
    j["lost"] = lost;
    j["queue_overflow"] = overflow;
    j["rtx_histogram"] = rtx_histogram(outcomes, max_rtx);
    return j;
}

RecoveryMode parse_policy(const std::string& name) {
    if (name == "foreco") return RecoveryMode::FoReCo;
    if (name == "repeat-last" || name == "repeat_last") return RecoveryMode::RepeatLast;
    if (name == "drop") return RecoveryMode::Drop;
    throw Error(ErrorKind::Config, "unknown policy '" + name + "' (expected foreco, repeat-last or drop)");
}

RecoveryPolicy make_policy(RecoveryMode mode, const std::optional<Forecaster>& model, RecoveryConfig cfg) {
    switch (mode) {
        case RecoveryMode::FoReCo:
            if (!model) throw Error(ErrorKind::Config, "policy foreco needs a model");
            return RecoveryPolicy::foreco(*model, cfg);
        case RecoveryMode::RepeatLast: return RecoveryPolicy::repeat_last(cfg);
        case RecoveryMode::Drop: break;
    }
    return RecoveryPolicy::drop(cfg);
}

// ---- train ------------------------------------------------------------

struct TrainArgs {
    std::string trace;
    std::string lag = "auto";
    std::size_t max_lag = 10;
    std::string trainer = "ols";
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double step_size = 0.001;
    std::string bias_correction = "fixed";
    std::string out;
    std::string report;
};

Json aic_report(const Trace& trace, std::size_t first, std::size_t last, std::size_t dim) {
    const LagSelection sel = select_lag(trace, last, first);
    Json j;
    j["best_lag"] = sel.best_lag;
    j["min_lag"] = first;
    j["max_lag"] = last;
    Json curve = Json::array();
    for (std::size_t l = first; l <= last; ++l) curve.push_back({{"lag", l}, {"aic", sel.aic_at(l)}});
    j["aic"] = std::move(curve);
    Json ratios = Json::array();
    for (std::size_t l = first; l < last; ++l) {
        const auto r = likelihood_ratio(sel.aic_at(l), sel.aic_at(l + 1), dim);
        ratios.push_back({{"from_lag", l},
                          {"to_lag", l + 1},
                          {"aic_diff", sel.aic_at(l) - sel.aic_at(l + 1)},
                          {"ratio", r.overflow ? Json(nullptr) : Json(r.value)},
                          {"log_ratio", r.log_value},
                          {"overflow", r.overflow}});
    }
    j["likelihood_ratios"] = std::move(ratios);
    return j;
}

int cmd_train(const TrainArgs& a) {
    const Trace trace = read_trace_csv(a.trace);
    spdlog::info("read {} commands of dimension {}", trace.size(), trace.dim());

    std::size_t lag = 0;
    Json report;
    report["trace"] = a.trace;
    report["trace_sha256"] = file_sha256(a.trace);
    if (a.lag == "auto") {
        report["lag_mode"] = "auto";
        report.update(aic_report(trace, 1, a.max_lag, trace.dim()));
        lag = report["best_lag"].get<std::size_t>();
        spdlog::info("AIC selected lag {}", lag);
    } else {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(a.lag, &pos);
            if (pos != a.lag.size() || v < 1) throw std::invalid_argument(a.lag);
            lag = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw Error(ErrorKind::Config, "--lag must be 'auto' or a positive integer");
        }
        report["lag_mode"] = "fixed";
        // The curve is informative only; noiseless traces have no finite AIC.
        try {
            report.update(aic_report(trace, 1, lag, trace.dim()));
        } catch (const Error& e) {
            spdlog::warn("AIC curve unavailable: {}", e.what());
            report["aic_error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
        }
        report["best_lag"] = lag;
    }

    VarModel model;
    if (a.trainer == "ols") {
        model = fit_var_ols(trace, lag);
    } else if (a.trainer == "adam") {
        AdamConfig cfg;
        cfg.epochs = a.epochs;
        cfg.batch_size = a.batch_size;
        cfg.step_size = a.step_size;
        if (a.bias_correction == "per-step") {
            cfg.bias_correction = BiasCorrection::PerStep;
        } else if (a.bias_correction != "fixed") {
            throw Error(ErrorKind::Config, "--bias-correction must be fixed or per-step");
        }
        if (cfg.epochs == 0) spdlog::warn("--epochs 0: the model keeps its zero initial weights");
        const AdamReport run = train_var_adam(trace, lag, cfg);
        model = run.model;
        report["adam"] = {{"epochs", cfg.epochs},
                          {"batch_size", cfg.batch_size},
                          {"step_size", cfg.step_size},
                          {"steps", run.steps},
                          {"epoch_loss", run.epoch_loss}};
    } else {
        throw Error(ErrorKind::Config, "--trainer must be ols or adam");
    }
    model.trained_at = build_timestamp();
    report["trainer"] = model.trainer;
    report["lag"] = lag;

    const fs::path out(a.out);
    fs::path report_path = a.report.empty() ? fs::path(out).replace_extension(".aic.json") : fs::path(a.report);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    if (report_path.has_parent_path()) ensure_dir(report_path.parent_path());
    write_file_atomic(out, to_json(model).dump(2) + "\n");
    write_file_atomic(report_path, report.dump(2) + "\n");
    spdlog::info("wrote {} and {}", out.string(), report_path.string());
    return 0;
}

// ---- simulate ---------------------------------------------------------

struct SimulateArgs {
    std::string trace;
    std::string channel;
    std::string model;
    std::string policy = "foreco";
    std::string out_dir;
    double tolerance_ms = 0.0;
    std::size_t record_len = 0;
    bool timings = false;
};

int cmd_simulate(const SimulateArgs& a, Manifest& manifest) {
    const auto t0 = std::chrono::steady_clock::now();
    const Trace trace = read_trace_csv(a.trace);
    ChannelConfig channel = channel_config_from_json(read_json_file(a.channel));
    channel.period_ms = trace.period_ms();
    const RecoveryMode mode = parse_policy(a.policy);

    std::optional<Forecaster> model;
    if (!a.model.empty()) model = forecaster_from_json(read_json_file(a.model));
    if (mode == RecoveryMode::FoReCo && !model) throw Error(ErrorKind::Config, "--policy foreco needs --model");

    RecoveryConfig rc;
    rc.tolerance_ms = a.tolerance_ms;
    rc.transport_bound_ms = channel.transport_bound_ms;
    rc.record_len = a.record_len > 0 ? a.record_len : (model ? std::max<std::size_t>(model->window(), 1) : 1);

    manifest.input("trace", a.trace);
    manifest.input("channel", a.channel);
    if (!a.model.empty()) manifest.input("model", a.model);
    manifest.seed("channel", channel.seed);
    manifest.config("channel", to_json(channel));
    manifest.config("recovery", {{"policy", to_string(mode)},
                                 {"tolerance_ms", rc.tolerance_ms},
                                 {"record_len", rc.record_len}});

    const auto outcomes = simulate_channel(trace, channel);
    const auto t1 = std::chrono::steady_clock::now();
    const RecoveryPolicy policy = make_policy(mode, model, rc);
    const ExecutedStream executed = run_recovery(trace, outcomes, policy);
    const double error = rmse(executed, trace);
    const double baseline = mode == RecoveryMode::RepeatLast
                                ? error
                                : rmse(run_recovery(trace, outcomes, RecoveryPolicy::repeat_last(rc)), trace);
    const auto t2 = std::chrono::steady_clock::now();
    spdlog::info("{}: RMSE {:.6g} (repeat_last {:.6g}), {} on time, {} forecast, {} repeated, {} dropped",
                 to_string(mode), error, baseline, executed.stats.on_time, executed.stats.forecast,
                 executed.stats.repeated, executed.stats.dropped);

    const fs::path dir(a.out_dir);
    ensure_dir(dir);
    std::ostringstream oc;
    write_outcomes_csv(oc, outcomes);
    manifest.output(dir, "outcomes.csv", oc.str());
    manifest.output(dir, "executed.csv", executed_csv_string(executed, trace));
    manifest.output(dir, "stats.json", stats_json(executed, outcomes, channel.mac.max_rtx).dump(2) + "\n");

    Json summary;
    summary["policy"] = to_string(mode);
    summary["rmse"] = error;
    summary["joint_unit"] = to_string(trace.unit());
    summary["commands"] = trace.size();
    summary["baseline"] = {{"policy", "repeat_last"}, {"rmse", baseline}};
    summary["ratio"] = baseline > 0.0 ? Json(error / baseline) : Json(nullptr);
    manifest.output(dir, "summary.json", summary.dump(2) + "\n");

    std::optional<std::string> timings_file;
    if (a.timings) {
        using ms = std::chrono::duration<double, std::milli>;
        Json t;
        t["read_and_channel_ms"] = ms(t1 - t0).count();
        t["recovery_ms"] = ms(t2 - t1).count();
        write_file_atomic(dir / "timings.json", t.dump(2) + "\n");
        timings_file = "timings.json";
    }
    manifest.write(dir, timings_file);
    return 0;
}

// ---- sweep ------------------------------------------------------------

struct SweepArgs {
    std::string trace;
    std::string spec;
    std::string model;
    std::string out_dir;
    std::size_t jobs = 0;
    bool timings = false;
};

int cmd_sweep(const SweepArgs& a, Manifest& manifest) {
    const auto t0 = std::chrono::steady_clock::now();
    const Trace trace = read_trace_csv(a.trace);
    const Json spec = read_json_file(a.spec);
    const SweepGrid grid = sweep_grid_from_json(spec);
    ChannelConfig channel = channel_config_from_json(spec.value("channel", Json::object()));
    channel.period_ms = trace.period_ms();

    // Policies: a pair, FoReCo against RepeatLast unless the spec says otherwise.
    std::vector<std::pair<RecoveryMode, std::string>> defs;
    if (spec.contains("policies")) {
        const Json& p = spec["policies"];
        if (!p.is_array() || p.size() != 2) throw Error(ErrorKind::Config, "'policies' must list exactly two policies");
        for (const auto& item : p) {
            if (!item.is_object() || !item.contains("policy")) {
                throw Error(ErrorKind::Config, "each policy needs a 'policy' field");
            }
            defs.emplace_back(parse_policy(item["policy"].get<std::string>()), item.value("model", std::string()));
        }
    } else {
        defs = {{RecoveryMode::FoReCo, spec.value("model", std::string())}, {RecoveryMode::RepeatLast, ""}};
    }

    RecoveryConfig rc;
    rc.tolerance_ms = spec.value("tolerance_ms", 0.0);
    rc.transport_bound_ms = channel.transport_bound_ms;

    manifest.input("trace", a.trace);
    manifest.input("spec", a.spec);
    std::vector<std::optional<Forecaster>> models;
    std::size_t window = 1;
    for (auto& [mode, path] : defs) {
        if (!a.model.empty() && mode == RecoveryMode::FoReCo) path = a.model;
        std::optional<Forecaster> m;
        if (mode == RecoveryMode::FoReCo) {
            if (path.empty()) throw Error(ErrorKind::Config, "foreco policy needs a model (spec 'model' or --model)");
            fs::path p(path);
            if (p.is_relative() && a.model.empty()) p = fs::path(a.spec).parent_path() / p;
            m = forecaster_from_json(read_json_file(p.string()));
            manifest.input("model", p);
            window = std::max(window, m->window());
        }
        models.push_back(std::move(m));
    }
    rc.record_len = spec.value("record_len", window);

    const RecoveryPolicy first = make_policy(defs[0].first, models[0], rc);
    const RecoveryPolicy second = make_policy(defs[1].first, models[1], rc);
    const std::size_t jobs = a.jobs > 0 ? a.jobs : std::max(1u, std::thread::hardware_concurrency());

    manifest.seed("master_seed", grid.master_seed);
    manifest.config("grid", to_json(grid));
    manifest.config("channel", to_json(channel));
    manifest.config("recovery", {{"policies", {to_string(first.mode), to_string(second.mode)}},
                                 {"tolerance_ms", rc.tolerance_ms},
                                 {"record_len", rc.record_len}});

    spdlog::info("sweep: {} cells x {} repetitions on {} worker(s)", grid.cells(), grid.repetitions, jobs);
    const SweepResult result = run_sweep(trace, grid, channel, first, second, jobs);
    const auto t1 = std::chrono::steady_clock::now();

    const fs::path dir(a.out_dir);
    ensure_dir(dir);
    for (const auto& path : write_sweep_outputs(result, dir)) manifest.record_output(dir, path);

    std::optional<std::string> timings_file;
    if (a.timings) {
        Json t;
        t["sweep_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
        t["jobs"] = jobs;
        write_file_atomic(dir / "timings.json", t.dump(2) + "\n");
        timings_file = "timings.json";
    }
    manifest.write(dir, timings_file);
    return 0;
}

// ---- gen-trace --------------------------------------------------------

struct GenArgs {
    std::string profile = "pick-and-place";
    double duration_s = 30.0;
    std::uint64_t seed = 1;
    double period_ms = 20.0;
    std::size_t dim = 6;
    double noise_std = TraceSpec{}.noise_std;
    std::string out;
};

int cmd_gen_trace(const GenArgs& a) {
    TraceSpec spec;
    spec.profile = parse_profile(a.profile);
    spec.duration_s = a.duration_s;
    spec.seed = a.seed;
    spec.period_ms = a.period_ms;
    spec.dim = a.dim;
    spec.noise_std = a.noise_std;
    if (!(spec.duration_s > 0.0)) throw Error(ErrorKind::Config, "--duration-s must be > 0");
    const Trace trace = generate_trace(spec);
    const fs::path out(a.out);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    write_file_atomic(out, trace_csv_string(trace));
    spdlog::info("wrote {} commands to {}", trace.size(), out.string());
    return 0;
}

// ---- window-study -----------------------------------------------------

struct StudyArgs {
    std::string train;
    std::string test;
    std::size_t window_max = 25;
    std::size_t r_max = 20;
    std::size_t stride = 1;
    std::string out;
};

int cmd_window_study(const StudyArgs& a) {
    const Trace train = read_trace_csv(a.train);
    const Trace test = read_trace_csv(a.test);
    WindowStudyOptions opts;
    opts.r_max = a.r_max;
    opts.stride = a.stride;
    const std::vector<ModelFamily> families{ModelFamily::Var, ModelFamily::Ma};
    const auto rows = forecast_window_study(train, test, a.window_max, families, opts);
    Json j;
    j["window_max"] = a.window_max;
    j["r_max"] = a.r_max;
    Json models = Json::array();
    for (const auto& row : rows) {
        spdlog::info("{}: best R = {}", to_string(row.family), row.best_record_len);
        models.push_back({{"family", to_string(row.family)},
                          {"best_record_len", row.best_record_len},
                          {"curve", row.curve},
                          {"score_by_record_len", row.score_by_record_len}});
    }
    j["models"] = std::move(models);
    const fs::path out(a.out);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    write_file_atomic(out, j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Forecast-based recovery of lost or late robot commands"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Fit a VAR forecaster to a trace");
    train_cmd->add_option("--trace", train.trace, "Trace CSV (t_ms,j1..jd)")->required();
    train_cmd->add_option("--lag", train.lag, "'auto' (AIC) or a fixed lag")->capture_default_str();
    train_cmd->add_option("--max-lag", train.max_lag, "Largest lag tried by --lag auto")->capture_default_str()
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--trainer", train.trainer, "ols or adam")->capture_default_str()
        ->check(CLI::IsMember({"ols", "adam"}));
    train_cmd->add_option("--epochs", train.epochs, "Adam epochs")->capture_default_str();
    train_cmd->add_option("--batch-size", train.batch_size, "Adam batch size")->capture_default_str();
    train_cmd->add_option("--step-size", train.step_size, "Adam step size")->capture_default_str();
    train_cmd->add_option("--bias-correction", train.bias_correction, "fixed or per-step")->capture_default_str()
        ->check(CLI::IsMember({"fixed", "per-step"}));
    train_cmd->add_option("--out", train.out, "Model JSON to write")->required();
    train_cmd->add_option("--report", train.report, "AIC report path (default: model path with .aic.json extension)");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Replay a trace through the simulated channel");
    sim_cmd->add_option("--trace", sim.trace, "Trace CSV")->required();
    sim_cmd->add_option("--channel", sim.channel, "Channel config JSON")->required();
    sim_cmd->add_option("--model", sim.model, "Model JSON (required for foreco)");
    sim_cmd->add_option("--policy", sim.policy, "foreco, repeat-last or drop")->capture_default_str();
    sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory")->required();
    sim_cmd->add_option("--tolerance-ms", sim.tolerance_ms, "Tolerance tau in ms")->capture_default_str();
    sim_cmd->add_option("--record-len", sim.record_len, "Record length R (default: model window)");
    sim_cmd->add_flag("--timings", sim.timings, "Also write wall-clock timings.json");

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Interference sweep over robots x probability x duration");
    sweep_cmd->add_option("--trace", sweep.trace, "Trace CSV")->required();
    sweep_cmd->add_option("--spec", sweep.spec, "Sweep spec JSON")->required();
    sweep_cmd->add_option("--model", sweep.model, "Model JSON, overriding the spec");
    sweep_cmd->add_option("--out-dir", sweep.out_dir, "Output directory")->required();
    sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads (default: all cores)");
    sweep_cmd->add_flag("--timings", sweep.timings, "Also write wall-clock timings.json");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-trace", "Write a synthetic trace CSV");
    gen_cmd->add_option("--profile", gen.profile, "pick-and-place, sine-mix or constant")->capture_default_str();
    gen_cmd->add_option("--duration-s", gen.duration_s, "Duration in seconds")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    gen_cmd->add_option("--period-ms", gen.period_ms, "Command period")->capture_default_str();
    gen_cmd->add_option("--dim", gen.dim, "Number of joints")->capture_default_str();
    gen_cmd->add_option("--noise-std", gen.noise_std, "Measurement noise std")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Trace CSV to write")->required();

    StudyArgs study;
    auto* study_cmd = app.add_subcommand("window-study", "Closed-loop forecast error against window length");
    study_cmd->add_option("--train", study.train, "Training trace CSV")->required();
    study_cmd->add_option("--test", study.test, "Test trace CSV")->required();
    study_cmd->add_option("--window-max", study.window_max, "Longest forecast window")->capture_default_str();
    study_cmd->add_option("--r-max", study.r_max, "Largest record length tried")->capture_default_str();
    study_cmd->add_option("--stride", study.stride, "Distance between window starts")->capture_default_str();
    study_cmd->add_option("--out", study.out, "Result JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code != 0) {
            Json j;
            j["error"] = {{"kind", "usage"}, {"message", e.what()}};
            std::fprintf(stderr, "%s\n", j.dump().c_str());
            return kExitUsage;
        }
        return 0;
    }

    try {
        const std::vector<std::string> args(argv + 1, argv + argc);
        if (*train_cmd) return cmd_train(train);
        if (*sim_cmd) {
            Manifest m("simulate", args);
            return cmd_simulate(sim, m);
        }
        if (*sweep_cmd) {
            Manifest m("sweep", args);
            return cmd_sweep(sweep, m);
        }
        if (*gen_cmd) return cmd_gen_trace(gen);
        if (*study_cmd) return cmd_window_study(study);
    } catch (const Error& e) {
        report_error(to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        report_error("internal", e.what());
        return kExitNumeric;
    }
    return kExitUsage;
}
