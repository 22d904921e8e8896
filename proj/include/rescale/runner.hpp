#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rescale/config.hpp"
#include "rescale/diagnostics.hpp"
#include "rescale/rescaler.hpp"
#include "rescale/scenarios.hpp"

namespace rescale {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("RESCALE_LOG");
        if (env == nullptr) return LogLevel::info;
        const std::string v(env);
        if (v == "quiet") return LogLevel::quiet;
        if (v == "debug") return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << "[rescale] " << msg << '\n';
}
inline void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::cerr << "[rescale:debug] " << msg << '\n';
}

struct RunSummary {
    double final_tau = 0.0;
    double final_t_phys = 0.0;
    double T_est = 0.0;
    double law_cu_fitted = 0.0;
    std::array<double, 3> law_cl_fitted{};
    std::array<double, 3> law_lambda_fitted{};
    double residual_times_tau_max = 0.0;   // over records with tau >= 0.1 final_tau
    double residual_times_tau_final = 0.0;
    std::string exit_reason;  // max_tau | max_steps | numerical-blowup | singular-normalization
    std::uint64_t steps = 0;
    std::size_t n = 1;
    std::size_t records = 0;
    std::optional<double> expected_law_cu, expected_law_cl;
};

namespace detail {

inline std::vector<std::string> csv_header(std::size_t n, std::size_t k_diag) {
    std::vector<std::string> h{"step", "tau", "t_phys"};
    for (std::size_t i = 1; i <= n; ++i) h.push_back("lambda_" + std::to_string(i));
    h.push_back("c_u_hat");
    for (std::size_t i = 1; i <= n; ++i) h.push_back("c_l_hat_" + std::to_string(i));
    h.push_back("law_cu");
    for (std::size_t i = 1; i <= n; ++i) h.push_back("law_cl_" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i) h.push_back("law_lambda_" + std::to_string(i));
    h.push_back("residual_sup");
    h.push_back("residual_times_tau");
    h.push_back("E0");
    for (std::size_t j = 0; j <= k_diag; ++j) h.push_back("Q" + std::to_string(j));
    h.push_back("E");
    h.push_back("G");
    h.push_back("kappa");
    h.push_back("origin_drift_d0");
    h.push_back("origin_drift_d2_max");
    h.push_back("T_est");
    h.push_back("log_correction");
    return h;
}

inline void write_csv_row(std::ostream& os, const DiagnosticsRecord& r, std::size_t n,
                          std::size_t k_diag) {
    os << r.step << ',' << format_g17(r.tau) << ',' << format_g17(r.t_phys);
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_g17(r.lambda[i]);
    os << ',' << format_g17(r.c_u_hat);
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_g17(r.c_l_hat[i]);
    os << ',' << format_g17(r.law_cu);
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_g17(r.law_cl[i]);
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_g17(r.law_lambda[i]);
    os << ',' << format_g17(r.residual_sup) << ',' << format_g17(r.residual_times_tau);
    os << ',' << format_g17(r.E0);
    for (std::size_t j = 0; j <= k_diag; ++j) os << ',' << format_g17(r.Qj[j]);
    os << ',' << format_g17(r.E) << ',' << format_g17(r.G) << ',' << format_g17(r.kappa);
    os << ',' << format_g17(r.origin_drift_d0) << ',' << format_g17(r.origin_drift_d2);
    os << ',' << format_g17(r.T_est) << ',' << format_g17(r.log_correction);
    os << '\n';
}

inline MeshPtr build_mesh_from_config(const RunConfig& cfg, std::size_t n) {
    std::vector<std::size_t> M = cfg.M;
    std::vector<double> L = cfg.L;
    if (M.size() == 1 && n > 1) M.assign(n, M[0]);
    if (L.size() == 1 && n > 1) L.assign(n, L[0]);
    if (M.size() != n || L.size() != n)
        throw config_error("config: mesh M/L lists must have one entry per axis");
    Grading g;
    if (cfg.grading == "uniform") g = Uniform{};
    else if (cfg.grading == "algebraic") g = Algebraic{cfg.grading_p};
    else if (cfg.grading == "geometric") g = Geometric{cfg.grading_r};
    else throw config_error("config: unknown grading '" + cfg.grading + "'");
    std::vector<Mesh1D> axes;
    for (std::size_t i = 0; i < n; ++i) axes.push_back(build_graded_mesh(M[i], L[i], g));
    return std::make_shared<TensorMesh>(TensorMesh(std::move(axes)));
}

inline Scenario scenario_from_config(const RunConfig& cfg) {
    if (cfg.scenario == "paper_1d") return scenario_1d_paper();
    if (cfg.scenario == "paper_2d") return scenario_2d_paper();
    if (cfg.scenario == "theorem") {
        if (cfg.amplitude > 0.1 && !cfg.allow_large)
            throw config_error(
                "config: amplitude beyond the perturbative regime; set allow_large = true");
        const std::size_t n = cfg.n == 0 ? 1 : cfg.n;
        return scenario_theorem(cfg.g_expr, cfg.amplitude, cfg.lambda0, n);
    }
    if (cfg.scenario == "custom") {
        if (cfg.initial_expr.empty())
            throw config_error("config: custom scenario needs scenario.initial");
        const std::size_t n = cfg.n == 0 ? 1 : cfg.n;
        Scenario s;
        s.name = "custom";
        s.n = n;
        auto expr = std::make_shared<Expr>(Expr::parse(cfg.initial_expr, n));
        s.initial = [expr](const Point& p) { return expr->eval(p); };
        if (!cfg.lambda0_list.empty()) {
            if (cfg.lambda0_list.size() == 1)
                for (std::size_t i = 0; i < n; ++i) s.lambda0[i] = cfg.lambda0_list[0];
            else if (cfg.lambda0_list.size() == n)
                for (std::size_t i = 0; i < n; ++i) s.lambda0[i] = cfg.lambda0_list[i];
            else
                throw config_error("config: lambda0 list must have one entry per axis");
        }
        s.Cu0 = 1.0;
        s.expected_law_cu = double(n) / 4.0;
        s.expected_law_cl = (double(n) + 4.0) / 8.0;
        return s;
    }
    throw config_error("config: unknown scenario '" + cfg.scenario + "'");
}

struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw io_error("timeseries: missing column '" + name + "'");
    }
};

inline CsvData read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open timeseries '" + path + "'");
    CsvData data;
    std::string line;
    if (!std::getline(f, line)) throw io_error("timeseries: empty file");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) data.header.push_back(cell);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream rs(line);
        while (std::getline(rs, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        if (row.size() != data.header.size()) throw io_error("timeseries: ragged row");
        data.rows.push_back(std::move(row));
    }
    return data;
}

// Law-constant fit: mean of the law products over the last quartile of records.
inline RunSummary summarize_csv(const CsvData& data, std::size_t n) {
    RunSummary s;
    s.n = n;
    s.records = data.rows.size();
    if (data.rows.empty()) return s;
    const auto& last = data.rows.back();
    s.final_tau = last[data.col("tau")];
    s.final_t_phys = last[data.col("t_phys")];
    s.T_est = last[data.col("T_est")];
    const std::size_t q0 = data.rows.size() - std::max<std::size_t>(1, data.rows.size() / 4);
    auto fitted = [&](const std::string& name) {
        const std::size_t c = data.col(name);
        double acc = 0.0;
        for (std::size_t r = q0; r < data.rows.size(); ++r) acc += data.rows[r][c];
        return acc / double(data.rows.size() - q0);
    };
    s.law_cu_fitted = fitted("law_cu");
    for (std::size_t i = 0; i < n; ++i) {
        s.law_cl_fitted[i] = fitted("law_cl_" + std::to_string(i + 1));
        s.law_lambda_fitted[i] = fitted("law_lambda_" + std::to_string(i + 1));
    }
    const std::size_t ct = data.col("tau");
    const std::size_t cr = data.col("residual_times_tau");
    s.residual_times_tau_final = last[cr];
    for (const auto& row : data.rows)
        if (row[ct] >= 0.1 * s.final_tau)
            s.residual_times_tau_max = std::max(s.residual_times_tau_max, row[cr]);
    return s;
}

inline nlohmann::ordered_json summary_to_json(const RunSummary& s) {
    nlohmann::ordered_json j;
    j["exit_reason"] = s.exit_reason;
    j["steps"] = s.steps;
    j["records"] = s.records;
    j["n"] = s.n;
    j["final_tau"] = s.final_tau;
    j["final_t_phys"] = s.final_t_phys;
    j["T_est"] = s.T_est;
    j["law_cu_fitted"] = s.law_cu_fitted;
    for (std::size_t i = 0; i < s.n; ++i) {
        j["law_cl_fitted_" + std::to_string(i + 1)] = s.law_cl_fitted[i];
        j["law_lambda_fitted_" + std::to_string(i + 1)] = s.law_lambda_fitted[i];
    }
    j["residual_times_tau_max"] = s.residual_times_tau_max;
    j["residual_times_tau_final"] = s.residual_times_tau_final;
    if (s.expected_law_cu) j["expected_law_cu"] = *s.expected_law_cu;
    if (s.expected_law_cl) j["expected_law_cl"] = *s.expected_law_cl;
    return j;
}

inline void write_snapshot(const std::filesystem::path& path, const Field& f) {
    std::ofstream os(path);
    write_mesh(os, f.mesh());
    os << "field " << f.size() << '\n';
    for (double v : f.values()) os << format_g17(v) << '\n';
}

// Runner checkpoint: the rescaler state plus the drift references.
inline void write_run_checkpoint(const std::filesystem::path& path, const RescaleState& s,
                                 const OriginReference& ref) {
    std::ofstream os(path);
    write_checkpoint(os, s);
    os << "ref_d0 " << format_g17(ref.d0) << '\n';
    os << "ref_d2";
    for (std::size_t i = 0; i < s.dim(); ++i) os << ' ' << format_g17(ref.d2[i]);
    os << '\n';
}

inline std::pair<RescaleState, OriginReference> read_run_checkpoint(
    const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open checkpoint '" + path.string() + "'");
    RescaleState s = read_checkpoint(is);
    OriginReference ref;
    std::string word;
    if (!(is >> word) || word != "ref_d0") throw io_error("checkpoint: missing ref_d0");
    ref.d0 = parse_double(is);
    if (!(is >> word) || word != "ref_d2") throw io_error("checkpoint: missing ref_d2");
    for (std::size_t i = 0; i < s.dim(); ++i) ref.d2[i] = parse_double(is);
    return {std::move(s), ref};
}

}  // namespace detail

// Orchestrate one run: {normalization -> cfl -> rk4 -> periodic diagnostics}
// until a stop condition; writes timeseries.csv, snapshots, checkpoint.txt and
// summary.json under cfg.out_dir. Fully deterministic.
inline RunSummary run(const RunConfig& cfg, std::optional<std::string> resume_checkpoint = {}) {
    namespace fs = std::filesystem;
    if (cfg.out_dir.empty()) throw config_error("run: output directory not set");
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);

    Scenario scenario = detail::scenario_from_config(cfg);
    std::optional<RescaleState> state_opt;
    OriginReference ref;
    bool resuming = false;
    std::uint64_t resume_step = 0;

    if (resume_checkpoint) {
        auto [st, rf] = detail::read_run_checkpoint(*resume_checkpoint);
        state_opt.emplace(std::move(st));
        ref = rf;
        resuming = true;
        resume_step = state_opt->step;
        log_info("resuming from step " + std::to_string(resume_step) + ", tau " +
                 std::to_string(state_opt->tau));
    } else {
        MeshPtr mesh = detail::build_mesh_from_config(cfg, scenario.n);
        Scenario sc = scenario;
        if (cfg.Cu0_set) sc.Cu0 = cfg.Cu0;
        state_opt.emplace(make_initial_state(sc, mesh));
        ref = origin_reference(state_opt->u_hat);
        std::ofstream cf(out / "config.txt");
        write_config(cf, cfg);
    }

    RescaleState& state = *state_opt;
    const std::size_t n = state.dim();
    Engine engine(state.u_hat.mesh_ptr());
    StepOptions opts;
    opts.stage_refresh = cfg.stage_refresh;
    opts.normalization = cfg.normalization;
    WeightSpec spec{n, cfg.k_diag, cfg.mu};

    std::ofstream csv;
    if (resuming) {
        csv.open(out / "timeseries.csv", std::ios::app);
    } else {
        csv.open(out / "timeseries.csv", std::ios::trunc);
        const auto header = detail::csv_header(n, cfg.k_diag);
        for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
        csv << '\n';
    }
    if (!csv) throw io_error("run: cannot open timeseries.csv for writing");

    RunSummary summary;
    summary.exit_reason = "max_steps";
    auto emit_record = [&](const RescaleState& s) {
        const NormalizationConstants c = engine.constants(s, opts);
        DiagnosticsRecord r = make_record(s, c, spec, ref);
        detail::write_csv_row(csv, r, n, cfg.k_diag);
        if (r.origin_vanishing_warning)
            log_debug("origin-vanishing warning at tau " + std::to_string(s.tau));
    };
    auto emit_snapshot = [&](const RescaleState& s) {
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_tau_%.6f.txt", s.tau);
        detail::write_snapshot(out / name, s.u_hat);
        detail::write_run_checkpoint(out / "checkpoint.txt", s, ref);
    };

    try {
        for (;;) {
            if (state.step % cfg.record_every == 0 && (!resuming || state.step > resume_step))
                emit_record(state);
            if (cfg.snapshot_every > 0 && state.step % cfg.snapshot_every == 0 &&
                (!resuming || state.step > resume_step))
                emit_snapshot(state);
            if (cfg.max_tau > 0.0 && state.tau >= cfg.max_tau) {
                summary.exit_reason = "max_tau";
                break;
            }
            if (cfg.max_steps > 0 && state.step >= cfg.max_steps) {
                summary.exit_reason = "max_steps";
                break;
            }
            const NormalizationConstants c = engine.constants(state, opts);
            const double dt = cfl_timestep(state, c, cfg.safety);
            state = advance_with_retry(engine, state, dt, opts);
        }
    } catch (const singular_normalization_error& e) {
        summary.exit_reason = "singular-normalization";
        log_info(std::string("run stopped: ") + e.what());
    } catch (const numerical_blowup_error& e) {
        summary.exit_reason = "numerical-blowup";
        log_info(std::string("run stopped: ") + e.what());
    }

    csv.flush();
    detail::write_run_checkpoint(out / "checkpoint.txt", state, ref);

    detail::CsvData data = detail::read_csv((out / "timeseries.csv").string());
    RunSummary fitted = detail::summarize_csv(data, n);
    fitted.exit_reason = summary.exit_reason;
    fitted.steps = state.step;
    fitted.final_tau = state.tau;
    fitted.final_t_phys = state.t_phys;
    fitted.T_est = blowup_estimate(state).T_est;
    fitted.expected_law_cu = scenario.expected_law_cu;
    fitted.expected_law_cl = scenario.expected_law_cl;
    std::ofstream sj(out / "summary.json");
    sj << detail::summary_to_json(fitted).dump(2) << '\n';
    log_info("run finished: " + fitted.exit_reason + " at tau " + std::to_string(fitted.final_tau));
    return fitted;
}

// Recompute the fitted law constants from an existing timeseries.
inline nlohmann::ordered_json laws_from_timeseries(const std::string& path) {
    detail::CsvData data = detail::read_csv(path);
    std::size_t n = 0;
    while (true) {
        bool found = false;
        for (const auto& h : data.header)
            if (h == "lambda_" + std::to_string(n + 1)) found = true;
        if (!found) break;
        ++n;
    }
    if (n == 0) throw io_error("timeseries: no lambda columns");
    RunSummary s = detail::summarize_csv(data, n);
    nlohmann::ordered_json j;
    j["records"] = s.records;
    j["final_tau"] = s.final_tau;
    j["law_cu_fitted"] = s.law_cu_fitted;
    for (std::size_t i = 0; i < n; ++i) {
        j["law_cl_fitted_" + std::to_string(i + 1)] = s.law_cl_fitted[i];
        j["law_lambda_fitted_" + std::to_string(i + 1)] = s.law_lambda_fitted[i];
    }
    j["residual_times_tau_max"] = s.residual_times_tau_max;
    j["residual_times_tau_final"] = s.residual_times_tau_final;
    return j;
}

// Independent runs over one swept parameter; one subdirectory per value plus
// an index.csv of the summaries. Runs execute concurrently.
inline std::vector<RunSummary> sweep(const RunConfig& base, const std::string& param,
                                     const std::vector<double>& values) {
    namespace fs = std::filesystem;
    if (param != "amplitude" && param != "lambda0" && param != "M" && param != "safety" &&
        param != "Cu0")
        throw config_error("sweep: parameter must be one of amplitude, lambda0, M, safety, Cu0");
    if (base.out_dir.empty()) throw config_error("sweep: output directory not set");
    fs::create_directories(base.out_dir);

    std::vector<RunSummary> results(values.size());
    std::vector<std::string> errors(values.size());
    auto one = [&](std::size_t idx) {
        RunConfig cfg = base;
        const double v = values[idx];
        if (param == "amplitude") cfg.amplitude = v;
        else if (param == "lambda0") {
            cfg.lambda0 = v;
            cfg.lambda0_list = {v};
        } else if (param == "M") {
            if (v < 8 || v != std::floor(v)) throw config_error("sweep: M values must be integers >= 8");
            cfg.M.assign(cfg.M.size(), static_cast<std::size_t>(v));
        } else if (param == "safety") cfg.safety = v;
        else if (param == "Cu0") {
            cfg.Cu0 = v;
            cfg.Cu0_set = true;
        }
        char sub[64];
        std::snprintf(sub, sizeof(sub), "%s_%g", param.c_str(), v);
        cfg.out_dir = (fs::path(base.out_dir) / sub).string();
        try {
            results[idx] = run(cfg);
        } catch (const std::exception& e) {
            errors[idx] = e.what();
            results[idx].exit_reason = "error";
        }
    };

    const std::size_t conc = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < values.size(); start += conc) {
        std::vector<std::future<void>> batch;
        for (std::size_t i = start; i < std::min(values.size(), start + conc); ++i)
            batch.push_back(std::async(std::launch::async, one, i));
        for (auto& fut : batch) fut.get();
    }

    std::ofstream idx(fs::path(base.out_dir) / "index.csv");
    idx << "param,value,exit_reason,error,steps,final_tau,law_cu_fitted,law_cl_fitted_1,"
           "law_lambda_fitted_1,residual_times_tau_final\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const RunSummary& s = results[i];
        idx << param << ',' << format_g17(values[i]) << ',' << s.exit_reason << ','
            << errors[i] << ',' << s.steps << ',' << format_g17(s.final_tau) << ','
            << format_g17(s.law_cu_fitted) << ',' << format_g17(s.law_cl_fitted[0]) << ','
            << format_g17(s.law_lambda_fitted[0]) << ','
            << format_g17(s.residual_times_tau_final) << '\n';
    }
    return results;
}

}  // namespace rescale
