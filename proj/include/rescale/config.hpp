#pragma once

#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rescale/errors.hpp"
#include "rescale/mesh.hpp"
#include "rescale/rescaler.hpp"

namespace rescale {

// Flat key = value configuration with [sections]; no nesting.
struct RunConfig {
    // [run]
    std::string scenario = "paper_1d";  // paper_1d | paper_2d | theorem | custom
    double max_tau = 0.0;               // stop when tau >= max_tau (if > 0)
    std::uint64_t max_steps = 0;        // stop after this many steps (if > 0)
    std::uint64_t record_every = 50;
    std::uint64_t snapshot_every = 0;   // 0 = no periodic snapshots
    double safety = 0.8;
    bool stage_refresh = true;
    StepOptions::Normalization normalization = StepOptions::Normalization::discrete;
    double Cu0 = 1.0;
    bool Cu0_set = false;               // explicit override of the scenario's Cu0

    // [scenario]
    double amplitude = 0.01;            // theorem
    double lambda0 = 0.01;              // theorem
    std::string g_expr;                 // theorem custom perturbation
    std::string initial_expr;           // custom scenario u_hat(.,0)
    std::size_t n = 0;                  // custom scenario dimension (0 = from scenario)
    std::vector<double> lambda0_list;   // custom scenario per-axis lambda(0)
    bool allow_large = false;           // acknowledge beyond-theorem amplitudes

    // [mesh]
    std::vector<std::size_t> M{500};
    std::vector<double> L{1e4};
    std::string grading = "algebraic";  // uniform | algebraic | geometric
    double grading_p = 2.0;
    double grading_r = 1.5;

    // [diagnostics]
    std::size_t k_diag = 4;
    double mu = 1e-2;

    std::string out_dir;  // from the CLI
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_config_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw config_error("config: bad number for '" + key + "': " + v);
    return x;
}

inline std::uint64_t parse_config_uint(const std::string& key, const std::string& v) {
    const double x = parse_config_double(key, v);
    if (x < 0 || x != std::floor(x)) throw config_error("config: '" + key + "' must be a nonnegative integer");
    return static_cast<std::uint64_t>(x);
}

inline bool parse_config_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("config: bad boolean for '" + key + "': " + v);
}

template <class T, class F>
inline std::vector<T> parse_list(const std::string& key, const std::string& v, F&& one) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(one(key, trim(item)));
    if (out.empty()) throw config_error("config: empty list for '" + key + "'");
    return out;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& is) {
    RunConfig cfg;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("config line " + std::to_string(lineno) + ": bad section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string qual = section.empty() ? key : section + "." + key;

        using detail::parse_config_bool;
        using detail::parse_config_double;
        using detail::parse_config_uint;
        if (qual == "run.scenario") cfg.scenario = value;
        else if (qual == "run.max_tau") cfg.max_tau = parse_config_double(qual, value);
        else if (qual == "run.max_steps") cfg.max_steps = parse_config_uint(qual, value);
        else if (qual == "run.record_every") cfg.record_every = parse_config_uint(qual, value);
        else if (qual == "run.snapshot_every") cfg.snapshot_every = parse_config_uint(qual, value);
        else if (qual == "run.safety") cfg.safety = parse_config_double(qual, value);
        else if (qual == "run.stage_refresh") cfg.stage_refresh = parse_config_bool(qual, value);
        else if (qual == "run.normalization") {
            if (value == "discrete") cfg.normalization = StepOptions::Normalization::discrete;
            else if (value == "formula") cfg.normalization = StepOptions::Normalization::jet_formula;
            else throw config_error("config: normalization must be 'discrete' or 'formula'");
        } else if (qual == "run.Cu0") {
            cfg.Cu0 = parse_config_double(qual, value);
            cfg.Cu0_set = true;
        } else if (qual == "scenario.amplitude") cfg.amplitude = parse_config_double(qual, value);
        else if (qual == "scenario.lambda0") {
            cfg.lambda0_list = detail::parse_list<double>(qual, value, parse_config_double);
            cfg.lambda0 = cfg.lambda0_list.front();
        } else if (qual == "scenario.g") cfg.g_expr = value;
        else if (qual == "scenario.initial") cfg.initial_expr = value;
        else if (qual == "scenario.n") cfg.n = parse_config_uint(qual, value);
        else if (qual == "scenario.allow_large") cfg.allow_large = parse_config_bool(qual, value);
        else if (qual == "mesh.M")
            cfg.M = detail::parse_list<std::size_t>(qual, value, [](const std::string& k, const std::string& v2) {
                return static_cast<std::size_t>(detail::parse_config_uint(k, v2));
            });
        else if (qual == "mesh.L") cfg.L = detail::parse_list<double>(qual, value, parse_config_double);
        else if (qual == "mesh.grading") cfg.grading = value;
        else if (qual == "mesh.p") cfg.grading_p = parse_config_double(qual, value);
        else if (qual == "mesh.r") cfg.grading_r = parse_config_double(qual, value);
        else if (qual == "diagnostics.k_diag") cfg.k_diag = parse_config_uint(qual, value);
        else if (qual == "diagnostics.mu") cfg.mu = parse_config_double(qual, value);
        else throw config_error("config line " + std::to_string(lineno) + ": unknown key '" + qual + "'");
    }
    if (!(cfg.max_tau > 0.0) && cfg.max_steps == 0)
        throw config_error("config: need max_tau > 0 or max_steps > 0");
    if (cfg.record_every < 1) throw config_error("config: record_every must be >= 1");
    if (!(cfg.safety > 0.0 && cfg.safety <= 1.0))
        throw config_error("config: safety must be in (0, 1]");
    if (cfg.k_diag < 1) throw config_error("config: k_diag must be >= 1");
    if (!(cfg.mu > 0.0)) throw config_error("config: mu must be > 0");
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("config: cannot open '" + path + "'");
    return parse_config(f);
}

// Re-serialize the resolved configuration (written next to the outputs so a
// checkpoint can be resumed without the original file).
inline void write_config(std::ostream& os, const RunConfig& cfg) {
    os << "[run]\n";
    os << "scenario = " << cfg.scenario << '\n';
    os << "max_tau = " << format_g17(cfg.max_tau) << '\n';
    os << "max_steps = " << cfg.max_steps << '\n';
    os << "record_every = " << cfg.record_every << '\n';
    os << "snapshot_every = " << cfg.snapshot_every << '\n';
    os << "safety = " << format_g17(cfg.safety) << '\n';
    os << "stage_refresh = " << (cfg.stage_refresh ? "true" : "false") << '\n';
    os << "normalization = "
       << (cfg.normalization == StepOptions::Normalization::discrete ? "discrete" : "formula")
       << '\n';
    if (cfg.Cu0_set) os << "Cu0 = " << format_g17(cfg.Cu0) << '\n';
    os << "\n[scenario]\n";
    os << "amplitude = " << format_g17(cfg.amplitude) << '\n';
    if (!cfg.lambda0_list.empty()) {
        os << "lambda0 = ";
        for (std::size_t i = 0; i < cfg.lambda0_list.size(); ++i)
            os << (i ? "," : "") << format_g17(cfg.lambda0_list[i]);
        os << '\n';
    }
    if (!cfg.g_expr.empty()) os << "g = " << cfg.g_expr << '\n';
    if (!cfg.initial_expr.empty()) os << "initial = " << cfg.initial_expr << '\n';
    if (cfg.n > 0) os << "n = " << cfg.n << '\n';
    os << "allow_large = " << (cfg.allow_large ? "true" : "false") << '\n';
    os << "\n[mesh]\n";
    os << "M = ";
    for (std::size_t i = 0; i < cfg.M.size(); ++i) os << (i ? "," : "") << cfg.M[i];
    os << '\n';
    os << "L = ";
    for (std::size_t i = 0; i < cfg.L.size(); ++i) os << (i ? "," : "") << format_g17(cfg.L[i]);
    os << '\n';
    os << "grading = " << cfg.grading << '\n';
    os << "p = " << format_g17(cfg.grading_p) << '\n';
    os << "r = " << format_g17(cfg.grading_r) << '\n';
    os << "\n[diagnostics]\n";
    os << "k_diag = " << cfg.k_diag << '\n';
    os << "mu = " << format_g17(cfg.mu) << '\n';
}

}  // namespace rescale
