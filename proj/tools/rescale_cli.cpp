// Dynamic-rescaling simulator for semilinear heat blowup.
//
// Subcommands:
//   run    --config <path> --out <dir>
//   resume --checkpoint <path> --max-tau <v>
//   sweep  --config <path> --out <dir> --param <name> --values <csv-list>
//   laws   --timeseries <path>
//
// Exit codes: 0 success, 2 config error, 3 numerical blowup,
// 4 singular normalization.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rescale/runner.hpp"

namespace {

int exit_code_for(const rescale::RunSummary& s) {
    if (s.exit_reason == "numerical-blowup") return 3;
    if (s.exit_reason == "singular-normalization") return 4;
    return 0;
}

std::vector<double> parse_value_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = rescale::detail::trim(item);
        if (item.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0')
            throw rescale::config_error("sweep: bad value '" + item + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rescale: dynamic-rescaling blowup simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint_path, timeseries_path, param, values_csv;
    double max_tau = 0.0;

    CLI::App* cmd_run = app.add_subcommand("run", "run a configured scenario");
    cmd_run->add_option("--config", config_path, "configuration file")->required();
    cmd_run->add_option("--out", out_dir, "output directory")->required();

    CLI::App* cmd_resume = app.add_subcommand("resume", "continue from a checkpoint");
    cmd_resume->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    cmd_resume->add_option("--max-tau", max_tau, "new stop time")->required();

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "parameter sweep of independent runs");
    cmd_sweep->add_option("--config", config_path, "base configuration file")->required();
    cmd_sweep->add_option("--out", out_dir, "output directory")->required();
    cmd_sweep->add_option("--param", param, "amplitude | lambda0 | M | safety | Cu0")->required();
    cmd_sweep->add_option("--values", values_csv, "comma-separated values")->required();

    CLI::App* cmd_laws = app.add_subcommand("laws", "refit law constants from a timeseries");
    cmd_laws->add_option("--timeseries", timeseries_path, "timeseries.csv path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            rescale::RunConfig cfg = rescale::load_config(config_path);
            cfg.out_dir = out_dir;
            const rescale::RunSummary s = rescale::run(cfg);
            std::cout << rescale::detail::summary_to_json(s).dump(2) << '\n';
            return exit_code_for(s);
        }
        if (cmd_resume->parsed()) {
            namespace fs = std::filesystem;
            const fs::path ckpt(checkpoint_path);
            const fs::path cfg_path = ckpt.parent_path() / "config.txt";
            rescale::RunConfig cfg = rescale::load_config(cfg_path.string());
            cfg.out_dir = ckpt.parent_path().string();
            cfg.max_tau = max_tau;
            const rescale::RunSummary s = rescale::run(cfg, checkpoint_path);
            std::cout << rescale::detail::summary_to_json(s).dump(2) << '\n';
            return exit_code_for(s);
        }
        if (cmd_sweep->parsed()) {
            rescale::RunConfig cfg = rescale::load_config(config_path);
            cfg.out_dir = out_dir;
            const auto values = parse_value_list(values_csv);
            const auto results = rescale::sweep(cfg, param, values);
            int rc = 0;
            for (const auto& s : results)
                if (s.exit_reason == "error") rc = 2;
            std::cout << "sweep finished: " << results.size() << " runs, index at " << out_dir
                      << "/index.csv\n";
            return rc;
        }
        if (cmd_laws->parsed()) {
            std::cout << rescale::laws_from_timeseries(timeseries_path).dump(2) << '\n';
            return 0;
        }
    } catch (const rescale::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const rescale::numerical_blowup_error& e) {
        std::cerr << "numerical blowup: " << e.what() << '\n';
        return 3;
    } catch (const rescale::singular_normalization_error& e) {
        std::cerr << "singular normalization: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
