// accelgl: run, sweep and validate Ginzburg-Landau experiments from config files.

#include <accelgl/experiments.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#ifndef ACCELGL_ACCEPTANCE_PATH
#define ACCELGL_ACCEPTANCE_PATH ""
#endif

namespace {

using namespace accelgl;

Config load_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
    Config cfg = Config::load(path);
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Accelerated minimisation of Ginzburg-Landau energies"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> sets;

    auto* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output", out_dir, "Output directory (overrides io.output)");
    run->add_option("--set", sets, "Override a config key, section.key=value");

    std::string param, values_text;
    auto* sweep = app.add_subcommand("sweep", "Run an experiment once per parameter value");
    sweep->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--param", param, "Config key to vary, section.key")->required();
    sweep->add_option("--values", values_text, "Comma-separated values (may be empty)")->required();
    sweep->add_option("-o,--output", out_dir, "Output directory (overrides io.output)");
    sweep->add_option("--set", sets, "Override a config key, section.key=value");

    std::string binary = ACCELGL_ACCEPTANCE_PATH;
    std::vector<int> criteria;
    auto* validate = app.add_subcommand("validate", "Run the acceptance checks");
    validate->add_option("--binary", binary, "Acceptance executable");
    validate->add_option("--criterion", criteria, "Only these criteria (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*run) {
            const Config cfg = load_with_overrides(config_path, sets);
            const RunReport rep = run_experiment(cfg, out_dir);
            if (rep.exit_code == exit_diverged) std::cerr << "run diverged\n";
            if (rep.exit_code == exit_failure) std::cerr << "error: " << rep.summary.value("error", "") << '\n';
            std::cout << rep.summary.value("status", "") << '\n';
            return rep.exit_code;
        }
        if (*sweep) {
            const Config cfg = load_with_overrides(config_path, sets);
            const auto values = Config::parse_list("--values", values_text);
            const auto rows = run_sweep(cfg, param, values, out_dir);
            for (const auto& r : rows)
                std::cout << param << " = " << format_double(r.value) << ": " << r.steps << " steps"
                          << (r.converged ? "" : " (not converged)") << '\n';
            return exit_ok;
        }
        if (*validate) {
            if (binary.empty()) {
                std::cerr << "no acceptance binary configured; pass --binary\n";
                return exit_usage;
            }
            std::string cmd = shell_quote(binary);
            for (int c : criteria) cmd += " " + std::to_string(c);
            const int status = std::system(cmd.c_str());
            return status == 0 ? exit_ok : exit_failure;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_usage;
}
