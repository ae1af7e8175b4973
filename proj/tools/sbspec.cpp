// sbspec <mode> --config file [--out dir]
#include <iostream>

#include "CLI11.hpp"

#include "sbspec/errors.hpp"
#include "sbspec/harness.hpp"

int main(int argc, char** argv) {
    using namespace sbspec;
    CLI::App app{"Spectra of fourth-order operators with squeezed potentials"};
    app.require_subcommand(1, 1);
    std::string config;
    std::string out;
    const char* modes[] = {"resonant-set", "perturbed-spectrum", "limit-spectrum",
                           "correctors",   "converge",           "divergence-probe"};
    for (const char* m : modes) {
        auto* sub = app.add_subcommand(m);
        sub->add_option("--config", config, "experiment configuration (JSON)")->required();
        sub->add_option("--out", out, "output directory (overrides the config)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string mode_name = app.get_subcommands().front()->get_name();
    try {
        ExperimentConfig cfg = load_config(config);
        const Mode mode = parse_mode(mode_name);
        if (cfg.mode && *cfg.mode != mode)
            std::cerr << "warning: config mode " << to_string(*cfg.mode) << " overridden by " << mode_name << "\n";
        if (!out.empty()) cfg.out_dir = out;
        RunResult r = run_experiment(cfg, mode);
        for (const auto& f : r.files) std::cout << f.string() << "\n";
        if (r.report.contains("verdict")) std::cout << "verdict: " << r.report["verdict"].get<std::string>() << "\n";
        return r.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
