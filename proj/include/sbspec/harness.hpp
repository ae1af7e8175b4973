#pragma once
// Experiment configuration, orchestration and result files for the sbspec CLI.

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sbspec/asymptotics.hpp"
#include "sbspec/fit.hpp"

namespace sbspec {

enum class Mode { ResonantSet, Perturbed, Limit, Correctors, Converge, DivergenceProbe };

Mode parse_mode(const std::string& name);
std::string to_string(Mode m);

/// alpha given as the k-th nonzero nondegenerate resonance (by |alpha|) inside a window.
struct ResonancePick {
    int index = 0;
    double lo = 0.0, hi = 0.0;
};

struct ExperimentConfig {
    Problem problem;
    std::optional<ResonancePick> alpha_pick;
    std::vector<double> eps{0.1, 0.05, 0.025, 0.0125, 0.00625};
    double lambda_lo = 0.0, lambda_hi = 1000.0;
    double alpha_lo = -1e4, alpha_hi = 1e4;
    int max_count = 10;
    int eigen_index = 0;  // limit eigenvalue (ascending) followed by converge/correctors
    int grid_points = 400;
    OdeOptions ode{};
    double multiplicity_tol = 1e-7;
    double resonance_tol = 1e-6;  // |normalized D(alpha)| at or below this is treated as resonant
    double slope_min = 0.8;
    double slope_max = std::numeric_limits<double>::infinity();
    std::optional<Mode> mode;
    std::filesystem::path out_dir = ".";
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& file);

struct RunResult {
    int exit_code = 0;  // 0 pass, 1 verdict failed
    nlohmann::json report;
    std::vector<std::filesystem::path> files;
};

/// Runs one mode and writes its CSV/JSON files into cfg.out_dir. Solver failures are rethrown
/// as errors whose message starts with the stage label.
RunResult run_experiment(const ExperimentConfig& cfg, Mode mode);

/// Limit operator selected by the configuration: resonant iff |normalized D(alpha)| <= tol.
struct LimitSetup {
    Problem problem;  // alpha replaced by the refined resonance when resonant
    bool resonant = false;
    double determinant = 0.0;
    ResonanceData resonance;
    InterfaceConditions interface;
    SpectrumResult spectrum;
};
LimitSetup resolve_limit(const ExperimentConfig& cfg);

void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace sbspec
