#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hybridsizer/design.hpp"
#include "hybridsizer/env.hpp"
#include "hybridsizer/oracle.hpp"
#include "hybridsizer/policy.hpp"
#include "hybridsizer/series.hpp"

namespace hsz {

// Thrown for anything wrong with the configuration itself; the CLI maps it
// to exit code 2 (runtime failures map to 3).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WindowSpec {
    std::size_t start = 1;
    std::size_t length = 24;
};

// How simulate/compare obtain their acting policy.
struct PolicySpec {
    enum class Kind { zero, constant, checkpoint };
    Kind kind = Kind::zero;
    std::array<double, 5> constant_action{}; // order: e, res, up, dn, imb
    std::string checkpoint_path;
};

struct ExperimentConfig {
    // data ingestion
    std::string csv_path;
    CsvSchema schema;
    double dt_hours = 1.0;
    double pv_reference_nameplate_mw = 11.0;
    // scenario knobs: uniform scaling of the AS price series
    double scale_lambda_res = 1.0;
    double scale_lambda_up = 1.0;
    double scale_lambda_dn = 1.0;

    // plant and market
    PlantMode mode = PlantMode::hybrid;
    PlantParams plant;
    CostParams costs;
    double pi_imb = 1.0;
    double initial_soc = 0.5;
    double p_inv_mw = -1.0; // co-located PV inverter; <0 means p_poi_max
    ActivationConfig activation;
    std::string forecaster_type = "persistence";
    double forecaster_alpha = 0.5;

    // episodes
    std::vector<WindowSpec> windows;
    DesignVector design; // fixed design for simulate / train / compare
    PolicySpec policy;

    // optimizers
    TrainConfig train;
    DesignOptConfig design_opt;

    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = "results";

    void validate() const;
};

// Parses and validates a config file (JSON). Relative data paths resolve
// against the config file's directory. Optional overrides take precedence.
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = {},
                             std::optional<int> workers_override = {},
                             std::optional<std::string> out_override = {});

std::string config_to_json(const ExperimentConfig& config);

// Executes one subcommand and returns the results directory. On failure a
// PARTIAL marker file is left in the output directory before rethrowing.
std::filesystem::path run_experiment(const ExperimentConfig& config,
                                     const std::string& command);

// Derives report tables (revenue breakdown, monthly aggregation when the
// traces span months, design-mean evolution) from a completed results
// directory.
void emit_report(const std::filesystem::path& results_dir);

// Shared helpers for deterministic file output.
std::string format_double(double v);

} // namespace hsz
