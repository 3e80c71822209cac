#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hybridsizer/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

int run_command(const std::string& command, const std::string& config_path,
                std::optional<std::uint64_t> seed, std::optional<int> workers,
                std::optional<std::string> out) {
    try {
        if (command == "report") {
            std::string dir;
            if (out) {
                dir = *out;
            } else if (!config_path.empty()) {
                const hsz::ExperimentConfig cfg =
                    hsz::load_config(config_path, seed, workers, out);
                dir = cfg.out_dir;
            } else {
                std::cerr << "report needs --config or --out pointing at a results directory\n";
                return kExitConfigError;
            }
            if (const char* env_out = std::getenv("HYBRIDSIZER_OUT")) dir = env_out;
            hsz::emit_report(dir);
            std::cout << "report written to " << dir << "\n";
            return kExitOk;
        }

        const hsz::ExperimentConfig cfg = hsz::load_config(config_path, seed, workers, out);
        const auto dir = hsz::run_experiment(cfg, command);
        std::cout << "results written to " << dir.string() << "\n";
        return kExitOk;
    } catch (const hsz::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PV-battery hybrid sizing and multi-market bidding optimizer"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string out_dir;
    bool seed_set = false, workers_set = false, out_set = false;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* copt = sub->add_option("--config", config_path, "path to the experiment config");
        if (config_required) copt->required();
        sub->add_option("--seed", seed, "master seed override")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--workers", workers, "worker thread count override")
            ->each([&](const std::string&) { workers_set = true; });
        sub->add_option("--out", out_dir, "output directory override")
            ->each([&](const std::string&) { out_set = true; });
    };

    add_common(app.add_subcommand("simulate", "run traced episodes with a fixed design and policy"),
               true);
    add_common(app.add_subcommand("train", "train the operational policy for a fixed design"),
               true);
    add_common(app.add_subcommand("co-optimize", "jointly optimize sizing and policy"), true);
    add_common(app.add_subcommand("compare",
                                  "paired hybrid vs co-located run on identical seeds and data"),
               true);
    add_common(app.add_subcommand("report", "derive report tables from a results directory"),
               false);

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    return run_command(command, config_path,
                       seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                       workers_set ? std::optional<int>(workers) : std::nullopt,
                       out_set ? std::optional<std::string>(out_dir) : std::nullopt);
}
