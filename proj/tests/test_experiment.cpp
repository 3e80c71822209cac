#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hybridsizer/experiment.hpp"

using namespace hsz;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path make_workspace(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("hsz_exp_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// small deterministic dataset: three zero-price zero-PV rows plus predecessor
void write_zero_csv(const fs::path& path, int rows) {
    std::ofstream out(path);
    out << "ts,lambda_e,lambda_res,lambda_up,lambda_dn,p_avail\n";
    for (int i = 0; i < rows; ++i) {
        char ts[64];
        std::snprintf(ts, sizeof(ts), "2022-07-%02dT%02d:00:00", 1 + i / 24, i % 24);
        out << ts << ",0,0,0,0,0\n";
    }
}

void write_week_csv(const fs::path& path, int rows) {
    std::ofstream out(path);
    out << "ts,lambda_e,lambda_res,lambda_up,lambda_dn,p_avail\n";
    for (int i = 0; i < rows; ++i) {
        const int hour = i % 24;
        const double pv = hour >= 7 && hour <= 17 ? 1.0 - std::abs(hour - 12) / 6.0 : 0.0;
        const double price = 30.0 + 40.0 * (hour >= 18 && hour <= 21) + 2.0 * (i % 5);
        char ts[64];
        std::snprintf(ts, sizeof(ts), "2022-07-%02dT%02d:00:00", 1 + i / 24, hour);
        out << ts << ',' << price << ",2,1.5,1," << pv << "\n";
    }
}

json base_config(const fs::path& dir, const std::string& csv_name) {
    json j;
    j["data"]["csv"] = csv_name;
    j["mode"] = "hybrid";
    j["data"]["dt_hours"] = 1.0;
    j["data"]["pv_reference_nameplate_mw"] = 11.0;
    j["windows"] = json::array({{{"start", 1}, {"length", 3}}});
    j["design"] = {{"p_pv_mw", 11.0}, {"e_bat_mwh", 20.0}, {"p_bat_mw", 5.0}};
    j["policy"] = {{"type", "zero"}};
    j["seed"] = 9;
    j["out_dir"] = (dir / "results").string();
    return j;
}

fs::path write_config(const fs::path& dir, const json& j) {
    const fs::path path = dir / "config.json";
    std::ofstream out(path);
    out << j.dump(2);
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("simulate on a zero dataset yields a 3-row trace of zero rewards") {
    const fs::path dir = make_workspace("zero");
    write_zero_csv(dir / "data.csv", 4);
    const fs::path cfg_path = write_config(dir, base_config(dir, "data.csv"));
    const ExperimentConfig cfg = load_config(cfg_path);
    const fs::path out = run_experiment(cfg, "simulate");

    const std::string trace = slurp(out / "trace_w0.csv");
    int lines = 0;
    for (char c : trace) lines += c == '\n';
    CHECK(lines == 4); // header + 3 rows

    const json summary = json::parse(slurp(out / "summary.json"));
    CHECK(summary.at("totals").at("market_reward").get<double>() == 0.0);
    CHECK(summary.at("audit_violations").get<std::uint64_t>() == 0);
    CHECK(fs::exists(out / "config_echo.json"));
}

TEST_CASE("config errors are reported as ConfigError") {
    const fs::path dir = make_workspace("badcfg");
    write_zero_csv(dir / "data.csv", 4);

    SUBCASE("missing data file") {
        json j = base_config(dir, "nope.csv");
        CHECK_THROWS_AS(load_config(write_config(dir, j)), ConfigError);
    }
    SUBCASE("bad mode") {
        json j = base_config(dir, "data.csv");
        j["mode"] = "both";
        CHECK_THROWS_AS(load_config(write_config(dir, j)), ConfigError);
    }
    SUBCASE("window start zero") {
        json j = base_config(dir, "data.csv");
        j["windows"] = json::array({{{"start", 0}, {"length", 2}}});
        CHECK_THROWS_AS(load_config(write_config(dir, j)), ConfigError);
    }
    SUBCASE("unparseable json") {
        const fs::path path = dir / "broken.json";
        std::ofstream(path) << "{not json";
        CHECK_THROWS_AS(load_config(path), ConfigError);
    }
    SUBCASE("unknown command") {
        const ExperimentConfig cfg = load_config(write_config(dir, base_config(dir, "data.csv")));
        CHECK_THROWS_AS(run_experiment(cfg, "frobnicate"), ConfigError);
    }
}

TEST_CASE("simulate twice produces byte-identical outputs") {
    const fs::path dir = make_workspace("repro");
    write_week_csv(dir / "data.csv", 49);
    json j = base_config(dir, "data.csv");
    j["windows"] = json::array({{{"start", 1}, {"length", 24}}, {{"start", 25}, {"length", 24}}});
    j["policy"] = {{"type", "constant"}, {"action", {0.7, 0.2, 0.3, 0.2, 1.0}}};
    const fs::path cfg_path = write_config(dir, j);

    ExperimentConfig cfg_a = load_config(cfg_path);
    cfg_a.out_dir = (dir / "run_a").string();
    ExperimentConfig cfg_b = load_config(cfg_path);
    cfg_b.out_dir = (dir / "run_b").string();
    run_experiment(cfg_a, "simulate");
    run_experiment(cfg_b, "simulate");

    CHECK(slurp(dir / "run_a" / "summary.json") == slurp(dir / "run_b" / "summary.json"));
    CHECK(slurp(dir / "run_a" / "trace_w0.csv") == slurp(dir / "run_b" / "trace_w0.csv"));
    CHECK(slurp(dir / "run_a" / "trace_w1.csv") == slurp(dir / "run_b" / "trace_w1.csv"));
}

TEST_CASE("worker count does not change simulate outputs") {
    const fs::path dir = make_workspace("workers");
    write_week_csv(dir / "data.csv", 49);
    json j = base_config(dir, "data.csv");
    j["windows"] = json::array({{{"start", 1}, {"length", 12}},
                                {{"start", 13}, {"length", 12}},
                                {{"start", 25}, {"length", 12}}});
    j["policy"] = {{"type", "constant"}, {"action", {0.8, 0.1, 0.2, 0.1, 0.9}}};
    const fs::path cfg_path = write_config(dir, j);

    ExperimentConfig one = load_config(cfg_path, {}, 1, (dir / "w1").string());
    ExperimentConfig four = load_config(cfg_path, {}, 4, (dir / "w4").string());
    run_experiment(one, "simulate");
    run_experiment(four, "simulate");
    CHECK(slurp(dir / "w1" / "summary.json") == slurp(dir / "w4" / "summary.json"));
    CHECK(slurp(dir / "w1" / "trace_w2.csv") == slurp(dir / "w4" / "trace_w2.csv"));
}

TEST_CASE("compare reports hybrid and colocated side by side") {
    const fs::path dir = make_workspace("compare");
    write_week_csv(dir / "data.csv", 49);
    json j = base_config(dir, "data.csv");
    j["windows"] = json::array({{{"start", 1}, {"length", 24}}});
    j["design"] = {{"p_pv_mw", 12.0}, {"e_bat_mwh", 20.0}, {"p_bat_mw", 5.0}};
    j["policy"] = {{"type", "constant"}, {"action", {1.0, 0.0, 0.0, 0.0, 1.0}}};
    const fs::path cfg_path = write_config(dir, j);
    const ExperimentConfig cfg = load_config(cfg_path);
    const fs::path out = run_experiment(cfg, "compare");

    const json summary = json::parse(slurp(out / "summary.json"));
    CHECK(summary.contains("hybrid"));
    CHECK(summary.contains("colocated"));
    CHECK(summary.at("delta").contains("market_reward"));
    CHECK(fs::exists(out / "hybrid" / "trace_w0.csv"));
    CHECK(fs::exists(out / "colocated" / "trace_w0.csv"));
    // oversized PV behind a 10 MW POI: the hybrid recovers clipped energy
    CHECK(summary.at("hybrid").at("curtailed_mwh").get<double>() <=
          summary.at("colocated").at("curtailed_mwh").get<double>() + 1e-9);
}

TEST_CASE("report derives breakdown and monthly tables") {
    const fs::path dir = make_workspace("report");
    // two calendar months of hourly data
    const int rows = 24 * 62;
    {
        std::ofstream out(dir / "data.csv");
        out << "ts,lambda_e,lambda_res,lambda_up,lambda_dn,p_avail\n";
        for (int i = 0; i < rows; ++i) {
            const int day = i / 24;
            const int hour = i % 24;
            const int month = day < 31 ? 7 : 8;
            const int mday = (day % 31) + 1;
            const double pv = hour >= 8 && hour <= 16 ? 5.0 : 0.0;
            char ts[64];
            std::snprintf(ts, sizeof(ts), "2022-%02d-%02dT%02d:00:00", month, mday, hour);
            out << ts << ",40,2,1,1," << pv << "\n";
        }
    }
    json j = base_config(dir, "data.csv");
    j["windows"] = json::array({{{"start", 1}, {"length", rows - 1}}});
    j["policy"] = {{"type", "constant"}, {"action", {0.9, 0.1, 0.1, 0.1, 1.0}}};
    const fs::path cfg_path = write_config(dir, j);
    const ExperimentConfig cfg = load_config(cfg_path);
    const fs::path out = run_experiment(cfg, "simulate");
    emit_report(out);

    const std::string breakdown = slurp(out / "revenue_breakdown.csv");
    CHECK(breakdown.rfind("energy,as,capacity,degradation,imbalance\n", 0) == 0);

    const std::string monthly = slurp(out / "monthly.csv");
    int monthly_lines = 0;
    for (char c : monthly) monthly_lines += c == '\n';
    CHECK(monthly_lines == 3); // header + 2 months

    CHECK(fs::exists(out / "report.txt"));
}

TEST_CASE("report on an empty directory names the missing artifact") {
    const fs::path dir = make_workspace("empty");
    fs::create_directories(dir / "results");
    CHECK_THROWS_WITH_AS(emit_report(dir / "results"), doctest::Contains("missing artifact"),
                         std::runtime_error);
}

TEST_CASE("partial marker is written when a run aborts") {
    const fs::path dir = make_workspace("partial");
    write_zero_csv(dir / "data.csv", 4);
    json j = base_config(dir, "data.csv");
    // window exceeds the data: passes static validation, fails at runtime
    j["windows"] = json::array({{{"start", 1}, {"length", 400}}});
    const fs::path cfg_path = write_config(dir, j);
    const ExperimentConfig cfg = load_config(cfg_path);
    CHECK_THROWS(run_experiment(cfg, "simulate"));
    CHECK(fs::exists(fs::path(cfg.out_dir) / "PARTIAL"));
}

TEST_CASE("config echo round-trips into an identical run") {
    const fs::path dir = make_workspace("echo");
    write_week_csv(dir / "data.csv", 30);
    json j = base_config(dir, "data.csv");
    j["windows"] = json::array({{{"start", 1}, {"length", 10}}});
    j["policy"] = {{"type", "constant"}, {"action", {0.6, 0.3, 0.1, 0.2, 0.5}}};
    const fs::path cfg_path = write_config(dir, j);
    ExperimentConfig cfg = load_config(cfg_path);
    cfg.out_dir = (dir / "first").string();
    const fs::path first = run_experiment(cfg, "simulate");

    // rerun from the echoed config, only redirecting the output
    ExperimentConfig echoed = load_config(first / "config_echo.json");
    echoed.out_dir = (dir / "second").string();
    run_experiment(echoed, "simulate");
    CHECK(slurp(dir / "first" / "trace_w0.csv") == slurp(dir / "second" / "trace_w0.csv"));
}

TEST_CASE("train runs end to end on a small budget") {
    const fs::path dir = make_workspace("train");
    write_week_csv(dir / "data.csv", 30);
    json j = base_config(dir, "data.csv");
    j["windows"] = json::array({{{"start", 1}, {"length", 8}}});
    j["train"] = {{"hidden_width", 4}, {"population", 8},   {"episodes", 120},
                  {"warmup_episodes", 16}, {"eval_every", 2}, {"eval_episodes", 1}};
    const fs::path cfg_path = write_config(dir, j);
    const ExperimentConfig cfg = load_config(cfg_path);
    const fs::path out = run_experiment(cfg, "train");
    CHECK(fs::exists(out / "policy.json"));
    CHECK(fs::exists(out / "training_history.csv"));
    const json summary = json::parse(slurp(out / "summary.json"));
    CHECK(summary.at("command").get<std::string>() == "train");
    CHECK(summary.contains("best_eval_reward"));
}

TEST_CASE("co-optimize writes history, design and policy artifacts") {
    const fs::path dir = make_workspace("coopt");
    write_week_csv(dir / "data.csv", 30);
    json j = base_config(dir, "data.csv");
    j["windows"] = json::array({{{"start", 1}, {"length", 8}}});
    j["train"] = {{"hidden_width", 4}, {"population", 8}, {"warmup_episodes", 8},
                  {"eval_every", 4},   {"eval_episodes", 1}};
    j["design_opt"] = {{"mu0", {11.0, 20.0, 5.0}},
                       {"sigma", {0.5, 1.0, 0.25}},
                       {"alpha_mu", 1e-7},
                       {"n_up", 8},
                       {"episodes", 64},
                       {"eta_decay_start", 8},
                       {"eta_decay_end", 32}};
    const fs::path cfg_path = write_config(dir, j);
    const ExperimentConfig cfg = load_config(cfg_path);
    const fs::path out = run_experiment(cfg, "co-optimize");
    CHECK(fs::exists(out / "design.json"));
    CHECK(fs::exists(out / "policy.json"));
    const std::string history = slurp(out / "co_opt_history.csv");
    int lines = 0;
    for (char c : history) lines += c == '\n';
    CHECK(lines == 65); // header + one row per episode
    emit_report(out);
    CHECK(fs::exists(out / "mu_evolution.csv"));
}

TEST_CASE("a one-year trace aggregates into twelve monthly rows") {
    const fs::path dir = make_workspace("year");
    const int days_per_month[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    {
        std::ofstream out(dir / "data.csv");
        out << "ts,lambda_e,lambda_res,lambda_up,lambda_dn,p_avail\n";
        for (int month = 0; month < 12; ++month)
            for (int day = 0; day < days_per_month[month]; ++day)
                for (int hour = 0; hour < 24; ++hour) {
                    const double pv = hour >= 8 && hour <= 16 ? 6.0 : 0.0;
                    char ts[64];
                    std::snprintf(ts, sizeof(ts), "2022-%02d-%02dT%02d:00:00", month + 1,
                                  day + 1, hour);
                    out << ts << ",40,1,1,1," << pv << "\n";
                }
    }
    json j = base_config(dir, "data.csv");
    j["windows"] = json::array({{{"start", 1}, {"length", 24 * 365 - 1}}});
    j["policy"] = {{"type", "constant"}, {"action", {0.8, 0.0, 0.0, 0.0, 1.0}}};
    const ExperimentConfig cfg = load_config(write_config(dir, j));
    const fs::path out = run_experiment(cfg, "simulate");
    emit_report(out);
    const std::string monthly = slurp(out / "monthly.csv");
    int lines = 0;
    for (char c : monthly) lines += c == '\n';
    CHECK(lines == 13); // header + 12 months
}
