#include "hybridsizer/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hybridsizer/parallel.hpp"

namespace hsz {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

namespace {

constexpr const char* kPartialMarker = "PARTIAL";

[[noreturn]] void config_fail(const std::string& what) { throw ConfigError(what); }

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const std::exception& e) {
        config_fail("bad value for '" + key + "': " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing artifact: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json design_to_json(const DesignVector& d) {
    json j;
    j["p_pv_mw"] = d.p_pv_mw;
    j["e_bat_mwh"] = d.e_bat_mwh;
    j["p_bat_mw"] = d.p_bat_mw;
    return j;
}

DesignVector design_from_json(const json& j) {
    DesignVector d;
    d.p_pv_mw = get_or(j, "p_pv_mw", 0.0);
    d.e_bat_mwh = get_or(j, "e_bat_mwh", 0.0);
    d.p_bat_mw = get_or(j, "p_bat_mw", 0.0);
    return d;
}

// Aggregated settlement categories of one or more episodes.
struct Totals {
    double energy_gross = 0.0;
    double as_revenue = 0.0;
    double degradation = 0.0;
    double imbalance_penalty = 0.0;
    double market_reward = 0.0;
    double curtailed_mwh = 0.0;
    double abs_delta_e_mwh = 0.0;
    std::size_t steps = 0;

    void add(const EpisodeTrace& trace) {
        for (const StepRecord& s : trace.steps) {
            energy_gross += s.settle.energy_gross;
            as_revenue += s.settle.f_as;
            degradation += s.settle.c_deg;
            imbalance_penalty += s.settle.imbalance_penalty;
            market_reward += s.settle.reward;
            curtailed_mwh += s.record.x_cur_mwh;
            abs_delta_e_mwh += std::abs(s.record.delta_e_mwh);
            ++steps;
        }
    }

    json to_json() const {
        json j;
        j["energy_gross"] = energy_gross;
        j["as_revenue"] = as_revenue;
        j["degradation_cost"] = degradation;
        j["imbalance_penalty"] = imbalance_penalty;
        j["market_reward"] = market_reward;
        j["curtailed_mwh"] = curtailed_mwh;
        j["mean_abs_delta_e_mwh"] = steps > 0 ? abs_delta_e_mwh / steps : 0.0;
        j["steps"] = steps;
        return j;
    }
};

} // namespace

void ExperimentConfig::validate() const {
    if (csv_path.empty()) config_fail("data.csv is required");
    if (!fs::exists(csv_path)) config_fail("data file does not exist: " + csv_path);
    try {
        plant.validate();
        costs.validate();
        train.validate();
        design_opt.validate();
    } catch (const std::exception& e) {
        config_fail(e.what());
    }
    if (windows.empty()) config_fail("at least one episode window is required");
    for (const WindowSpec& w : windows) {
        if (w.start < 1) config_fail("window start must be >= 1 (the observation lags by one row)");
        if (w.length < 1) config_fail("window length must be >= 1");
    }
    if (pi_imb < 0.0) config_fail("pi_imb must be nonnegative");
    if (initial_soc < plant.s_min || initial_soc > plant.s_max)
        config_fail("initial_soc outside SOC band");
    if (design.p_pv_mw < 0.0 || design.e_bat_mwh < 0.0 || design.p_bat_mw < 0.0)
        config_fail("design components must be nonnegative");
    if (forecaster_type != "persistence" && forecaster_type != "exponential_smoothing")
        config_fail("unknown forecaster: " + forecaster_type);
    if (workers < 1) config_fail("workers must be >= 1");
    if (policy.kind == PolicySpec::Kind::checkpoint && policy.checkpoint_path.empty())
        config_fail("policy checkpoint path is empty");
    if (dt_hours <= 0.0) config_fail("dt_hours must be positive");
    if (pv_reference_nameplate_mw <= 0.0) config_fail("pv reference nameplate must be positive");
    if (scale_lambda_res < 0.0 || scale_lambda_up < 0.0 || scale_lambda_dn < 0.0)
        config_fail("AS price scales must be nonnegative");
}

ExperimentConfig load_config(const fs::path& path, std::optional<std::uint64_t> seed_override,
                             std::optional<int> workers_override,
                             std::optional<std::string> out_override) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const std::exception& e) {
        config_fail(std::string("cannot parse config: ") + e.what());
    }

    ExperimentConfig c;
    const fs::path base = path.parent_path();

    if (!j.contains("data")) config_fail("config needs a 'data' section");
    const json& data = j.at("data");
    std::string csv = get_or<std::string>(data, "csv", "");
    if (!csv.empty() && fs::path(csv).is_relative()) csv = (base / csv).string();
    c.csv_path = csv;
    if (data.contains("columns")) {
        const json& cols = data.at("columns");
        c.schema.ts = get_or<std::string>(cols, "ts", c.schema.ts);
        c.schema.lambda_e = get_or<std::string>(cols, "lambda_e", c.schema.lambda_e);
        c.schema.lambda_res = get_or<std::string>(cols, "lambda_res", c.schema.lambda_res);
        c.schema.lambda_up = get_or<std::string>(cols, "lambda_up", c.schema.lambda_up);
        c.schema.lambda_dn = get_or<std::string>(cols, "lambda_dn", c.schema.lambda_dn);
        c.schema.p_avail = get_or<std::string>(cols, "p_avail", c.schema.p_avail);
    }
    c.dt_hours = get_or(data, "dt_hours", c.dt_hours);
    c.pv_reference_nameplate_mw =
        get_or(data, "pv_reference_nameplate_mw", c.pv_reference_nameplate_mw);
    c.scale_lambda_res = get_or(data, "scale_lambda_res", c.scale_lambda_res);
    c.scale_lambda_up = get_or(data, "scale_lambda_up", c.scale_lambda_up);
    c.scale_lambda_dn = get_or(data, "scale_lambda_dn", c.scale_lambda_dn);

    const std::string mode = get_or<std::string>(j, "mode", "hybrid");
    if (mode == "hybrid")
        c.mode = PlantMode::hybrid;
    else if (mode == "colocated")
        c.mode = PlantMode::colocated;
    else
        config_fail("mode must be 'hybrid' or 'colocated'");

    if (j.contains("plant")) {
        const json& p = j.at("plant");
        c.plant.p_poi_min_mw = get_or(p, "p_poi_min_mw", c.plant.p_poi_min_mw);
        c.plant.p_poi_max_mw = get_or(p, "p_poi_max_mw", c.plant.p_poi_max_mw);
        c.plant.eta_c = get_or(p, "eta_c", c.plant.eta_c);
        c.plant.eta_d = get_or(p, "eta_d", c.plant.eta_d);
        c.plant.s_min = get_or(p, "s_min", c.plant.s_min);
        c.plant.s_max = get_or(p, "s_max", c.plant.s_max);
        c.plant.beta_deg = get_or(p, "beta_deg", c.plant.beta_deg);
        c.plant.h_res_hours = get_or(p, "h_res_hours", c.plant.h_res_hours);
        c.plant.h_up_hours = get_or(p, "h_up_hours", c.plant.h_up_hours);
        c.plant.h_dn_hours = get_or(p, "h_dn_hours", c.plant.h_dn_hours);
        c.plant.kappa = get_or(p, "kappa", c.plant.kappa);
        c.plant.h_cr_hours = get_or(p, "h_cr_hours", c.plant.h_cr_hours);
        c.plant.phi_pv = get_or(p, "phi_pv", c.plant.phi_pv);
    }
    c.plant.dt_hours = c.dt_hours;

    if (j.contains("costs")) {
        const json& k = j.at("costs");
        c.costs.c_pv_per_kw = get_or(k, "c_pv_per_kw", c.costs.c_pv_per_kw);
        c.costs.life_pv_years = get_or(k, "life_pv_years", c.costs.life_pv_years);
        c.costs.c_bat_e_per_kwh = get_or(k, "c_bat_e_per_kwh", c.costs.c_bat_e_per_kwh);
        c.costs.c_bat_p_per_kw = get_or(k, "c_bat_p_per_kw", c.costs.c_bat_p_per_kw);
        c.costs.life_bat_years = get_or(k, "life_bat_years", c.costs.life_bat_years);
        c.costs.lambda_cap_kw_month = get_or(k, "lambda_cap_kw_month", c.costs.lambda_cap_kw_month);
        c.costs.discount_rate = get_or(k, "discount_rate", c.costs.discount_rate);
    }

    c.pi_imb = get_or(j, "pi_imb", c.pi_imb);
    c.initial_soc = get_or(j, "initial_soc", c.initial_soc);
    c.p_inv_mw = get_or(j, "p_inv_mw", c.p_inv_mw);

    if (j.contains("activation")) {
        const json& act = j.at("activation");
        const std::string m = get_or<std::string>(act, "model", "none");
        if (m == "none")
            c.activation.model = ActivationConfig::Model::none;
        else if (m == "stochastic")
            c.activation.model = ActivationConfig::Model::stochastic;
        else
            config_fail("activation.model must be 'none' or 'stochastic'");
        c.activation.p_res_event = get_or(act, "p_res_event", c.activation.p_res_event);
    }

    if (j.contains("forecaster")) {
        const json& f = j.at("forecaster");
        c.forecaster_type = get_or<std::string>(f, "type", c.forecaster_type);
        c.forecaster_alpha = get_or(f, "alpha", c.forecaster_alpha);
    }

    if (j.contains("windows")) {
        for (const json& w : j.at("windows")) {
            WindowSpec spec;
            spec.start = get_or<std::size_t>(w, "start", 1);
            spec.length = get_or<std::size_t>(w, "length", 24);
            c.windows.push_back(spec);
        }
    }

    if (j.contains("design")) c.design = design_from_json(j.at("design"));

    if (j.contains("policy")) {
        const json& p = j.at("policy");
        const std::string kind = get_or<std::string>(p, "type", "zero");
        if (kind == "zero")
            c.policy.kind = PolicySpec::Kind::zero;
        else if (kind == "constant")
            c.policy.kind = PolicySpec::Kind::constant;
        else if (kind == "checkpoint")
            c.policy.kind = PolicySpec::Kind::checkpoint;
        else
            config_fail("policy.type must be zero|constant|checkpoint");
        if (p.contains("action")) {
            const auto v = p.at("action").get<std::vector<double>>();
            if (v.size() != 5) config_fail("policy.action needs 5 components");
            std::copy(v.begin(), v.end(), c.policy.constant_action.begin());
        }
        std::string ckpt = get_or<std::string>(p, "checkpoint", "");
        if (!ckpt.empty() && fs::path(ckpt).is_relative()) ckpt = (base / ckpt).string();
        c.policy.checkpoint_path = ckpt;
    }

    if (j.contains("train")) {
        const json& t = j.at("train");
        c.train.hidden_width = get_or(t, "hidden_width", c.train.hidden_width);
        c.train.population = get_or(t, "population", c.train.population);
        c.train.noise_std = get_or(t, "noise_std", c.train.noise_std);
        c.train.learning_rate = get_or(t, "learning_rate", c.train.learning_rate);
        c.train.episodes_budget = get_or(t, "episodes", c.train.episodes_budget);
        c.train.warmup_episodes = get_or(t, "warmup_episodes", c.train.warmup_episodes);
        c.train.eval_every_generations = get_or(t, "eval_every", c.train.eval_every_generations);
        c.train.eval_episodes = get_or(t, "eval_episodes", c.train.eval_episodes);
    }

    if (j.contains("design_opt")) {
        const json& d = j.at("design_opt");
        if (d.contains("mu0")) {
            const auto v = d.at("mu0").get<std::vector<double>>();
            if (v.size() != 3) config_fail("design_opt.mu0 needs 3 components");
            std::copy(v.begin(), v.end(), c.design_opt.init.mu.begin());
        }
        if (d.contains("sigma")) {
            const auto v = d.at("sigma").get<std::vector<double>>();
            if (v.size() != 3) config_fail("design_opt.sigma needs 3 components");
            std::copy(v.begin(), v.end(), c.design_opt.init.sigma.begin());
        }
        c.design_opt.alpha_mu = get_or(d, "alpha_mu", c.design_opt.alpha_mu);
        c.design_opt.n_up = get_or(d, "n_up", c.design_opt.n_up);
        c.design_opt.episodes = get_or(d, "episodes", c.design_opt.episodes);
        c.design_opt.eta.decay_start = get_or(d, "eta_decay_start", c.design_opt.eta.decay_start);
        c.design_opt.eta.decay_end =
            get_or(d, "eta_decay_end", std::max<std::uint64_t>(1, c.design_opt.episodes / 2));
        c.design_opt.include_degradation_in_return =
            get_or(d, "include_degradation_in_return",
                   c.design_opt.include_degradation_in_return);
    } else {
        c.design_opt.eta.decay_end = std::max<std::uint64_t>(1, c.design_opt.episodes / 2);
    }

    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.workers = get_or(j, "workers", c.workers);
    std::string out = get_or<std::string>(j, "out_dir", c.out_dir);
    if (fs::path(out).is_relative()) out = (base / out).string();
    c.out_dir = out;

    if (seed_override) c.seed = *seed_override;
    if (workers_override) c.workers = *workers_override;
    if (out_override) c.out_dir = *out_override;
    if (const char* env_out = std::getenv("HYBRIDSIZER_OUT")) c.out_dir = env_out;

    c.train.seed = c.seed;
    c.train.workers = c.workers;
    c.design_opt.seed = c.seed;
    c.validate();
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["data"]["csv"] = c.csv_path;
    j["data"]["columns"] = {{"ts", c.schema.ts},
                            {"lambda_e", c.schema.lambda_e},
                            {"lambda_res", c.schema.lambda_res},
                            {"lambda_up", c.schema.lambda_up},
                            {"lambda_dn", c.schema.lambda_dn},
                            {"p_avail", c.schema.p_avail}};
    j["data"]["dt_hours"] = c.dt_hours;
    j["data"]["pv_reference_nameplate_mw"] = c.pv_reference_nameplate_mw;
    j["data"]["scale_lambda_res"] = c.scale_lambda_res;
    j["data"]["scale_lambda_up"] = c.scale_lambda_up;
    j["data"]["scale_lambda_dn"] = c.scale_lambda_dn;
    j["mode"] = c.mode == PlantMode::hybrid ? "hybrid" : "colocated";
    j["plant"] = {{"p_poi_min_mw", c.plant.p_poi_min_mw},
                  {"p_poi_max_mw", c.plant.p_poi_max_mw},
                  {"eta_c", c.plant.eta_c},
                  {"eta_d", c.plant.eta_d},
                  {"s_min", c.plant.s_min},
                  {"s_max", c.plant.s_max},
                  {"beta_deg", c.plant.beta_deg},
                  {"h_res_hours", c.plant.h_res_hours},
                  {"h_up_hours", c.plant.h_up_hours},
                  {"h_dn_hours", c.plant.h_dn_hours},
                  {"kappa", c.plant.kappa},
                  {"h_cr_hours", c.plant.h_cr_hours},
                  {"phi_pv", c.plant.phi_pv}};
    j["costs"] = {{"c_pv_per_kw", c.costs.c_pv_per_kw},
                  {"life_pv_years", c.costs.life_pv_years},
                  {"c_bat_e_per_kwh", c.costs.c_bat_e_per_kwh},
                  {"c_bat_p_per_kw", c.costs.c_bat_p_per_kw},
                  {"life_bat_years", c.costs.life_bat_years},
                  {"lambda_cap_kw_month", c.costs.lambda_cap_kw_month},
                  {"discount_rate", c.costs.discount_rate}};
    j["pi_imb"] = c.pi_imb;
    j["initial_soc"] = c.initial_soc;
    j["p_inv_mw"] = c.p_inv_mw;
    j["activation"] = {
        {"model", c.activation.model == ActivationConfig::Model::none ? "none" : "stochastic"},
        {"p_res_event", c.activation.p_res_event}};
    j["forecaster"] = {{"type", c.forecaster_type}, {"alpha", c.forecaster_alpha}};
    j["windows"] = json::array();
    for (const WindowSpec& w : c.windows)
        j["windows"].push_back({{"start", w.start}, {"length", w.length}});
    j["design"] = design_to_json(c.design);
    const char* kind = c.policy.kind == PolicySpec::Kind::zero        ? "zero"
                       : c.policy.kind == PolicySpec::Kind::constant  ? "constant"
                                                                      : "checkpoint";
    j["policy"] = {{"type", kind},
                   {"action", c.policy.constant_action},
                   {"checkpoint", c.policy.checkpoint_path}};
    j["train"] = {{"hidden_width", c.train.hidden_width},
                  {"population", c.train.population},
                  {"noise_std", c.train.noise_std},
                  {"learning_rate", c.train.learning_rate},
                  {"episodes", c.train.episodes_budget},
                  {"warmup_episodes", c.train.warmup_episodes},
                  {"eval_every", c.train.eval_every_generations},
                  {"eval_episodes", c.train.eval_episodes}};
    j["design_opt"] = {{"mu0", c.design_opt.init.mu},
                       {"sigma", c.design_opt.init.sigma},
                       {"alpha_mu", c.design_opt.alpha_mu},
                       {"n_up", c.design_opt.n_up},
                       {"episodes", c.design_opt.episodes},
                       {"eta_decay_start", c.design_opt.eta.decay_start},
                       {"eta_decay_end", c.design_opt.eta.decay_end},
                       {"include_degradation_in_return",
                        c.design_opt.include_degradation_in_return}};
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["out_dir"] = c.out_dir;
    return j.dump(2);
}

namespace {

struct PreparedData {
    std::shared_ptr<const SeriesPair> series;
    std::vector<EpisodeWindow> windows;
};

PreparedData prepare_data(const ExperimentConfig& c) {
    const SeriesPair raw = load_series(c.csv_path, c.schema);
    SeriesPair scaled =
        resample_and_scale(raw.market, raw.pv, c.dt_hours, c.pv_reference_nameplate_mw);
    for (double& v : scaled.market.lambda_res) v *= c.scale_lambda_res;
    for (double& v : scaled.market.lambda_up) v *= c.scale_lambda_up;
    for (double& v : scaled.market.lambda_dn) v *= c.scale_lambda_dn;
    PreparedData out;
    out.series = std::make_shared<SeriesPair>(std::move(scaled));
    for (const WindowSpec& w : c.windows)
        out.windows.push_back(
            episode_window(out.series->market.size(), w.length, c.dt_hours, w.start));
    return out;
}

Forecaster make_forecaster(const ExperimentConfig& c) {
    if (c.forecaster_type == "exponential_smoothing")
        return exponential_smoothing_forecaster(c.forecaster_alpha);
    return persistence_forecast;
}

EnvConfig make_env_config(const ExperimentConfig& c, PlantMode mode, bool record_trace) {
    EnvConfig ec;
    ec.mode = mode;
    ec.initial_soc = c.initial_soc;
    ec.pi_imb = c.pi_imb;
    ec.p_inv_mw = c.p_inv_mw;
    ec.activation = c.activation;
    ec.record_trace = record_trace;
    return ec;
}

EnvFactory make_factory(const ExperimentConfig& c, const PreparedData& data, PlantMode mode,
                        bool record_trace) {
    const Forecaster fc = make_forecaster(c);
    const EnvConfig ec = make_env_config(c, mode, record_trace);
    const PlantParams plant = c.plant;
    const auto windows = data.windows;
    const auto series = data.series;
    return [=](const DesignVector& design, std::uint64_t episode,
               std::uint64_t seed) -> std::unique_ptr<Env> {
        const EpisodeWindow& w = windows[episode % windows.size()];
        return std::make_unique<MarketEnv>(series, w, design, plant, ec, fc, seed);
    };
}

std::function<AgentAction(const Observation&)> make_policy_fn(const ExperimentConfig& c) {
    switch (c.policy.kind) {
        case PolicySpec::Kind::zero:
            return [](const Observation&) { return AgentAction{}; };
        case PolicySpec::Kind::constant: {
            const auto a = c.policy.constant_action;
            return [a](const Observation&) {
                return AgentAction::clamped(a[0], a[1], a[2], a[3], a[4]);
            };
        }
        case PolicySpec::Kind::checkpoint: {
            const Policy p = Policy::from_json(read_text(c.policy.checkpoint_path));
            return [p](const Observation& o) { return p.act(o); };
        }
    }
    throw std::logic_error("unknown policy kind");
}

void write_trace_csv(const fs::path& path, const EpisodeTrace& trace,
                     std::int64_t window_start_ts, double dt_hours) {
    std::ostringstream out;
    out << "t,ts,soc,a_e,a_res,a_up,a_dn,a_imb,"
           "b_e,b_res,b_up,b_dn,b_up_pv,b_up_bat,b_dn_bat,cap_dis,cap_chg,m_pv,"
           "p_avail,x_e,delta_e,x_chg_e,x_dis_e,x_chg_as,x_dis_as,x_cur,p_poi,"
           "h_res,h_up,h_dn,f_e,f_as,c_deg,reward,energy_gross,imbalance_penalty,soc_after\n";
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        const StepRecord& s = trace.steps[t];
        const std::int64_t ts =
            window_start_ts + static_cast<std::int64_t>(t * dt_hours * 3600.0);
        const double cols[] = {
            s.obs.soc,          s.action.e,         s.action.res,
            s.action.up,        s.action.dn,        s.action.imb,
            s.bids.b_e,         s.bids.b_res,       s.bids.b_up,
            s.bids.b_dn,        s.bids.b_up_pv,     s.bids.b_up_bat,
            s.bids.b_dn_bat,    s.bids.cap_dis,     s.bids.cap_chg,
            s.bids.m_pv,        s.p_avail_mw,       s.record.x_e_mwh,
            s.record.delta_e_mwh, s.record.x_chg_e_mwh, s.record.x_dis_e_mwh,
            s.record.x_chg_as_mwh, s.record.x_dis_as_mwh, s.record.x_cur_mwh,
            s.record.p_poi_mw,  s.activation.h_res, s.activation.h_up,
            s.activation.h_dn,  s.settle.f_e,       s.settle.f_as,
            s.settle.c_deg,     s.settle.reward,    s.settle.energy_gross,
            s.settle.imbalance_penalty, s.soc_after};
        out << t << ',' << ts;
        for (double v : cols) out << ',' << format_double(v);
        out << '\n';
    }
    write_text(path, out.str());
}

struct SimulationOutput {
    Totals totals;
    std::vector<double> window_rewards;
    std::size_t audit_violations = 0;
};

// Runs one traced episode per window with a fixed policy and writes traces.
SimulationOutput simulate_mode(const ExperimentConfig& c, const PreparedData& data,
                               PlantMode mode, const fs::path& dir,
                               const std::function<AgentAction(const Observation&)>& act) {
    SimulationOutput out;
    const EnvFactory factory = make_factory(c, data, mode, true);
    std::vector<std::unique_ptr<MarketEnv>> envs(data.windows.size());
    std::vector<double> rewards(data.windows.size(), 0.0);
    parallel_for(data.windows.size(), c.workers, [&](std::size_t i) {
        auto env = factory(c.design, i, derive_seed(c.seed, 0x53494dULL, i));
        auto* market_env = dynamic_cast<MarketEnv*>(env.get());
        if (!market_env) throw std::logic_error("simulate needs a market environment");
        rewards[i] = rollout(*market_env, act);
        env.release();
        envs[i] = std::unique_ptr<MarketEnv>(market_env);
    });
    for (std::size_t i = 0; i < envs.size(); ++i) {
        const EpisodeTrace& trace = envs[i]->trace();
        out.totals.add(trace);
        out.window_rewards.push_back(rewards[i]);
        const AuditReport audit = feasibility_audit(trace, c.design, c.plant);
        out.audit_violations += audit.violations.size();
        const std::int64_t start_ts =
            data.series->market.timestamp_at(data.windows[i].start);
        write_trace_csv(dir / ("trace_w" + std::to_string(i) + ".csv"), trace, start_ts,
                        c.dt_hours);
    }
    return out;
}

json summary_for(const ExperimentConfig& c, const std::string& command,
                 const SimulationOutput& sim, const DesignVector& design) {
    PriceQuote quote;
    quote.lambda_cap_kw_month = c.costs.lambda_cap_kw_month;
    json j;
    j["command"] = command;
    j["mode"] = c.mode == PlantMode::hybrid ? "hybrid" : "colocated";
    j["seed"] = c.seed;
    j["design"] = design_to_json(design);
    j["totals"] = sim.totals.to_json();
    j["capacity_revenue_per_year"] = capacity_revenue(quote, design, c.plant);
    j["annualized_capex"] = annualized_capex(design, c.costs);
    j["window_rewards"] = sim.window_rewards;
    j["audit_violations"] = sim.audit_violations;
    return j;
}

void run_simulate(const ExperimentConfig& c, const fs::path& dir) {
    const PreparedData data = prepare_data(c);
    const auto act = make_policy_fn(c);
    const SimulationOutput sim = simulate_mode(c, data, c.mode, dir, act);
    write_text(dir / "summary.json", summary_for(c, "simulate", sim, c.design).dump(2) + "\n");
}

void write_training_history(const fs::path& path, const std::vector<GenerationStats>& hist) {
    std::ostringstream out;
    out << "generation,episodes_used,mean_reward,best_eval\n";
    for (const GenerationStats& g : hist)
        out << g.generation << ',' << g.episodes_used << ',' << format_double(g.mean_reward)
            << ',' << format_double(g.best_eval) << '\n';
    write_text(path, out.str());
}

void run_train(const ExperimentConfig& c, const fs::path& dir) {
    const PreparedData data = prepare_data(c);
    const EnvFactory factory = make_factory(c, data, c.mode, false);
    const DesignVector fixed = c.design;
    std::optional<Policy> resume;
    TrainConfig tc = c.train;
    if (c.policy.kind == PolicySpec::Kind::checkpoint) {
        resume = Policy::from_json(read_text(c.policy.checkpoint_path));
        tc.hidden_width = resume->hidden_width();
    }
    const TrainResult trained =
        train_policy(factory, [fixed](std::uint64_t) { return fixed; }, tc, nullptr,
                     nullptr, resume ? &*resume : nullptr);

    write_text(dir / "policy.json", trained.policy.to_json() + "\n");
    write_training_history(dir / "training_history.csv", trained.history);

    // final traced evaluation with the best policy
    const Policy& policy = trained.policy;
    const SimulationOutput sim =
        simulate_mode(c, data, c.mode, dir,
                      [&policy](const Observation& o) { return policy.act(o); });
    json j = summary_for(c, "train", sim, c.design);
    j["best_eval_reward"] = trained.best_eval;
    j["generations"] = trained.history.size();
    write_text(dir / "summary.json", j.dump(2) + "\n");
}

void write_coopt_history(const fs::path& path, const std::vector<CoOptHistoryRow>& hist) {
    std::ostringstream out;
    out << "episode,omega_p_pv,omega_e_bat,omega_p_bat,g,eta,mu_p_pv,mu_e_bat,mu_p_bat\n";
    for (const CoOptHistoryRow& r : hist) {
        out << r.episode << ',' << format_double(r.omega.p_pv_mw) << ','
            << format_double(r.omega.e_bat_mwh) << ',' << format_double(r.omega.p_bat_mw)
            << ',' << format_double(r.g) << ',' << format_double(r.eta) << ','
            << format_double(r.mu_after[0]) << ',' << format_double(r.mu_after[1]) << ','
            << format_double(r.mu_after[2]) << '\n';
    }
    write_text(path, out.str());
}

void run_co_optimize(const ExperimentConfig& c, const fs::path& dir) {
    const PreparedData data = prepare_data(c);
    const EnvFactory factory = make_factory(c, data, c.mode, false);
    PriceQuote quote;
    quote.lambda_cap_kw_month = c.costs.lambda_cap_kw_month;
    const PlantParams plant = c.plant;
    const CostParams costs = c.costs;

    const CoOptimizeResult result = co_optimize(
        factory,
        [quote, plant](const DesignVector& d) { return capacity_revenue(quote, d, plant); },
        [costs](const DesignVector& d) { return annualized_capex(d, costs); }, c.train,
        c.design_opt);

    write_text(dir / "design.json", design_to_json(result.design).dump(2) + "\n");
    write_text(dir / "policy.json", result.policy.to_json() + "\n");
    write_coopt_history(dir / "co_opt_history.csv", result.history);
    write_training_history(dir / "training_history.csv", result.policy_history);

    // traced episodes at the final design with the trained policy
    ExperimentConfig final_cfg = c;
    final_cfg.design = result.design;
    const Policy& policy = result.policy;
    const SimulationOutput sim =
        simulate_mode(final_cfg, data, c.mode, dir,
                      [&policy](const Observation& o) { return policy.act(o); });
    json j = summary_for(final_cfg, "co-optimize", sim, result.design);
    j["episodes"] = result.history.size();
    write_text(dir / "summary.json", j.dump(2) + "\n");
}

void run_compare(const ExperimentConfig& c, const fs::path& dir) {
    const PreparedData data = prepare_data(c);
    const auto act = make_policy_fn(c);

    fs::create_directories(dir / "hybrid");
    fs::create_directories(dir / "colocated");
    ExperimentConfig hc = c;
    hc.mode = PlantMode::hybrid;
    ExperimentConfig cc = c;
    cc.mode = PlantMode::colocated;
    const SimulationOutput hybrid = simulate_mode(hc, data, PlantMode::hybrid, dir / "hybrid", act);
    const SimulationOutput coloc =
        simulate_mode(cc, data, PlantMode::colocated, dir / "colocated", act);

    write_text(dir / "hybrid" / "summary.json",
               summary_for(hc, "simulate", hybrid, c.design).dump(2) + "\n");
    write_text(dir / "colocated" / "summary.json",
               summary_for(cc, "simulate", coloc, c.design).dump(2) + "\n");

    json j;
    j["command"] = "compare";
    j["seed"] = c.seed;
    j["design"] = design_to_json(c.design);
    j["hybrid"] = hybrid.totals.to_json();
    j["colocated"] = coloc.totals.to_json();
    j["delta"]["market_reward"] =
        hybrid.totals.market_reward - coloc.totals.market_reward;
    j["delta"]["curtailed_mwh"] = hybrid.totals.curtailed_mwh - coloc.totals.curtailed_mwh;
    j["delta"]["imbalance_penalty"] =
        hybrid.totals.imbalance_penalty - coloc.totals.imbalance_penalty;
    j["audit_violations"] = hybrid.audit_violations + coloc.audit_violations;
    write_text(dir / "summary.json", j.dump(2) + "\n");
}

} // namespace

fs::path run_experiment(const ExperimentConfig& config, const std::string& command) {
    const fs::path dir = config.out_dir;
    fs::create_directories(dir);
    write_text(dir / "config_echo.json", config_to_json(config) + "\n");
    try {
        if (command == "simulate")
            run_simulate(config, dir);
        else if (command == "train")
            run_train(config, dir);
        else if (command == "co-optimize")
            run_co_optimize(config, dir);
        else if (command == "compare")
            run_compare(config, dir);
        else
            config_fail("unknown command: " + command);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        write_text(dir / kPartialMarker, std::string("aborted: ") + e.what() + "\n");
        throw;
    }
    return dir;
}

// ---------------------------------------------------------------------------
// reporting
// ---------------------------------------------------------------------------

namespace {

struct MonthKey {
    int year = 0;
    int month = 0;
    bool operator<(const MonthKey& o) const {
        return year != o.year ? year < o.year : month < o.month;
    }
};

MonthKey month_of(std::int64_t ts) {
    const time_t t = static_cast<time_t>(ts);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return {tm.tm_year + 1900, tm.tm_mon + 1};
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

void emit_report(const fs::path& results_dir) {
    if (!fs::exists(results_dir))
        throw std::runtime_error("missing artifact: results directory " + results_dir.string());
    const fs::path summary_path = results_dir / "summary.json";
    const json summary = json::parse(read_text(summary_path));

    // revenue breakdown by category
    {
        const json* totals = nullptr;
        if (summary.contains("totals"))
            totals = &summary.at("totals");
        else if (summary.contains("hybrid"))
            totals = &summary.at("hybrid");
        if (!totals) throw std::runtime_error("summary.json has no totals section");
        const double capacity = summary.contains("capacity_revenue_per_year")
                                    ? summary.at("capacity_revenue_per_year").get<double>()
                                    : 0.0;
        std::ostringstream out;
        out << "energy,as,capacity,degradation,imbalance\n";
        out << format_double(totals->at("energy_gross").get<double>()) << ','
            << format_double(totals->at("as_revenue").get<double>()) << ','
            << format_double(capacity) << ','
            << format_double(totals->at("degradation_cost").get<double>()) << ','
            << format_double(totals->at("imbalance_penalty").get<double>()) << '\n';
        write_text(results_dir / "revenue_breakdown.csv", out.str());
    }

    // monthly aggregation across all trace files
    {
        std::map<MonthKey, std::array<double, 5>> months; // energy, as, deg, imb, reward
        for (const auto& entry : fs::directory_iterator(results_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("trace_w", 0) != 0 || entry.path().extension() != ".csv") continue;
            std::ifstream in(entry.path());
            std::string line;
            std::getline(in, line);
            const auto header = split_line(line);
            auto col = [&](const std::string& key) {
                const auto it = std::find(header.begin(), header.end(), key);
                if (it == header.end())
                    throw std::runtime_error("trace file lacks column " + key);
                return static_cast<std::size_t>(it - header.begin());
            };
            const std::size_t c_ts = col("ts");
            const std::size_t c_gross = col("energy_gross");
            const std::size_t c_as = col("f_as");
            const std::size_t c_deg = col("c_deg");
            const std::size_t c_imb = col("imbalance_penalty");
            const std::size_t c_reward = col("reward");
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto cells = split_line(line);
                const MonthKey key = month_of(std::stoll(cells[c_ts]));
                auto& acc = months[key];
                acc[0] += std::stod(cells[c_gross]);
                acc[1] += std::stod(cells[c_as]);
                acc[2] += std::stod(cells[c_deg]);
                acc[3] += std::stod(cells[c_imb]);
                acc[4] += std::stod(cells[c_reward]);
            }
        }
        if (!months.empty()) {
            std::ostringstream out;
            out << "year,month,energy,as,degradation,imbalance,reward\n";
            for (const auto& [key, acc] : months) {
                out << key.year << ',' << key.month;
                for (double v : acc) out << ',' << format_double(v);
                out << '\n';
            }
            write_text(results_dir / "monthly.csv", out.str());
        }
    }

    // design-mean evolution
    if (fs::exists(results_dir / "co_opt_history.csv")) {
        std::ifstream in(results_dir / "co_opt_history.csv");
        std::string line;
        std::getline(in, line);
        std::ostringstream out;
        out << "episode,mu_p_pv,mu_e_bat,mu_p_bat\n";
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cells = split_line(line);
            out << cells[0] << ',' << cells[6] << ',' << cells[7] << ',' << cells[8] << '\n';
        }
        write_text(results_dir / "mu_evolution.csv", out.str());
    }

    // plain-text digest
    {
        std::ostringstream out;
        out << "command: " << summary.value("command", "?") << "\n";
        if (summary.contains("mode")) out << "mode: " << summary.at("mode").get<std::string>() << "\n";
        if (summary.contains("design")) {
            const json& d = summary.at("design");
            out << "design: P_pv=" << format_double(d.value("p_pv_mw", 0.0))
                << " MW, E_bat=" << format_double(d.value("e_bat_mwh", 0.0))
                << " MWh, P_bat=" << format_double(d.value("p_bat_mw", 0.0)) << " MW\n";
        }
        if (summary.contains("totals")) {
            const json& t = summary.at("totals");
            out << "market reward: " << format_double(t.value("market_reward", 0.0)) << "\n"
                << "energy gross: " << format_double(t.value("energy_gross", 0.0)) << "\n"
                << "AS revenue: " << format_double(t.value("as_revenue", 0.0)) << "\n"
                << "imbalance penalty: " << format_double(t.value("imbalance_penalty", 0.0))
                << "\n"
                << "degradation cost: " << format_double(t.value("degradation_cost", 0.0))
                << "\n"
                << "curtailed MWh: " << format_double(t.value("curtailed_mwh", 0.0)) << "\n";
        }
        if (summary.contains("hybrid")) {
            out << "hybrid market reward: "
                << format_double(summary.at("hybrid").value("market_reward", 0.0)) << "\n"
                << "colocated market reward: "
                << format_double(summary.at("colocated").value("market_reward", 0.0)) << "\n";
        }
        write_text(results_dir / "report.txt", out.str());
    }
}

} // namespace hsz
