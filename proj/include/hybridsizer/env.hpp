#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "hybridsizer/bidding.hpp"
#include "hybridsizer/dispatch.hpp"
#include "hybridsizer/plant.hpp"
#include "hybridsizer/series.hpp"
#include "hybridsizer/settlement.hpp"

namespace hsz {

// What the agent sees before bidding for interval t: market and PV values
// from t-1, the current SOC, and the episode's design.
struct Observation {
    double p_avail_prev = 0.0;
    double lambda_e_prev = 0.0;
    double lambda_res_prev = 0.0;
    double lambda_up_prev = 0.0;
    double lambda_dn_prev = 0.0;
    double soc = 0.5;
    DesignVector design;

    static constexpr std::size_t kFeatureCount = 9;
    std::array<double, kFeatureCount> features() const {
        return {p_avail_prev, lambda_e_prev, lambda_res_prev, lambda_up_prev,
                lambda_dn_prev, soc,          design.p_pv_mw,  design.e_bat_mwh,
                design.p_bat_mw};
    }
};

struct StepRecord {
    Observation obs;
    AgentAction action;
    BidSet bids;           // combined totals in co-located mode
    DispatchRecord record;
    StepSettlement settle;
    ActivationOutcome activation;
    double p_avail_mw = 0.0; // realized available PV for the interval
    double soc_after = 0.0;
};

enum class PlantMode { hybrid, colocated };

struct EpisodeTrace {
    PlantMode mode = PlantMode::hybrid;
    std::vector<StepRecord> steps;

    double episode_reward() const;
};

struct EnvStepResult {
    Observation obs;
    double reward = 0.0;
    // market revenue before the degradation charge; defaults to reward for
    // environments without a battery cost notion
    double reward_excl_deg = std::numeric_limits<double>::quiet_NaN();
    bool done = false;

    double market_excl_deg() const {
        return std::isnan(reward_excl_deg) ? reward : reward_excl_deg;
    }
};

// Minimal episodic contract shared by the market simulator, the trainers and
// the search oracle.
class Env {
public:
    virtual ~Env() = default;
    virtual Observation reset() = 0;
    virtual EnvStepResult step(const AgentAction& action) = 0;
    virtual std::size_t horizon() const = 0;
    // factor scaling the episode's market revenue to a yearly figure
    virtual double annualization() const { return 1.0; }
    // snapshot for enumeration; only meaningful for deterministic envs
    virtual std::unique_ptr<Env> clone() const = 0;
    // together with the step count this must determine the future of a
    // deterministic env exactly (the market env's SOC)
    virtual double state_digest() const { return 0.0; }
};

struct EnvConfig {
    PlantMode mode = PlantMode::hybrid;
    double initial_soc = 0.5;
    double pi_imb = 1.0;
    double p_inv_mw = -1.0; // co-located PV inverter rating; <0 means p_poi_max
    ActivationConfig activation;
    bool record_trace = true;
};

// Episodic market simulator. Observations lag the data by one interval; the
// realized PV at t is revealed to dispatch only, never to bidding. One
// instance per worker; the data series are shared read-only.
class MarketEnv : public Env {
public:
    MarketEnv(std::shared_ptr<const SeriesPair> data, EpisodeWindow window,
              DesignVector design, PlantParams params, EnvConfig config,
              Forecaster forecaster, std::uint64_t seed);

    Observation reset() override;
    EnvStepResult step(const AgentAction& action) override;
    std::size_t horizon() const override { return window_.length; }
    double annualization() const override { return window_.w_anu; }
    std::unique_ptr<Env> clone() const override;
    double state_digest() const override { return state_.soc; }

    const EpisodeTrace& trace() const { return trace_; }
    const DesignVector& design() const { return design_; }

private:
    Observation observe() const;
    double scaled_pv(std::size_t index) const;

    std::shared_ptr<const SeriesPair> data_;
    EpisodeWindow window_;
    DesignVector design_;
    PlantParams params_;
    EnvConfig config_;
    Forecaster forecaster_;
    std::uint64_t seed_;

    Rng rng_;
    PlantState state_;
    std::size_t t_ = 0;          // absolute series index of the next interval
    std::size_t steps_done_ = 0;
    bool in_episode_ = false;
    std::vector<double> pv_history_; // scaled p_avail up to t-1, oldest first
    EpisodeTrace trace_;
};

// Builds one episode by driving the env with a fixed policy functor.
template <typename PolicyFn>
double rollout(Env& env, PolicyFn&& policy) {
    Observation obs = env.reset();
    double total = 0.0;
    for (;;) {
        const EnvStepResult r = env.step(policy(obs));
        total += r.reward;
        if (r.done) break;
        obs = r.obs;
    }
    return total;
}

} // namespace hsz
