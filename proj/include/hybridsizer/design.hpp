#pragma once

#include <array>
#include <span>
#include <vector>

#include "hybridsizer/plant.hpp"
#include "hybridsizer/policy.hpp"
#include "hybridsizer/rng.hpp"

namespace hsz {

// Gaussian belief over designs: independent components with fixed
// per-component standard deviations in physical units. The mean is clamped
// to nonnegative values after every update.
struct DesignDistribution {
    std::array<double, 3> mu{};            // P_pv (MW), E_bat (MWh), P_bat (MW)
    std::array<double, 3> sigma{1.0, 2.0, 0.5};

    DesignVector mean_design() const { return {mu[0], mu[1], mu[2]}; }
    void validate() const;
};

struct EpisodeScore {
    DesignVector omega;
    double g = 0.0; // episode return
};

// Capex ramp: eta holds at 1 before decay_start, falls linearly to 0 at
// decay_end and stays 0 afterwards, phasing the capital cost into the
// objective during training.
struct EtaSchedule {
    std::uint64_t decay_start = 0;
    std::uint64_t decay_end = 1;

    void validate() const;
};

double eta_value(const EtaSchedule& schedule, std::uint64_t episode);

// Componentwise Gaussian draw with negative components clamped to zero.
DesignVector sample_design(const DesignDistribution& dist, Rng& rng);

// Gradient of the Gaussian log-density at omega: (omega - mu) / sigma^2.
std::array<double, 3> log_density_grad(const DesignDistribution& dist,
                                       const DesignVector& omega);

// REINFORCE step with a sample-mean baseline over the last batch of episode
// scores. Requires at least two scores; the updated mean is clamped at zero.
DesignDistribution update_mu(const DesignDistribution& dist,
                             std::span<const EpisodeScore> batch, double alpha_mu);

struct DesignOptConfig {
    DesignDistribution init;
    double alpha_mu = 1e-6;
    int n_up = 32;               // scores per mean update
    EtaSchedule eta;
    std::uint64_t episodes = 4000;
    std::uint64_t seed = 1;
    bool include_degradation_in_return = true;

    void validate() const;
};

struct CoOptHistoryRow {
    std::uint64_t episode = 0;
    DesignVector omega;
    double g = 0.0;
    double eta = 1.0;
    std::array<double, 3> mu_after{};
};

struct CoOptimizeResult {
    DesignVector design; // final distribution mean
    Policy policy;
    std::vector<CoOptHistoryRow> history;
    std::vector<GenerationStats> policy_history;
};

// Joint loop: sample a design per episode, roll out with the evolving
// policy, convert episode market reward into the annualized return
// G = w_anu * sum(r) + capacity(omega) - capex(omega) * (1 - eta), and
// update the design mean every n_up episodes. Policy generations and design
// updates share the same rollouts.
CoOptimizeResult co_optimize(const EnvFactory& factory,
                             const std::function<double(const DesignVector&)>& capacity_fn,
                             const std::function<double(const DesignVector&)>& capex_fn,
                             const TrainConfig& policy_config,
                             const DesignOptConfig& design_config);

} // namespace hsz
