#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hybridsizer/env.hpp"
#include "hybridsizer/plant.hpp"
#include "hybridsizer/rng.hpp"

namespace hsz {

// Frozen feature normalization. Statistics are accumulated over a warm-up
// phase and fixed afterwards so price scales and SOC fractions land on
// comparable ranges.
struct Normalizer {
    std::array<double, Observation::kFeatureCount> mean{};
    std::array<double, Observation::kFeatureCount> stddev{
        1, 1, 1, 1, 1, 1, 1, 1, 1};

    std::array<double, Observation::kFeatureCount>
    normalize(const std::array<double, Observation::kFeatureCount>& x) const;
};

// Deterministic feed-forward policy: two tanh hidden layers and a sigmoid
// output squashing onto [0,1]^5. Parameters live in one flat vector so
// perturbation-based trainers can treat the policy as a point in R^n.
class Policy {
public:
    Policy() : Policy(32) {}
    explicit Policy(int hidden_width);

    AgentAction act(const Observation& obs) const;

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }
    int hidden_width() const { return hidden_; }

    Normalizer& normalizer() { return norm_; }
    const Normalizer& normalizer() const { return norm_; }

    std::string to_json() const;
    static Policy from_json(const std::string& text);

private:
    int hidden_;
    Normalizer norm_;
    std::vector<double> params_;
};

// Environment factory: one fresh episode environment for a given design,
// episode index (used e.g. for window round-robin) and episode seed.
// Instances returned must be independent.
using EnvFactory = std::function<std::unique_ptr<Env>(
    const DesignVector& design, std::uint64_t episode, std::uint64_t seed)>;

// Supplies the design for a given episode index (constant for plain policy
// training, a Gaussian sampler during co-optimization).
using DesignSource = std::function<DesignVector(std::uint64_t episode)>;

// Called once per rollout, in episode order, after each generation:
// (episode index, design, episode market reward, the same sum without the
// degradation charge, annualization factor).
using EpisodeSink =
    std::function<void(std::uint64_t episode, const DesignVector& design,
                       double market_reward, double market_excl_deg,
                       double annualization)>;

struct TrainConfig {
    int hidden_width = 32;
    int population = 16;        // even; antithetic pairs
    double noise_std = 0.1;
    double learning_rate = 0.1;
    std::uint64_t episodes_budget = 2000;
    int warmup_episodes = 100;  // normalization warm-up rollouts
    int eval_every_generations = 5;
    int eval_episodes = 4;
    std::uint64_t seed = 1;
    int workers = 1;

    void validate() const;
};

struct GenerationStats {
    std::uint64_t generation = 0;
    std::uint64_t episodes_used = 0;
    double mean_reward = 0.0;
    double best_eval = 0.0; // best-so-far held-out evaluation
};

struct TrainResult {
    Policy policy;               // best-evaluated parameters
    double best_eval = 0.0;
    std::vector<GenerationStats> history;
};

// Population-based evolution strategy over episode rollouts. Per-member
// seeds derive from (master seed, generation, member), so results do not
// depend on worker scheduling. The returned policy is the best one seen on
// the fixed held-out evaluation seeds. eval_design_fn, when given, supplies
// the design used for held-out evaluation (defaults to designs(0)).
// Passing resume_from continues from an existing checkpoint: its parameters
// and frozen normalization statistics are kept and the warm-up is skipped.
TrainResult train_policy(const EnvFactory& factory, const DesignSource& designs,
                         const TrainConfig& config, const EpisodeSink& sink = nullptr,
                         const std::function<DesignVector()>& eval_design_fn = nullptr,
                         const Policy* resume_from = nullptr);

struct EvalResult {
    double mean_reward = 0.0;
    std::vector<double> episode_rewards;
};

EvalResult evaluate_policy(const Policy& policy, const EnvFactory& factory,
                           const DesignVector& design, int n_episodes,
                           std::uint64_t seed);

} // namespace hsz
