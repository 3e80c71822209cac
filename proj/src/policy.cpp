#include "hybridsizer/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "hybridsizer/parallel.hpp"

namespace hsz {

namespace {

constexpr std::uint64_t kTagEpisode = 0x45505349ULL; // episode rollouts
constexpr std::uint64_t kTagNoise = 0x4e4f4953ULL;   // perturbation draws
constexpr std::uint64_t kTagEval = 0x4556414cULL;    // held-out evaluation

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

std::array<double, Observation::kFeatureCount>
Normalizer::normalize(const std::array<double, Observation::kFeatureCount>& x) const {
    std::array<double, Observation::kFeatureCount> out;
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = (x[i] - mean[i]) / (stddev[i] > 1e-12 ? stddev[i] : 1.0);
    return out;
}

Policy::Policy(int hidden_width) : hidden_(hidden_width) {
    if (hidden_ < 1) throw std::invalid_argument("hidden width must be >= 1");
    const std::size_t in = Observation::kFeatureCount;
    const std::size_t h = static_cast<std::size_t>(hidden_);
    params_.assign((in + 1) * h + (h + 1) * h + (h + 1) * 5, 0.0);
}

AgentAction Policy::act(const Observation& obs) const {
    const auto raw = obs.features();
    for (double v : raw)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite observation");
    const auto x = norm_.normalize(raw);

    const std::size_t in = Observation::kFeatureCount;
    const std::size_t h = static_cast<std::size_t>(hidden_);
    const double* p = params_.data();

    std::vector<double> h1(h), h2(h);
    for (std::size_t j = 0; j < h; ++j) {
        double acc = p[j * (in + 1) + in]; // bias
        for (std::size_t i = 0; i < in; ++i) acc += p[j * (in + 1) + i] * x[i];
        h1[j] = std::tanh(acc);
    }
    const double* p2 = p + (in + 1) * h;
    for (std::size_t j = 0; j < h; ++j) {
        double acc = p2[j * (h + 1) + h];
        for (std::size_t i = 0; i < h; ++i) acc += p2[j * (h + 1) + i] * h1[i];
        h2[j] = std::tanh(acc);
    }
    const double* p3 = p2 + (h + 1) * h;
    double out[5];
    for (std::size_t j = 0; j < 5; ++j) {
        double acc = p3[j * (h + 1) + h];
        for (std::size_t i = 0; i < h; ++i) acc += p3[j * (h + 1) + i] * h2[i];
        out[j] = sigmoid(acc);
    }
    return AgentAction::clamped(out[0], out[1], out[2], out[3], out[4]);
}

std::string Policy::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["hidden_width"] = hidden_;
    j["params"] = params_;
    j["normalizer"]["mean"] = norm_.mean;
    j["normalizer"]["stddev"] = norm_.stddev;
    return j.dump(2);
}

Policy Policy::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("unsupported policy checkpoint version");
    Policy p(j.at("hidden_width").get<int>());
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != p.param_count())
        throw std::runtime_error("policy checkpoint has wrong parameter count");
    p.params() = std::move(params);
    const auto mean = j.at("normalizer").at("mean").get<std::vector<double>>();
    const auto stddev = j.at("normalizer").at("stddev").get<std::vector<double>>();
    if (mean.size() != Observation::kFeatureCount || stddev.size() != Observation::kFeatureCount)
        throw std::runtime_error("policy checkpoint has wrong normalizer size");
    std::copy(mean.begin(), mean.end(), p.normalizer().mean.begin());
    std::copy(stddev.begin(), stddev.end(), p.normalizer().stddev.begin());
    return p;
}

void TrainConfig::validate() const {
    if (hidden_width < 1) throw std::invalid_argument("hidden_width must be positive");
    if (population < 2 || population % 2 != 0)
        throw std::invalid_argument("population must be even and >= 2");
    if (noise_std <= 0.0) throw std::invalid_argument("noise_std must be positive");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
    if (episodes_budget == 0) throw std::invalid_argument("episodes_budget must be positive");
    if (warmup_episodes < 0) throw std::invalid_argument("warmup_episodes must be >= 0");
    if (eval_every_generations < 1 || eval_episodes < 1)
        throw std::invalid_argument("evaluation cadence and size must be >= 1");
}

namespace {

struct RolloutOutcome {
    double market_reward = 0.0;
    double market_excl_deg = 0.0;
    double annualization = 1.0;
    // per-feature moment sums for the normalization warm-up
    std::array<double, Observation::kFeatureCount> sum{};
    std::array<double, Observation::kFeatureCount> sum_sq{};
    std::uint64_t obs_count = 0;
};

RolloutOutcome run_episode(Env& env, const Policy& policy, bool collect_stats) {
    RolloutOutcome out;
    out.annualization = env.annualization();
    Observation obs = env.reset();
    for (;;) {
        if (collect_stats) {
            const auto f = obs.features();
            for (std::size_t i = 0; i < f.size(); ++i) {
                out.sum[i] += f[i];
                out.sum_sq[i] += f[i] * f[i];
            }
            ++out.obs_count;
        }
        const EnvStepResult r = env.step(policy.act(obs));
        out.market_reward += r.reward;
        out.market_excl_deg += r.market_excl_deg();
        if (r.done) break;
        obs = r.obs;
    }
    return out;
}

} // namespace

TrainResult train_policy(const EnvFactory& factory, const DesignSource& designs,
                         const TrainConfig& config, const EpisodeSink& sink,
                         const std::function<DesignVector()>& eval_design_fn,
                         const Policy* resume_from) {
    config.validate();
    const std::uint64_t master = config.seed;

    Policy center(config.hidden_width);
    if (resume_from) {
        if (resume_from->hidden_width() != config.hidden_width)
            throw std::invalid_argument("checkpoint width differs from the configured width");
        center = *resume_from;
    }
    std::uint64_t episode = 0;
    bool any_finite = false;

    // --- normalization warm-up with the untrained center policy ---
    // a resumed checkpoint keeps its frozen statistics instead
    const std::uint64_t warmup =
        resume_from ? 0
                    : std::min<std::uint64_t>(config.warmup_episodes, config.episodes_budget);
    if (warmup > 0) {
        std::vector<RolloutOutcome> outcomes(warmup);
        std::vector<DesignVector> warm_designs(warmup);
        for (std::uint64_t i = 0; i < warmup; ++i) warm_designs[i] = designs(i);
        parallel_for(warmup, config.workers, [&](std::size_t i) {
            auto env = factory(warm_designs[i], i, derive_seed(master, kTagEpisode, i));
            outcomes[i] = run_episode(*env, center, true);
        });
        std::array<double, Observation::kFeatureCount> sum{}, sum_sq{};
        std::uint64_t count = 0;
        for (std::uint64_t i = 0; i < warmup; ++i) { // reduce in episode order
            const RolloutOutcome& o = outcomes[i];
            for (std::size_t k = 0; k < sum.size(); ++k) {
                sum[k] += o.sum[k];
                sum_sq[k] += o.sum_sq[k];
            }
            count += o.obs_count;
            if (std::isfinite(o.market_reward)) any_finite = true;
            if (sink)
                sink(i, warm_designs[i], o.market_reward, o.market_excl_deg, o.annualization);
        }
        if (count > 0) {
            for (std::size_t k = 0; k < sum.size(); ++k) {
                const double mean = sum[k] / static_cast<double>(count);
                const double var =
                    std::max(0.0, sum_sq[k] / static_cast<double>(count) - mean * mean);
                center.normalizer().mean[k] = mean;
                center.normalizer().stddev[k] = std::sqrt(var) > 1e-9 ? std::sqrt(var) : 1.0;
            }
        }
        episode = warmup;
    }

    const std::size_t dim = center.param_count();
    const int pop = config.population;
    const std::uint64_t generations =
        episode >= config.episodes_budget
            ? 0
            : (config.episodes_budget - episode) / static_cast<std::uint64_t>(pop);

    TrainResult result;
    result.policy = center;
    result.best_eval = -std::numeric_limits<double>::infinity();

    const DesignVector eval_design = eval_design_fn ? eval_design_fn() : designs(0);
    auto evaluate_center = [&](const Policy& p) {
        const DesignVector d = eval_design_fn ? eval_design_fn() : eval_design;
        double total = 0.0;
        for (int j = 0; j < config.eval_episodes; ++j) {
            auto env = factory(d, static_cast<std::uint64_t>(j),
                               derive_seed(master, kTagEval, j));
            total += run_episode(*env, p, false).market_reward;
        }
        return total / config.eval_episodes;
    };

    for (std::uint64_t gen = 0; gen < generations; ++gen) {
        // antithetic perturbations, seeded by (master, generation, pair)
        std::vector<std::vector<double>> noise(pop);
        for (int m = 0; m < pop; m += 2) {
            Rng rng(derive_seed(master, kTagNoise, gen, static_cast<std::uint64_t>(m)));
            noise[m].resize(dim);
            noise[m + 1].resize(dim);
            for (std::size_t k = 0; k < dim; ++k) {
                const double z = rng.normal();
                noise[m][k] = z;
                noise[m + 1][k] = -z;
            }
        }

        std::vector<DesignVector> gen_designs(pop);
        for (int m = 0; m < pop; ++m)
            gen_designs[m] = designs(episode + static_cast<std::uint64_t>(m));

        std::vector<RolloutOutcome> outcomes(pop);
        parallel_for(pop, config.workers, [&](std::size_t m) {
            Policy member = center;
            for (std::size_t k = 0; k < dim; ++k)
                member.params()[k] += config.noise_std * noise[m][k];
            auto env = factory(gen_designs[m], episode + m,
                               derive_seed(master, kTagEpisode, episode + m));
            outcomes[m] = run_episode(*env, member, false);
        });

        double mean_reward = 0.0;
        for (int m = 0; m < pop; ++m) {
            if (std::isfinite(outcomes[m].market_reward)) any_finite = true;
            mean_reward += outcomes[m].market_reward;
            if (sink)
                sink(episode + static_cast<std::uint64_t>(m), gen_designs[m],
                     outcomes[m].market_reward, outcomes[m].market_excl_deg,
                     outcomes[m].annualization);
        }
        mean_reward /= pop;

        // centered-rank fitness shaping; ties resolved by member index
        std::vector<int> order(pop);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return outcomes[a].market_reward < outcomes[b].market_reward;
        });
        std::vector<double> shaped(pop);
        for (int r = 0; r < pop; ++r)
            shaped[order[r]] = static_cast<double>(r) / (pop - 1) - 0.5;

        const double step = config.learning_rate / (pop * config.noise_std);
        for (int m = 0; m < pop; ++m) {
            const double w = step * shaped[m] * config.noise_std;
            for (std::size_t k = 0; k < dim; ++k) center.params()[k] += w * noise[m][k];
        }

        episode += static_cast<std::uint64_t>(pop);

        GenerationStats stats;
        stats.generation = gen;
        stats.episodes_used = episode;
        stats.mean_reward = mean_reward;
        if (gen % static_cast<std::uint64_t>(config.eval_every_generations) == 0 ||
            gen + 1 == generations) {
            const double score = evaluate_center(center);
            if (score > result.best_eval) {
                result.best_eval = score;
                result.policy = center;
            }
        }
        stats.best_eval = result.best_eval;
        result.history.push_back(stats);
    }

    if (!any_finite && generations == 0 && warmup == 0)
        any_finite = true; // nothing was rolled out; nothing to judge
    if (!any_finite)
        throw std::runtime_error("episode budget exhausted without any finite-reward episode");
    if (!std::isfinite(result.best_eval)) {
        result.best_eval = evaluate_center(center);
        result.policy = center;
    }
    return result;
}

EvalResult evaluate_policy(const Policy& policy, const EnvFactory& factory,
                           const DesignVector& design, int n_episodes,
                           std::uint64_t seed) {
    if (n_episodes < 1) throw std::invalid_argument("need at least one evaluation episode");
    EvalResult out;
    out.episode_rewards.resize(n_episodes);
    for (int i = 0; i < n_episodes; ++i) {
        auto env = factory(design, static_cast<std::uint64_t>(i),
                           derive_seed(seed, kTagEval, static_cast<std::uint64_t>(i)));
        out.episode_rewards[i] = rollout(*env, [&](const Observation& o) { return policy.act(o); });
    }
    out.mean_reward =
        std::accumulate(out.episode_rewards.begin(), out.episode_rewards.end(), 0.0) /
        n_episodes;
    return out;
}

} // namespace hsz
