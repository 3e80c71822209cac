#include "hybridsizer/design.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hsz {

void DesignDistribution::validate() const {
    for (double s : sigma)
        if (!(s > 0.0)) throw std::invalid_argument("design sigma must be positive");
    for (double m : mu)
        if (!std::isfinite(m)) throw std::invalid_argument("design mu must be finite");
}

void EtaSchedule::validate() const {
    if (decay_start >= decay_end)
        throw std::invalid_argument("eta schedule needs decay_start < decay_end");
}

double eta_value(const EtaSchedule& schedule, std::uint64_t episode) {
    if (episode <= schedule.decay_start) return 1.0;
    if (episode >= schedule.decay_end) return 0.0;
    const double span = static_cast<double>(schedule.decay_end - schedule.decay_start);
    return 1.0 - static_cast<double>(episode - schedule.decay_start) / span;
}

DesignVector sample_design(const DesignDistribution& dist, Rng& rng) {
    DesignVector d;
    d.p_pv_mw = std::max(0.0, dist.mu[0] + dist.sigma[0] * rng.normal());
    d.e_bat_mwh = std::max(0.0, dist.mu[1] + dist.sigma[1] * rng.normal());
    d.p_bat_mw = std::max(0.0, dist.mu[2] + dist.sigma[2] * rng.normal());
    return d;
}

std::array<double, 3> log_density_grad(const DesignDistribution& dist,
                                       const DesignVector& omega) {
    const std::array<double, 3> w{omega.p_pv_mw, omega.e_bat_mwh, omega.p_bat_mw};
    std::array<double, 3> g{};
    for (std::size_t i = 0; i < 3; ++i)
        g[i] = (w[i] - dist.mu[i]) / (dist.sigma[i] * dist.sigma[i]);
    return g;
}

DesignDistribution update_mu(const DesignDistribution& dist,
                             std::span<const EpisodeScore> batch, double alpha_mu) {
    if (batch.size() < 2)
        throw std::invalid_argument("mean update needs at least two scores for the baseline");
    double baseline = 0.0;
    for (const EpisodeScore& s : batch) baseline += s.g;
    baseline /= static_cast<double>(batch.size());

    std::array<double, 3> grad{};
    for (const EpisodeScore& s : batch) {
        const auto g = log_density_grad(dist, s.omega);
        const double advantage = s.g - baseline;
        for (std::size_t i = 0; i < 3; ++i) grad[i] += g[i] * advantage;
    }
    DesignDistribution out = dist;
    for (std::size_t i = 0; i < 3; ++i) {
        grad[i] /= static_cast<double>(batch.size());
        out.mu[i] = std::max(0.0, out.mu[i] + alpha_mu * grad[i]);
    }
    return out;
}

void DesignOptConfig::validate() const {
    init.validate();
    eta.validate();
    if (alpha_mu < 0.0) throw std::invalid_argument("alpha_mu must be nonnegative");
    if (n_up < 2) throw std::invalid_argument("n_up must be >= 2");
    if (episodes == 0) throw std::invalid_argument("episode budget must be positive");
}

CoOptimizeResult co_optimize(const EnvFactory& factory,
                             const std::function<double(const DesignVector&)>& capacity_fn,
                             const std::function<double(const DesignVector&)>& capex_fn,
                             const TrainConfig& policy_config,
                             const DesignOptConfig& design_config) {
    design_config.validate();

    DesignDistribution dist = design_config.init;
    std::vector<EpisodeScore> pending;
    pending.reserve(design_config.n_up);
    CoOptimizeResult result;
    result.history.reserve(design_config.episodes);

    // index-keyed sampling: each episode draws from the distribution current
    // at the time its generation is scheduled
    DesignSource source = [&](std::uint64_t episode) {
        Rng rng(derive_seed(design_config.seed, 0x44534d50ULL, episode));
        return sample_design(dist, rng);
    };

    EpisodeSink sink = [&](std::uint64_t episode, const DesignVector& omega,
                           double market_reward, double market_excl_deg,
                           double annualization) {
        const double market = design_config.include_degradation_in_return
                                  ? market_reward
                                  : market_excl_deg;
        const double eta = eta_value(design_config.eta, episode);
        const double g = annualization * market + capacity_fn(omega) -
                         capex_fn(omega) * (1.0 - eta);
        if (!std::isfinite(g))
            throw std::runtime_error("non-finite episode return at episode " +
                                     std::to_string(episode));
        pending.push_back(EpisodeScore{omega, g});
        if (pending.size() >= static_cast<std::size_t>(design_config.n_up)) {
            dist = update_mu(dist, pending, design_config.alpha_mu);
            pending.clear();
        }
        result.history.push_back(CoOptHistoryRow{episode, omega, g, eta, dist.mu});
    };

    TrainConfig cfg = policy_config;
    cfg.episodes_budget = design_config.episodes;
    TrainResult trained = train_policy(factory, source, cfg, sink,
                                       [&] { return dist.mean_design(); });

    result.design = dist.mean_design();
    result.policy = std::move(trained.policy);
    result.policy_history = std::move(trained.history);
    return result;
}

} // namespace hsz
