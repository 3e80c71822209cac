#include "hybridsizer/env.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace hsz {

double EpisodeTrace::episode_reward() const {
    double total = 0.0;
    for (const StepRecord& s : steps) total += s.settle.reward;
    return total;
}

MarketEnv::MarketEnv(std::shared_ptr<const SeriesPair> data, EpisodeWindow window,
                     DesignVector design, PlantParams params, EnvConfig config,
                     Forecaster forecaster, std::uint64_t seed)
    : data_(std::move(data)),
      window_(window),
      design_(design),
      params_(params),
      config_(config),
      forecaster_(std::move(forecaster)),
      seed_(seed),
      rng_(seed) {
    if (!data_) throw std::invalid_argument("market env needs data");
    params_.validate();
    if (window_.start < 1)
        throw std::runtime_error("episode window must start at index >= 1 so the first "
                                 "observation has a predecessor row");
    if (window_.start + window_.length > data_->market.size())
        throw std::runtime_error("episode window exceeds series length");
    if (config_.initial_soc < params_.s_min || config_.initial_soc > params_.s_max)
        throw std::invalid_argument("initial SOC outside the allowed band");
    if (config_.p_inv_mw < 0.0) config_.p_inv_mw = params_.p_poi_max_mw;
    if (!forecaster_) forecaster_ = persistence_forecast;
}

double MarketEnv::scaled_pv(std::size_t index) const {
    const PvSeries& pv = data_->pv;
    const double scale = pv.nameplate_mw > 0.0 ? design_.p_pv_mw / pv.nameplate_mw : 0.0;
    return pv.p_avail[index] * scale;
}

Observation MarketEnv::observe() const {
    const MarketSeries& mkt = data_->market;
    Observation obs;
    const std::size_t prev = t_ - 1;
    obs.p_avail_prev = scaled_pv(prev);
    obs.lambda_e_prev = mkt.lambda_e[prev];
    obs.lambda_res_prev = mkt.lambda_res[prev];
    obs.lambda_up_prev = mkt.lambda_up[prev];
    obs.lambda_dn_prev = mkt.lambda_dn[prev];
    obs.soc = state_.soc;
    obs.design = design_;
    return obs;
}

Observation MarketEnv::reset() {
    rng_ = Rng(seed_);
    state_.soc = config_.initial_soc;
    t_ = window_.start;
    steps_done_ = 0;
    in_episode_ = true;
    pv_history_.clear();
    pv_history_.reserve(window_.start + window_.length);
    for (std::size_t i = 0; i < window_.start; ++i) pv_history_.push_back(scaled_pv(i));
    trace_.mode = config_.mode;
    trace_.steps.clear();
    return observe();
}

EnvStepResult MarketEnv::step(const AgentAction& raw_action) {
    if (!in_episode_) throw std::logic_error("step() before reset() or after episode end");

    const AgentAction action =
        AgentAction::clamped(raw_action.e, raw_action.res, raw_action.up, raw_action.dn,
                             raw_action.imb);
    const Observation obs_before = observe();
    const PvForecast forecast = forecast_pv(pv_history_, forecaster_);
    const double p_avail = scaled_pv(t_);
    const ActivationOutcome activation = sample_activation(config_.activation, params_, rng_);

    BidSet settle_bids;
    PlantState next;
    DispatchRecord rec;
    if (config_.mode == PlantMode::hybrid) {
        settle_bids = build_hybrid_bids(action, state_, forecast, design_, params_);
        std::tie(next, rec) =
            apply_step(state_, settle_bids, p_avail, activation, action.imb, design_, params_);
    } else {
        const ColocatedBids cb =
            build_colocated_bids(action, state_, forecast, design_, params_, config_.p_inv_mw);
        std::tie(next, rec) = apply_step_colocated(state_, cb, p_avail, activation, design_,
                                                   params_, config_.p_inv_mw);
        // combined totals drive the settlement of the single POI
        settle_bids.b_e = cb.b_e_total;
        settle_bids.b_res = cb.b_res_total();
        settle_bids.b_up = cb.b_up_total();
        settle_bids.b_dn = cb.b_dn_total();
        settle_bids.b_up_pv = cb.pv.b_up_pv;
        settle_bids.b_up_bat = cb.bat.b_up_bat;
        settle_bids.b_dn_bat = cb.bat.b_dn_bat;
        settle_bids.cap_dis = cb.bat.cap_dis;
        settle_bids.cap_chg = cb.bat.cap_chg;
        settle_bids.m_pv = cb.pv.m_pv;
    }

    const MarketSeries& mkt = data_->market;
    PriceQuote quote;
    quote.lambda_e = mkt.lambda_e[t_];
    quote.lambda_res = mkt.lambda_res[t_];
    quote.lambda_up = mkt.lambda_up[t_];
    quote.lambda_dn = mkt.lambda_dn[t_];
    quote.pi_imb = config_.pi_imb;
    const StepSettlement settle = step_reward(quote, rec, settle_bids, params_);

    if (config_.record_trace) {
        StepRecord row;
        row.obs = obs_before;
        row.action = action;
        row.bids = settle_bids;
        row.record = rec;
        row.settle = settle;
        row.activation = activation;
        row.p_avail_mw = p_avail;
        row.soc_after = next.soc;
        trace_.steps.push_back(row);
    }

    pv_history_.push_back(p_avail);
    state_ = next;
    ++t_;
    ++steps_done_;

    EnvStepResult out;
    out.reward = settle.reward;
    out.reward_excl_deg = settle.f_e + settle.f_as;
    out.done = steps_done_ >= window_.length;
    if (out.done)
        in_episode_ = false;
    else
        out.obs = observe();
    return out;
}

std::unique_ptr<Env> MarketEnv::clone() const {
    return std::make_unique<MarketEnv>(*this);
}

} // namespace hsz
