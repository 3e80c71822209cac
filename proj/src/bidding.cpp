#include "hybridsizer/bidding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsz {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double clamp_interval(double v, double lo, double hi) {
    return std::min(std::max(v, lo), hi);
}

} // namespace

AgentAction AgentAction::clamped(double a_e, double a_res, double a_up, double a_dn,
                                 double a_imb) {
    return {clamp01(a_e), clamp01(a_res), clamp01(a_up), clamp01(a_dn), clamp01(a_imb)};
}

double persistence_forecast(std::span<const double> history) {
    if (history.empty()) throw std::invalid_argument("PV forecast needs at least one observation");
    return history.back();
}

Forecaster exponential_smoothing_forecaster(double alpha) {
    if (alpha <= 0.0 || alpha > 1.0)
        throw std::invalid_argument("smoothing weight must be in (0,1]");
    return [alpha](std::span<const double> history) {
        if (history.empty())
            throw std::invalid_argument("PV forecast needs at least one observation");
        double s = history.front();
        for (std::size_t i = 1; i < history.size(); ++i)
            s = alpha * history[i] + (1.0 - alpha) * s;
        return s;
    };
}

PvForecast forecast_pv(std::span<const double> history, const Forecaster& forecaster) {
    return PvForecast{std::max(0.0, forecaster(history))};
}

double reserve_bid(double a_res, double e_up_mwh, const DesignVector& design,
                   const PlantParams& params) {
    // reserve is provided exclusively by the battery
    if (design.battery_absent()) return 0.0;
    const double by_poi = clamp01(a_res) * params.poi_span_mw();
    const double by_energy = e_up_mwh / params.h_res_hours;
    return std::max(0.0, std::min({by_poi, design.p_bat_mw, by_energy}));
}

RegUpBid regup_bid(double a_up, double b_res, double e_up_mwh, double p_pred_mw,
                   const DesignVector& design, const PlantParams& params) {
    double m_bat_up = 0.0;
    if (!design.battery_absent()) {
        m_bat_up = std::min(design.p_bat_mw - b_res,
                            (e_up_mwh - b_res * params.h_res_hours) / params.h_up_hours);
        m_bat_up = std::max(m_bat_up, 0.0);
    }
    const double m_pv = params.kappa * p_pred_mw;
    RegUpBid out;
    out.b_up = std::min(clamp01(a_up) * (params.poi_span_mw() - b_res), m_bat_up + m_pv);
    out.b_up = std::max(out.b_up, 0.0);
    out.b_up_pv = std::max(out.b_up - m_bat_up, 0.0);
    out.b_up_bat = out.b_up - out.b_up_pv;
    return out;
}

RegDnBid regdn_bid(double a_dn, double b_res, double b_up, double b_up_pv,
                   double e_dn_mwh, double p_pred_mw, const DesignVector& design,
                   const PlantParams& params) {
    double m_bat_dn = 0.0;
    if (!design.battery_absent())
        m_bat_dn = std::max(0.0, std::min(design.p_bat_mw, e_dn_mwh / params.h_dn_hours));
    const double m_pv = params.kappa * p_pred_mw;
    RegDnBid out;
    out.b_dn = std::min(clamp01(a_dn) * (params.poi_span_mw() - b_res - b_up),
                        m_bat_dn + m_pv - b_up_pv);
    out.b_dn = std::max(out.b_dn, 0.0);
    // the share the guaranteed PV headroom cannot cover must be charged
    out.b_dn_bat = std::max(out.b_dn - (m_pv - b_up_pv), 0.0);
    return out;
}

EnergyBidResult energy_bid(double a_e, double b_res, double b_up, double b_up_pv,
                           double b_up_bat, double b_dn, double b_dn_bat,
                           double e_up_mwh, double e_dn_mwh, double p_pred_mw,
                           const DesignVector& design, const PlantParams& params) {
    EnergyBidResult out;
    if (!design.battery_absent()) {
        out.cap_dis = std::max(
            0.0, std::min(design.p_bat_mw - b_res - b_up_bat,
                          (e_up_mwh - b_res * params.h_res_hours -
                           b_up_bat * params.h_up_hours) / params.dt_hours));
        out.cap_chg = std::max(
            0.0, std::min(design.p_bat_mw - b_dn_bat,
                          (e_dn_mwh - b_dn_bat * params.h_dn_hours) / params.dt_hours));
    }

    const double poi_lo = params.p_poi_min_mw + b_dn;
    const double poi_hi = params.p_poi_max_mw - b_res - b_up;
    const double pred_lo = p_pred_mw - b_up_pv - out.cap_chg;
    const double pred_hi = p_pred_mw - b_up_pv + out.cap_dis;

    const double desired = clamp01(a_e) * poi_hi + (1.0 - clamp01(a_e)) * poi_lo;
    // prediction bounds are advisory, POI bounds are physical: clamp to the
    // prediction range first, then project back into the POI range
    out.b_e = clamp_interval(clamp_interval(desired, pred_lo, pred_hi), poi_lo, poi_hi);
    return out;
}

BidSet build_hybrid_bids(const AgentAction& action, PlantState state,
                         const PvForecast& forecast, const DesignVector& design,
                         const PlantParams& params) {
    const EnergyMargins m = energy_margins(state, design, params);
    const double p_pred = std::max(0.0, forecast.p_pred_mw);

    BidSet bids;
    bids.m_pv = params.kappa * p_pred;
    bids.b_res = reserve_bid(action.res, m.e_up_mwh, design, params);

    const RegUpBid up = regup_bid(action.up, bids.b_res, m.e_up_mwh, p_pred, design, params);
    bids.b_up = up.b_up;
    bids.b_up_pv = up.b_up_pv;
    bids.b_up_bat = up.b_up_bat;

    const RegDnBid dn = regdn_bid(action.dn, bids.b_res, bids.b_up, bids.b_up_pv,
                                  m.e_dn_mwh, p_pred, design, params);
    bids.b_dn = dn.b_dn;
    bids.b_dn_bat = dn.b_dn_bat;

    const EnergyBidResult e = energy_bid(action.e, bids.b_res, bids.b_up, bids.b_up_pv,
                                         bids.b_up_bat, bids.b_dn, bids.b_dn_bat,
                                         m.e_up_mwh, m.e_dn_mwh, p_pred, design, params);
    bids.b_e = e.b_e;
    bids.cap_dis = e.cap_dis;
    bids.cap_chg = e.cap_chg;
    return bids;
}

ColocatedBids build_colocated_bids(const AgentAction& action, PlantState state,
                                   const PvForecast& forecast, const DesignVector& design,
                                   const PlantParams& params, double p_inv_mw) {
    const EnergyMargins m = energy_margins(state, design, params);
    const double p_pred = std::max(0.0, forecast.p_pred_mw);
    // separate PV inverter caps what the PV resource can guarantee or deliver
    const double m_pv = std::min(params.kappa * p_pred, p_inv_mw);
    const double pv_sched = std::min(p_pred, p_inv_mw);

    ColocatedBids out;

    const double b_res = reserve_bid(action.res, m.e_up_mwh, design, params);

    double m_bat_up = 0.0;
    if (!design.battery_absent())
        m_bat_up = std::max(0.0, std::min(design.p_bat_mw - b_res,
                                          (m.e_up_mwh - b_res * params.h_res_hours) /
                                              params.h_up_hours));
    double b_up = std::min(clamp01(action.up) * (params.poi_span_mw() - b_res),
                           m_bat_up + m_pv);
    b_up = std::max(b_up, 0.0);
    const double b_up_pv = std::max(b_up - m_bat_up, 0.0);
    const double b_up_bat = b_up - b_up_pv;

    double m_bat_dn = 0.0;
    if (!design.battery_absent())
        m_bat_dn = std::max(0.0, std::min(design.p_bat_mw, m.e_dn_mwh / params.h_dn_hours));
    double b_dn = std::min(clamp01(action.dn) * (params.poi_span_mw() - b_res - b_up),
                           m_bat_dn + m_pv - b_up_pv);
    b_dn = std::max(b_dn, 0.0);
    const double b_dn_bat = std::max(b_dn - (m_pv - b_up_pv), 0.0);
    const double b_dn_pv = b_dn - b_dn_bat;

    const EnergyBidResult e = energy_bid(action.e, b_res, b_up, b_up_pv, b_up_bat,
                                         b_dn, b_dn_bat, m.e_up_mwh, m.e_dn_mwh,
                                         p_pred, design, params);

    // split: PV bids its (inverter-capped) prediction net of the reg-up
    // reservation; the battery absorbs the clipped residual
    const double b_e_pv = pv_sched - b_up_pv;
    const double residual = e.b_e - b_e_pv;
    const double b_e_bat = clamp_interval(residual, -e.cap_chg, e.cap_dis);

    out.pv.b_e = b_e_pv;
    out.pv.b_up = b_up_pv;
    out.pv.b_up_pv = b_up_pv;
    out.pv.b_dn = b_dn_pv;
    out.pv.m_pv = m_pv;

    out.bat.b_e = b_e_bat;
    out.bat.b_res = b_res;
    out.bat.b_up = b_up_bat;
    out.bat.b_up_bat = b_up_bat;
    out.bat.b_dn = b_dn_bat;
    out.bat.b_dn_bat = b_dn_bat;
    out.bat.cap_dis = e.cap_dis;
    out.bat.cap_chg = e.cap_chg;

    out.b_e_total = b_e_pv + b_e_bat;
    return out;
}

} // namespace hsz
