#include "hybridsizer/dispatch.hpp"

#include <algorithm>
#include <cmath>

namespace hsz {

ActivationOutcome sample_activation(const ActivationConfig& config,
                                    const PlantParams& params, Rng& rng) {
    ActivationOutcome out;
    if (config.model == ActivationConfig::Model::none) return out;
    out.h_res = rng.uniform() < config.p_res_event ? params.h_res_hours : 0.0;
    out.h_up = rng.uniform(0.0, params.h_up_hours);
    out.h_dn = rng.uniform(0.0, params.h_dn_hours);
    return out;
}

RealtimeFlows resolve_realtime(const BidSet& bids, double p_avail_mw, double a_imb,
                               PlantState state, const DesignVector& design,
                               const PlantParams& params) {
    const double dt = params.dt_hours;
    const double available = p_avail_mw - bids.b_up_pv; // PV net of the reg-up reservation
    RealtimeFlows out;

    if (bids.b_e > available) {
        // shortfall: discharge mitigates up to the post-AS margin
        const double deficit_mw = bids.b_e - available;
        out.x_dis_e_mwh = std::min(a_imb * deficit_mw, bids.cap_dis) * dt;
        out.delta_e_mwh = -(deficit_mw * dt - out.x_dis_e_mwh);
        return out;
    }

    // surplus: charge what the realized-PV margins allow, curtail above the POI cap
    const double surplus_mw = available - bids.b_e;
    double chg_cap = 0.0;
    if (!design.battery_absent()) {
        const EnergyMargins m = energy_margins(state, design, params);
        // residual downward-AS requirement recomputed against realized PV
        const double dn_bat_realized =
            std::max(bids.b_dn - (p_avail_mw - bids.b_up_pv), 0.0);
        chg_cap = std::max(
            0.0, std::min(design.p_bat_mw - bids.b_dn_bat,
                          (m.e_dn_mwh - dn_bat_realized * params.h_dn_hours) / dt));
    }
    out.x_chg_e_mwh = std::min(a_imb * surplus_mw, chg_cap) * dt;
    out.x_cur_mwh = std::max(p_avail_mw * dt - out.x_chg_e_mwh - params.p_poi_max_mw * dt, 0.0);
    out.delta_e_mwh = surplus_mw * dt - out.x_chg_e_mwh - out.x_cur_mwh;
    return out;
}

AsFlows as_activation_flows(const BidSet& bids, const ActivationOutcome& activation,
                            double x_chg_e_mwh, double e_dn_mwh) {
    AsFlows out;
    // PV-covered regulation-down produces no battery flow; the battery share
    // is capped by the chargeable energy left after the energy-market charge
    out.x_chg_as_mwh = std::max(
        0.0, std::min(bids.b_dn_bat * activation.h_dn, e_dn_mwh - x_chg_e_mwh));
    out.x_dis_as_mwh = bids.b_res * activation.h_res + bids.b_up_bat * activation.h_up;
    return out;
}

std::pair<PlantState, DispatchRecord> apply_step(PlantState state, const BidSet& bids,
                                                 double p_avail_mw,
                                                 const ActivationOutcome& activation,
                                                 double a_imb, const DesignVector& design,
                                                 const PlantParams& params) {
    const double dt = params.dt_hours;
    const RealtimeFlows rt = resolve_realtime(bids, p_avail_mw, a_imb, state, design, params);
    const EnergyMargins m = energy_margins(state, design, params);
    const AsFlows as = as_activation_flows(bids, activation, rt.x_chg_e_mwh, m.e_dn_mwh);

    DispatchRecord rec;
    rec.x_chg_e_mwh = rt.x_chg_e_mwh;
    rec.x_dis_e_mwh = rt.x_dis_e_mwh;
    rec.x_cur_mwh = rt.x_cur_mwh;
    rec.delta_e_mwh = rt.delta_e_mwh;
    rec.x_chg_as_mwh = as.x_chg_as_mwh;
    rec.x_dis_as_mwh = as.x_dis_as_mwh;
    rec.x_e_mwh = bids.b_e * dt + rt.delta_e_mwh;
    rec.p_poi_mw = rec.x_e_mwh / dt;

    PlantState next = soc_step(state, rec.x_chg_e_mwh, rec.x_chg_as_mwh,
                               rec.x_dis_e_mwh, rec.x_dis_as_mwh, design, params);
    return {next, rec};
}

std::pair<PlantState, DispatchRecord> apply_step_colocated(
    PlantState state, const ColocatedBids& bids, double p_avail_mw,
    const ActivationOutcome& activation, const DesignVector& design,
    const PlantParams& params, double p_inv_mw) {
    const double dt = params.dt_hours;
    const double b_up_pv = bids.pv.b_up_pv;

    DispatchRecord rec;
    // battery follows its signed schedule exactly
    rec.x_chg_e_mwh = std::max(-bids.bat.b_e, 0.0) * dt;
    rec.x_dis_e_mwh = std::max(bids.bat.b_e, 0.0) * dt;

    // PV deviation against the inverter-capped prediction is the only imbalance
    const double pv_real_mw = std::min(p_avail_mw, p_inv_mw) - b_up_pv;
    double delta_e = (std::min(p_avail_mw, p_inv_mw) - std::min(bids.pv.b_e + b_up_pv, p_inv_mw)) * dt;

    // inverter clipping plus any POI excess (trimmed from PV) are lost
    double x_cur = std::max(p_avail_mw - p_inv_mw, 0.0) * dt;
    const double poi_raw_mw = pv_real_mw + bids.bat.b_e;
    const double poi_trim_mw = std::max(poi_raw_mw - params.p_poi_max_mw, 0.0);
    x_cur += poi_trim_mw * dt;
    delta_e -= poi_trim_mw * dt;

    rec.x_cur_mwh = x_cur;
    rec.delta_e_mwh = delta_e;
    rec.x_e_mwh = bids.b_e_total * dt + delta_e;
    rec.p_poi_mw = rec.x_e_mwh / dt;

    // downward activation charges exactly the battery-committed share
    rec.x_chg_as_mwh = bids.bat.b_dn_bat * activation.h_dn;
    rec.x_dis_as_mwh = bids.bat.b_res * activation.h_res + bids.bat.b_up_bat * activation.h_up;

    PlantState next = soc_step(state, rec.x_chg_e_mwh, rec.x_chg_as_mwh,
                               rec.x_dis_e_mwh, rec.x_dis_as_mwh, design, params);
    return {next, rec};
}

} // namespace hsz
