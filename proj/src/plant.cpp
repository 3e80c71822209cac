#include "hybridsizer/plant.hpp"

#include <cmath>
#include <string>

namespace hsz {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

} // namespace

void PlantParams::validate() const {
    require(p_poi_min_mw <= 0.0 && 0.0 <= p_poi_max_mw, "POI bounds must bracket zero");
    require(eta_c > 0.0 && eta_c <= 1.0, "eta_c must be in (0,1]");
    require(eta_d > 0.0 && eta_d <= 1.0, "eta_d must be in (0,1]");
    require(s_min >= 0.0 && s_min < s_max && s_max <= 1.0, "need 0 <= s_min < s_max <= 1");
    require(kappa >= 0.0 && kappa <= 1.0, "kappa must be in [0,1]");
    require(phi_pv >= 0.0 && phi_pv <= 1.0, "phi_pv must be in [0,1]");
    require(dt_hours > 0.0, "dt_hours must be positive");
    require(h_res_hours > 0.0 && h_up_hours > 0.0 && h_dn_hours > 0.0 && h_cr_hours > 0.0,
            "AS and capacity durations must be positive");
    require(beta_deg >= 0.0, "beta_deg must be nonnegative");
}

void CostParams::validate() const {
    require(c_pv_per_kw > 0.0 && c_bat_e_per_kwh > 0.0 && c_bat_p_per_kw > 0.0,
            "unit costs must be positive");
    require(life_pv_years > 0.0 && life_bat_years > 0.0, "lifetimes must be positive");
    require(lambda_cap_kw_month > 0.0, "lambda_cap must be positive");
    require(discount_rate >= 0.0, "discount_rate must be nonnegative");
}

EnergyMargins energy_margins(PlantState state, const DesignVector& design,
                             const PlantParams& params) {
    if (design.battery_absent()) return {0.0, 0.0};
    EnergyMargins m;
    m.e_up_mwh = params.eta_d * design.e_bat_mwh * (state.soc - params.s_min);
    m.e_dn_mwh = design.e_bat_mwh * (params.s_max - state.soc) / params.eta_c;
    return m;
}

PlantState soc_step(PlantState state, double x_chg_e_mwh, double x_chg_as_mwh,
                    double x_dis_e_mwh, double x_dis_as_mwh,
                    const DesignVector& design, const PlantParams& params) {
    const double chg = x_chg_e_mwh + x_chg_as_mwh;
    const double dis = x_dis_e_mwh + x_dis_as_mwh;
    if (chg < 0.0 || dis < 0.0) throw std::invalid_argument("battery flows must be nonnegative");

    if (design.battery_absent()) {
        if (chg > kSocFaultTol || dis > kSocFaultTol)
            throw std::logic_error("battery flows on an absent battery");
        return state;
    }

    PlantState next = state;
    next.soc += params.eta_c * chg / design.e_bat_mwh
              - dis / (params.eta_d * design.e_bat_mwh);
    if (next.soc < params.s_min - kSocFaultTol || next.soc > params.s_max + kSocFaultTol)
        throw std::logic_error("SOC bound violated: soc=" + std::to_string(next.soc));
    return next;
}

double degradation_cost(double x_chg_total_mwh, double x_dis_total_mwh,
                        const PlantParams& params) {
    return params.beta_deg * (x_chg_total_mwh + x_dis_total_mwh);
}

double annualized_capex(const DesignVector& design, const CostParams& costs) {
    // unit costs are per kW / kWh, sizes are MW / MWh
    const double pv_capital = 1000.0 * costs.c_pv_per_kw * design.p_pv_mw;
    const double bat_capital = 1000.0 * (costs.c_bat_e_per_kwh * design.e_bat_mwh +
                                         costs.c_bat_p_per_kw * design.p_bat_mw);
    if (costs.discount_rate > 0.0) {
        const double r = costs.discount_rate;
        auto crf = [r](double n) { return r / (1.0 - std::pow(1.0 + r, -n)); };
        return pv_capital * crf(costs.life_pv_years) + bat_capital * crf(costs.life_bat_years);
    }
    return pv_capital / costs.life_pv_years + bat_capital / costs.life_bat_years;
}

} // namespace hsz
