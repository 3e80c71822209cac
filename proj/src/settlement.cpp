#include "hybridsizer/settlement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsz {

double energy_revenue(const PriceQuote& quote, double x_e_mwh, double b_e_mw,
                      double dt_hours) {
    const double imbalance = x_e_mwh - b_e_mw * dt_hours;
    return quote.lambda_e * (x_e_mwh - quote.pi_imb * std::abs(imbalance));
}

double implied_imbalance_price(const PriceQuote& quote, double delta_e_mwh) {
    return delta_e_mwh > 0.0 ? quote.lambda_e * (1.0 - quote.pi_imb)
                             : quote.lambda_e * (1.0 + quote.pi_imb);
}

double as_revenue(const PriceQuote& quote, const BidSet& bids) {
    return quote.lambda_res * bids.b_res + quote.lambda_up * bids.b_up +
           quote.lambda_dn * bids.b_dn;
}

double capacity_revenue(const PriceQuote& quote, const DesignVector& design,
                        const PlantParams& params) {
    double p_cap = params.phi_pv * design.p_pv_mw;
    if (!design.battery_absent())
        p_cap += std::min(design.p_bat_mw, design.e_bat_mwh / params.h_cr_hours);
    const double accredited_mw = std::min(params.p_poi_max_mw, p_cap);
    // $/kW-month -> $/MW-year
    return quote.lambda_cap_kw_month * 12.0 * 1000.0 * accredited_mw;
}

StepSettlement step_reward(const PriceQuote& quote, const DispatchRecord& record,
                           const BidSet& bids, const PlantParams& params) {
    StepSettlement s;
    s.energy_gross = quote.lambda_e * record.x_e_mwh;
    s.imbalance_penalty = quote.lambda_e * quote.pi_imb * std::abs(record.delta_e_mwh);
    s.f_e = s.energy_gross - s.imbalance_penalty;
    s.f_as = as_revenue(quote, bids);
    s.c_deg = degradation_cost(record.x_chg_e_mwh + record.x_chg_as_mwh,
                               record.x_dis_e_mwh + record.x_dis_as_mwh, params);
    s.reward = s.f_e + s.f_as - s.c_deg;
    return s;
}

double episode_return(std::span<const StepSettlement> steps, double capacity_rev_per_year,
                      double capex_per_year, double w_anu, double eta,
                      bool include_degradation) {
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("eta must be in [0,1]");
    double market = 0.0;
    for (const StepSettlement& s : steps)
        market += include_degradation ? s.reward : s.f_e + s.f_as;
    return w_anu * market + capacity_rev_per_year - capex_per_year * (1.0 - eta);
}

} // namespace hsz
