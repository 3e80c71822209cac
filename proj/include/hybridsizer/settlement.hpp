#pragma once

#include <span>

#include "hybridsizer/bidding.hpp"
#include "hybridsizer/dispatch.hpp"
#include "hybridsizer/plant.hpp"

namespace hsz {

// Prices applicable to one settlement interval. AS prices are quoted per MW
// per interval; the capacity price is quoted per kW-month.
struct PriceQuote {
    double lambda_e = 0.0;
    double lambda_res = 0.0;
    double lambda_up = 0.0;
    double lambda_dn = 0.0;
    double pi_imb = 1.0;
    double lambda_cap_kw_month = 8.31;
};

struct StepSettlement {
    double f_e = 0.0;    // energy revenue net of the imbalance penalty
    double f_as = 0.0;   // AS capacity revenue
    double c_deg = 0.0;  // degradation cost over total battery throughput
    double reward = 0.0; // f_e + f_as - c_deg
    // breakdown for reporting
    double energy_gross = 0.0;      // lambda_e * x_e
    double imbalance_penalty = 0.0; // lambda_e * pi * |x_e - b_e*dt|
};

// Imbalance-penalty settlement of the energy market.
double energy_revenue(const PriceQuote& quote, double x_e_mwh, double b_e_mw,
                      double dt_hours);

// Settlement price that makes the two-term (forward + imbalance) accounting
// equal the penalty form.
double implied_imbalance_price(const PriceQuote& quote, double delta_e_mwh);

double as_revenue(const PriceQuote& quote, const BidSet& bids);

// Annual capacity remuneration from accredited firm capacity: PV discounted
// by phi_pv, battery limited by the duration rule, total capped at the POI
// rating. Converts $/kW-month to $/year.
double capacity_revenue(const PriceQuote& quote, const DesignVector& design,
                        const PlantParams& params);

StepSettlement step_reward(const PriceQuote& quote, const DispatchRecord& record,
                           const BidSet& bids, const PlantParams& params);

// Episode return: annualized market revenue plus capacity remuneration minus
// the (eta-ramped) capital cost. Degradation stays inside the market sum by
// default so the design update optimizes the same objective the operational
// policy is rewarded on.
double episode_return(std::span<const StepSettlement> steps, double capacity_rev_per_year,
                      double capex_per_year, double w_anu, double eta,
                      bool include_degradation = true);

} // namespace hsz
