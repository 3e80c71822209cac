#pragma once

#include <functional>
#include <span>

#include "hybridsizer/plant.hpp"

namespace hsz {

// Normalized agent decision. Components are clamped into [0,1] at
// construction so downstream code never sees out-of-range fractions.
struct AgentAction {
    double e = 0.0;   // position within the feasible energy-bid range
    double res = 0.0; // fraction of POI capacity offered as contingency reserve
    double up = 0.0;  // fraction of remaining capacity offered as regulation-up
    double dn = 0.0;  // fraction of remaining capacity offered as regulation-down
    double imb = 0.0; // battery share devoted to real-time imbalance mitigation

    static AgentAction clamped(double a_e, double a_res, double a_up, double a_dn,
                               double a_imb);
};

struct PvForecast {
    double p_pred_mw = 0.0;
};

// Cleared commitments for one interval plus the internal allocation splits
// and the residual battery margins left after AS allocation.
struct BidSet {
    double b_e = 0.0;      // scheduled POI injection, MW (may be negative with a bidirectional POI)
    double b_res = 0.0;    // contingency reserve capacity, MW
    double b_up = 0.0;     // regulation-up capacity, MW
    double b_dn = 0.0;     // regulation-down capacity, MW
    double b_up_pv = 0.0;  // PV share of the regulation-up commitment
    double b_up_bat = 0.0; // battery share of the regulation-up commitment
    double b_dn_bat = 0.0; // battery share of the regulation-down commitment
    double cap_dis = 0.0;  // B_dis: dischargeable margin after AS allocation, MW
    double cap_chg = 0.0;  // B_chg: chargeable margin after AS allocation, MW
    double m_pv = 0.0;     // guaranteed PV capacity usable for AS, MW
};

// Forecaster maps the history of observed available PV (oldest first, most
// recent last) to the next interval's prediction. Pluggable so learned
// predictors can replace the default.
using Forecaster = std::function<double(std::span<const double> history)>;

// Default: next interval equals the most recent observation.
double persistence_forecast(std::span<const double> history);

// Optional exponential-smoothing forecaster with weight alpha on the newest
// observation.
Forecaster exponential_smoothing_forecaster(double alpha);

PvForecast forecast_pv(std::span<const double> history,
                       const Forecaster& forecaster = persistence_forecast);

// --- serial allocation stages (reserve -> reg-up -> reg-dn -> energy) ---

double reserve_bid(double a_res, double e_up_mwh, const DesignVector& design,
                   const PlantParams& params);

struct RegUpBid {
    double b_up = 0.0;
    double b_up_pv = 0.0;
    double b_up_bat = 0.0;
};
RegUpBid regup_bid(double a_up, double b_res, double e_up_mwh, double p_pred_mw,
                   const DesignVector& design, const PlantParams& params);

struct RegDnBid {
    double b_dn = 0.0;
    double b_dn_bat = 0.0;
};
RegDnBid regdn_bid(double a_dn, double b_res, double b_up, double b_up_pv,
                   double e_dn_mwh, double p_pred_mw, const DesignVector& design,
                   const PlantParams& params);

struct EnergyBidResult {
    double b_e = 0.0;
    double cap_dis = 0.0;
    double cap_chg = 0.0;
};
// The desired position is clamped first into the prediction-based range and
// then into the POI range; when the two ranges are disjoint the physical POI
// bound wins and the nearest POI-feasible point is taken.
EnergyBidResult energy_bid(double a_e, double b_res, double b_up, double b_up_pv,
                           double b_up_bat, double b_dn, double b_dn_bat,
                           double e_up_mwh, double e_dn_mwh, double p_pred_mw,
                           const DesignVector& design, const PlantParams& params);

// Full serial composition for the DC-coupled hybrid configuration. The
// returned bids are hard-feasible for any action in [0,1]^5, any SOC within
// bounds, any nonnegative prediction and any nonnegative design.
BidSet build_hybrid_bids(const AgentAction& action, PlantState state,
                         const PvForecast& forecast, const DesignVector& design,
                         const PlantParams& params);

// AC-coupled co-located configuration: the same serial strategy with the PV
// inverter cap applied, then split into separate PV and battery bid sets.
// The battery energy bid is signed (negative = scheduled charging).
struct ColocatedBids {
    BidSet pv;
    BidSet bat;
    double b_e_total = 0.0; // b_e_pv + clipped battery bid

    double b_res_total() const { return pv.b_res + bat.b_res; }
    double b_up_total() const { return pv.b_up + bat.b_up; }
    double b_dn_total() const { return pv.b_dn + bat.b_dn; }
};
ColocatedBids build_colocated_bids(const AgentAction& action, PlantState state,
                                   const PvForecast& forecast, const DesignVector& design,
                                   const PlantParams& params, double p_inv_mw);

} // namespace hsz
