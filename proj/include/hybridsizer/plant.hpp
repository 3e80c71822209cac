#pragma once

#include <stdexcept>

namespace hsz {

// Below this size (MW or MWh) the battery is treated as absent so the SOC
// update never divides by a vanishing energy capacity.
inline constexpr double kBatteryEps = 1e-6;

// SOC excursions beyond this tolerance are a hard fault: the bid construction
// guarantees feasibility, so a violation means an upstream bug.
inline constexpr double kSocFaultTol = 1e-9;

// Sizing decision: PV nameplate, battery energy capacity, battery converter
// rating.
struct DesignVector {
    double p_pv_mw = 0.0;
    double e_bat_mwh = 0.0;
    double p_bat_mw = 0.0;

    bool battery_absent() const {
        return e_bat_mwh < kBatteryEps || p_bat_mw < kBatteryEps;
    }
};

// Physical and market-rule parameters of the plant. Defaults follow the
// reference simulation setup.
struct PlantParams {
    double p_poi_min_mw = 0.0;  // unidirectional inverter by default
    double p_poi_max_mw = 10.0;
    double eta_c = 0.95;
    double eta_d = 0.95;
    double s_min = 0.1;
    double s_max = 0.9;
    double beta_deg = 1.0;      // $/MWh of battery throughput
    double dt_hours = 1.0;
    double h_res_hours = 0.5;   // contingency reserve duration requirement
    double h_up_hours = 0.35;   // regulation-up duration requirement
    double h_dn_hours = 0.35;   // regulation-down duration requirement
    double kappa = 0.7;         // PV reliability factor for AS provision
    double h_cr_hours = 4.0;    // capacity-accreditation duration rule
    double phi_pv = 0.4;        // firm PV capacity factor

    double poi_span_mw() const { return p_poi_max_mw - p_poi_min_mw; }

    void validate() const;
};

struct PlantState {
    double soc = 0.5;
};

// Capital cost assumptions. A nonzero discount rate switches the
// annualization from straight-line to a capital recovery factor.
struct CostParams {
    double c_pv_per_kw = 1080.0;
    double life_pv_years = 20.0;
    double c_bat_e_per_kwh = 241.0;
    double c_bat_p_per_kw = 372.0;
    double life_bat_years = 5.0;
    double lambda_cap_kw_month = 8.31;
    double discount_rate = 0.0;

    void validate() const;
};

struct EnergyMargins {
    double e_up_mwh = 0.0; // dischargeable energy above S_min, grid side
    double e_dn_mwh = 0.0; // chargeable energy below S_max, grid side
};

EnergyMargins energy_margins(PlantState state, const DesignVector& design,
                             const PlantParams& params);

// Advances the SOC by the realized grid-side energy flows (MWh). Flows are
// split between energy-market and AS-activation components only for
// accounting; the dynamics treat them identically. Faults if the post-state
// leaves [s_min, s_max] beyond tolerance or if an absent battery is asked to
// move energy.
PlantState soc_step(PlantState state, double x_chg_e_mwh, double x_chg_as_mwh,
                    double x_dis_e_mwh, double x_dis_as_mwh,
                    const DesignVector& design, const PlantParams& params);

// Linear degradation cost over total throughput (MWh).
double degradation_cost(double x_chg_total_mwh, double x_dis_total_mwh,
                        const PlantParams& params);

// Annualized capital expenditure in $/year.
double annualized_capex(const DesignVector& design, const CostParams& costs);

} // namespace hsz
