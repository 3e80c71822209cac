#pragma once

#include <utility>

#include "hybridsizer/bidding.hpp"
#include "hybridsizer/plant.hpp"
#include "hybridsizer/rng.hpp"

namespace hsz {

// Realized activation durations within one settlement interval (hours).
struct ActivationOutcome {
    double h_res = 0.0;
    double h_up = 0.0;
    double h_dn = 0.0;
};

// Activation model. The default produces no activations, which keeps runs
// deterministic and attributes SOC movement entirely to energy-market flows.
// The stochastic model triggers reserve events with a configured probability
// and draws regulation durations uniformly below their requirement.
struct ActivationConfig {
    enum class Model { none, stochastic };
    Model model = Model::none;
    double p_res_event = 0.0;
};

ActivationOutcome sample_activation(const ActivationConfig& config,
                                    const PlantParams& params, Rng& rng);

// Realized per-step flows and imbalance. Energies in MWh; p_poi is the mean
// net injection attributed to the energy market over the interval.
struct DispatchRecord {
    double x_e_mwh = 0.0;     // realized net energy injection
    double delta_e_mwh = 0.0; // signed imbalance x_e - b_e*dt
    double x_chg_e_mwh = 0.0;
    double x_dis_e_mwh = 0.0;
    double x_chg_as_mwh = 0.0;
    double x_dis_as_mwh = 0.0;
    double x_cur_mwh = 0.0;   // curtailed PV energy
    double p_poi_mw = 0.0;
};

struct RealtimeFlows {
    double x_chg_e_mwh = 0.0;
    double x_dis_e_mwh = 0.0;
    double x_cur_mwh = 0.0;
    double delta_e_mwh = 0.0;
};

// Resolves the deviation between the scheduled energy bid and the realized
// PV, deciding battery mitigation (per a_imb), curtailment and the residual
// imbalance. Shortfall and surplus branches are mutually exclusive.
RealtimeFlows resolve_realtime(const BidSet& bids, double p_avail_mw, double a_imb,
                               PlantState state, const DesignVector& design,
                               const PlantParams& params);

struct AsFlows {
    double x_chg_as_mwh = 0.0;
    double x_dis_as_mwh = 0.0;
};

// Battery energy moved by AS activations. The charging term is capped by the
// chargeable energy remaining after the energy-market charge so the SOC
// bound survives any admissible activation.
AsFlows as_activation_flows(const BidSet& bids, const ActivationOutcome& activation,
                            double x_chg_e_mwh, double e_dn_mwh);

// Full real-time step for the hybrid configuration: resolve deviations,
// apply AS activations, advance the SOC. Propagates the SOC hard fault.
std::pair<PlantState, DispatchRecord> apply_step(PlantState state, const BidSet& bids,
                                                 double p_avail_mw,
                                                 const ActivationOutcome& activation,
                                                 double a_imb, const DesignVector& design,
                                                 const PlantParams& params);

// Real-time step for the co-located configuration: the battery follows its
// schedule exactly, PV deviations settle as the sole imbalance, and PV
// production above the PV inverter rating is lost.
std::pair<PlantState, DispatchRecord> apply_step_colocated(
    PlantState state, const ColocatedBids& bids, double p_avail_mw,
    const ActivationOutcome& activation, const DesignVector& design,
    const PlantParams& params, double p_inv_mw);

} // namespace hsz
