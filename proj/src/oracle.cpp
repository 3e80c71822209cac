#include "hybridsizer/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "hybridsizer/parallel.hpp"

namespace hsz {

void ActionGrid::validate() const {
    for (int c : counts) {
        if (c < 2) throw std::invalid_argument("grid needs at least 2 points per dimension");
        if (c > 255) throw std::invalid_argument("grid is limited to 255 points per dimension");
    }
}

std::uint64_t ActionGrid::combos_per_step() const {
    std::uint64_t n = 1;
    for (int c : counts) n *= static_cast<std::uint64_t>(c);
    return n;
}

std::vector<double> ActionGrid::points(std::size_t dim) const {
    const int c = counts.at(dim);
    std::vector<double> out(static_cast<std::size_t>(c));
    for (int i = 0; i < c; ++i) out[i] = static_cast<double>(i) / (c - 1);
    return out;
}

AgentAction ActionGrid::action_at(const std::array<int, 5>& idx) const {
    auto value = [&](std::size_t d) {
        return static_cast<double>(idx[d]) / (counts[d] - 1);
    };
    return AgentAction::clamped(value(0), value(1), value(2), value(3), value(4));
}

namespace {

std::uint64_t digest_key(double digest) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &digest, sizeof(bits));
    return bits;
}

struct SearchNode {
    std::unique_ptr<Env> env;
    double cumulative = 0.0;
    std::vector<std::uint8_t> prefix; // 5 grid indices per step
};

bool lex_less(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace

OracleResult exhaustive_optimum(const std::function<std::unique_ptr<Env>()>& make_env,
                                const ActionGrid& grid, std::size_t horizon,
                                std::uint64_t eval_budget, int workers) {
    grid.validate();
    if (horizon < 1 || horizon > 3)
        throw std::invalid_argument("oracle horizon must be between 1 and 3");

    // all grid combos in lexicographic order (dimension e most significant)
    const std::uint64_t n_combos = grid.combos_per_step();
    std::vector<std::array<int, 5>> combos;
    combos.reserve(n_combos);
    std::array<int, 5> idx{};
    for (;;) {
        combos.push_back(idx);
        int d = 4;
        while (d >= 0 && ++idx[d] == grid.counts[d]) idx[d--] = 0;
        if (d < 0) break;
    }
    std::vector<AgentAction> actions(combos.size());
    for (std::size_t i = 0; i < combos.size(); ++i) actions[i] = grid.action_at(combos[i]);

    auto base = make_env();
    if (horizon > base->horizon())
        throw std::invalid_argument("horizon exceeds the environment's episode length");
    base->reset();

    std::vector<SearchNode> level;
    {
        SearchNode root;
        root.env = std::move(base);
        level.push_back(std::move(root));
    }

    std::atomic<std::uint64_t> evaluations{0};
    std::atomic<bool> over_budget{false};

    struct Best {
        bool valid = false;
        double ret = 0.0;
        std::vector<std::uint8_t> sequence;
    };

    auto better = [&](double ret, const std::vector<std::uint8_t>& seq, const Best& inc) {
        if (!inc.valid) return true;
        if (ret != inc.ret) return ret > inc.ret;
        return lex_less(seq, inc.sequence);
    };

    for (std::size_t t = 0; t < horizon; ++t) {
        const bool last = t + 1 == horizon;
        if (!last) {
            // merge prefixes by post-state: identical states share identical
            // futures, so only the best (return, lex) prefix per state survives
            std::unordered_map<std::uint64_t, SearchNode> merged;
            merged.reserve(level.size() * combos.size() / 4 + 16);
            for (SearchNode& node : level) {
                for (std::size_t c = 0; c < combos.size(); ++c) {
                    if (evaluations.fetch_add(1) >= eval_budget)
                        throw std::runtime_error("enumeration budget exceeded");
                    auto env = node.env->clone();
                    const EnvStepResult r = env->step(actions[c]);
                    const double cum = node.cumulative + r.reward;
                    std::vector<std::uint8_t> prefix = node.prefix;
                    for (int d = 0; d < 5; ++d)
                        prefix.push_back(static_cast<std::uint8_t>(combos[c][d]));
                    const std::uint64_t key = digest_key(env->state_digest());
                    auto it = merged.find(key);
                    if (it == merged.end()) {
                        SearchNode next;
                        next.env = std::move(env);
                        next.cumulative = cum;
                        next.prefix = std::move(prefix);
                        merged.emplace(key, std::move(next));
                    } else if (cum > it->second.cumulative ||
                               (cum == it->second.cumulative &&
                                lex_less(prefix, it->second.prefix))) {
                        it->second.env = std::move(env);
                        it->second.cumulative = cum;
                        it->second.prefix = std::move(prefix);
                    }
                }
            }
            level.clear();
            level.reserve(merged.size());
            for (auto& [key, node] : merged) level.push_back(std::move(node));
            std::sort(level.begin(), level.end(), [](const SearchNode& a, const SearchNode& b) {
                return lex_less(a.prefix, b.prefix);
            });
            continue;
        }

        // final step: fold the maximum directly, in parallel over nodes
        const int nworkers = std::max(1, workers);
        const std::size_t chunk =
            (level.size() + static_cast<std::size_t>(nworkers) - 1) / nworkers;
        const std::size_t n_chunks = chunk == 0 ? 1 : (level.size() + chunk - 1) / chunk;
        std::vector<Best> chunk_best(n_chunks);
        parallel_for(n_chunks, nworkers, [&](std::size_t ci) {
            const std::size_t lo = ci * chunk;
            const std::size_t hi = std::min(level.size(), lo + chunk);
            Best local;
            for (std::size_t ni = lo; ni < hi; ++ni) {
                const SearchNode& node = level[ni];
                for (std::size_t c = 0; c < combos.size(); ++c) {
                    if (evaluations.fetch_add(1) >= eval_budget) {
                        over_budget.store(true);
                        return;
                    }
                    auto env = node.env->clone();
                    const EnvStepResult r = env->step(actions[c]);
                    const double cum = node.cumulative + r.reward;
                    if (!local.valid || cum > local.ret ||
                        (cum == local.ret && [&] {
                            std::vector<std::uint8_t> seq = node.prefix;
                            for (int d = 0; d < 5; ++d)
                                seq.push_back(static_cast<std::uint8_t>(combos[c][d]));
                            return lex_less(seq, local.sequence);
                        }())) {
                        local.valid = true;
                        local.ret = cum;
                        local.sequence = node.prefix;
                        for (int d = 0; d < 5; ++d)
                            local.sequence.push_back(static_cast<std::uint8_t>(combos[c][d]));
                    }
                }
            }
            chunk_best[ci] = std::move(local);
        });
        if (over_budget.load()) throw std::runtime_error("enumeration budget exceeded");

        Best best;
        for (const Best& b : chunk_best)
            if (b.valid && better(b.ret, b.sequence, best)) best = b;
        if (!best.valid) throw std::logic_error("empty enumeration level");

        OracleResult out;
        out.best_return = best.ret;
        out.evaluations = evaluations.load();
        for (std::size_t s = 0; s < horizon; ++s) {
            std::array<int, 5> gi{};
            for (int d = 0; d < 5; ++d) gi[d] = best.sequence[s * 5 + d];
            out.best_indices.push_back(gi);
            out.best_actions.push_back(grid.action_at(gi));
        }
        return out;
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Feasibility auditor. The inequalities below are re-stated from the plant
// and market constraints on purpose; it must not share code with the bid
// construction or the dispatcher it audits.
// ---------------------------------------------------------------------------

namespace {

struct Auditor {
    AuditReport report;

    double tol(double a, double b) const {
        return 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
    }
    void le(std::size_t step, const char* name, double lhs, double rhs) {
        if (lhs > rhs + tol(lhs, rhs))
            report.violations.push_back({step, name, lhs, rhs, rhs - lhs});
    }
    void ge(std::size_t step, const char* name, double lhs, double rhs) {
        if (lhs < rhs - tol(lhs, rhs))
            report.violations.push_back({step, name, lhs, rhs, lhs - rhs});
    }
    void eq(std::size_t step, const char* name, double lhs, double rhs) {
        if (std::abs(lhs - rhs) > tol(lhs, rhs))
            report.violations.push_back({step, name, lhs, rhs, -std::abs(lhs - rhs)});
    }
};

} // namespace

AuditReport feasibility_audit(const EpisodeTrace& trace, const DesignVector& design,
                              const PlantParams& params) {
    Auditor a;
    const double dt = params.dt_hours;
    const bool hybrid = trace.mode == PlantMode::hybrid;
    const bool no_battery =
        design.e_bat_mwh < kBatteryEps || design.p_bat_mw < kBatteryEps;

    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const StepRecord& s = trace.steps[i];
        const BidSet& b = s.bids;
        const DispatchRecord& r = s.record;
        const double soc = s.obs.soc;

        // chargeable / dischargeable energy at bid time, re-derived
        const double e_up = no_battery
                                ? 0.0
                                : params.eta_d * design.e_bat_mwh * (soc - params.s_min);
        const double e_dn = no_battery
                                ? 0.0
                                : design.e_bat_mwh * (params.s_max - soc) / params.eta_c;

        // action range
        for (double v : {s.action.e, s.action.res, s.action.up, s.action.dn, s.action.imb}) {
            a.ge(i, "action_range", v, 0.0);
            a.le(i, "action_range", v, 1.0);
        }

        // bid sign and split structure
        for (double v : {b.b_res, b.b_up, b.b_dn, b.b_up_pv, b.b_up_bat, b.b_dn_bat,
                         b.cap_dis, b.cap_chg, b.m_pv})
            a.ge(i, "bid_nonnegative", v, 0.0);
        a.eq(i, "regup_split", b.b_up, b.b_up_pv + b.b_up_bat);

        // POI box for the energy bid. The hybrid schedule must leave AS
        // headroom in both directions; co-located resources bid
        // independently through separate inverters, so their sum is only
        // bounded above by the physical cap and below by the battery's
        // scheduled charging.
        if (hybrid) {
            a.ge(i, "poi_bid_lower", b.b_e, params.p_poi_min_mw + b.b_dn);
            a.le(i, "poi_bid_upper", b.b_e, params.p_poi_max_mw - b.b_res - b.b_up);
        } else {
            a.ge(i, "poi_bid_lower", b.b_e, params.p_poi_min_mw - b.cap_chg);
            a.le(i, "poi_bid_upper", b.b_e, params.p_poi_max_mw);
        }
        a.le(i, "as_capacity_sum", b.b_res + b.b_up + b.b_dn,
             params.p_poi_max_mw - params.p_poi_min_mw);

        // converter limits at bid time
        a.le(i, "converter_bid_up", b.b_res + b.b_up_bat, design.p_bat_mw);
        a.le(i, "converter_bid_dn", b.b_dn_bat, design.p_bat_mw);

        // worst-case AS energy coverage at bid time
        a.le(i, "as_energy_coverage_up",
             b.b_res * params.h_res_hours + b.b_up_bat * params.h_up_hours, e_up);
        a.le(i, "as_energy_coverage_dn", b.b_dn_bat * params.h_dn_hours, e_dn);

        // SOC band and chaining
        a.ge(i, "soc_lower", s.soc_after, params.s_min);
        a.le(i, "soc_upper", s.soc_after, params.s_max);
        if (i + 1 < trace.steps.size() &&
            trace.steps[i + 1].obs.soc != s.soc_after)
            a.report.violations.push_back(
                {i, "soc_chain", trace.steps[i + 1].obs.soc, s.soc_after, 0.0});

        // SOC dynamics re-derivation
        if (no_battery) {
            a.eq(i, "absent_battery_flows",
                 r.x_chg_e_mwh + r.x_chg_as_mwh + r.x_dis_e_mwh + r.x_dis_as_mwh, 0.0);
            a.eq(i, "soc_dynamics", s.soc_after, soc);
        } else {
            const double soc_next =
                soc + params.eta_c * (r.x_chg_e_mwh + r.x_chg_as_mwh) / design.e_bat_mwh -
                (r.x_dis_e_mwh + r.x_dis_as_mwh) / (params.eta_d * design.e_bat_mwh);
            a.eq(i, "soc_dynamics", s.soc_after, soc_next);
        }

        // flows and settlement identities
        a.le(i, "flow_exclusive", std::min(r.x_chg_e_mwh, r.x_dis_e_mwh), 0.0);
        a.eq(i, "settlement_identity", r.x_e_mwh, b.b_e * dt + r.delta_e_mwh);
        a.le(i, "activation_res", s.activation.h_res, params.h_res_hours);
        a.le(i, "activation_up", s.activation.h_up, params.h_up_hours);
        a.le(i, "activation_dn", s.activation.h_dn, params.h_dn_hours);
        a.eq(i, "as_discharge_flow", r.x_dis_as_mwh,
             b.b_res * s.activation.h_res + b.b_up_bat * s.activation.h_up);

        // converter limits at dispatch including worst-case activation
        if (!no_battery) {
            a.le(i, "converter_dispatch_up",
                 r.x_dis_e_mwh / dt + b.b_res + b.b_up_bat, design.p_bat_mw);
            a.le(i, "converter_dispatch_dn", r.x_chg_e_mwh / dt + b.b_dn_bat,
                 design.p_bat_mw);
        }

        // realized POI bounds; the lower bound is relaxed by any bust of the
        // PV reservation (settled as imbalance, not dispatch) and, for the
        // co-located battery, by its own scheduled charging
        a.le(i, "poi_realized_upper", r.x_e_mwh / dt, params.p_poi_max_mw);
        const double reservation_bust = std::max(0.0, b.b_up_pv - s.p_avail_mw);
        const double charge_draw = hybrid ? 0.0 : r.x_chg_e_mwh / dt;
        a.ge(i, "poi_realized_lower", r.x_e_mwh / dt,
             params.p_poi_min_mw - reservation_bust - charge_draw);

        if (hybrid) {
            // imbalance branch signs
            const double available = s.p_avail_mw - b.b_up_pv;
            if (b.b_e > available + a.tol(b.b_e, available))
                a.le(i, "shortfall_sign", r.delta_e_mwh, 0.0);
            else
                a.ge(i, "surplus_sign", r.delta_e_mwh, 0.0);

            // DC-side balance of the energy-market component
            a.eq(i, "dc_balance", r.x_e_mwh,
                 (s.p_avail_mw - b.b_up_pv) * dt - r.x_cur_mwh - r.x_chg_e_mwh +
                     r.x_dis_e_mwh);

            // curtailment only once charging and the POI cap are exhausted
            if (r.x_cur_mwh > 1e-9)
                a.ge(i, "curtail_only_at_poi_cap", s.p_avail_mw * dt - r.x_chg_e_mwh,
                     params.p_poi_max_mw * dt);

            // AS charging flow capped by remaining chargeable energy
            a.le(i, "as_charge_flow", r.x_chg_as_mwh,
                 std::max(0.0, std::min(b.b_dn_bat * s.activation.h_dn,
                                        e_dn - r.x_chg_e_mwh)));
        } else {
            a.eq(i, "as_charge_flow", r.x_chg_as_mwh, b.b_dn_bat * s.activation.h_dn);
        }
        a.ge(i, "curtailment_nonnegative", r.x_cur_mwh, 0.0);
    }
    a.report.steps_checked = trace.steps.size();
    return a.report;
}

std::string AuditReport::to_json() const {
    nlohmann::json j;
    j["steps_checked"] = steps_checked;
    j["violations"] = nlohmann::json::array();
    for (const AuditViolation& v : violations) {
        nlohmann::json e;
        e["step"] = v.step;
        e["constraint"] = v.constraint;
        e["lhs"] = v.lhs;
        e["rhs"] = v.rhs;
        e["margin"] = v.margin;
        j["violations"].push_back(e);
    }
    return j.dump(2);
}

} // namespace hsz
