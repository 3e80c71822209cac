#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hybridsizer/env.hpp"

namespace hsz {

// Per-dimension discretization of the action space. Each dimension gets an
// evenly spaced grid on [0,1] including both endpoints.
struct ActionGrid {
    std::array<int, 5> counts{2, 2, 2, 2, 2}; // order: e, res, up, dn, imb

    void validate() const;
    std::uint64_t combos_per_step() const;
    std::vector<double> points(std::size_t dim) const;
    AgentAction action_at(const std::array<int, 5>& idx) const;
};

struct OracleResult {
    double best_return = 0.0;
    std::vector<AgentAction> best_actions;          // length = horizon
    std::vector<std::array<int, 5>> best_indices;   // grid indices per step
    std::uint64_t evaluations = 0;                  // env steps performed
};

// Exhaustive search over grid action sequences on a deterministic
// environment with horizon <= 3. Prefixes reaching an identical state with a
// lower cumulative return can never win and are merged, which preserves the
// full-enumeration argmax exactly; ties keep the lexicographically smallest
// sequence (dimension order e, res, up, dn, imb). Throws when the number of
// env-step evaluations exceeds eval_budget.
OracleResult exhaustive_optimum(const std::function<std::unique_ptr<Env>()>& make_env,
                                const ActionGrid& grid, std::size_t horizon,
                                std::uint64_t eval_budget = 200'000'000,
                                int workers = 1);

struct AuditViolation {
    std::size_t step = 0;
    std::string constraint;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0; // rhs - lhs for <= constraints
};

struct AuditReport {
    std::vector<AuditViolation> violations;
    std::size_t steps_checked = 0;

    bool clean() const { return violations.empty(); }
    std::string to_json() const;
};

// Re-derives every operational bound from raw trace data with an
// independent implementation of the inequality set: POI limits, converter
// limits, SOC bounds and dynamics, worst-case AS energy coverage, DC
// balance, settlement identity and imbalance sign exclusivity. Reports all
// violations; never throws on a dirty trace.
AuditReport feasibility_audit(const EpisodeTrace& trace, const DesignVector& design,
                              const PlantParams& params);

} // namespace hsz
