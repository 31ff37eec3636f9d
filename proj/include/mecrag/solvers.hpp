// Copyright 2026 The mecrag Authors.
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecrag/performance.hpp"
#include "mecrag/system_model.hpp"

namespace mecrag::solvers {

using perf::Decision;
using perf::SlotState;

enum class SolverKind { LocalOnly, FullOffloadEqual, RandomFeasible, AlternatingHeuristic, GridOracle, RagLlm };

/// How the cumulative energy budget is split across slots.
enum class BudgetPolicy {
    PerSlot,    ///< E_k^max / T every slot
    CarryOver,  ///< unused allowance rolls forward: (E_k^max - spent) / slots_left
};

struct SolverSpec {
    SolverKind kind = SolverKind::AlternatingHeuristic;
    int grid_resolution = 11;
    int max_rounds = 20;
    std::uint64_t seed = 0;
    int power_grid_points = 21;
    /// Oracle refuses grids whose raw size exceeds this many evaluations.
    double oracle_budget = 1e8;
    /// Merge the alternating heuristic's decision into the oracle's axes.
    bool oracle_anchor_heuristic = true;
    BudgetPolicy budget_policy = BudgetPolicy::PerSlot;

    /// Throws model::InvalidInput on grid_resolution < 2 or max_rounds < 1.
    void validate() const;
};

std::string_view to_string(SolverKind kind);
SolverKind parse_solver_kind(std::string_view name);
/// Display name including the knobs that distinguish two specs of one kind.
std::string label(const SolverSpec& spec);

void to_json(nlohmann::json& j, const SolverSpec& spec);
/// Accepts either a bare name ("grid-oracle") or an object with "kind".
void from_json(const nlohmann::json& j, SolverSpec& spec);

class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(double required, double budget);
    [[nodiscard]] double required() const { return required_; }

private:
    double required_;
};

Decision solve_local_only(const SlotState& state);
Decision solve_full_offload_equal(const SlotState& state);
Decision solve_random_feasible(const SlotState& state, const SolverSpec& spec);

/// Offloading ratio that equalizes the local and remote latency branches:
/// a / (a + 1/r + phi_s/(beta F)) with a = phi_k / f_k, clamped to [0, 1].
/// Zero when the remote branch cannot be served.
double equalizing_alpha(double local_seconds_per_bit, double rate_bps, double server_cycles_per_bit, double beta,
                        double server_cycles_per_sec);

/// Moves alpha to the nearest point where (1-a)*full_local_j + a*offload_j_per_alpha <= budget.
/// If no alpha in [0, 1] fits, returns the endpoint with the lower energy.
double project_alpha_to_budget(double alpha, double full_local_j, double offload_j_per_alpha, double budget_j);

struct AlternatingTrace {
    /// Slot objective before the first round, then after each round.
    std::vector<double> objectives;
};

/// Block-coordinate descent over (alpha, beta, power). Always feasible.
Decision solve_alternating(const SlotState& state, const SolverSpec& spec, AlternatingTrace* trace = nullptr);

/// Raw grid size the oracle would enumerate with these anchors.
double oracle_grid_size(const SlotState& state, const SolverSpec& spec, std::span<const Decision> anchors = {});

/// Exhaustive search over alpha and power axes and the beta simplex.
/// Axes contain 0, 1, P^max, 1/K and every coordinate of the anchors, so the
/// anchors (and the trivial baselines) are grid points. Ties go to the
/// lexicographically smallest (alpha, beta, power).
Decision solve_grid_oracle(const SlotState& state, const SolverSpec& spec, std::span<const Decision> anchors);

/// Oracle anchored on the local-only and full-offload baselines, plus the
/// alternating heuristic when spec.oracle_anchor_heuristic is set.
Decision solve_grid_oracle(const SlotState& state, const SolverSpec& spec);

/// Projects an arbitrary triple onto the slot's feasible set: clamps, beta
/// rescaling, dropping unservable offloads, then power bisection against the
/// slot energy allowance. A feasible input comes back unchanged.
Decision repair_decision(Decision raw, const SlotState& state, std::vector<std::string>* diagnostics = nullptr);

/// Dispatch for every kind except RagLlm, which lives in the llm module.
Decision solve_slot(const SlotState& state, const SolverSpec& spec);

struct ScenarioSolution {
    std::vector<Decision> decisions;
    std::vector<perf::SlotEvaluation> evaluations;
    double objective = 0.0;
    perf::ConstraintReport report;
};

using SlotSolver = std::function<Decision(const SlotState&)>;

/// Solves slot by slot, handing each slot the allowance of `policy`.
ScenarioSolution solve_scenario(const model::Scenario& scenario, BudgetPolicy policy, const SlotSolver& solve);
ScenarioSolution solve_scenario(const model::Scenario& scenario, const SolverSpec& spec);

}  // namespace mecrag::solvers
