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

#include "mecrag/performance.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace mecrag::perf {

Decision Decision::zeros(std::size_t user_count) {
    return {std::vector<double>(user_count, 0.0), std::vector<double>(user_count, 0.0),
            std::vector<double>(user_count, 0.0)};
}

SlotState make_slot_state(const model::Scenario& scenario, std::size_t slot) {
    std::vector<double> budgets;
    budgets.reserve(scenario.user_count());
    const double slots = static_cast<double>(scenario.config.slot_count);
    for (const auto& u : scenario.users) budgets.push_back(u.energy_budget_j / slots);
    return make_slot_state(scenario, slot, std::move(budgets));
}

SlotState make_slot_state(const model::Scenario& scenario, std::size_t slot, std::vector<double> energy_budget_j) {
    SlotState state;
    state.config = scenario.config;
    state.users = scenario.users;
    state.task_bits = scenario.task_bits.at(slot);
    state.channel = channel::snapshot(scenario, slot);
    state.energy_budget_j = std::move(energy_budget_j);
    state.slot_index = slot;
    return state;
}

double local_latency(double alpha, double task_bits, double cycles_per_bit, double cycles_per_sec) {
    return (1.0 - alpha) * cycles_per_bit * task_bits / cycles_per_sec;
}

double local_energy(double alpha, double task_bits, double cycles_per_bit, double cycles_per_sec,
                    double energy_coeff) {
    return energy_coeff * cycles_per_sec * cycles_per_sec * (1.0 - alpha) * cycles_per_bit * task_bits;
}

double offload_latency(double alpha, double task_bits, double rate_bps) {
    if (alpha <= 0) return 0.0;
    if (rate_bps <= 0) return kUnserved;
    return alpha * task_bits / rate_bps;
}

double offload_energy(double power_w, double offload_latency_s) {
    if (power_w <= 0 || offload_latency_s <= 0) return 0.0;
    return power_w * offload_latency_s;
}

double mec_latency(double alpha, double task_bits, double server_cycles_per_bit, double beta,
                   double server_cycles_per_sec) {
    if (alpha <= 0) return 0.0;
    if (beta <= 0) return kUnserved;
    return alpha * server_cycles_per_bit * task_bits / (beta * server_cycles_per_sec);
}

double user_latency(double local_s, double offload_s, double mec_s) { return std::max(local_s, offload_s + mec_s); }

double SlotEvaluation::mean_latency_s() const {
    double sum = 0.0;
    for (const auto& u : users) sum += u.total_latency_s;
    return users.empty() ? 0.0 : sum / static_cast<double>(users.size());
}

UserEvaluation evaluate_user(const SlotState& state, std::size_t k, double alpha, double beta, double power_w,
                             double rate_bps) {
    const auto& user = state.users[k];
    const auto& cfg = state.config;
    const double bits = state.task_bits[k];
    UserEvaluation e;
    e.rate_bps = rate_bps;
    e.local_latency_s = local_latency(alpha, bits, user.cycles_per_bit, user.cycles_per_sec);
    e.offload_latency_s = offload_latency(alpha, bits, rate_bps);
    e.mec_latency_s = mec_latency(alpha, bits, cfg.server_cycles_per_bit, beta, cfg.server_cycles_per_sec);
    e.total_latency_s = user_latency(e.local_latency_s, e.offload_latency_s, e.mec_latency_s);
    e.local_energy_j = local_energy(alpha, bits, user.cycles_per_bit, user.cycles_per_sec, cfg.energy_coeff);
    e.offload_energy_j = offload_energy(power_w, e.offload_latency_s);
    return e;
}

SlotEvaluation evaluate(const SlotState& state, const Decision& decision) {
    const std::size_t k_count = state.user_count();
    if (decision.alpha.size() != k_count || decision.beta.size() != k_count || decision.power_w.size() != k_count) {
        throw model::InvalidInput(fmt::format("decision does not cover {} users", k_count));
    }
    const auto rates = channel::offload_rates(decision.power_w, state.channel.gains, state.config);
    SlotEvaluation ev;
    ev.slot = state.slot_index;
    ev.decision = decision;
    ev.users.reserve(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        ev.users.push_back(
            evaluate_user(state, k, decision.alpha[k], decision.beta[k], decision.power_w[k], rates[k]));
    }
    return ev;
}

SlotEvaluation evaluate_slot(const model::Scenario& scenario, std::size_t slot, const Decision& decision) {
    return evaluate(make_slot_state(scenario, slot), decision);
}

double slot_objective(const SlotState& state, const Decision& decision) {
    return evaluate(state, decision).mean_latency_s();
}

double objective(std::span<const SlotEvaluation> evaluations) {
    if (evaluations.empty()) throw model::InvalidInput("objective of an empty evaluation list");
    double sum = 0.0;
    std::size_t terms = 0;
    for (const auto& ev : evaluations) {
        for (const auto& u : ev.users) sum += u.total_latency_s;
        terms += ev.users.size();
    }
    return sum / static_cast<double>(terms);
}

bool ConstraintReport::feasible() const {
    return unserved == 0 && std::all_of(checks.begin(), checks.end(), [](const ConstraintCheck& c) { return c.passed; });
}

namespace {

void record(ConstraintCheck& check, double violation, double tolerance) {
    if (std::isnan(violation)) violation = std::numeric_limits<double>::infinity();
    check.worst_violation = std::max(check.worst_violation, violation);
    if (violation > tolerance) check.passed = false;
}

// Distance of x outside [lo, hi]; 0 inside. NaN counts as infinitely far.
double outside(double x, double lo, double hi) {
    if (std::isnan(x)) return std::numeric_limits<double>::infinity();
    return std::max({0.0, lo - x, x - hi});
}

}  // namespace

ConstraintReport check_constraints(const model::Scenario& scenario, std::span<const Decision> decisions) {
    ConstraintReport report;
    report.checks = {ConstraintCheck{"power_bound"}, ConstraintCheck{"alpha_range"}, ConstraintCheck{"beta_range"},
                     ConstraintCheck{"beta_sum"}, ConstraintCheck{"energy_budget"}};
    const std::size_t k_count = scenario.user_count();
    if (decisions.size() != scenario.slot_count()) {
        throw model::InvalidInput(fmt::format("need one decision per slot ({}), got {}", scenario.slot_count(),
                                              decisions.size()));
    }
    std::vector<double> energy(k_count, 0.0);
    for (std::size_t t = 0; t < decisions.size(); ++t) {
        const Decision& d = decisions[t];
        double beta_sum = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            record(report.checks[0], outside(d.power_w.at(k), 0.0, scenario.users[k].max_power_w), 0.0);
            record(report.checks[1], outside(d.alpha.at(k), 0.0, 1.0), 0.0);
            record(report.checks[2], outside(d.beta.at(k), 0.0, 1.0), 0.0);
            beta_sum += d.beta[k];
        }
        record(report.checks[3], std::max(0.0, beta_sum - 1.0), kConstraintTolerance);
        const SlotEvaluation ev = evaluate_slot(scenario, t, d);
        for (std::size_t k = 0; k < k_count; ++k) {
            energy[k] += ev.users[k].energy_j();
            if (std::isinf(ev.users[k].total_latency_s)) ++report.unserved;
        }
    }
    for (std::size_t k = 0; k < k_count; ++k) {
        record(report.checks[4], std::max(0.0, energy[k] - scenario.users[k].energy_budget_j), kConstraintTolerance);
    }
    return report;
}

SlotCheck check_slot(const SlotState& state, const Decision& d) {
    SlotCheck check;
    const std::size_t k_count = state.user_count();
    if (d.size() != k_count || d.beta.size() != k_count || d.power_w.size() != k_count) {
        return {false, false, false, false};
    }
    double beta_sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        if (outside(d.alpha[k], 0.0, 1.0) > 0 || outside(d.beta[k], 0.0, 1.0) > 0 ||
            outside(d.power_w[k], 0.0, state.users[k].max_power_w) > 0) {
            check.bounds_ok = false;
        }
        beta_sum += d.beta[k];
    }
    if (!check.bounds_ok) return check;
    check.beta_sum_ok = beta_sum <= 1.0 + kConstraintTolerance;
    const SlotEvaluation ev = evaluate(state, d);
    for (std::size_t k = 0; k < k_count; ++k) {
        if (ev.users[k].energy_j() > state.energy_budget_j[k] + kConstraintTolerance) check.energy_ok = false;
        if (std::isinf(ev.users[k].total_latency_s)) check.served = false;
    }
    return check;
}

void write_evaluation_csv(std::ostream& out, std::span<const SlotEvaluation> evaluations) {
    out << "slot,user,alpha,beta,power_w,rate_bps,local_s,off_s,mec_s,total_s,local_j,off_j\n";
    for (const auto& ev : evaluations) {
        for (std::size_t k = 0; k < ev.users.size(); ++k) {
            const auto& u = ev.users[k];
            fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{}\n", ev.slot, k, ev.decision.alpha[k],
                       ev.decision.beta[k], ev.decision.power_w[k], u.rate_bps, u.local_latency_s,
                       u.offload_latency_s, u.mec_latency_s, u.total_latency_s, u.local_energy_j,
                       u.offload_energy_j);
        }
    }
}

void to_json(nlohmann::json& j, const Decision& d) {
    j = nlohmann::json{{"alpha", d.alpha}, {"beta", d.beta}, {"power_w", d.power_w}};
}

void from_json(const nlohmann::json& j, Decision& d) {
    j.at("alpha").get_to(d.alpha);
    j.at("beta").get_to(d.beta);
    j.at("power_w").get_to(d.power_w);
}

void to_json(nlohmann::json& j, const ConstraintReport& r) {
    j = nlohmann::json::object();
    for (const auto& c : r.checks) {
        j[c.name] = {{"passed", c.passed}, {"worst_violation", c.worst_violation}};
    }
    j["unserved"] = r.unserved;
    j["feasible"] = r.feasible();
}

}  // namespace mecrag::perf
