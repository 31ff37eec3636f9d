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

// Latency and energy accounting for partial offloading, the slot-averaged
// latency objective, and the feasibility checks on a decision.

#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecrag/channel.hpp"
#include "mecrag/system_model.hpp"

namespace mecrag::perf {

/// Latency of a user whose offloaded share can never finish (alpha > 0 with
/// a zero rate or zero server share). Orders above every finite latency.
inline constexpr double kUnserved = std::numeric_limits<double>::infinity();

/// Absolute slack on the beta-sum and energy bounds.
inline constexpr double kConstraintTolerance = 1e-9;

/// One slot's decision: offloading ratio, server share and transmit power per user.
struct Decision {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> power_w;

    static Decision zeros(std::size_t user_count);

    [[nodiscard]] std::size_t size() const { return alpha.size(); }

    friend bool operator==(const Decision&, const Decision&) = default;
};

/// Everything needed to evaluate one slot, detached from the Scenario.
struct SlotState {
    model::SystemConfig config;
    std::vector<model::MobileUser> users;
    std::vector<double> task_bits;
    channel::ChannelSnapshot channel;
    /// Per-user energy allowance for this slot (J).
    std::vector<double> energy_budget_j;
    std::size_t slot_index = 0;

    [[nodiscard]] std::size_t user_count() const { return users.size(); }
};

/// Slot state with the myopic allowance E_k^max / T for every user.
SlotState make_slot_state(const model::Scenario& scenario, std::size_t slot);
SlotState make_slot_state(const model::Scenario& scenario, std::size_t slot, std::vector<double> energy_budget_j);

double local_latency(double alpha, double task_bits, double cycles_per_bit, double cycles_per_sec);
double local_energy(double alpha, double task_bits, double cycles_per_bit, double cycles_per_sec,
                    double energy_coeff);
double offload_latency(double alpha, double task_bits, double rate_bps);
double offload_energy(double power_w, double offload_latency_s);
double mec_latency(double alpha, double task_bits, double server_cycles_per_bit, double beta,
                   double server_cycles_per_sec);
double user_latency(double local_s, double offload_s, double mec_s);

struct UserEvaluation {
    double local_latency_s = 0.0;
    double offload_latency_s = 0.0;
    double mec_latency_s = 0.0;
    double total_latency_s = 0.0;
    double local_energy_j = 0.0;
    double offload_energy_j = 0.0;
    double rate_bps = 0.0;

    [[nodiscard]] double energy_j() const { return local_energy_j + offload_energy_j; }
};

struct SlotEvaluation {
    std::size_t slot = 0;
    Decision decision;
    std::vector<UserEvaluation> users;

    [[nodiscard]] double mean_latency_s() const;
};

/// Per-user accounting of one user given its already-computed uplink rate.
UserEvaluation evaluate_user(const SlotState& state, std::size_t k, double alpha, double beta, double power_w,
                             double rate_bps);

SlotEvaluation evaluate(const SlotState& state, const Decision& decision);
SlotEvaluation evaluate_slot(const model::Scenario& scenario, std::size_t slot, const Decision& decision);

/// Mean latency over users of one slot.
double slot_objective(const SlotState& state, const Decision& decision);

/// (1/T)(1/K) sum over slots and users of the total latency.
double objective(std::span<const SlotEvaluation> evaluations);

struct ConstraintCheck {
    std::string name;
    bool passed = true;
    double worst_violation = 0.0;
};

/// Pass/fail per constraint: power bound, alpha range, beta range, beta sum
/// per slot, and cumulative energy per user.
struct ConstraintReport {
    std::array<ConstraintCheck, 5> checks;
    /// User-slots whose latency is the unserved sentinel.
    std::size_t unserved = 0;

    [[nodiscard]] bool feasible() const;
    [[nodiscard]] const ConstraintCheck& energy() const { return checks[4]; }
};

ConstraintReport check_constraints(const model::Scenario& scenario, std::span<const Decision> decisions);

/// Componentwise and per-slot checks plus the slot's energy allowance.
struct SlotCheck {
    bool bounds_ok = true;
    bool beta_sum_ok = true;
    bool energy_ok = true;
    bool served = true;

    [[nodiscard]] bool ok() const { return bounds_ok && beta_sum_ok && energy_ok && served; }
};

SlotCheck check_slot(const SlotState& state, const Decision& decision);

/// One CSV row per user-slot: slot,user,alpha,beta,power_w,rate_bps,local_s,off_s,mec_s,total_s,local_j,off_j
void write_evaluation_csv(std::ostream& out, std::span<const SlotEvaluation> evaluations);

void to_json(nlohmann::json& j, const Decision& d);
void from_json(const nlohmann::json& j, Decision& d);
void to_json(nlohmann::json& j, const ConstraintReport& r);

}  // namespace mecrag::perf
