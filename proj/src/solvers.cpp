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

#include "mecrag/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "mecrag/channel.hpp"

namespace mecrag::solvers {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRoundTolerance = 1e-12;

struct NamedKind {
    SolverKind kind;
    std::string_view name;
};

constexpr NamedKind kSolverNames[] = {
    {SolverKind::LocalOnly, "local-only"},
    {SolverKind::FullOffloadEqual, "full-offload-equal"},
    {SolverKind::RandomFeasible, "random-feasible"},
    {SolverKind::AlternatingHeuristic, "alternating"},
    {SolverKind::GridOracle, "grid-oracle"},
    {SolverKind::RagLlm, "rag-llm"},
};

std::vector<double> uniform_axis(int points, double hi) {
    std::vector<double> axis;
    axis.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        axis.push_back(hi * (static_cast<double>(i) / static_cast<double>(points - 1)));
    }
    return axis;
}

void sort_unique(std::vector<double>& axis) {
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
}

// Energy of user k at (alpha, power) given its rate, split into the part that
// scales with (1 - alpha) and the part that scales with alpha.
struct EnergySplit {
    double full_local_j;
    double offload_j_per_alpha;
};

EnergySplit energy_split(const SlotState& state, std::size_t k, double power_w, double rate_bps) {
    const auto& u = state.users[k];
    const double bits = state.task_bits[k];
    EnergySplit e{};
    e.full_local_j = perf::local_energy(0.0, bits, u.cycles_per_bit, u.cycles_per_sec, state.config.energy_coeff);
    if (power_w <= 0) {
        e.offload_j_per_alpha = 0.0;
    } else {
        e.offload_j_per_alpha = rate_bps > 0 ? power_w * bits / rate_bps : kInf;
    }
    return e;
}

std::vector<double> user_energies(const SlotState& state, const Decision& d) {
    const auto ev = perf::evaluate(state, d);
    std::vector<double> energy;
    energy.reserve(ev.users.size());
    for (const auto& u : ev.users) energy.push_back(u.energy_j());
    return energy;
}

bool lexicographically_less(const Decision& a, const Decision& b) {
    if (a.alpha != b.alpha) return a.alpha < b.alpha;
    if (a.beta != b.beta) return a.beta < b.beta;
    return a.power_w < b.power_w;
}

}  // namespace

void SolverSpec::validate() const {
    if (grid_resolution < 2) throw model::InvalidInput("grid_resolution must be >= 2");
    if (max_rounds < 1) throw model::InvalidInput("max_rounds must be >= 1");
    if (power_grid_points < 2) throw model::InvalidInput("power_grid_points must be >= 2");
}

std::string_view to_string(SolverKind kind) {
    for (const auto& n : kSolverNames) {
        if (n.kind == kind) return n.name;
    }
    return "?";
}

SolverKind parse_solver_kind(std::string_view name) {
    for (const auto& n : kSolverNames) {
        if (n.name == name) return n.kind;
    }
    throw model::InvalidInput(fmt::format("unknown solver '{}'", name));
}

std::string label(const SolverSpec& spec) {
    if (spec.kind == SolverKind::GridOracle) return fmt::format("grid-oracle@{}", spec.grid_resolution);
    return std::string(to_string(spec.kind));
}

void to_json(nlohmann::json& j, const SolverSpec& spec) {
    j = nlohmann::json{{"kind", to_string(spec.kind)},
                       {"grid", spec.grid_resolution},
                       {"max_rounds", spec.max_rounds},
                       {"seed", spec.seed},
                       {"power_grid_points", spec.power_grid_points},
                       {"oracle_budget", spec.oracle_budget},
                       {"oracle_anchor_heuristic", spec.oracle_anchor_heuristic},
                       {"budget_policy", spec.budget_policy == BudgetPolicy::PerSlot ? "per-slot" : "carry-over"}};
}

void from_json(const nlohmann::json& j, SolverSpec& spec) {
    spec = SolverSpec{};
    if (j.is_string()) {
        spec.kind = parse_solver_kind(j.get<std::string>());
        return;
    }
    spec.kind = parse_solver_kind(j.at("kind").get<std::string>());
    spec.grid_resolution = j.value("grid", spec.grid_resolution);
    spec.max_rounds = j.value("max_rounds", spec.max_rounds);
    spec.seed = j.value("seed", spec.seed);
    spec.power_grid_points = j.value("power_grid_points", spec.power_grid_points);
    spec.oracle_budget = j.value("oracle_budget", spec.oracle_budget);
    spec.oracle_anchor_heuristic = j.value("oracle_anchor_heuristic", spec.oracle_anchor_heuristic);
    const auto policy = j.value("budget_policy", std::string("per-slot"));
    if (policy == "per-slot") {
        spec.budget_policy = BudgetPolicy::PerSlot;
    } else if (policy == "carry-over") {
        spec.budget_policy = BudgetPolicy::CarryOver;
    } else {
        throw model::InvalidInput(fmt::format("unknown budget_policy '{}'", policy));
    }
    spec.validate();
}

BudgetExceeded::BudgetExceeded(double required, double budget)
    : std::runtime_error(fmt::format("grid oracle needs {:.4g} evaluations, budget is {:.4g}", required, budget)),
      required_(required) {}

Decision solve_local_only(const SlotState& state) { return Decision::zeros(state.user_count()); }

Decision solve_full_offload_equal(const SlotState& state) {
    const std::size_t k_count = state.user_count();
    if (k_count == 0) throw model::InvalidInput("full offload needs at least one user");
    Decision d;
    d.alpha.assign(k_count, 1.0);
    d.beta.assign(k_count, 1.0 / static_cast<double>(k_count));
    d.power_w.reserve(k_count);
    for (const auto& u : state.users) d.power_w.push_back(u.max_power_w);
    return d;
}

Decision solve_random_feasible(const SlotState& state, const SolverSpec& spec) {
    const std::size_t k_count = state.user_count();
    std::mt19937_64 rng(spec.seed * 0x100000001B3ULL + state.slot_index);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Decision d = Decision::zeros(k_count);
    double weight_sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        d.alpha[k] = unit(rng);
        d.beta[k] = unit(rng);
        d.power_w[k] = unit(rng) * state.users[k].max_power_w;
        weight_sum += d.beta[k];
    }
    if (weight_sum > 0) {
        for (auto& b : d.beta) b /= weight_sum;
    }
    return repair_decision(std::move(d), state);
}

double equalizing_alpha(double local_seconds_per_bit, double rate_bps, double server_cycles_per_bit, double beta,
                        double server_cycles_per_sec) {
    if (rate_bps <= 0 || beta <= 0) return 0.0;
    const double remote_seconds_per_bit = 1.0 / rate_bps + server_cycles_per_bit / (beta * server_cycles_per_sec);
    return std::clamp(local_seconds_per_bit / (local_seconds_per_bit + remote_seconds_per_bit), 0.0, 1.0);
}

double project_alpha_to_budget(double alpha, double full_local_j, double offload_j_per_alpha, double budget_j) {
    const auto energy = [&](double a) {
        return (1.0 - a) * full_local_j + (a > 0 ? a * offload_j_per_alpha : 0.0);
    };
    if (energy(alpha) <= budget_j) return alpha;
    if (full_local_j > offload_j_per_alpha) {
        // Energy falls with alpha: need alpha >= boundary.
        const double boundary = (full_local_j - budget_j) / (full_local_j - offload_j_per_alpha);
        return boundary <= 1.0 ? std::max(alpha, boundary) : 1.0;
    }
    if (offload_j_per_alpha > full_local_j) {
        if (budget_j < full_local_j) return 0.0;
        if (std::isinf(offload_j_per_alpha)) return 0.0;
        const double boundary = (budget_j - full_local_j) / (offload_j_per_alpha - full_local_j);
        return std::min(alpha, boundary);
    }
    return alpha;
}

Decision solve_alternating(const SlotState& state, const SolverSpec& spec, AlternatingTrace* trace) {
    spec.validate();
    const std::size_t k_count = state.user_count();
    const auto& cfg = state.config;

    Decision d = Decision::zeros(k_count);
    d.beta.assign(k_count, k_count ? 1.0 / static_cast<double>(k_count) : 0.0);
    for (std::size_t k = 0; k < k_count; ++k) d.power_w[k] = state.users[k].max_power_w;

    auto update_alpha = [&] {
        const auto rates = channel::offload_rates(d.power_w, state.channel.gains, cfg);
        for (std::size_t k = 0; k < k_count; ++k) {
            const auto& u = state.users[k];
            const double target = equalizing_alpha(u.cycles_per_bit / u.cycles_per_sec, rates[k],
                                                   cfg.server_cycles_per_bit, d.beta[k], cfg.server_cycles_per_sec);
            const auto e = energy_split(state, k, d.power_w[k], rates[k]);
            d.alpha[k] = project_alpha_to_budget(target, e.full_local_j, e.offload_j_per_alpha,
                                                 state.energy_budget_j[k]);
        }
    };

    // Start from the alpha step so the first recorded point is energy-projected.
    update_alpha();
    double current = perf::slot_objective(state, d);
    if (trace) trace->objectives.assign(1, current);

    const auto power_axis_fraction = uniform_axis(spec.power_grid_points, 1.0);
    for (int round = 0; round < spec.max_rounds; ++round) {
        const double before = current;

        update_alpha();

        // Server share proportional to each user's edge demand, kept only if it helps.
        double demand_sum = 0.0;
        std::vector<double> demand(k_count);
        for (std::size_t k = 0; k < k_count; ++k) {
            demand[k] = d.alpha[k] * cfg.server_cycles_per_bit * state.task_bits[k];
            demand_sum += demand[k];
        }
        if (demand_sum > 0) {
            Decision trial = d;
            for (std::size_t k = 0; k < k_count; ++k) trial.beta[k] = demand[k] / demand_sum;
            if (perf::slot_objective(state, trial) <= perf::slot_objective(state, d)) d = std::move(trial);
        }

        // Per-user power line search with the other users fixed.
        for (std::size_t k = 0; k < k_count; ++k) {
            const auto baseline_energy = user_energies(state, d);
            double best_obj = perf::slot_objective(state, d);
            double best_p = d.power_w[k];
            for (double frac : power_axis_fraction) {
                Decision trial = d;
                trial.power_w[k] = frac * state.users[k].max_power_w;
                const auto energy = user_energies(state, trial);
                bool admissible = true;
                for (std::size_t l = 0; l < k_count && admissible; ++l) {
                    admissible = energy[l] <= std::max(state.energy_budget_j[l] + perf::kConstraintTolerance,
                                                       baseline_energy[l]);
                }
                if (!admissible) continue;
                const double obj = perf::slot_objective(state, trial);
                if (obj < best_obj || (obj == best_obj && trial.power_w[k] < best_p)) {
                    best_obj = obj;
                    best_p = trial.power_w[k];
                }
            }
            d.power_w[k] = best_p;
        }

        current = perf::slot_objective(state, d);
        if (trace) trace->objectives.push_back(current);
        if (before - current <= kRoundTolerance) break;
    }
    return repair_decision(std::move(d), state);
}

namespace {

struct OracleAxes {
    std::vector<std::vector<double>> alpha;
    std::vector<std::vector<double>> beta;
    std::vector<std::vector<double>> power;
};

OracleAxes build_axes(const SlotState& state, const SolverSpec& spec, std::span<const Decision> anchors) {
    spec.validate();
    const std::size_t k_count = state.user_count();
    if (k_count == 0) throw model::InvalidInput("grid oracle needs at least one user");
    OracleAxes axes;
    const auto unit = uniform_axis(spec.grid_resolution, 1.0);
    for (std::size_t k = 0; k < k_count; ++k) {
        auto alpha = unit;
        auto beta = unit;
        beta.push_back(1.0 / static_cast<double>(k_count));
        auto power = uniform_axis(spec.grid_resolution, state.users[k].max_power_w);
        for (const auto& a : anchors) {
            if (a.size() != k_count) throw model::InvalidInput("oracle anchor has the wrong user count");
            if (a.alpha[k] >= 0 && a.alpha[k] <= 1) alpha.push_back(a.alpha[k]);
            if (a.beta[k] >= 0 && a.beta[k] <= 1) beta.push_back(a.beta[k]);
            if (a.power_w[k] >= 0 && a.power_w[k] <= state.users[k].max_power_w) power.push_back(a.power_w[k]);
        }
        sort_unique(alpha);
        sort_unique(beta);
        sort_unique(power);
        axes.alpha.push_back(std::move(alpha));
        axes.beta.push_back(std::move(beta));
        axes.power.push_back(std::move(power));
    }
    return axes;
}

double grid_size(const OracleAxes& axes) {
    double size = 1.0;
    for (std::size_t k = 0; k < axes.alpha.size(); ++k) {
        size *= static_cast<double>(axes.alpha[k].size()) * static_cast<double>(axes.beta[k].size()) *
                static_cast<double>(axes.power[k].size());
    }
    return size;
}

}  // namespace

double oracle_grid_size(const SlotState& state, const SolverSpec& spec, std::span<const Decision> anchors) {
    return grid_size(build_axes(state, spec, anchors));
}

Decision solve_grid_oracle(const SlotState& state, const SolverSpec& spec, std::span<const Decision> anchors) {
    const OracleAxes axes = build_axes(state, spec, anchors);
    const double size = grid_size(axes);
    if (size > spec.oracle_budget) throw BudgetExceeded(size, spec.oracle_budget);

    const std::size_t k_count = state.user_count();
    const double users = static_cast<double>(k_count);

    // Latency of one user depends only on its own alpha and beta once the
    // power vector (hence every rate) is fixed, so the alpha axis is
    // minimized per (user, beta) and only the beta simplex is enumerated
    // jointly. This visits the same optimum as the flat enumeration.
    struct BestAlpha {
        double latency = kInf;
        double alpha = 0.0;
    };
    std::vector<std::vector<BestAlpha>> best_alpha(k_count);

    double best_obj = kInf;
    Decision best;
    Decision candidate = Decision::zeros(k_count);

    std::vector<std::size_t> p_idx(k_count, 0);
    std::vector<std::size_t> b_idx(k_count, 0);
    std::vector<double> power(k_count);

    auto consider_leaf = [&] {
        double sum = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            const double lat = best_alpha[k][b_idx[k]].latency;
            if (std::isinf(lat)) return;
            sum += lat;
        }
        const double obj = sum / users;
        if (obj > best_obj) return;
        for (std::size_t k = 0; k < k_count; ++k) {
            candidate.alpha[k] = best_alpha[k][b_idx[k]].alpha;
            candidate.beta[k] = axes.beta[k][b_idx[k]];
            candidate.power_w[k] = power[k];
        }
        if (obj < best_obj || lexicographically_less(candidate, best)) {
            best_obj = obj;
            best = candidate;
        }
    };

    std::function<void(std::size_t, double)> enumerate_beta = [&](std::size_t k, double partial) {
        if (k == k_count) {
            consider_leaf();
            return;
        }
        for (std::size_t j = 0; j < axes.beta[k].size(); ++j) {
            const double next = partial + axes.beta[k][j];
            if (next > 1.0 + perf::kConstraintTolerance) break;  // axes are sorted
            b_idx[k] = j;
            enumerate_beta(k + 1, next);
        }
    };

    while (true) {
        for (std::size_t k = 0; k < k_count; ++k) power[k] = axes.power[k][p_idx[k]];
        const auto rates = channel::offload_rates(power, state.channel.gains, state.config);
        for (std::size_t k = 0; k < k_count; ++k) {
            auto& row = best_alpha[k];
            row.assign(axes.beta[k].size(), BestAlpha{});
            for (std::size_t j = 0; j < axes.beta[k].size(); ++j) {
                for (double alpha : axes.alpha[k]) {
                    const auto ev = perf::evaluate_user(state, k, alpha, axes.beta[k][j], power[k], rates[k]);
                    if (ev.energy_j() > state.energy_budget_j[k] + perf::kConstraintTolerance) continue;
                    if (ev.total_latency_s < row[j].latency) row[j] = {ev.total_latency_s, alpha};
                }
            }
        }
        enumerate_beta(0, 0.0);

        std::size_t k = k_count;
        while (k > 0) {
            --k;
            if (++p_idx[k] < axes.power[k].size()) break;
            p_idx[k] = 0;
            if (k == 0) {
                k = k_count + 1;
                break;
            }
        }
        if (k == k_count + 1) break;
    }

    if (std::isinf(best_obj)) throw std::runtime_error("grid oracle found no feasible grid point");
    return best;
}

Decision solve_grid_oracle(const SlotState& state, const SolverSpec& spec) {
    std::vector<Decision> anchors{solve_local_only(state), solve_full_offload_equal(state)};
    if (spec.oracle_anchor_heuristic) anchors.push_back(solve_alternating(state, spec));
    return solve_grid_oracle(state, spec, anchors);
}

Decision repair_decision(Decision d, const SlotState& state, std::vector<std::string>* diagnostics) {
    const std::size_t k_count = state.user_count();
    auto note = [&](std::string msg) {
        if (diagnostics) diagnostics->push_back(std::move(msg));
    };
    auto fit = [&](std::vector<double>& v, const char* name) {
        if (v.size() != k_count) {
            note(fmt::format("{}: resized from {} to {} entries", name, v.size(), k_count));
            v.resize(k_count, 0.0);
        }
    };
    fit(d.alpha, "alpha");
    fit(d.beta, "beta");
    fit(d.power_w, "power_w");

    auto clamp_into = [&](double& x, double hi, const char* name, std::size_t k) {
        if (std::isnan(x)) {
            note(fmt::format("{}[{}]: NaN replaced by 0", name, k));
            x = 0.0;
        } else if (x < 0 || x > hi) {
            const double clamped = std::clamp(x, 0.0, hi);
            note(fmt::format("{}[{}]: {} clamped to {}", name, k, x, clamped));
            x = clamped;
        }
    };
    for (std::size_t k = 0; k < k_count; ++k) {
        clamp_into(d.alpha[k], 1.0, "alpha", k);
        clamp_into(d.beta[k], 1.0, "beta", k);
        clamp_into(d.power_w[k], state.users[k].max_power_w, "power_w", k);
    }

    double beta_sum = 0.0;
    for (double b : d.beta) beta_sum += b;
    if (beta_sum > 1.0 + perf::kConstraintTolerance) {
        note(fmt::format("beta: sum {} rescaled to 1", beta_sum));
        for (auto& b : d.beta) b /= beta_sum;
    }

    auto drop_unservable = [&] {
        const auto ev = perf::evaluate(state, d);
        for (std::size_t k = 0; k < k_count; ++k) {
            if (d.alpha[k] > 0 && !std::isfinite(ev.users[k].total_latency_s)) {
                note(fmt::format("alpha[{}]: offload cannot be served, set to 0", k));
                d.alpha[k] = 0.0;
            }
        }
    };
    drop_unservable();

    // A user whose local work alone overspends needs a server share and some
    // power to offload with.
    std::vector<std::size_t> needy;
    for (std::size_t k = 0; k < k_count; ++k) {
        const auto& u = state.users[k];
        const double local_j =
            perf::local_energy(0.0, state.task_bits[k], u.cycles_per_bit, u.cycles_per_sec, state.config.energy_coeff);
        if (local_j <= state.energy_budget_j[k] + perf::kConstraintTolerance) continue;
        if (!(state.channel.gains[k] > 0) || !(u.max_power_w > 0)) continue;
        Decision trial = d;
        trial.alpha[k] = 1.0;
        if (!std::isfinite(perf::evaluate(state, trial).users[k].total_latency_s)) needy.push_back(k);
    }
    if (!needy.empty()) {
        const double share = 1.0 / static_cast<double>(k_count);
        double sum = 0.0;
        for (std::size_t k : needy) {
            d.beta[k] = std::max(d.beta[k], share);
            d.power_w[k] = std::max(d.power_w[k], state.users[k].max_power_w);
            note(fmt::format("user {}: given a server share and power to meet its energy allowance", k));
        }
        for (double b : d.beta) sum += b;
        if (sum > 1.0) {
            for (auto& b : d.beta) b /= sum;
        }
        drop_unservable();
    }

    // Lowering one user's power only lowers interference on the others, so a
    // later pass can succeed where an earlier one could not.
    auto all_fit = [&] {
        const auto energy = user_energies(state, d);
        for (std::size_t k = 0; k < k_count; ++k) {
            if (energy[k] > state.energy_budget_j[k] + perf::kConstraintTolerance) return false;
        }
        return true;
    };
    for (std::size_t pass = 0; pass <= k_count && !all_fit(); ++pass) {
        for (std::size_t k = 0; k < k_count; ++k) {
            const double budget = state.energy_budget_j[k];
            auto energy_at = [&](double power) {
                Decision trial = d;
                trial.power_w[k] = power;
                return user_energies(state, trial)[k];
            };
            auto fits = [&](double power) { return energy_at(power) <= budget + perf::kConstraintTolerance; };
            if (fits(d.power_w[k])) continue;

            // Largest power not above `hi` that fits, or 0 when none does.
            auto fit_power = [&](double hi) {
                double lo = 0.0;
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid <= 0 || mid == hi) break;
                    (energy_at(mid) <= budget ? lo : hi) = mid;
                }
                return lo;
            };

            const double original_power = d.power_w[k];
            const double original_alpha = d.alpha[k];
            if (const double p = fit_power(original_power); p > 0) {
                note(fmt::format("power_w[{}]: {} scaled to {} to fit the energy allowance", k, original_power, p));
                d.power_w[k] = p;
                continue;
            }

            // Local computing alone overspends: offload at the lowest useful power,
            // then bring alpha back down as far as the allowance permits.
            const double max_p = state.users[k].max_power_w;
            if (d.beta[k] > 0 && state.channel.gains[k] > 0 && max_p > 0) {
                d.alpha[k] = 1.0;
                const double p = fit_power(original_power > 0 ? original_power : max_p);
                if (p > 0) {
                    d.power_w[k] = p;
                    const auto rates = channel::offload_rates(d.power_w, state.channel.gains, state.config);
                    const auto e = energy_split(state, k, p, rates[k]);
                    const double alpha =
                        project_alpha_to_budget(original_alpha, e.full_local_j, e.offload_j_per_alpha, budget);
                    d.alpha[k] = alpha;
                    if (!fits(p)) d.alpha[k] = 1.0;
                    note(fmt::format("alpha[{}]: {} moved to {} and power_w[{}]: {} set to {} to fit the energy "
                                     "allowance",
                                     k, original_alpha, d.alpha[k], k, original_power, p));
                    continue;
                }
                d.alpha[k] = original_alpha;
                d.power_w[k] = original_power;
            }

            const auto rates = channel::offload_rates(d.power_w, state.channel.gains, state.config);
            const auto e = energy_split(state, k, d.power_w[k], rates[k]);
            const double alpha = project_alpha_to_budget(d.alpha[k], e.full_local_j, e.offload_j_per_alpha, budget);
            note(fmt::format("alpha[{}]: {} moved to {} to fit the energy allowance", k, d.alpha[k], alpha));
            d.alpha[k] = alpha;
            if (d.alpha[k] > 0 && (d.beta[k] <= 0 || d.power_w[k] * state.channel.gains[k] <= 0)) d.alpha[k] = 0.0;
            if (!fits(d.power_w[k])) note(fmt::format("user {}: energy allowance {} J unattainable", k, budget));
        }
    }

    // Interference can keep every user over its allowance at once; lower all
    // powers together, which drives each offload cost toward its noise floor.
    if (!all_fit()) {
        const auto energy = user_energies(state, d);
        for (std::size_t k = 0; k < k_count; ++k) {
            if (energy[k] > state.energy_budget_j[k] + perf::kConstraintTolerance && d.beta[k] > 0 &&
                d.power_w[k] * state.channel.gains[k] > 0) {
                d.alpha[k] = 1.0;
            }
        }
        const Decision full = d;
        auto scaled = [&](double c) {
            Decision trial = full;
            for (auto& p : trial.power_w) p *= c;
            return trial;
        };
        double lo = 0.0;
        double hi = 1.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= 0 || mid == hi || mid == lo) break;
            d = scaled(mid);
            (all_fit() ? lo : hi) = mid;
        }
        d = lo > 0 ? scaled(lo) : full;
        if (lo > 0) {
            note(fmt::format("power_w: all powers scaled by {} to fit the energy allowances", lo));
        } else {
            note("energy allowances unattainable at any common power scale");
        }
    }
    drop_unservable();
    return d;
}

Decision solve_slot(const SlotState& state, const SolverSpec& spec) {
    switch (spec.kind) {
        case SolverKind::LocalOnly: return solve_local_only(state);
        case SolverKind::FullOffloadEqual: return solve_full_offload_equal(state);
        case SolverKind::RandomFeasible: return solve_random_feasible(state, spec);
        case SolverKind::AlternatingHeuristic: return solve_alternating(state, spec);
        case SolverKind::GridOracle: return solve_grid_oracle(state, spec);
        case SolverKind::RagLlm: break;
    }
    throw model::InvalidInput("rag-llm needs a knowledge base and backend; use llm::rag_solve");
}

ScenarioSolution solve_scenario(const model::Scenario& scenario, BudgetPolicy policy, const SlotSolver& solve) {
    const std::size_t t_count = scenario.slot_count();
    const std::size_t k_count = scenario.user_count();
    ScenarioSolution out;
    std::vector<double> spent(k_count, 0.0);
    for (std::size_t t = 0; t < t_count; ++t) {
        std::vector<double> budget(k_count);
        const double slots_left = static_cast<double>(t_count - t);
        for (std::size_t k = 0; k < k_count; ++k) {
            const double total = scenario.users[k].energy_budget_j;
            budget[k] = policy == BudgetPolicy::PerSlot ? total / static_cast<double>(t_count)
                                                        : std::max(0.0, total - spent[k]) / slots_left;
        }
        const auto state = perf::make_slot_state(scenario, t, std::move(budget));
        Decision d = solve(state);
        auto ev = perf::evaluate(state, d);
        for (std::size_t k = 0; k < k_count; ++k) spent[k] += ev.users[k].energy_j();
        out.decisions.push_back(std::move(d));
        out.evaluations.push_back(std::move(ev));
    }
    out.objective = perf::objective(out.evaluations);
    out.report = perf::check_constraints(scenario, out.decisions);
    return out;
}

ScenarioSolution solve_scenario(const model::Scenario& scenario, const SolverSpec& spec) {
    spec.validate();
    return solve_scenario(scenario, spec.budget_policy, [&](const SlotState& s) { return solve_slot(s, spec); });
}

}  // namespace mecrag::solvers
