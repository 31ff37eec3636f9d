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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "mecrag/channel.hpp"
#include "mecrag/performance.hpp"

#include "support.hpp"

using namespace mecrag;
using namespace mecrag::perf;
using testing::close_rel;

TEST_CASE("local latency and energy") {
    CHECK(close_rel(local_latency(0.4, 1e6, 900, 1e9), testing::k_local_latency_a04));
    CHECK(local_latency(1.0, 1e6, 900, 1e9) == 0.0);
    CHECK(close_rel(local_latency(0.0, 1e6, 900, 1e9), testing::k_local_latency_a0));

    CHECK(close_rel(local_energy(0.4, 1e6, 900, 1e9, 1e-27), testing::k_local_energy_a04));
    CHECK(local_energy(1.0, 1e6, 900, 1e9, 1e-27) == 0.0);
    CHECK(close_rel(local_energy(0.3, 2e6, 700, 2e9, 1e-27), 4 * local_energy(0.3, 2e6, 700, 1e9, 1e-27)));
}

TEST_CASE("offload latency and energy") {
    CHECK(close_rel(offload_latency(0.4, 1e6, testing::k_rate_single_p2), testing::k_offload_latency_a04));
    CHECK(offload_latency(0.0, 1e6, 0.0) == 0.0);
    CHECK(offload_latency(0.0, 1e6, 123.0) == 0.0);
    CHECK(close_rel(offload_latency(1.0, 1e6, 1e7), testing::k_offload_latency_a1_r1e7));
    CHECK(offload_latency(0.5, 1e6, 0.0) == kUnserved);

    CHECK(close_rel(offload_energy(2.0, testing::k_offload_latency_a04), testing::k_offload_energy_p2));
    CHECK(offload_energy(0.0, 0.3) == 0.0);
    CHECK(offload_energy(2.0, 0.0) == 0.0);
}

TEST_CASE("edge computing latency") {
    CHECK(close_rel(mec_latency(0.4, 1e6, 900, 0.2, 3e10), testing::k_mec_latency_a04_b02));
    CHECK(mec_latency(0.0, 1e6, 900, 0.0, 3e10) == 0.0);
    CHECK(close_rel(mec_latency(1.0, 1e6, 900, 1.0, 3e10), testing::k_mec_latency_a1_b1));
    CHECK(mec_latency(0.1, 1e6, 900, 0.0, 3e10) == kUnserved);
}

TEST_CASE("user latency is the slower branch") {
    CHECK(close_rel(user_latency(0.54, testing::k_offload_latency_a04, 0.06), testing::k_user_latency_example));
    CHECK(user_latency(0, 0.2, 0.3) == 0.5);
    CHECK(user_latency(0.7, 0, 0) == 0.7);
    CHECK(user_latency(0.1, kUnserved, 0.0) == kUnserved);
}

TEST_CASE("single-user slot evaluation") {
    const auto s = testing::single_user_state();
    const Decision d{{0.4}, {0.2}, {2.0}};
    const auto ev = evaluate(s, d);
    REQUIRE(ev.users.size() == 1);
    const auto& u = ev.users[0];
    CHECK(close_rel(u.rate_bps, testing::k_rate_single_p2));
    CHECK(close_rel(u.local_latency_s, testing::k_local_latency_a04));
    CHECK(close_rel(u.offload_latency_s, testing::k_offload_latency_a04));
    CHECK(close_rel(u.mec_latency_s, testing::k_mec_latency_a04_b02));
    CHECK(close_rel(u.total_latency_s, testing::k_user_latency_example));
    CHECK(close_rel(u.offload_energy_j, testing::k_offload_energy_p2));
    CHECK(close_rel(u.local_energy_j, testing::k_local_energy_a04));
    CHECK(close_rel(ev.mean_latency_s(), testing::k_user_latency_example));
}

TEST_CASE("all-local decisions reduce to local latency") {
    const auto sc = model::generate_scenario(model::SystemConfig{}, 5, 3);
    const auto ev = evaluate_slot(sc, 2, Decision::zeros(5));
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(ev.users[k].offload_latency_s == 0.0);
        CHECK(ev.users[k].mec_latency_s == 0.0);
        CHECK(ev.users[k].total_latency_s == ev.users[k].local_latency_s);
    }
}

TEST_CASE("symmetric users get identical evaluations") {
    perf::SlotState s;
    s.users = {model::MobileUser{0, 1e9, 900, 2, 1000}, model::MobileUser{1, 1e9, 900, 2, 1000}};
    s.task_bits = {2e6, 2e6};
    s.channel.gains = {1e-9, 1e-9};
    s.channel.distances = {100, 100};
    s.energy_budget_j = {100, 100};
    const auto ev = evaluate(s, Decision{{0.5, 0.5}, {0.5, 0.5}, {1.0, 1.0}});
    CHECK(ev.users[0].total_latency_s == ev.users[1].total_latency_s);
    CHECK(ev.users[0].energy_j() == ev.users[1].energy_j());
    CHECK(close_rel(ev.users[0].rate_bps, testing::k_rate_two_users_p1));
}

TEST_CASE("total latency is exactly the max of the branches") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
        const auto sc = model::generate_scenario(model::SystemConfig{}, 4, i);
        Decision d = Decision::zeros(4);
        for (std::size_t k = 0; k < 4; ++k) {
            d.alpha[k] = u(rng);
            d.beta[k] = 0.25 * u(rng);
            d.power_w[k] = 2 * u(rng);
        }
        const auto ev = evaluate_slot(sc, i % 10, d);
        for (const auto& e : ev.users) {
            REQUIRE(e.total_latency_s == std::max(e.local_latency_s, e.offload_latency_s + e.mec_latency_s));
            REQUIRE(e.local_latency_s >= 0);
            REQUIRE(e.offload_energy_j >= 0);
        }
    }
}

TEST_CASE("alpha monotonicity") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    const auto base = testing::single_user_state();
    for (int i = 0; i < 1000; ++i) {
        const double a1 = u(rng);
        const double a2 = std::min(1.0, a1 + u(rng) * (1 - a1));
        const double beta = 0.05 + 0.95 * u(rng);
        const double p = 0.1 + 1.9 * u(rng);
        const auto e1 = evaluate(base, Decision{{a1}, {beta}, {p}}).users[0];
        const auto e2 = evaluate(base, Decision{{a2}, {beta}, {p}}).users[0];
        REQUIRE(e2.local_latency_s <= e1.local_latency_s);
        REQUIRE(e2.offload_latency_s >= e1.offload_latency_s);
        REQUIRE(e2.mec_latency_s >= e1.mec_latency_s);
    }
}

TEST_CASE("interference-free rate matches the closed form") {
    const auto s = testing::single_user_state(3.3e-9);
    const auto ev = evaluate(s, Decision{{0.5}, {1.0}, {1.2}});
    const double expected = 1e7 * std::log2(1 + 1.2 * 3.3e-9 / 1e-10);
    CHECK(close_rel(ev.users[0].rate_bps, expected, 1e-12));
}

TEST_CASE("objective averages over slots and users") {
    SlotEvaluation a;
    a.users.resize(2);
    a.users[0].total_latency_s = 0.4;
    a.users[1].total_latency_s = 0.6;
    SlotEvaluation b;
    b.users.resize(2);
    b.users[0].total_latency_s = 0.9;
    b.users[1].total_latency_s = 0.5;
    const std::vector<SlotEvaluation> both{a, b};
    CHECK(close_rel(objective(both), testing::k_objective_two_slots));

    const std::vector<SlotEvaluation> one{b};
    CHECK(close_rel(objective(one), 0.7));

    const std::vector<SlotEvaluation> swapped{b, a};
    CHECK(objective(swapped) == objective(both));
    CHECK_THROWS(objective(std::span<const SlotEvaluation>{}));
}

TEST_CASE("objective is invariant under user permutation") {
    auto sc = model::generate_scenario(model::SystemConfig{}, 3, 21);
    Decision d{{0.2, 0.7, 0.5}, {0.3, 0.3, 0.3}, {1.0, 0.5, 2.0}};
    const double before = evaluate_slot(sc, 0, d).mean_latency_s();

    std::swap(sc.users[0], sc.users[2]);
    for (auto* table : {&sc.positions}) {
        for (auto& row : *table) std::swap(row[0], row[2]);
    }
    for (auto& row : sc.task_bits) std::swap(row[0], row[2]);
    for (auto& row : sc.fading_draws) std::swap(row[0], row[2]);
    std::swap(d.alpha[0], d.alpha[2]);
    std::swap(d.beta[0], d.beta[2]);
    std::swap(d.power_w[0], d.power_w[2]);
    CHECK(close_rel(evaluate_slot(sc, 0, d).mean_latency_s(), before, 1e-12));
}

TEST_CASE("constraint report") {
    auto sc = model::generate_scenario(model::SystemConfig{}, 2, 1);
    std::vector<Decision> zeros(sc.slot_count(), Decision::zeros(2));
    auto r = check_constraints(sc, zeros);
    CHECK(r.feasible());
    for (const auto& c : r.checks) CHECK(c.passed);

    auto over = zeros;
    over[3].beta = {0.6, 0.6};
    r = check_constraints(sc, over);
    CHECK_FALSE(r.checks[3].passed);
    CHECK(r.checks[3].worst_violation == doctest::Approx(0.2));
    CHECK_FALSE(r.feasible());

    auto at_max = zeros;
    at_max[0].power_w = {sc.users[0].max_power_w, sc.users[1].max_power_w};
    CHECK(check_constraints(sc, at_max).checks[0].passed);
    at_max[0].power_w[0] = std::nextafter(sc.users[0].max_power_w, 10.0);
    CHECK_FALSE(check_constraints(sc, at_max).checks[0].passed);

    CHECK_THROWS_AS(check_constraints(sc, std::span<const Decision>(zeros).first(3)), model::InvalidInput);
}

TEST_CASE("cumulative energy equals the sum of slot energies") {
    auto sc = model::generate_scenario(model::SystemConfig{}, 2, 6);
    std::vector<Decision> ds(sc.slot_count(), Decision{{0.3, 0.6}, {0.5, 0.5}, {1.0, 1.5}});
    std::vector<double> total(2, 0.0);
    for (std::size_t t = 0; t < sc.slot_count(); ++t) {
        const auto ev = evaluate_slot(sc, t, ds[t]);
        for (std::size_t k = 0; k < 2; ++k) total[k] += ev.users[k].energy_j();
    }
    // Tighten the budget to exactly the spent energy, then just below it.
    for (std::size_t k = 0; k < 2; ++k) sc.users[k].energy_budget_j = total[k];
    CHECK(check_constraints(sc, ds).energy().passed);
    sc.users[1].energy_budget_j = total[1] - 1e-6;
    const auto r = check_constraints(sc, ds);
    CHECK_FALSE(r.energy().passed);
    CHECK(r.energy().worst_violation == doctest::Approx(1e-6).epsilon(1e-3));
}

TEST_CASE("unserved offloads are counted") {
    auto sc = model::generate_scenario(model::SystemConfig{}, 1, 6);
    std::vector<Decision> ds(sc.slot_count(), Decision{{0.5}, {0.0}, {1.0}});
    CHECK(check_constraints(sc, ds).unserved == sc.slot_count());
    CHECK_FALSE(check_constraints(sc, ds).feasible());
}

TEST_CASE("slot check") {
    const auto s = testing::single_user_state();
    CHECK(check_slot(s, Decision{{0.4}, {0.2}, {2.0}}).ok());
    CHECK_FALSE(check_slot(s, Decision{{1.1}, {0.2}, {2.0}}).bounds_ok);
    CHECK_FALSE(check_slot(s, Decision{{0.4}, {0.0}, {2.0}}).served);
    auto tight = s;
    tight.energy_budget_j = {0.1};
    CHECK_FALSE(check_slot(tight, Decision{{0.0}, {0.0}, {0.0}}).energy_ok);
}

TEST_CASE("evaluation CSV") {
    const auto s = testing::single_user_state();
    const std::vector<SlotEvaluation> evs{evaluate(s, Decision{{0.4}, {0.2}, {2.0}})};
    std::ostringstream out;
    write_evaluation_csv(out, evs);
    const auto text = out.str();
    CHECK(text.rfind("slot,user,alpha,beta,power_w,rate_bps,local_s,off_s,mec_s,total_s,local_j,off_j\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("decision JSON round-trips") {
    const Decision d{{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}};
    CHECK(nlohmann::json(d).get<Decision>() == d);
}
