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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "mecrag/harness.hpp"

#include "support.hpp"

using namespace mecrag;
using namespace mecrag::harness;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("mecrag_harness_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

solvers::SolverSpec kind(solvers::SolverKind k) {
    solvers::SolverSpec s;
    s.kind = k;
    return s;
}

ExperimentPlan small_plan() {
    ExperimentPlan p;
    p.dataset = model::DatasetFamily::DUSD;
    p.buckets = {2};
    p.solvers = {kind(solvers::SolverKind::LocalOnly), kind(solvers::SolverKind::AlternatingHeuristic)};
    p.seeds = {1, 2, 3};
    return p;
}

ResultRow row(int bucket, std::string solver, std::uint64_t seed, double latency) {
    return ResultRow{"DUSD", bucket, std::move(solver), seed, latency, true, 0, ""};
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    std::ostringstream out;
    std::ostringstream err;
    args.insert(args.begin(), "mecrag");
    const int code = cli_main(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

}  // namespace

TEST_CASE("experiment produces one row per cell in plan order") {
    const auto plan = small_plan();
    const auto table = run_experiment(plan);
    REQUIRE(table.rows.size() == 6);
    std::size_t i = 0;
    for (auto seed : plan.seeds) {
        for (const char* name : {"local-only", "alternating"}) {
            const auto& r = table.rows[i++];
            CHECK(r.dataset == "DUSD");
            CHECK(r.bucket == 2);
            CHECK(r.seed == seed);
            CHECK(r.solver == name);
            CHECK(r.error.empty());
            CHECK(r.energy_ok);
            CHECK(std::isfinite(r.mean_latency_s));
        }
    }
    for (std::size_t k = 0; k < 6; k += 2) CHECK(table.rows[k + 1].mean_latency_s <= table.rows[k].mean_latency_s);
}

TEST_CASE("identical plans give identical tables regardless of threads") {
    auto plan = small_plan();
    plan.solvers.push_back(kind(solvers::SolverKind::RagLlm));
    plan.solvers.push_back(kind(solvers::SolverKind::RandomFeasible));
    plan.threads = 1;
    const auto a = run_experiment(plan);
    plan.threads = 4;
    const auto b = run_experiment(plan);
    CHECK(a.rows == b.rows);
}

TEST_CASE("oracle never loses to local-only on small slots") {
    auto plan = small_plan();
    plan.user_count = 2;
    auto oracle = kind(solvers::SolverKind::GridOracle);
    oracle.grid_resolution = 5;
    plan.solvers = {kind(solvers::SolverKind::LocalOnly), oracle};
    const auto table = run_experiment(plan);
    REQUIRE(table.rows.size() == 6);
    for (std::size_t k = 0; k < 6; k += 2) {
        CHECK(table.rows[k + 1].error.empty());
        CHECK(table.rows[k + 1].mean_latency_s <= table.rows[k].mean_latency_s);
    }
}

TEST_CASE("a failing cell becomes an error row") {
    auto plan = small_plan();
    auto oracle = kind(solvers::SolverKind::GridOracle);
    oracle.oracle_budget = 10;
    plan.solvers = {oracle};
    plan.seeds = {1};
    const auto table = run_experiment(plan);
    REQUIRE(table.rows.size() == 1);
    CHECK(std::isnan(table.rows[0].mean_latency_s));
    CHECK_FALSE(table.rows[0].energy_ok);
    CHECK_FALSE(table.rows[0].error.empty());
    CHECK(summarize(table).empty());
}

TEST_CASE("summarize") {
    ResultsTable t;
    t.rows = {row(0, "a", 1, 0.5), row(0, "a", 2, 0.7), row(0, "b", 1, 0.4), row(1, "a", 1, 0.9)};
    const auto s = summarize(t);
    REQUIRE(s.size() == 3);
    CHECK(s[0].solver == "a");
    CHECK(s[0].bucket == 0);
    CHECK(s[0].count == 2);
    CHECK(s[0].mean_s == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(s[0].stddev_s == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
    CHECK(s[1].stddev_s == 0.0);
    CHECK(s[2].mean_s == 0.9);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    ResultsTable big;
    for (int b = 0; b < 3; ++b)
        for (std::uint64_t seed = 0; seed < 7; ++seed) big.rows.push_back(row(b, "x", seed, u(rng)));
    const auto ref = summarize(big);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(big.rows.begin(), big.rows.end(), rng);
        const auto again = summarize(big);
        REQUIRE(again.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(again[i].mean_s == ref[i].mean_s);
            CHECK(again[i].stddev_s == ref[i].stddev_s);
        }
    }
}

TEST_CASE("plot data") {
    TempDir dir;
    std::vector<SummaryRow> summary;
    for (int b = 0; b < 5; ++b) summary.push_back({"DUSD", b, "alternating", 5, 0.1 * (b + 1), 0.01});
    emit_plotdata(summary, dir.path);
    const auto text = slurp(dir.path / "DUSD.csv");
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    CHECK(line == "bucket_parameter,solver,mean_s,stddev_s");
    for (int b = 0; b < 5; ++b) {
        REQUIRE(std::getline(in, line));
        CHECK(line.rfind(std::to_string(b + 1) + ",alternating,", 0) == 0);
    }
    CHECK_FALSE(std::getline(in, line));

    summary.resize(2);
    emit_plotdata(summary, dir.path);
    const auto trimmed = slurp(dir.path / "DUSD.csv");
    CHECK(std::count(trimmed.begin(), trimmed.end(), '\n') == 3);

    CHECK_THROWS_AS(emit_plotdata(std::span<const SummaryRow>{}, dir.path), model::InvalidInput);
}

TEST_CASE("results csv round trip") {
    ResultsTable t;
    t.rows = {row(0, "alternating", 1, 0.1 + 0.2), row(3, "grid-oracle(res=5)", 2, 1e-300)};
    t.rows.push_back(ResultRow{"DUP", 4, "rag-llm", 9, std::nan(""), false, 3, "backend said \"no\", twice"});
    std::ostringstream out;
    write_results_csv(out, t);
    std::istringstream in(out.str());
    const auto back = read_results_csv(in);
    REQUIRE(back.rows.size() == 3);
    CHECK(back.rows[0] == t.rows[0]);
    CHECK(back.rows[1] == t.rows[1]);
    CHECK(std::isnan(back.rows[2].mean_latency_s));
    CHECK(back.rows[2].error == t.rows[2].error);
    CHECK(back.rows[2].fallback_count == 3);

    std::istringstream bad("not,a,header\n");
    CHECK_THROWS(read_results_csv(bad));
}

TEST_CASE("compare pairs cells by key") {
    ResultsTable a;
    ResultsTable b;
    a.rows = {row(0, "x", 1, 1.0), row(0, "x", 2, 2.0), row(1, "x", 1, 3.0)};
    b.rows = {row(0, "x", 2, 1.5), row(0, "x", 1, 1.25), row(2, "x", 1, 3.0)};
    const auto cmp = compare(a, b);
    REQUIRE(cmp.deltas.size() == 2);
    CHECK(cmp.unmatched == 2);
    CHECK(cmp.deltas[0].seed == 1);
    CHECK(cmp.deltas[0].delta_s == 0.25);
    CHECK(cmp.deltas[1].delta_s == -0.5);
}

TEST_CASE("plan json and validation") {
    auto plan = small_plan();
    plan.backend.kind = llm::BackendKind::Mock;
    const auto back = nlohmann::json(plan).get<ExperimentPlan>();
    CHECK(back.buckets == plan.buckets);
    CHECK(back.seeds == plan.seeds);
    CHECK(back.solvers.size() == 2);
    CHECK(back.user_count == plan.user_count);
    CHECK_NOTHROW(plan.validate());

    auto bad = plan;
    bad.buckets = {};
    CHECK_THROWS_AS(bad.validate(), model::InvalidInput);
    bad = plan;
    bad.buckets = {5};
    CHECK_THROWS_AS(bad.validate(), model::InvalidInput);
    bad = plan;
    bad.seeds = {};
    CHECK_THROWS_AS(bad.validate(), model::InvalidInput);
    bad = plan;
    bad.solvers = {};
    CHECK_THROWS_AS(bad.validate(), model::InvalidInput);
    bad = plan;
    bad.solvers[0].grid_resolution = 1;
    CHECK_THROWS_AS(bad.validate(), model::InvalidInput);
    bad = plan;
    bad.user_count = 0;
    CHECK_THROWS_AS(bad.validate(), model::InvalidInput);
}

TEST_CASE("cli run writes every output") {
    TempDir dir;
    const fs::path plan_path = fs::path(MECRAG_SOURCE_DIR) / "configs" / "default_plan.json";
    std::string out;
    CHECK(run_cli({"run", "--plan", plan_path.string(), "--out-dir", dir.path.string()}, &out) == 0);
    CHECK(out.find("100 rows") != std::string::npos);
    for (const char* f : {"results.csv", "summary.csv", "plan.json", "plotdata/DUSD.csv"})
        CHECK(fs::exists(dir.path / f));
    std::ifstream in(dir.path / "results.csv");
    const auto table = read_results_csv(in);
    CHECK(table.rows.size() == 100);
    CHECK(slurp(dir.path / "plan.json").find("api_key") == std::string::npos);
}

TEST_CASE("cli subcommands") {
    TempDir dir;
    std::string out;
    std::string err;
    CHECK(run_cli({"--help"}, &out) == 0);
    CHECK(out.find("run") != std::string::npos);
    CHECK(run_cli({"frobnicate"}, nullptr, &err) == 1);
    CHECK_FALSE(err.empty());
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"solve", "--scenario", (dir.path / "missing.json").string()}) == 1);

    const auto scenario = (dir.path / "k1.json").string();
    REQUIRE(run_cli({"gen-dataset", "--kind", "DUSD", "--bucket", "1", "--seed", "4", "--users", "1", "--out",
                     scenario}) == 0);
    const auto solved = (dir.path / "solved.json").string();
    REQUIRE(run_cli({"solve", "--scenario", scenario, "--solver", "grid-oracle", "--grid", "11", "--out", solved}) ==
            0);
    const auto j = nlohmann::json::parse(slurp(solved));
    CHECK(j["feasible"] == true);
    CHECK(j["decisions"].size() == 10);

    std::ofstream(dir.path / "broken.json") << "{ this is not json";
    CHECK(run_cli({"solve", "--scenario", (dir.path / "broken.json").string()}, nullptr, &err) == 2);

    const auto results_a = dir.path / "a";
    const auto results_b = dir.path / "b";
    REQUIRE(run_cli({"run", "--dataset", "DUP", "--bucket", "0", "--solver", "local-only", "--seed", "1",
                     "--out-dir", results_a.string()}) == 0);
    REQUIRE(run_cli({"run", "--dataset", "DUP", "--bucket", "0", "--solver", "alternating", "--seed", "1",
                     "--out-dir", results_b.string()}) == 0);
    const auto delta = (dir.path / "delta.csv").string();
    CHECK(run_cli({"compare", (results_a / "results.csv").string(), (results_b / "results.csv").string(), "--out",
                   delta}) == 0);
    CHECK(fs::exists(delta));
}
