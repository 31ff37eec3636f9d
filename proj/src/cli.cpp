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

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mecrag/harness.hpp"
#include "mecrag/retrieval.hpp"

namespace mecrag::harness {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
    }
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_file_atomic(path, text);
    }
}

struct SolverFlags {
    std::string name = "alternating";
    solvers::SolverSpec spec;
    std::string budget_policy = "per-slot";

    void attach(CLI::App& cmd) {
        cmd.add_option("--solver", name, "local-only | full-offload-equal | random-feasible | alternating | "
                                         "grid-oracle | rag-llm")
            ->capture_default_str();
        cmd.add_option("--grid", spec.grid_resolution, "grid-oracle points per axis")->capture_default_str();
        cmd.add_option("--max-rounds", spec.max_rounds, "alternating rounds")->capture_default_str();
        cmd.add_option("--power-points", spec.power_grid_points, "power line-search points")->capture_default_str();
        cmd.add_option("--solver-seed", spec.seed, "random-feasible seed")->capture_default_str();
        cmd.add_option("--oracle-budget", spec.oracle_budget, "largest grid the oracle enumerates")
            ->capture_default_str();
        cmd.add_option("--budget-policy", budget_policy, "per-slot | carry-over")
            ->check(CLI::IsMember({"per-slot", "carry-over"}))
            ->capture_default_str();
    }

    solvers::SolverSpec resolve() const {
        auto s = spec;
        s.kind = solvers::parse_solver_kind(name);
        s.budget_policy = budget_policy == "carry-over" ? solvers::BudgetPolicy::CarryOver
                                                        : solvers::BudgetPolicy::PerSlot;
        s.validate();
        return s;
    }
};

llm::BackendConfig backend_from_flag(const std::string& kind) {
    if (llm::parse_backend_kind(kind) == llm::BackendKind::Mock) return {};
    auto cfg = llm::BackendConfig::from_environment();
    cfg.validate();
    return cfg;
}

int gen_dataset(const std::string& kind, int bucket, std::uint64_t seed, int users, bool deterministic,
                const std::string& out_path, std::ostream& out) {
    model::ScenarioOptions options;
    options.deterministic_channel = deterministic;
    const auto scenario =
        model::generate_dataset({model::parse_dataset_family(kind), bucket}, model::SystemConfig{}, seed, users, options);
    emit(out_path, nlohmann::json(scenario).dump(2) + "\n", out);
    return kExitOk;
}

int solve(const std::string& scenario_path, const solvers::SolverSpec& spec, const std::string& backend_kind,
          const std::string& out_path, std::ostream& out) {
    const auto scenario = read_json_file(scenario_path).get<model::Scenario>();
    if (const auto v = model::validate_scenario(scenario); !v.ok()) {
        throw model::InvalidInput(fmt::format("scenario: {}", v.violations.front()));
    }

    solvers::ScenarioSolution solution;
    std::size_t fallbacks = 0;
    if (spec.kind == solvers::SolverKind::RagLlm) {
        retrieval::HashingEncoder encoder;
        retrieval::VectorStore store(encoder.dim());
        retrieval::populate(store, retrieval::records_from_scenario(scenario), encoder);
        llm::RagConfig cfg;
        cfg.fallback = spec;
        cfg.fallback.kind = solvers::SolverKind::AlternatingHeuristic;
        const auto backend_cfg = backend_from_flag(backend_kind);
        auto backend = backend_cfg.kind == llm::BackendKind::Mock ? std::make_unique<llm::MockBackend>(cfg.fallback)
                                                                  : llm::make_backend(backend_cfg);
        solution = solvers::solve_scenario(scenario, spec.budget_policy, [&](const perf::SlotState& s) {
            auto outcome = llm::rag_solve(s, store, encoder, *backend, cfg);
            fallbacks += outcome.fallback ? 1 : 0;
            return std::move(outcome.decision);
        });
    } else {
        solution = solvers::solve_scenario(scenario, spec);
    }

    const nlohmann::json doc{{"solver", solvers::label(spec)},
                             {"objective_s", solution.objective},
                             {"feasible", solution.report.feasible()},
                             {"fallback_count", fallbacks},
                             {"constraints", solution.report},
                             {"decisions", solution.decisions}};
    emit(out_path, doc.dump(2) + "\n", out);
    return kExitOk;
}

int eval_retrieval(const std::string& kb_path, const std::string& queries_path, std::size_t k,
                   const std::string& encoder_kind, std::size_t dim, std::ostream& out) {
    const auto records = read_json_file(kb_path).get<std::vector<retrieval::CapabilityRecord>>();
    const auto queries_doc = read_json_file(queries_path);
    if (!queries_doc.is_array()) throw model::InvalidInput("queries file must be a JSON array");

    std::unique_ptr<retrieval::Encoder> encoder;
    if (encoder_kind == "http") {
        encoder = retrieval::HttpEmbeddingEncoder::from_environment();
    } else {
        encoder = std::make_unique<retrieval::HashingEncoder>(dim);
    }

    // The first encoded record fixes the store dimension for encoders that
    // learn it from the service.
    std::vector<retrieval::EmbeddingVector> vectors;
    for (const auto& r : records) vectors.push_back(retrieval::encode(r, *encoder));
    if (vectors.empty()) throw model::InvalidInput("knowledge base is empty");
    retrieval::VectorStore store(vectors.front().dim());
    for (std::size_t i = 0; i < records.size(); ++i) store.insert(records[i], vectors[i]);

    std::vector<retrieval::LabeledQuery> queries;
    for (const auto& q : queries_doc) {
        const int id = q.at("relevant_user_id").get<int>();
        const auto text = q.contains("text") ? q.at("text").get<std::string>() : retrieval::query_text(id);
        queries.push_back({encoder->encode_text(text), id});
    }
    if (queries.empty()) throw model::InvalidInput("queries file is empty");

    const auto m = retrieval::evaluate_retrieval(store, queries, k);
    nlohmann::json ranks = nlohmann::json::array();
    for (const auto& r : m.ranks) ranks.push_back(r ? nlohmann::json(*r) : nlohmann::json(nullptr));
    out << nlohmann::json{{"k", k}, {"queries", queries.size()}, {"hit_rate", m.hit_rate}, {"mrr", m.mrr},
                          {"ranks", ranks}}
               .dump(2)
        << "\n";
    return kExitOk;
}

int compare_files(const std::string& baseline_path, const std::string& candidate_path, const std::string& out_path,
                  std::ostream& out, std::ostream& err) {
    auto load = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
        return read_results_csv(in);
    };
    const auto cmp = compare(load(baseline_path), load(candidate_path));
    std::ostringstream csv;
    write_comparison_csv(csv, cmp);
    emit(out_path, csv.str(), out);
    if (cmp.unmatched > 0) fmt::print(err, "{} cells present in only one file\n", cmp.unmatched);
    return kExitOk;
}

}  // namespace

int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Latency-minimizing offloading decisions for a multi-user edge computing cell"};
    app.name(args.empty() ? "mecrag" : args.front());
    app.require_subcommand(1);

    // gen-dataset
    std::string kind = "DUSD";
    int bucket = 0;
    std::uint64_t seed = 1;
    int users = 10;
    bool deterministic = false;
    std::string out_path;
    auto* gen = app.add_subcommand("gen-dataset", "Generate a 10-slot dataset scenario as JSON");
    gen->add_option("--kind", kind, "DSCC | DUSD | DUP | DUCC")->capture_default_str();
    gen->add_option("--bucket", bucket, "bucket index 0-4")->check(CLI::Range(0, model::kBucketCount - 1))
        ->capture_default_str();
    gen->add_option("--seed", seed)->capture_default_str();
    gen->add_option("--users", users)->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_flag("--deterministic-channel", deterministic, "line-of-sight channel only");
    gen->add_option("--out", out_path, "output file (default: stdout)");

    // solve
    std::string scenario_path;
    SolverFlags solve_flags;
    std::string backend_kind = "mock";
    auto* solve_cmd = app.add_subcommand("solve", "Solve every slot of a scenario file");
    solve_cmd->add_option("--scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
    solve_flags.attach(*solve_cmd);
    solve_cmd->add_option("--backend", backend_kind, "mock | http-chat (rag-llm only)")
        ->check(CLI::IsMember({"mock", "http-chat"}))
        ->capture_default_str();
    solve_cmd->add_option("--out", out_path, "output file (default: stdout)");

    // eval-retrieval
    std::string kb_path;
    std::string queries_path;
    std::size_t k = 5;
    std::string encoder_kind = "hashing";
    std::size_t dim = 64;
    auto* eval = app.add_subcommand("eval-retrieval", "Hit rate and MRR of a knowledge base against labeled queries");
    eval->add_option("--kb", kb_path, "records JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--queries", queries_path, "JSON array of {relevant_user_id, text?}")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--k", k)->check(CLI::PositiveNumber)->capture_default_str();
    eval->add_option("--encoder", encoder_kind)->check(CLI::IsMember({"hashing", "http"}))->capture_default_str();
    eval->add_option("--dim", dim, "hashing encoder dimension")->check(CLI::PositiveNumber)->capture_default_str();

    // run
    std::string plan_path;
    std::optional<std::string> run_dataset;
    std::vector<int> run_buckets;
    std::vector<std::string> run_solvers;
    std::vector<std::uint64_t> run_seeds;
    std::optional<std::string> run_out_dir;
    std::optional<int> run_users;
    std::optional<std::size_t> run_threads;
    std::optional<std::string> run_backend;
    bool run_deterministic = false;
    auto* run = app.add_subcommand("run", "Run an experiment sweep; flags override plan fields");
    run->add_option("--plan", plan_path, "plan JSON")->check(CLI::ExistingFile);
    run->add_option("--dataset", run_dataset, "DSCC | DUSD | DUP | DUCC");
    run->add_option("--bucket", run_buckets, "bucket indices")->check(CLI::Range(0, model::kBucketCount - 1));
    run->add_option("--solver", run_solvers, "solver names");
    run->add_option("--seed", run_seeds, "dataset seeds");
    run->add_option("--out-dir", run_out_dir);
    run->add_option("--users", run_users)->check(CLI::PositiveNumber);
    run->add_option("--threads", run_threads);
    run->add_option("--backend", run_backend)->check(CLI::IsMember({"mock", "http-chat"}));
    run->add_flag("--deterministic-channel", run_deterministic);

    // compare
    std::string baseline_path;
    std::string candidate_path;
    auto* cmp = app.add_subcommand("compare", "Per-cell latency deltas between two results.csv files");
    cmp->add_option("baseline", baseline_path)->required()->check(CLI::ExistingFile);
    cmp->add_option("candidate", candidate_path)->required()->check(CLI::ExistingFile);
    cmp->add_option("--out", out_path, "output file (default: stdout)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        err << app.help();
        return kExitUsage;
    }

    try {
        if (*gen) return gen_dataset(kind, bucket, seed, users, deterministic, out_path, out);
        if (*solve_cmd) return solve(scenario_path, solve_flags.resolve(), backend_kind, out_path, out);
        if (*eval) return eval_retrieval(kb_path, queries_path, k, encoder_kind, dim, out);
        if (*cmp) return compare_files(baseline_path, candidate_path, out_path, out, err);

        ExperimentPlan plan;
        if (!plan_path.empty()) {
            plan = load_plan(plan_path);
        } else if (!run_dataset || run_buckets.empty() || run_solvers.empty() || run_seeds.empty()) {
            fmt::print(err, "run needs --plan or all of --dataset, --bucket, --solver, --seed\n{}", run->help());
            return kExitUsage;
        }
        if (run_dataset) plan.dataset = model::parse_dataset_family(*run_dataset);
        if (!run_buckets.empty()) plan.buckets = run_buckets;
        if (!run_solvers.empty()) {
            plan.solvers.clear();
            for (const auto& name : run_solvers) plan.solvers.push_back(nlohmann::json(name).get<solvers::SolverSpec>());
        }
        if (!run_seeds.empty()) plan.seeds = run_seeds;
        if (run_out_dir) plan.out_dir = *run_out_dir;
        if (run_users) plan.user_count = *run_users;
        if (run_threads) plan.threads = *run_threads;
        if (run_backend) plan.backend = backend_from_flag(*run_backend);
        if (run_deterministic) plan.deterministic_channel = true;

        const auto table = run_experiment(plan);
        write_outputs(plan, table);
        std::size_t failed = 0;
        for (const auto& r : table.rows) failed += r.error.empty() ? 0 : 1;
        fmt::print(out, "{} rows written to {}\n", table.rows.size(), (plan.out_dir / "results.csv").string());
        if (failed > 0) fmt::print(err, "{} cells failed; see the error column\n", failed);
        return kExitOk;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitRuntime;
    }
}

int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace mecrag::harness
