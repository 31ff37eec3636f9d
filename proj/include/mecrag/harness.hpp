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

// Experiment sweeps over dataset buckets, seeds and solvers, with CSV output
// and the command-line front end.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecrag/llm_decision.hpp"
#include "mecrag/solvers.hpp"
#include "mecrag/system_model.hpp"

namespace mecrag::harness {

enum class EncoderKind { Hashing, Http };

struct ExperimentPlan {
    model::DatasetFamily dataset = model::DatasetFamily::DUSD;
    std::vector<int> buckets;
    std::vector<solvers::SolverSpec> solvers;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out_dir = "results";

    int user_count = 10;
    bool deterministic_channel = false;
    model::SystemConfig config;
    model::ScenarioOptions options;
    /// Backend and encoder used by rag-llm cells.
    llm::BackendConfig backend;
    EncoderKind encoder = EncoderKind::Hashing;
    std::size_t top_k = 5;
    /// Worker threads; 0 picks the hardware concurrency.
    std::size_t threads = 0;

    /// Throws model::InvalidInput unless there is at least one bucket, solver
    /// and seed, every bucket is in range and every solver spec is valid.
    void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentPlan& plan);
void from_json(const nlohmann::json& j, ExperimentPlan& plan);

ExperimentPlan load_plan(const std::filesystem::path& path);

struct ResultRow {
    std::string dataset;
    int bucket = 0;
    std::string solver;
    std::uint64_t seed = 0;
    /// NaN when the cell failed; see `error`.
    double mean_latency_s = 0.0;
    bool energy_ok = false;
    std::size_t fallback_count = 0;
    std::string error;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultsTable {
    std::vector<ResultRow> rows;
};

/// One row per (bucket, seed, solver), ordered bucket-major, then seed, then
/// the plan's solver order. Identical plans give identical tables.
ResultsTable run_experiment(const ExperimentPlan& plan);

struct SummaryRow {
    std::string dataset;
    int bucket = 0;
    std::string solver;
    std::size_t count = 0;
    double mean_s = 0.0;
    double stddev_s = 0.0;
};

/// Mean and sample standard deviation over seeds for each
/// (dataset, bucket, solver), sorted by that key. Failed rows are skipped.
std::vector<SummaryRow> summarize(const ResultsTable& table);

/// Writes <dir>/<DATASET>.csv for every dataset in the summary, with
/// columns bucket_parameter,solver,mean_s,stddev_s. Files are replaced
/// atomically.
void emit_plotdata(std::span<const SummaryRow> summary, const std::filesystem::path& dir);

void write_results_csv(std::ostream& out, const ResultsTable& table);
ResultsTable read_results_csv(std::istream& in);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> summary);

/// results.csv, summary.csv, plotdata/ and the resolved plan.json under plan.out_dir.
void write_outputs(const ExperimentPlan& plan, const ResultsTable& table);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct CellDelta {
    std::string dataset;
    int bucket = 0;
    std::string solver;
    std::uint64_t seed = 0;
    double baseline_s = 0.0;
    double candidate_s = 0.0;
    double delta_s = 0.0;
};

struct Comparison {
    std::vector<CellDelta> deltas;
    /// Cells present in only one of the two tables.
    std::size_t unmatched = 0;
};

/// Joins on (dataset, bucket, solver, seed); delta = candidate - baseline.
Comparison compare(const ResultsTable& baseline, const ResultsTable& candidate);

void write_comparison_csv(std::ostream& out, const Comparison& cmp);

/// Exit status: 0 success, 1 usage error, 2 runtime error.
int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace mecrag::harness
