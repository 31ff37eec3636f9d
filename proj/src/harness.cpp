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

#include "mecrag/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mecrag/retrieval.hpp"

namespace mecrag::harness {

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// RFC 4180 line splitter; quoted fields may not span lines.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    return fields;
}

std::uint64_t cell_seed(std::uint64_t spec_seed, std::uint64_t dataset_seed) {
    return spec_seed ^ (dataset_seed * 0x9E3779B97F4A7C15ULL);
}

// Everything a rag-llm cell shares with its siblings.
struct RagResources {
    std::unique_ptr<llm::CompletionBackend> http_backend;
    std::unique_ptr<retrieval::Encoder> encoder;
};

ResultRow run_cell(const ExperimentPlan& plan, int bucket, std::uint64_t seed, const solvers::SolverSpec& spec,
                   const RagResources& rag) {
    ResultRow row;
    row.dataset = std::string(model::to_string(plan.dataset));
    row.bucket = bucket;
    row.solver = solvers::label(spec);
    row.seed = seed;
    try {
        auto options = plan.options;
        options.deterministic_channel = plan.deterministic_channel;
        const auto scenario =
            model::generate_dataset({plan.dataset, bucket}, plan.config, seed, plan.user_count, options);

        solvers::ScenarioSolution solution;
        if (spec.kind == solvers::SolverKind::RagLlm) {
            retrieval::VectorStore store(rag.encoder->dim());
            retrieval::populate(store, retrieval::records_from_scenario(scenario), *rag.encoder);
            llm::RagConfig cfg;
            cfg.top_k = plan.top_k;
            cfg.fallback = spec;
            cfg.fallback.kind = solvers::SolverKind::AlternatingHeuristic;
            llm::MockBackend mock(cfg.fallback);
            llm::CompletionBackend& backend = rag.http_backend ? *rag.http_backend : mock;
            std::size_t fallbacks = 0;
            solution = solvers::solve_scenario(scenario, spec.budget_policy, [&](const perf::SlotState& s) {
                auto outcome = llm::rag_solve(s, store, *rag.encoder, backend, cfg);
                fallbacks += outcome.fallback ? 1 : 0;
                return std::move(outcome.decision);
            });
            row.fallback_count = fallbacks;
        } else {
            auto cell_spec = spec;
            cell_spec.seed = cell_seed(spec.seed, seed);
            solution = solvers::solve_scenario(scenario, cell_spec);
        }
        row.mean_latency_s = solution.objective;
        row.energy_ok = solution.report.energy().passed;
    } catch (const std::exception& e) {
        row.mean_latency_s = std::nan("");
        row.energy_ok = false;
        row.error = e.what();
    }
    return row;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    return fmt::format("{}", x);
}

double parse_double(const std::string& s) {
    if (s == "nan" || s.empty()) return std::nan("");
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw model::InvalidInput(fmt::format("'{}' is not a number", s));
    return x;
}

}  // namespace

void ExperimentPlan::validate() const {
    if (buckets.empty()) throw model::InvalidInput("plan needs at least one bucket");
    if (solvers.empty()) throw model::InvalidInput("plan needs at least one solver");
    if (seeds.empty()) throw model::InvalidInput("plan needs at least one seed");
    for (int b : buckets) {
        if (b < 0 || b >= model::kBucketCount) {
            throw model::InvalidInput(fmt::format("bucket {} outside 0..{}", b, model::kBucketCount - 1));
        }
    }
    for (const auto& s : solvers) s.validate();
    if (user_count < 1) throw model::InvalidInput("plan needs user_count >= 1");
    if (top_k < 1) throw model::InvalidInput("plan needs top_k >= 1");
    if (const auto v = model::validate_config(config); !v.ok()) {
        throw model::InvalidInput(fmt::format("plan config: {}", v.violations.front()));
    }
    backend.validate();
}

void to_json(nlohmann::json& j, const ExperimentPlan& plan) {
    j = nlohmann::json{{"dataset", model::to_string(plan.dataset)},
                       {"buckets", plan.buckets},
                       {"solvers", plan.solvers},
                       {"seeds", plan.seeds},
                       {"out_dir", plan.out_dir.generic_string()},
                       {"user_count", plan.user_count},
                       {"deterministic_channel", plan.deterministic_channel},
                       {"config", plan.config},
                       {"max_power_w", plan.options.max_power_w},
                       {"energy_budget_j", plan.options.energy_budget_j},
                       {"speed_m_per_slot", plan.options.speed_m_per_slot},
                       {"backend", plan.backend},
                       {"encoder", plan.encoder == EncoderKind::Hashing ? "hashing" : "http"},
                       {"top_k", plan.top_k},
                       {"threads", plan.threads}};
}

void from_json(const nlohmann::json& j, ExperimentPlan& plan) {
    plan = ExperimentPlan{};
    plan.dataset = model::parse_dataset_family(j.at("dataset").get<std::string>());
    j.at("buckets").get_to(plan.buckets);
    j.at("solvers").get_to(plan.solvers);
    j.at("seeds").get_to(plan.seeds);
    plan.out_dir = j.value("out_dir", plan.out_dir.generic_string());
    plan.user_count = j.value("user_count", plan.user_count);
    plan.deterministic_channel = j.value("deterministic_channel", plan.deterministic_channel);
    if (j.contains("config")) j.at("config").get_to(plan.config);
    plan.options.max_power_w = j.value("max_power_w", plan.options.max_power_w);
    plan.options.energy_budget_j = j.value("energy_budget_j", plan.options.energy_budget_j);
    plan.options.speed_m_per_slot = j.value("speed_m_per_slot", plan.options.speed_m_per_slot);
    if (j.contains("backend")) j.at("backend").get_to(plan.backend);
    const auto encoder = j.value("encoder", std::string("hashing"));
    if (encoder == "hashing") {
        plan.encoder = EncoderKind::Hashing;
    } else if (encoder == "http") {
        plan.encoder = EncoderKind::Http;
    } else {
        throw model::InvalidInput(fmt::format("unknown encoder '{}'", encoder));
    }
    plan.top_k = j.value("top_k", plan.top_k);
    plan.threads = j.value("threads", plan.threads);
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open plan '{}'", path.string()));
    return nlohmann::json::parse(in).get<ExperimentPlan>();
}

ResultsTable run_experiment(const ExperimentPlan& plan) {
    plan.validate();

    RagResources rag;
    const bool wants_rag = std::any_of(plan.solvers.begin(), plan.solvers.end(),
                                       [](const auto& s) { return s.kind == solvers::SolverKind::RagLlm; });
    if (wants_rag) {
        if (plan.encoder == EncoderKind::Http) {
            rag.encoder = retrieval::HttpEmbeddingEncoder::from_environment();
        } else {
            rag.encoder = std::make_unique<retrieval::HashingEncoder>();
        }
        if (plan.backend.kind == llm::BackendKind::HttpChat) rag.http_backend = llm::make_backend(plan.backend);
    }

    struct Cell {
        int bucket;
        std::uint64_t seed;
        const solvers::SolverSpec* spec;
    };
    std::vector<Cell> cells;
    for (int b : plan.buckets) {
        for (auto seed : plan.seeds) {
            for (const auto& spec : plan.solvers) cells.push_back({b, seed, &spec});
        }
    }

    ResultsTable table;
    table.rows.resize(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            table.rows[i] = run_cell(plan, cells[i].bucket, cells[i].seed, *cells[i].spec, rag);
        }
    };

    std::size_t threads = plan.threads ? plan.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, cells.size());
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    pool.clear();
    return table;
}

std::vector<SummaryRow> summarize(const ResultsTable& table) {
    using Key = std::tuple<std::string, int, std::string>;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : table.rows) {
        auto& values = groups[{r.dataset, r.bucket, r.solver}];
        if (r.error.empty() && std::isfinite(r.mean_latency_s)) values.push_back(r.mean_latency_s);
    }
    std::vector<SummaryRow> out;
    for (auto& [key, values] : groups) {
        if (values.empty()) continue;
        // Seed order must not change the floating-point sums.
        std::sort(values.begin(), values.end());
        SummaryRow s{std::get<0>(key), std::get<1>(key), std::get<2>(key), values.size(), 0.0, 0.0};
        double sum = 0.0;
        for (double v : values) sum += v;
        s.mean_s = sum / static_cast<double>(values.size());
        if (values.size() > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - s.mean_s) * (v - s.mean_s);
            s.stddev_s = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", tmp.string()));
        out << content;
        out.flush();
        if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

void emit_plotdata(std::span<const SummaryRow> summary, const std::filesystem::path& dir) {
    if (summary.empty()) throw model::InvalidInput("emit_plotdata needs a non-empty summary");
    std::map<std::string, std::string> files;
    for (const auto& s : summary) {
        auto& body = files[s.dataset];
        if (body.empty()) body = "bucket_parameter,solver,mean_s,stddev_s\n";
        const model::DatasetKind kind{model::parse_dataset_family(s.dataset), s.bucket};
        body += fmt::format("{},{},{},{}\n", model::bucket_axis_value(kind), csv_field(s.solver),
                            format_double(s.mean_s), format_double(s.stddev_s));
    }
    for (const auto& [dataset, body] : files) write_file_atomic(dir / (dataset + ".csv"), body);
}

void write_results_csv(std::ostream& out, const ResultsTable& table) {
    out << "dataset,bucket,solver,seed,mean_latency_s,energy_ok,fallback_count,error\n";
    for (const auto& r : table.rows) {
        fmt::print(out, "{},{},{},{},{},{},{},{}\n", csv_field(r.dataset), r.bucket, csv_field(r.solver), r.seed,
                   format_double(r.mean_latency_s), r.energy_ok ? "true" : "false", r.fallback_count,
                   csv_field(r.error));
    }
}

ResultsTable read_results_csv(std::istream& in) {
    ResultsTable table;
    std::string line;
    if (!std::getline(in, line)) throw model::InvalidInput("results file is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 7 || header[0] != "dataset" || header[4] != "mean_latency_s") {
        throw model::InvalidInput("results file has an unexpected header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() < 7) throw model::InvalidInput(fmt::format("results line {}: {} fields", line_no, f.size()));
        ResultRow r;
        try {
            r.dataset = f[0];
            r.bucket = std::stoi(f[1]);
            r.solver = f[2];
            r.seed = std::stoull(f[3]);
            r.mean_latency_s = parse_double(f[4]);
            r.energy_ok = f[5] == "true";
            r.fallback_count = std::stoull(f[6]);
            if (f.size() > 7) r.error = f[7];
        } catch (const std::logic_error& e) {
            throw model::InvalidInput(fmt::format("results line {}: {}", line_no, e.what()));
        }
        table.rows.push_back(std::move(r));
    }
    return table;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> summary) {
    out << "dataset,bucket,solver,count,mean_s,stddev_s\n";
    for (const auto& s : summary) {
        fmt::print(out, "{},{},{},{},{},{}\n", csv_field(s.dataset), s.bucket, csv_field(s.solver), s.count,
                   format_double(s.mean_s), format_double(s.stddev_s));
    }
}

void write_outputs(const ExperimentPlan& plan, const ResultsTable& table) {
    std::ostringstream results;
    write_results_csv(results, table);
    write_file_atomic(plan.out_dir / "results.csv", results.str());

    const auto summary = summarize(table);
    std::ostringstream summary_csv;
    write_summary_csv(summary_csv, summary);
    write_file_atomic(plan.out_dir / "summary.csv", summary_csv.str());
    if (!summary.empty()) emit_plotdata(summary, plan.out_dir / "plotdata");

    write_file_atomic(plan.out_dir / "plan.json", nlohmann::json(plan).dump(2) + "\n");
}

Comparison compare(const ResultsTable& baseline, const ResultsTable& candidate) {
    using Key = std::tuple<std::string, int, std::string, std::uint64_t>;
    std::map<Key, double> base;
    for (const auto& r : baseline.rows) base[{r.dataset, r.bucket, r.solver, r.seed}] = r.mean_latency_s;
    Comparison cmp;
    std::size_t matched = 0;
    for (const auto& r : candidate.rows) {
        const auto it = base.find({r.dataset, r.bucket, r.solver, r.seed});
        if (it == base.end()) {
            ++cmp.unmatched;
            continue;
        }
        ++matched;
        cmp.deltas.push_back({r.dataset, r.bucket, r.solver, r.seed, it->second, r.mean_latency_s,
                              r.mean_latency_s - it->second});
    }
    cmp.unmatched += base.size() - matched;
    std::sort(cmp.deltas.begin(), cmp.deltas.end(), [](const CellDelta& a, const CellDelta& b) {
        return std::tie(a.dataset, a.bucket, a.solver, a.seed) < std::tie(b.dataset, b.bucket, b.solver, b.seed);
    });
    return cmp;
}

void write_comparison_csv(std::ostream& out, const Comparison& cmp) {
    out << "dataset,bucket,solver,seed,baseline_s,candidate_s,delta_s\n";
    for (const auto& d : cmp.deltas) {
        fmt::print(out, "{},{},{},{},{},{},{}\n", csv_field(d.dataset), d.bucket, csv_field(d.solver), d.seed,
                   format_double(d.baseline_s), format_double(d.candidate_s), format_double(d.delta_s));
    }
}

}  // namespace mecrag::harness
