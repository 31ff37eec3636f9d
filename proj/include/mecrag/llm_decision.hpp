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

// Retrieval-augmented decision pipeline: retrieve capability records, render
// the prompt, ask a completion backend, parse and repair its answer.

#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecrag/http_client.hpp"
#include "mecrag/performance.hpp"
#include "mecrag/retrieval.hpp"
#include "mecrag/solvers.hpp"

namespace mecrag::llm {

using perf::Decision;
using perf::SlotState;

/// The fields the prompt is assembled from: users, their data volumes, and
/// the server and link parameters.
struct SlotSummary {
    std::vector<int> user_ids;
    std::vector<double> task_bits;
    double server_cycles_per_sec = 0.0;
    double bandwidth_hz = 0.0;
    double noise_power_w = 0.0;
};

struct Prompt {
    std::string text;
    /// Retrieved records, one per user id, in ascending user id.
    std::vector<retrieval::CapabilityRecord> context;
    SlotSummary slot_summary;
    /// Structured copy of the slot, consumed by the offline mock backend.
    SlotState slot;
    std::vector<std::string> diagnostics;
};

Prompt build_prompt(const SlotState& slot, std::span<const retrieval::CapabilityRecord> retrieved);

enum class BackendKind { Mock, HttpChat };

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string endpoint;  ///< base URL, e.g. https://api.openai.com/v1
    std::string api_key;   ///< never serialized
    std::string model = "gpt-4o";
    double timeout_s = 60.0;
    int max_retries = 2;
    double temperature = 0.0;
    std::size_t max_in_flight = 4;

    /// Throws model::InvalidInput when timeout <= 0 or retries < 0.
    void validate() const;

    /// HttpChat config from LLM_API_BASE, LLM_API_KEY and LLM_MODEL.
    static BackendConfig from_environment();
};

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);

/// Serializes everything except the API key.
void to_json(nlohmann::json& j, const BackendConfig& c);
/// Reads kind/endpoint/model/timeout/retries/temperature; the key comes from LLM_API_KEY.
void from_json(const nlohmann::json& j, BackendConfig& c);

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    /// Raw completion text. Throws net::BackendError on failure.
    virtual std::string complete(const Prompt& prompt) = 0;
};

/// Offline stand-in: runs the alternating heuristic on the prompt's slot and
/// renders the result in the demanded JSON shape.
class MockBackend final : public CompletionBackend {
public:
    explicit MockBackend(solvers::SolverSpec heuristic = {});
    std::string complete(const Prompt& prompt) override;

private:
    solvers::SolverSpec heuristic_;
};

/// One OpenAI-compatible chat-completion request per prompt.
class HttpChatBackend final : public CompletionBackend {
public:
    explicit HttpChatBackend(BackendConfig config);
    std::string complete(const Prompt& prompt) override;

    [[nodiscard]] std::size_t peak_in_flight() const { return gate_.peak(); }

    /// Request body sent for a prompt; exposed for wire-format tests.
    [[nodiscard]] nlohmann::json request_body(const Prompt& prompt) const;

private:
    BackendConfig config_;
    net::RequestGate gate_;
};

std::unique_ptr<CompletionBackend> make_backend(const BackendConfig& config);

/// Convenience form: builds the backend for `config` and completes once.
std::string complete(const BackendConfig& config, const Prompt& prompt);

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DecisionResponse {
    std::string raw_text;
    Decision parsed;
    std::vector<std::string> parse_diagnostics;
};

/// Reads the first JSON object in `raw`. Users whose entries are missing or
/// malformed get (0, 0, 0) and a diagnostic. Throws ParseError when the text
/// holds no JSON object at all.
DecisionResponse parse_decision(std::string_view raw, std::span<const int> user_ids);

struct RagConfig {
    std::size_t top_k = 5;
    /// Heuristic used both by the fallback path and as the mock's solver.
    solvers::SolverSpec fallback;
};

struct RagOutcome {
    Decision decision;
    bool fallback = false;
    std::vector<std::string> diagnostics;
    std::string raw_text;
};

/// retrieve -> prompt -> complete -> parse -> repair. Backend or parse
/// failures fall back to the alternating heuristic; the result is always
/// feasible for the slot.
RagOutcome rag_solve(const SlotState& slot, const retrieval::VectorStore& store, const retrieval::Encoder& encoder,
                     CompletionBackend& backend, const RagConfig& config = {});

}  // namespace mecrag::llm
