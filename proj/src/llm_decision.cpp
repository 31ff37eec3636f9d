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

#include "mecrag/llm_decision.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>

#include <fmt/format.h>

namespace mecrag::llm {

namespace {

constexpr std::string_view kInstructionHeader =
    "You allocate resources in a mobile edge computing cell with one edge server.\n"
    "For every user choose the offloading ratio alpha (share of the task sent to the server), "
    "the share beta of the server's computing capability, and the uplink transmit power, "
    "so that the average task latency is as small as possible.\n"
    "A user's latency is the larger of its local computing time and its upload time plus edge computing time. "
    "All users share one band, so each user's transmission interferes with the others.\n";

// Openings probed before giving up on finding a JSON object.
constexpr std::size_t kMaxObjectCandidates = 4096;

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

// Offset one past the '}' that closes the '{' at `open`, honoring strings.
std::optional<std::size_t> matching_brace(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::nullopt;
}

std::optional<nlohmann::json> first_json_object(std::string_view text) {
    std::size_t probed = 0;
    for (std::size_t pos = text.find('{'); pos != std::string_view::npos && probed < kMaxObjectCandidates;
         pos = text.find('{', pos + 1), ++probed) {
        const auto end = matching_brace(text, pos);
        if (!end) continue;
        auto parsed = nlohmann::json::parse(text.substr(pos, *end - pos), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    return std::nullopt;
}

std::optional<double> coerce_number(const nlohmann::json& v) {
    double x = 0.0;
    if (v.is_number()) {
        x = v.get<double>();
    } else if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        if (s.empty()) return std::nullopt;
        char* end = nullptr;
        x = std::strtod(s.c_str(), &end);
        while (end && *end == ' ') ++end;
        if (end == s.c_str() || *end != '\0') return std::nullopt;
    } else {
        return std::nullopt;
    }
    if (!std::isfinite(x)) return std::nullopt;
    return x;
}

}  // namespace

Prompt build_prompt(const SlotState& slot, std::span<const retrieval::CapabilityRecord> retrieved) {
    Prompt p;
    p.slot = slot;
    const auto& cfg = slot.config;
    p.slot_summary.server_cycles_per_sec = cfg.server_cycles_per_sec;
    p.slot_summary.bandwidth_hz = cfg.bandwidth_hz;
    p.slot_summary.noise_power_w = cfg.noise_power_w;

    std::map<int, retrieval::CapabilityRecord> by_user;
    for (const auto& r : retrieved) by_user.emplace(r.user_id, r);
    for (auto& [id, r] : by_user) p.context.push_back(r);

    std::string users;
    std::string limits;
    for (std::size_t k = 0; k < slot.user_count(); ++k) {
        const int id = slot.users[k].id;
        const double bits = slot.task_bits[k];
        p.slot_summary.user_ids.push_back(id);
        p.slot_summary.task_bits.push_back(bits);
        if (auto it = by_user.find(id); it != by_user.end()) {
            users += fmt::format("user {}: data {} bits, capability {} cycles/s\n", id, bits, it->second.cycles_per_sec);
        } else {
            users += fmt::format("user {}: data {} bits, capability unknown\n", id, bits);
            p.diagnostics.push_back(fmt::format("no capability record retrieved for user {}", id));
        }
        limits += fmt::format("{}user {} <= {} W", k ? ", " : "", id, slot.users[k].max_power_w);
    }

    std::string knowledge;
    for (const auto& r : p.context) knowledge += fmt::format("- {}\n", r.text);

    p.text = fmt::format(
        "{}\n"
        "Users (K = {}):\n{}"
        "System: server {} cycles/s, bandwidth {} Hz, noise {} W\n"
        "Retrieved knowledge:\n{}"
        "Constraints: 0 <= alpha <= 1; 0 <= beta <= 1 with the betas summing to at most 1; "
        "0 <= power_w <= the power limit ({}).\n"
        "Answer with exactly one JSON object of the form "
        "{{\"alpha\": [...], \"beta\": [...], \"power_w\": [...]}} "
        "where each array has {} numbers in the user order listed above.\n",
        kInstructionHeader, slot.user_count(), users, cfg.server_cycles_per_sec, cfg.bandwidth_hz,
        cfg.noise_power_w, knowledge.empty() ? "(none)\n" : knowledge, limits, slot.user_count());
    return p;
}

void BackendConfig::validate() const {
    if (kind == BackendKind::Mock) return;
    if (!(timeout_s > 0)) throw model::InvalidInput("backend timeout must be > 0");
    if (max_retries < 0) throw model::InvalidInput("backend retries must be >= 0");
    if (endpoint.empty()) throw model::InvalidInput("http backend needs an endpoint");
}

BackendConfig BackendConfig::from_environment() {
    BackendConfig c;
    c.kind = BackendKind::HttpChat;
    c.endpoint = env_or("LLM_API_BASE", "");
    c.api_key = env_or("LLM_API_KEY", "");
    c.model = env_or("LLM_MODEL", c.model);
    return c;
}

std::string_view to_string(BackendKind kind) { return kind == BackendKind::Mock ? "mock" : "http-chat"; }

BackendKind parse_backend_kind(std::string_view name) {
    if (name == "mock") return BackendKind::Mock;
    if (name == "http-chat" || name == "http") return BackendKind::HttpChat;
    throw model::InvalidInput(fmt::format("unknown backend '{}'", name));
}

void to_json(nlohmann::json& j, const BackendConfig& c) {
    j = nlohmann::json{{"kind", to_string(c.kind)},       {"endpoint", c.endpoint},
                       {"model", c.model},                {"timeout_s", c.timeout_s},
                       {"max_retries", c.max_retries},    {"temperature", c.temperature},
                       {"max_in_flight", c.max_in_flight}};
}

void from_json(const nlohmann::json& j, BackendConfig& c) {
    c = BackendConfig{};
    c.kind = parse_backend_kind(j.value("kind", std::string("mock")));
    if (c.kind == BackendKind::HttpChat) c = BackendConfig::from_environment();
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.temperature = j.value("temperature", c.temperature);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.validate();
}

MockBackend::MockBackend(solvers::SolverSpec heuristic) : heuristic_(heuristic) {
    heuristic_.kind = solvers::SolverKind::AlternatingHeuristic;
}

std::string MockBackend::complete(const Prompt& prompt) {
    const Decision d = solvers::solve_alternating(prompt.slot, heuristic_);
    return nlohmann::json{{"alpha", d.alpha}, {"beta", d.beta}, {"power_w", d.power_w}}.dump();
}

HttpChatBackend::HttpChatBackend(BackendConfig config) : config_(std::move(config)), gate_(config_.max_in_flight) {
    config_.validate();
}

nlohmann::json HttpChatBackend::request_body(const Prompt& prompt) const {
    return nlohmann::json{{"model", config_.model},
                          {"temperature", config_.temperature},
                          {"n", 1},
                          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.text}}})}};
}

std::string HttpChatBackend::complete(const Prompt& prompt) {
    net::Endpoint ep;
    ep.base_url = config_.endpoint;
    ep.api_key = config_.api_key;
    ep.timeout_s = config_.timeout_s;
    ep.max_retries = config_.max_retries;

    gate_.acquire();
    struct Release {
        net::RequestGate& g;
        ~Release() { g.release(); }
    } release{gate_};

    const auto reply = net::post_json(ep, "/chat/completions", request_body(prompt));
    const auto* content = [&]() -> const nlohmann::json* {
        if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) return nullptr;
        const auto& choice = reply["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content")) return nullptr;
        return &choice["message"]["content"];
    }();
    if (!content || !content->is_string()) {
        throw net::BackendError(net::ErrorKind::InvalidResponse, "chat completion reply has no message content");
    }
    return content->get<std::string>();
}

std::unique_ptr<CompletionBackend> make_backend(const BackendConfig& config) {
    if (config.kind == BackendKind::Mock) return std::make_unique<MockBackend>();
    return std::make_unique<HttpChatBackend>(config);
}

std::string complete(const BackendConfig& config, const Prompt& prompt) { return make_backend(config)->complete(prompt); }

DecisionResponse parse_decision(std::string_view raw, std::span<const int> user_ids) {
    const auto object = first_json_object(raw);
    if (!object) throw ParseError("no JSON object in the completion");

    DecisionResponse out;
    out.raw_text = std::string(raw);
    const std::size_t k_count = user_ids.size();
    out.parsed = Decision::zeros(k_count);
    std::vector<bool> bad(k_count, false);

    auto read = [&](const char* key, std::vector<double>& dst) {
        if (!object->contains(key) || !(*object)[key].is_array()) {
            out.parse_diagnostics.push_back(fmt::format("'{}' missing or not an array", key));
            std::fill(bad.begin(), bad.end(), true);
            return;
        }
        const auto& arr = (*object)[key];
        if (arr.size() != k_count) {
            out.parse_diagnostics.push_back(
                fmt::format("'{}' has {} entries for {} users", key, arr.size(), k_count));
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            if (k >= arr.size()) {
                bad[k] = true;
                continue;
            }
            if (auto x = coerce_number(arr[k])) {
                dst[k] = *x;
            } else {
                out.parse_diagnostics.push_back(fmt::format("'{}' entry for user {} is not a number", key, user_ids[k]));
                bad[k] = true;
            }
        }
    };
    read("alpha", out.parsed.alpha);
    read("beta", out.parsed.beta);
    read("power_w", out.parsed.power_w);

    for (std::size_t k = 0; k < k_count; ++k) {
        if (!bad[k]) continue;
        out.parsed.alpha[k] = out.parsed.beta[k] = out.parsed.power_w[k] = 0.0;
        out.parse_diagnostics.push_back(fmt::format("user {} filled with zeros", user_ids[k]));
    }
    return out;
}

RagOutcome rag_solve(const SlotState& slot, const retrieval::VectorStore& store, const retrieval::Encoder& encoder,
                     CompletionBackend& backend, const RagConfig& config) {
    RagOutcome out;
    auto fall_back = [&](std::string why) {
        out.diagnostics.push_back(std::move(why));
        out.fallback = true;
        out.decision = solvers::solve_alternating(slot, config.fallback);
        return out;
    };

    std::vector<retrieval::CapabilityRecord> retrieved;
    try {
        std::map<int, retrieval::CapabilityRecord> seen;
        for (const auto& u : slot.users) {
            const auto query = encoder.encode_text(retrieval::query_text(u.id));
            for (const auto& hit : store.top_k(query, config.top_k).hits) {
                if (auto rec = store.find(hit.user_id)) seen.emplace(hit.user_id, std::move(*rec));
            }
        }
        for (auto& [id, rec] : seen) retrieved.push_back(std::move(rec));
    } catch (const std::exception& e) {
        return fall_back(fmt::format("retrieval failed: {}", e.what()));
    }

    const Prompt prompt = build_prompt(slot, retrieved);
    out.diagnostics = prompt.diagnostics;

    try {
        out.raw_text = backend.complete(prompt);
    } catch (const net::BackendError& e) {
        return fall_back(fmt::format("backend {} error: {}", net::to_string(e.kind()), e.what()));
    } catch (const std::exception& e) {
        return fall_back(fmt::format("backend error: {}", e.what()));
    }

    DecisionResponse response;
    try {
        response = parse_decision(out.raw_text, prompt.slot_summary.user_ids);
    } catch (const ParseError& e) {
        return fall_back(e.what());
    }
    out.diagnostics.insert(out.diagnostics.end(), response.parse_diagnostics.begin(),
                           response.parse_diagnostics.end());
    out.decision = solvers::repair_decision(std::move(response.parsed), slot, &out.diagnostics);
    return out;
}

}  // namespace mecrag::llm
