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

#include "mecrag/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <mutex>

#include <fmt/format.h>

namespace mecrag::retrieval {

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

bool token_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '.' || c == '_' || c == '+' || c == '-' || c == '?';
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (token_char(c)) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

}  // namespace

std::string record_text(int user_id, double cycles_per_sec) {
    return fmt::format("user {} | computing capability {} cycles/s", user_id, cycles_per_sec);
}

std::string query_text(int user_id) { return fmt::format("user {} | computing capability ? cycles/s", user_id); }

CapabilityRecord make_record(int user_id, double cycles_per_sec) {
    if (!(cycles_per_sec > 0)) throw model::InvalidInput("capability record needs cycles_per_sec > 0");
    return {user_id, cycles_per_sec, record_text(user_id, cycles_per_sec)};
}

std::vector<CapabilityRecord> records_from_scenario(const model::Scenario& scenario) {
    std::vector<CapabilityRecord> records;
    records.reserve(scenario.user_count());
    for (const auto& u : scenario.users) records.push_back(make_record(u.id, u.cycles_per_sec));
    return records;
}

HashingEncoder::HashingEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw model::InvalidInput("encoder dimension must be >= 1");
}

EmbeddingVector HashingEncoder::encode_text(std::string_view text) const {
    auto tokens = tokenize(text);
    std::vector<std::string> features = tokens;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) features.push_back(tokens[i] + ' ' + tokens[i + 1]);
    if (features.empty()) features.emplace_back("<empty>");

    EmbeddingVector out;
    out.values.assign(dim_, 0.0);
    for (const auto& f : features) {
        std::uint64_t state = fnv1a(f, seed_);
        for (auto& v : out.values) {
            // 53 random bits mapped to [-1, 1).
            v += static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
        }
    }
    double norm_sq = 0.0;
    for (double v : out.values) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    if (norm > 0) {
        for (auto& v : out.values) v /= norm;
    }
    return out;
}

HttpEmbeddingEncoder::HttpEmbeddingEncoder(net::Endpoint endpoint, std::string model, std::size_t expected_dim)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), dim_(expected_dim) {}

std::unique_ptr<HttpEmbeddingEncoder> HttpEmbeddingEncoder::from_environment() {
    net::Endpoint ep;
    ep.base_url = env_or("EMBED_API_BASE", "");
    if (ep.base_url.empty()) throw model::InvalidInput("EMBED_API_BASE is not set");
    ep.api_key = env_or("EMBED_API_KEY", "");
    return std::make_unique<HttpEmbeddingEncoder>(std::move(ep), env_or("EMBED_MODEL", "text-embedding-3-small"));
}

std::size_t HttpEmbeddingEncoder::dim() const {
    std::lock_guard lock(dim_mutex_);
    return dim_;
}

EmbeddingVector HttpEmbeddingEncoder::encode_text(std::string_view text) const {
    const nlohmann::json body{{"model", model_}, {"input", std::string(text)}};
    const auto reply = net::post_json(endpoint_, "/embeddings", body);
    EmbeddingVector out;
    try {
        out.values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw net::BackendError(net::ErrorKind::InvalidResponse, fmt::format("embedding reply: {}", e.what()));
    }
    if (out.values.empty()) throw net::BackendError(net::ErrorKind::InvalidResponse, "empty embedding");
    std::lock_guard lock(dim_mutex_);
    if (dim_ == 0) dim_ = out.values.size();
    if (out.values.size() != dim_) {
        throw net::BackendError(net::ErrorKind::InvalidResponse,
                                fmt::format("embedding has {} dims, expected {}", out.values.size(), dim_));
    }
    return out;
}

EmbeddingVector encode(const CapabilityRecord& record, const Encoder& encoder) {
    return encoder.encode_text(record.text);
}

double cosine_similarity(const EmbeddingVector& q, const EmbeddingVector& v) {
    if (q.dim() != v.dim()) throw DomainError(fmt::format("dimension mismatch {} vs {}", q.dim(), v.dim()));
    double dot = 0.0;
    double qq = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < q.dim(); ++i) {
        dot += q.values[i] * v.values[i];
        qq += q.values[i] * q.values[i];
        vv += v.values[i] * v.values[i];
    }
    if (!(qq > 0) || !(vv > 0)) throw DomainError("cosine similarity of a zero vector");
    // sqrt of the product keeps Sim(v, v) == 1 exactly.
    return std::clamp(dot / std::sqrt(qq * vv), -1.0, 1.0);
}

VectorStore::VectorStore(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw model::InvalidInput("vector store dimension must be >= 1");
}

std::size_t VectorStore::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void VectorStore::insert(CapabilityRecord record, EmbeddingVector vector) {
    if (vector.dim() != dim_) {
        throw DomainError(fmt::format("vector has {} dims, store holds {}", vector.dim(), dim_));
    }
    for (double x : vector.values) {
        if (!std::isfinite(x)) throw DomainError("vector has a non-finite entry");
    }
    std::unique_lock lock(mutex_);
    const int id = record.user_id;
    if (auto it = index_.find(id); it != index_.end()) {
        entries_[it->second] = {std::move(record), std::move(vector)};
        return;
    }
    index_.emplace(id, entries_.size());
    entries_.push_back({std::move(record), std::move(vector)});
}

std::optional<CapabilityRecord> VectorStore::find(int user_id) const {
    std::shared_lock lock(mutex_);
    if (auto it = index_.find(user_id); it != index_.end()) return entries_[it->second].record;
    return std::nullopt;
}

RetrievalResult VectorStore::top_k(const EmbeddingVector& query, std::size_t k) const {
    if (k == 0) throw model::InvalidInput("top_k needs k >= 1");
    RetrievalResult result;
    result.k = k;
    std::shared_lock lock(mutex_);
    if (entries_.empty()) return result;
    std::vector<Hit> all;
    all.reserve(entries_.size());
    for (const auto& e : entries_) all.push_back({e.record.user_id, cosine_similarity(query, e.vector)});
    const auto better = [](const Hit& a, const Hit& b) {
        return a.score != b.score ? a.score > b.score : a.user_id < b.user_id;
    };
    const std::size_t n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), better);
    all.resize(n);
    result.hits = std::move(all);
    return result;
}

std::vector<CapabilityRecord> VectorStore::records() const {
    std::shared_lock lock(mutex_);
    std::vector<CapabilityRecord> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.record);
    return out;
}

void populate(VectorStore& store, std::span<const CapabilityRecord> records, const Encoder& encoder) {
    for (const auto& r : records) store.insert(r, encode(r, encoder));
}

double mrr(std::span<const std::optional<std::size_t>> ranks) {
    if (ranks.empty()) throw model::InvalidInput("MRR needs at least one query");
    double sum = 0.0;
    for (const auto& r : ranks) {
        if (r && *r > 0) sum += 1.0 / static_cast<double>(*r);
    }
    return sum / static_cast<double>(ranks.size());
}

double hit_rate(std::size_t hits_in_top_k, std::size_t total_queries) {
    if (total_queries == 0) throw model::InvalidInput("hit rate needs at least one query");
    if (hits_in_top_k > total_queries) throw model::InvalidInput("more hits than queries");
    return static_cast<double>(hits_in_top_k) / static_cast<double>(total_queries);
}

RetrievalMetrics evaluate_retrieval(const VectorStore& store, std::span<const LabeledQuery> queries, std::size_t k) {
    if (store.size() == 0) throw model::InvalidInput("evaluate_retrieval on an empty store");
    RetrievalMetrics m;
    std::size_t hits = 0;
    for (const auto& q : queries) {
        const auto result = store.top_k(q.query, k);
        std::optional<std::size_t> rank;
        for (std::size_t i = 0; i < result.hits.size(); ++i) {
            if (result.hits[i].user_id == q.relevant_user_id) {
                rank = i + 1;
                break;
            }
        }
        if (rank) ++hits;
        m.ranks.push_back(rank);
    }
    m.hit_rate = hit_rate(hits, queries.size());
    m.mrr = mrr(m.ranks);
    return m;
}

void to_json(nlohmann::json& j, const CapabilityRecord& r) {
    j = nlohmann::json{{"user_id", r.user_id}, {"cycles_per_sec", r.cycles_per_sec}, {"text", r.text}};
}

void from_json(const nlohmann::json& j, CapabilityRecord& r) {
    j.at("user_id").get_to(r.user_id);
    j.at("cycles_per_sec").get_to(r.cycles_per_sec);
    r.text = j.contains("text") ? j.at("text").get<std::string>() : record_text(r.user_id, r.cycles_per_sec);
    if (!(r.cycles_per_sec > 0)) throw model::InvalidInput("capability record needs cycles_per_sec > 0");
}

}  // namespace mecrag::retrieval
