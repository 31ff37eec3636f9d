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

// Capability knowledge base: record encoding, an exact cosine-similarity
// vector store, and the hit-rate / MRR retrieval metrics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecrag/http_client.hpp"
#include "mecrag/system_model.hpp"

namespace mecrag::retrieval {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct CapabilityRecord {
    int user_id = 0;
    double cycles_per_sec = 0.0;
    std::string text;

    friend bool operator==(const CapabilityRecord&, const CapabilityRecord&) = default;
};

struct EmbeddingVector {
    std::vector<double> values;

    [[nodiscard]] std::size_t dim() const { return values.size(); }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Canonical text of a capability record.
std::string record_text(int user_id, double cycles_per_sec);
/// Query text for a user: the record template with the capability blanked.
std::string query_text(int user_id);

CapabilityRecord make_record(int user_id, double cycles_per_sec);
std::vector<CapabilityRecord> records_from_scenario(const model::Scenario& scenario);

class Encoder {
public:
    virtual ~Encoder() = default;
    [[nodiscard]] virtual std::size_t dim() const = 0;
    [[nodiscard]] virtual EmbeddingVector encode_text(std::string_view text) const = 0;
};

/// Offline encoder: every word unigram and bigram of the lower-cased text
/// seeds a pseudo-random direction; the sum is normalized to unit length.
class HashingEncoder final : public Encoder {
public:
    explicit HashingEncoder(std::size_t dim = 64, std::uint64_t seed = 0x5EEDULL);

    [[nodiscard]] std::size_t dim() const override { return dim_; }
    [[nodiscard]] EmbeddingVector encode_text(std::string_view text) const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Client for an OpenAI-compatible /embeddings endpoint.
class HttpEmbeddingEncoder final : public Encoder {
public:
    /// `expected_dim` of 0 accepts whatever dimension the first reply has.
    HttpEmbeddingEncoder(net::Endpoint endpoint, std::string model, std::size_t expected_dim = 0);

    /// Reads EMBED_API_BASE, EMBED_API_KEY and EMBED_MODEL.
    static std::unique_ptr<HttpEmbeddingEncoder> from_environment();

    [[nodiscard]] std::size_t dim() const override;
    [[nodiscard]] EmbeddingVector encode_text(std::string_view text) const override;

private:
    net::Endpoint endpoint_;
    std::string model_;
    mutable std::size_t dim_;
    mutable std::mutex dim_mutex_;
};

EmbeddingVector encode(const CapabilityRecord& record, const Encoder& encoder);

/// q . v / (|q| |v|), clamped to [-1, 1]. Throws DomainError on a zero vector
/// or mismatched dimensions.
double cosine_similarity(const EmbeddingVector& q, const EmbeddingVector& v);

struct Hit {
    int user_id = 0;
    double score = 0.0;
};

struct RetrievalResult {
    std::vector<Hit> hits;
    std::size_t k = 0;
};

/// Exact nearest-neighbour store. Concurrent top_k calls are safe; insert
/// takes an exclusive lock.
class VectorStore {
public:
    explicit VectorStore(std::size_t dim);

    VectorStore(const VectorStore&) = delete;
    VectorStore& operator=(const VectorStore&) = delete;

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::size_t size() const;

    /// Adds the entry, replacing any entry with the same user_id.
    void insert(CapabilityRecord record, EmbeddingVector vector);

    [[nodiscard]] std::optional<CapabilityRecord> find(int user_id) const;

    /// The k most similar entries, by descending score then ascending user_id.
    [[nodiscard]] RetrievalResult top_k(const EmbeddingVector& query, std::size_t k) const;

    [[nodiscard]] std::vector<CapabilityRecord> records() const;

private:
    struct Entry {
        CapabilityRecord record;
        EmbeddingVector vector;
    };

    std::size_t dim_;
    mutable std::shared_mutex mutex_;
    std::vector<Entry> entries_;
    std::unordered_map<int, std::size_t> index_;
};

/// Encodes and inserts every record.
void populate(VectorStore& store, std::span<const CapabilityRecord> records, const Encoder& encoder);

/// (1/Q) sum 1/rank_i, with a missing rank contributing 0.
double mrr(std::span<const std::optional<std::size_t>> ranks);

double hit_rate(std::size_t hits_in_top_k, std::size_t total_queries);

struct LabeledQuery {
    EmbeddingVector query;
    int relevant_user_id = 0;
};

struct RetrievalMetrics {
    double hit_rate = 0.0;
    double mrr = 0.0;
    /// 1-based rank of the relevant user within the top k, if present.
    std::vector<std::optional<std::size_t>> ranks;
};

RetrievalMetrics evaluate_retrieval(const VectorStore& store, std::span<const LabeledQuery> queries, std::size_t k);

void to_json(nlohmann::json& j, const CapabilityRecord& r);
void from_json(const nlohmann::json& j, CapabilityRecord& r);

}  // namespace mecrag::retrieval
