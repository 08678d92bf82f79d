// Copyright 2026-present the cream project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cream/sampler.hpp"
#include "cream/session.hpp"
#include "cream/softmem.hpp"
#include "cream/trainer.hpp"
#include "json.hpp"

namespace cream {

enum class Protocol { kShared, kDisjoint };

/// Ablation variants. kNoFinegrained represents every item by its pooled
/// vector and every cluster by a pooled centroid; kNoTrain never updates the
/// encoder; kNoSoftMemory samples globally over the session without clusters.
enum class Variant { kFull, kNoFinegrained, kNoTrain, kNoSoftMemory };

std::string to_string(Protocol p);
std::string to_string(Variant v);
Protocol protocol_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

struct Config {
    double lambda = 8.0;
    double gamma = 0.25;
    unsigned bits = 12;
    std::size_t init_clusters = 4;
    std::size_t top_clusters = 3;  // K
    std::size_t group_size = 7;    // k: one positive plus k-1 negatives
    double tau = 0.1;
    double lr = 0.05;
    unsigned epochs = 1;
    std::size_t batch = 16;
    bool token_level_loss = false;
    std::size_t max_tokens = 128;  // L
    std::size_t dim = 64;          // d
    std::size_t top_k = 10;
    std::size_t bm25_top_n = 0;    // 0 disables the prefilter
    std::size_t query_budget = 64;

    void validate() const;
    nlohmann::json to_json() const;
    static Config from_json(const nlohmann::json& j);
    static Config load(const std::string& path);
};

struct SessionReport {
    std::size_t session = 0;
    std::size_t eval_queries = 0;  // queries with at least one relevant document in the pool
    double success_at_5 = 0.0;
    double recall_at_10 = 0.0;
    std::size_t online_queries = 0;
    double online_success_at_5 = 0.0;
    double online_recall_at_10 = 0.0;
    std::size_t memory_clusters = 0;
    std::size_t memory_documents = 0;
    std::size_t memory_queries = 0;
    std::size_t evicted_documents = 0;
    std::size_t training_queries = 0;
    std::size_t training_samples = 0;
    double loss_before = 0.0;
    double loss_after = 0.0;
};

struct EvalReport {
    Protocol protocol = Protocol::kShared;
    Variant variant = Variant::kFull;
    std::uint64_t seed = 0;
    Config config;
    std::vector<SessionReport> sessions;

    double average_success_at_5() const;
    double average_recall_at_10() const;
    /// Metrics are emitted x100.
    nlohmann::json to_json() const;
};

/// Drives the per-session loop: retrieve, update memory, maintain, select
/// training data, update the encoder, re-embed, evaluate.
class Pipeline {
 public:
    Pipeline(Config cfg, Variant variant, Protocol protocol, std::uint64_t seed,
             std::shared_ptr<const EmbeddingTable> precomputed = nullptr);

    SessionReport run_session(const SessionStream& s);
    EvalReport run(const std::vector<SessionStream>& sessions);

    const Config& config() const { return cfg_; }
    const EncoderAdapter& adapter() const { return adapter_; }
    /// Empty for the variant without soft memory.
    const SoftMemory* memory() const { return memory_ ? &*memory_ : nullptr; }
    const std::vector<TrainingSample>& last_samples() const { return samples_; }

 private:
    Matrix base_rows(const TextItem& item) const;
    Matrix embed(const Matrix& base) const;
    EmbeddedItem embed_item(const TextItem& item, ItemKind kind, const Matrix& base) const;
    std::uint64_t session_seed(std::size_t t) const;

    Config cfg_;
    Variant variant_;
    Protocol protocol_;
    std::uint64_t seed_;
    std::shared_ptr<const EmbeddingTable> precomputed_;
    EncoderAdapter adapter_;
    std::optional<SoftMemory> memory_;
    std::vector<TrainingSample> samples_;
};

/// One JSON object per line: {"session", "query", "positive", "negatives"}.
void write_samples_jsonl(std::ostream& out, std::size_t session, const std::vector<TrainingSample>& samples);

}  // namespace cream
