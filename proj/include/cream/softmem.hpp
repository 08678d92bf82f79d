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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cream/lshproto.hpp"
#include "cream/simkernel.hpp"

namespace cream {

using ClusterId = std::uint64_t;

/// Additive <N, LS, SS> summary of member-to-prototype distances. LS and SS
/// are double-double sums (value = hi + lo) so long add/remove histories do
/// not drift.
struct ClusterSummary {
    std::uint64_t n = 0;
    double ls = 0.0;
    double ss = 0.0;
    double ls_lo = 0.0;
    double ss_lo = 0.0;

    double mean() const;
    /// Population standard deviation; small negative variances from
    /// cancellation are clamped to zero.
    double stddev() const;

    bool operator==(const ClusterSummary&) const = default;
};

ClusterSummary update_summary_add(ClusterSummary s, double dist);
/// Throws when the summary is already empty.
ClusterSummary update_summary_remove(ClusterSummary s, double dist);

struct Cluster {
    ClusterId id = 0;
    ClusterPrototype prototype;
    Matrix view;  // normalized nonzero buckets, kept in sync with `prototype`
    ClusterSummary summary;
    std::set<std::string> doc_ids;
    std::set<std::string> query_ids;
    std::map<std::string, double> member_distances;

    std::size_t size() const { return doc_ids.size() + query_ids.size(); }
};

struct MemoryConfig {
    double lambda = 8.0;  // assignment factor
    double gamma = 0.25;  // decaying factor
    unsigned bits = 12;
    std::uint64_t seed = 0;
    SimilarityConfig sim;
    std::size_t init_sample = 1024;
    unsigned kmeans_iterations = 50;
};

/// A member of the memory: its current embedding plus the encoder input it
/// was produced from, so it can be re-embedded after the encoder changes.
struct MemoryEntry {
    EmbeddedItem item;
    Matrix base;
    ClusterId cluster = 0;
};

/// Maps an entry's encoder input to fresh token embeddings.
using Reembedder = std::function<Matrix(const Matrix& base)>;

struct EvictionDecision {
    double mean = 0.0;
    double stddev = 0.0;
    double threshold = 0.0;
    std::vector<std::string> evicted;
    std::vector<std::string> retained;
};

/// Documents at distance >= mean + gamma * stddev of the supplied
/// population are evicted; statistics are read once, before any removal.
EvictionDecision plan_eviction(const std::map<std::string, double>& doc_distances,
                               const ClusterSummary& summary, double gamma);

/// round-half-up(queries * retained / previous), at least one query when any
/// document survives, never more than `queries`.
std::size_t retained_query_count(std::size_t queries, std::size_t retained_docs, std::size_t previous_docs);

/// Spherical k-means over unit vectors with k-means++ seeding. Returns a
/// label in [0, k) per point; every label is used when points >= k.
std::vector<std::size_t> spherical_kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                                          std::uint64_t seed, unsigned max_iterations);

struct MaintenanceStats {
    std::size_t evicted_docs = 0;
    std::size_t dropped_queries = 0;
    std::size_t deleted_clusters = 0;
};

class SoftMemory {
 public:
    explicit SoftMemory(MemoryConfig cfg);

    const MemoryConfig& config() const { return cfg_; }
    const LshFamily& family() const { return fam_; }
    const std::map<ClusterId, Cluster>& clusters() const { return clusters_; }
    const std::map<std::string, MemoryEntry>& entries() const { return entries_; }
    const MemoryEntry* find(const std::string& id) const;
    const Cluster& cluster(ClusterId id) const;
    ClusterId next_cluster_id() const { return next_id_; }

    bool initialized() const { return !clusters_.empty(); }
    std::size_t document_count() const;
    std::size_t query_count() const;

    /// Partitions the first min(init_sample, |entries|) entries into k
    /// clusters. Returns how many entries were consumed; the caller assigns
    /// the remainder.
    std::size_t init_clusters(std::vector<MemoryEntry> entries, std::size_t k);

    /// Streams one item into the nearest cluster, or opens a new cluster when
    /// it falls outside mean + lambda * stddev.
    ClusterId assign(MemoryEntry entry);

    /// Clusters ordered by sim_dist to `emb`, nearest first (ties: lower id).
    std::vector<std::pair<double, ClusterId>> nearest_clusters(const Matrix& emb) const;

    /// Re-embeds every member and rebuilds prototypes and summaries.
    void refresh(const Reembedder& reembed);

    /// End-of-session radius-decay maintenance. `seed` drives query sampling.
    MaintenanceStats maintain(const Reembedder& reembed, std::uint64_t seed);

 private:
    ClusterId open_cluster(MemoryEntry entry);
    void rebuild(Cluster& c);
    void erase_member(Cluster& c, const std::string& id);

    MemoryConfig cfg_;
    LshFamily fam_;
    std::map<ClusterId, Cluster> clusters_;
    std::map<std::string, MemoryEntry> entries_;
    ClusterId next_id_ = 0;
};

/// Serializable view of a memory: JSON manifest plus a binary prototype
/// sidecar ("CRMP", version, H, d, then per cluster H*d f32 sums and H u32
/// counts, little-endian, in manifest order).
struct MemorySnapshot {
    struct ClusterRecord {
        ClusterId id = 0;
        ClusterSummary summary;
        std::vector<std::string> doc_ids;
        std::vector<std::string> query_ids;
        std::map<std::string, double> member_distances;
        ClusterPrototype prototype;
    };

    double lambda = 0.0;
    double gamma = 0.0;
    unsigned bits = 0;
    std::size_t dim = 0;
    std::size_t max_tokens = 0;
    std::uint64_t seed = 0;
    ClusterId next_cluster_id = 0;
    std::vector<ClusterRecord> clusters;
};

MemorySnapshot snapshot_of(const SoftMemory& mem);
void write_snapshot(const MemorySnapshot& snap, const std::string& manifest_path, const std::string& sidecar_path);
MemorySnapshot read_snapshot(const std::string& manifest_path, const std::string& sidecar_path);

}  // namespace cream
