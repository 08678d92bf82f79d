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
#include <string>
#include <utility>
#include <vector>

#include "cream/softmem.hpp"

namespace cream {

/// A memory query together with the m documents of its cluster it is
/// closest to (by late-interaction score).
struct QueryCandidate {
    std::string query_id;
    std::vector<std::string> coverage;  // sorted
};

struct TrainingSample {
    std::string query_id;
    std::string positive_id;
    std::vector<std::string> negative_ids;  // least similar first

    bool operator==(const TrainingSample&) const = default;
};

/// Per-cluster query quotas, proportional to each cluster's share of
/// memory documents. Clusters lacking queries or documents get no entry.
std::map<ClusterId, std::size_t> cluster_quotas(const SoftMemory& mem, std::size_t budget);

/// Coverage sets for every query of the cluster; m = max(1, |D|/|Q|).
std::vector<QueryCandidate> build_candidates(const SoftMemory& mem, const Cluster& cluster);

/// Greedy max-coverage / min-redundancy selection of up to `quota`
/// candidates, starting from a seeded random candidate. Returns the picks in
/// selection order.
std::vector<std::string> greedy_coverage(const std::vector<QueryCandidate>& candidates, std::size_t quota,
                                         std::uint64_t seed);

/// Stratified coreset selection over the whole memory.
std::vector<std::string> select_queries(const SoftMemory& mem, std::size_t budget, std::uint64_t seed);

/// Most similar candidate as the positive, the k-1 least similar of the rest
/// as negatives. Ties resolve to the lexicographically smaller id.
TrainingSample contrast_from_scores(const std::string& query_id,
                                    std::vector<std::pair<std::string, double>> scored, std::size_t group_size);

/// Document selection restricted to the `top_clusters` clusters nearest the query.
TrainingSample select_documents(const EmbeddedItem& query, const SoftMemory& mem, std::size_t top_clusters,
                                std::size_t group_size);

}  // namespace cream
