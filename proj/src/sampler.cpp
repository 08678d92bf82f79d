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

#include "cream/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

namespace cream {

std::map<ClusterId, std::size_t> cluster_quotas(const SoftMemory& mem, std::size_t budget) {
    std::map<ClusterId, std::size_t> quotas;
    const double total_docs = static_cast<double>(mem.document_count());
    if (total_docs == 0) {
        return quotas;
    }
    std::size_t residual = 0;
    for (const auto& [id, c] : mem.clusters()) {
        if (c.query_ids.empty()) {
            continue;
        }
        if (c.doc_ids.empty()) {
            spdlog::warn("cluster {} has {} queries but no documents; skipped for query selection", id,
                         c.query_ids.size());
            continue;
        }
        const double exact = static_cast<double>(budget) * static_cast<double>(c.doc_ids.size()) / total_docs;
        const auto rounded = static_cast<std::size_t>(std::floor(exact + 0.5));
        const auto clamped = std::min(rounded, c.query_ids.size());
        residual += rounded - clamped;
        quotas[id] = clamped;
    }
    // Hand clamped-away budget to the largest clusters that still have spare queries.
    std::vector<ClusterId> order;
    for (const auto& [id, q] : quotas) {
        order.push_back(id);
    }
    std::stable_sort(order.begin(), order.end(), [&](ClusterId a, ClusterId b) {
        return mem.cluster(a).doc_ids.size() > mem.cluster(b).doc_ids.size();
    });
    while (residual > 0) {
        bool gave = false;
        for (auto id : order) {
            if (residual == 0) {
                break;
            }
            if (quotas[id] < mem.cluster(id).query_ids.size()) {
                ++quotas[id];
                --residual;
                gave = true;
            }
        }
        if (!gave) {
            break;
        }
    }
    return quotas;
}

std::vector<QueryCandidate> build_candidates(const SoftMemory& mem, const Cluster& cluster) {
    std::vector<QueryCandidate> out;
    if (cluster.query_ids.empty() || cluster.doc_ids.empty()) {
        return out;
    }
    const std::size_t m = std::max<std::size_t>(1, cluster.doc_ids.size() / cluster.query_ids.size());
    for (const auto& qid : cluster.query_ids) {
        const auto& q = mem.find(qid)->item;
        std::vector<std::pair<double, std::string>> scored;
        scored.reserve(cluster.doc_ids.size());
        for (const auto& did : cluster.doc_ids) {
            scored.emplace_back(maxsim(q, mem.find(did)->item), did);
        }
        const auto take = std::min(m, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                          [](const auto& a, const auto& b) {
                              return a.first != b.first ? a.first > b.first : a.second < b.second;
                          });
        QueryCandidate cand{qid, {}};
        for (std::size_t i = 0; i < take; ++i) {
            cand.coverage.push_back(scored[i].second);
        }
        std::sort(cand.coverage.begin(), cand.coverage.end());
        out.push_back(std::move(cand));
    }
    return out;
}

std::vector<std::string> greedy_coverage(const std::vector<QueryCandidate>& candidates, std::size_t quota,
                                         std::uint64_t seed) {
    std::vector<std::string> picked;
    if (quota == 0 || candidates.empty()) {
        return picked;
    }
    std::vector<bool> used(candidates.size(), false);
    std::set<std::string> covered;
    auto take = [&](std::size_t i) {
        used[i] = true;
        picked.push_back(candidates[i].query_id);
        covered.insert(candidates[i].coverage.begin(), candidates[i].coverage.end());
    };
    std::mt19937_64 rng(seed);
    take(std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng));

    while (picked.size() < quota && picked.size() < candidates.size()) {
        // Union size first, then overlap with what is already covered, then id.
        std::size_t best = candidates.size();
        std::size_t best_union = 0;
        std::size_t best_overlap = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) {
                continue;
            }
            std::size_t overlap = 0;
            for (const auto& d : candidates[i].coverage) {
                overlap += covered.count(d);
            }
            const std::size_t uni = covered.size() + candidates[i].coverage.size() - overlap;
            const bool better =
                best == candidates.size() || uni > best_union ||
                (uni == best_union && (overlap < best_overlap ||
                                       (overlap == best_overlap &&
                                        candidates[i].query_id < candidates[best].query_id)));
            if (better) {
                best = i;
                best_union = uni;
                best_overlap = overlap;
            }
        }
        take(best);
    }
    return picked;
}

std::vector<std::string> select_queries(const SoftMemory& mem, std::size_t budget, std::uint64_t seed) {
    std::vector<std::string> selected;
    for (const auto& [cid, quota] : cluster_quotas(mem, budget)) {
        const auto picks = greedy_coverage(build_candidates(mem, mem.cluster(cid)), quota, mix_seed(seed, cid));
        selected.insert(selected.end(), picks.begin(), picks.end());
    }
    return selected;
}

TrainingSample contrast_from_scores(const std::string& query_id, std::vector<std::pair<std::string, double>> scored,
                                    std::size_t group_size) {
    if (group_size < 2) {
        throw Error("training group needs at least one negative");
    }
    if (scored.size() < group_size) {
        throw Error("insufficient candidates: " + std::to_string(scored.size()) + " documents for a group of " +
                    std::to_string(group_size));
    }
    auto pos = std::min_element(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    TrainingSample s{query_id, pos->first, {}};
    scored.erase(pos);
    const auto take = static_cast<std::ptrdiff_t>(group_size - 1);
    std::partial_sort(scored.begin(), scored.begin() + take, scored.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    for (std::ptrdiff_t i = 0; i < take; ++i) {
        s.negative_ids.push_back(scored[static_cast<std::size_t>(i)].first);
    }
    return s;
}

TrainingSample select_documents(const EmbeddedItem& query, const SoftMemory& mem, std::size_t top_clusters,
                                std::size_t group_size) {
    if (top_clusters == 0) {
        throw Error("at least one cluster must be searched");
    }
    const auto ranked = mem.nearest_clusters(query.emb);
    std::vector<std::pair<std::string, double>> scored;
    for (std::size_t i = 0; i < std::min(top_clusters, ranked.size()); ++i) {
        for (const auto& did : mem.cluster(ranked[i].second).doc_ids) {
            scored.emplace_back(did, maxsim(query, mem.find(did)->item));
        }
    }
    return contrast_from_scores(query.id, std::move(scored), group_size);
}

}  // namespace cream
