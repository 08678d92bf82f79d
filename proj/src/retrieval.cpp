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

#include "cream/retrieval.hpp"

#include <algorithm>
#include <numeric>

namespace cream {

namespace {

void check_k(std::size_t k) {
    if (k == 0) {
        throw Error("k must be at least 1");
    }
}

std::vector<ScoredDoc> rank(const EmbeddedItem& query, const std::vector<const EmbeddedItem*>& corpus,
                            std::size_t top_k) {
    std::vector<ScoredDoc> scored;
    scored.reserve(corpus.size());
    for (const auto* d : corpus) {
        scored.push_back({d->id, maxsim(query, *d)});
    }
    const auto take = std::min(top_k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                      [](const ScoredDoc& a, const ScoredDoc& b) {
                          return a.score != b.score ? a.score > b.score : a.id < b.id;
                      });
    scored.resize(take);
    return scored;
}

}  // namespace

std::vector<ScoredDoc> retrieve(const EmbeddedItem& query, const std::vector<const EmbeddedItem*>& corpus,
                                std::size_t top_k) {
    check_k(top_k);
    if (corpus.empty()) {
        throw Error("retrieval over an empty corpus");
    }
    return rank(query, corpus, top_k);
}

std::vector<ScoredDoc> retrieve_pruned(const EmbeddedItem& query, const SoftMemory& mem, std::size_t top_k,
                                       std::size_t top_clusters) {
    check_k(top_k);
    if (mem.document_count() == 0) {
        throw Error("retrieval over an empty memory");
    }
    const auto nearest = mem.nearest_clusters(query.emb);
    std::vector<const EmbeddedItem*> corpus;
    for (std::size_t i = 0; i < std::min(top_clusters, nearest.size()); ++i) {
        for (const auto& id : mem.cluster(nearest[i].second).doc_ids) {
            corpus.push_back(&mem.find(id)->item);
        }
    }
    return rank(query, corpus, top_k);
}

std::vector<std::string> ids_of(const std::vector<ScoredDoc>& ranked) {
    std::vector<std::string> out;
    out.reserve(ranked.size());
    for (const auto& r : ranked) {
        out.push_back(r.id);
    }
    return out;
}

namespace {

std::size_t hits(const std::vector<std::string>& ranked, const std::set<std::string>& relevant, std::size_t k) {
    check_k(k);
    if (relevant.empty()) {
        throw Error("metric undefined without relevant documents");
    }
    std::size_t n = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        n += relevant.count(ranked[i]);
    }
    return n;
}

}  // namespace

double success_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant, std::size_t k) {
    return hits(ranked, relevant, k) > 0 ? 1.0 : 0.0;
}

double recall_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant, std::size_t k) {
    return static_cast<double>(hits(ranked, relevant, k)) / static_cast<double>(relevant.size());
}

std::vector<std::string> bm25_prefilter(const std::vector<std::string>& query, const std::vector<TextDoc>& docs,
                                        std::size_t top_n, const Bm25Params& params) {
    if (docs.empty()) {
        return {};
    }
    std::vector<std::size_t> by_id(docs.size());
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return docs[a].id < docs[b].id; });
    std::vector<std::vector<std::string>> corpus;
    corpus.reserve(docs.size());
    for (auto i : by_id) {
        corpus.push_back(docs[i].tokens);
    }
    const Bm25Index index(std::move(corpus), params);
    std::vector<std::string> out;
    for (auto i : bm25_top(index, query, top_n)) {
        out.push_back(docs[by_id[i]].id);
    }
    return out;
}

}  // namespace cream
