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

#include <set>
#include <string>
#include <vector>

#include "cream/simkernel.hpp"
#include "cream/softmem.hpp"
#include "cream/text.hpp"

namespace cream {

struct ScoredDoc {
    std::string id;
    double score = 0.0;
};

/// Scores every candidate by late interaction and returns the best `top_k`,
/// score descending, ties by id.
std::vector<ScoredDoc> retrieve(const EmbeddedItem& query, const std::vector<const EmbeddedItem*>& corpus,
                                std::size_t top_k);

/// Same ranking restricted to the documents of the `top_clusters` clusters
/// nearest to the query.
std::vector<ScoredDoc> retrieve_pruned(const EmbeddedItem& query, const SoftMemory& mem, std::size_t top_k,
                                       std::size_t top_clusters);

std::vector<std::string> ids_of(const std::vector<ScoredDoc>& ranked);

/// 1 when any relevant id is among the first k, else 0. Relevant set must be non-empty.
double success_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant, std::size_t k);
/// Fraction of the relevant set found among the first k.
double recall_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant, std::size_t k);

struct TextDoc {
    std::string id;
    std::vector<std::string> tokens;
};

/// Ids of the top_n BM25 documents for the query; equal scores fall back to id order.
std::vector<std::string> bm25_prefilter(const std::vector<std::string>& query, const std::vector<TextDoc>& docs,
                                        std::size_t top_n, const Bm25Params& params = {});

}  // namespace cream
