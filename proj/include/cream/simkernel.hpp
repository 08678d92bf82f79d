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

#include <string>
#include <string_view>
#include <vector>

#include "cream/common.hpp"

namespace cream {

enum class ItemKind { kQuery, kDocument };

std::string_view to_string(ItemKind kind);
ItemKind item_kind_from_string(std::string_view s);

/// A query or document as a sequence of unit-norm token embeddings.
struct EmbeddedItem {
    std::string id;
    ItemKind kind = ItemKind::kDocument;
    std::vector<std::string> tokens;
    Matrix emb;  // n x d, one row per token

    std::size_t token_count() const { return emb.rows(); }
    std::size_t dim() const { return emb.cols(); }
};

struct SimilarityConfig {
    std::size_t max_tokens = 128;  // L
    std::size_t dim = 64;          // d

    void validate() const;
};

/// Throws unless the item has 1..L rows of width d, each of unit norm.
void validate_item(const EmbeddedItem& item, const SimilarityConfig& cfg);

/// Late-interaction score: for every row of `query`, the largest dot product
/// against any row of `target`, summed. Contributions are kept signed.
double maxsim(const Matrix& query, const Matrix& target);
inline double maxsim(const EmbeddedItem& q, const EmbeddedItem& x) { return maxsim(q.emb, x.emb); }

/// L - maxsim(x, prototype). `prototype_view` holds only the normalized,
/// nonzero bucket rows; an empty view is rejected as an empty prototype.
double sim_dist(const Matrix& item, const Matrix& prototype_view, const SimilarityConfig& cfg);
inline double sim_dist(const EmbeddedItem& x, const Matrix& prototype_view, const SimilarityConfig& cfg) {
    return sim_dist(x.emb, prototype_view, cfg);
}

/// Row mean renormalized to unit length.
std::vector<double> pooled_embedding(const Matrix& rows);
inline std::vector<double> pooled_embedding(const EmbeddedItem& x) { return pooled_embedding(x.emb); }

}  // namespace cream
