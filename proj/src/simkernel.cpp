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

#include "cream/simkernel.hpp"

#include <cmath>
#include <limits>

namespace cream {

std::string_view to_string(ItemKind kind) { return kind == ItemKind::kQuery ? "query" : "document"; }

ItemKind item_kind_from_string(std::string_view s) {
    if (s == "query") {
        return ItemKind::kQuery;
    }
    if (s == "document") {
        return ItemKind::kDocument;
    }
    throw Error("unknown item kind '" + std::string(s) + "'");
}

void SimilarityConfig::validate() const {
    if (max_tokens < 1 || dim < 1) {
        throw Error("similarity config requires L >= 1 and d >= 1");
    }
}

void validate_item(const EmbeddedItem& item, const SimilarityConfig& cfg) {
    const auto n = item.emb.rows();
    if (n < 1) {
        throw Error("item '" + item.id + "' has no token embeddings");
    }
    if (n > cfg.max_tokens) {
        throw Error("item '" + item.id + "' exceeds the maximum token length");
    }
    if (item.emb.cols() != cfg.dim) {
        throw Error("item '" + item.id + "' has embedding width " + std::to_string(item.emb.cols()) +
                    ", expected " + std::to_string(cfg.dim));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(norm(item.emb.row(i)) - 1.0) > 1e-6) {
            throw Error("item '" + item.id + "' row " + std::to_string(i) + " is not unit norm");
        }
    }
}

double maxsim(const Matrix& query, const Matrix& target) {
    if (target.rows() == 0) {
        throw Error("maxsim against an empty token set");
    }
    if (query.cols() != target.cols()) {
        throw Error("maxsim dimension mismatch: " + std::to_string(query.cols()) + " vs " +
                    std::to_string(target.cols()));
    }
    const std::size_t d = query.cols();
    const std::size_t m = target.rows();
    const double* tp = target.data().data();
    double total = 0.0;
    for (std::size_t i = 0; i < query.rows(); ++i) {
        const double* qi = query.data().data() + i * d;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
            const double* tj = tp + j * d;
            // four partial sums let the compiler vectorize without reassociating
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            std::size_t k = 0;
            for (; k + 4 <= d; k += 4) {
                s0 += qi[k] * tj[k];
                s1 += qi[k + 1] * tj[k + 1];
                s2 += qi[k + 2] * tj[k + 2];
                s3 += qi[k + 3] * tj[k + 3];
            }
            for (; k < d; ++k) {
                s0 += qi[k] * tj[k];
            }
            const double s = (s0 + s1) + (s2 + s3);
            best = s > best ? s : best;
        }
        total += best;
    }
    return total;
}

double sim_dist(const Matrix& item, const Matrix& prototype_view, const SimilarityConfig& cfg) {
    if (prototype_view.rows() == 0) {
        throw Error("empty prototype");
    }
    return static_cast<double>(cfg.max_tokens) - maxsim(item, prototype_view);
}

std::vector<double> pooled_embedding(const Matrix& rows) {
    if (rows.rows() == 0) {
        throw Error("degenerate pooling: no rows");
    }
    std::vector<double> mean(rows.cols(), 0.0);
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        const auto r = rows.row(i);
        for (std::size_t j = 0; j < mean.size(); ++j) {
            mean[j] += r[j];
        }
    }
    for (auto& v : mean) {
        v /= static_cast<double>(rows.rows());
    }
    // Anything this small is cancellation noise, not a direction.
    if (norm(mean) < 1e-12 || !normalize_in_place(mean)) {
        throw Error("degenerate pooling: zero mean vector");
    }
    return mean;
}

}  // namespace cream
