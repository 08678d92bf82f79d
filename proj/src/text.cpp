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

#include "cream/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "cream/common.hpp"

namespace cream {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) != 0 && c < 0x80) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

Bm25Index::Bm25Index(std::vector<std::vector<std::string>> docs, Bm25Params params) : params_(params) {
    tf_.reserve(docs.size());
    std::map<std::string, std::size_t> df;
    double total_len = 0.0;
    for (const auto& d : docs) {
        auto& tf = tf_.emplace_back();
        for (const auto& t : d) {
            ++tf[t];
        }
        for (const auto& [t, n] : tf) {
            ++df[t];
        }
        doc_len_.push_back(static_cast<double>(d.size()));
        total_len += static_cast<double>(d.size());
    }
    if (docs.empty()) {
        return;
    }
    avgdl_ = total_len / static_cast<double>(docs.size());
    const double n = static_cast<double>(docs.size());
    double idf_sum = 0.0;
    std::vector<std::string> negative;
    for (const auto& [t, f] : df) {
        const double v = std::log((n - static_cast<double>(f) + 0.5) / (static_cast<double>(f) + 0.5));
        idf_[t] = v;
        idf_sum += v;
        if (v < 0.0) {
            negative.push_back(t);
        }
    }
    const double floor = params_.epsilon * idf_sum / static_cast<double>(idf_.size());
    for (const auto& t : negative) {
        idf_[t] = floor;
    }
}

double Bm25Index::idf(const std::string& term) const {
    auto it = idf_.find(term);
    return it == idf_.end() ? 0.0 : it->second;
}

std::vector<double> Bm25Index::scores(const std::vector<std::string>& query) const {
    std::vector<double> out(tf_.size(), 0.0);
    for (const auto& term : query) {
        const double w = idf(term);
        if (w == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < tf_.size(); ++i) {
            auto it = tf_[i].find(term);
            if (it == tf_[i].end()) {
                continue;
            }
            const double f = static_cast<double>(it->second);
            const double norm_len = avgdl_ > 0.0 ? doc_len_[i] / avgdl_ : 0.0;
            out[i] += w * f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm_len));
        }
    }
    return out;
}

std::vector<std::size_t> bm25_top(const Bm25Index& index, const std::vector<std::string>& query, std::size_t top_n) {
    if (top_n == 0) {
        throw Error("BM25 prefilter depth must be at least 1");
    }
    const auto s = index.scores(query);
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    order.resize(std::min(top_n, order.size()));
    return order;
}

}  // namespace cream
