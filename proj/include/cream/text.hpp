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

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cream {

/// Lowercase, split on anything that is not an ASCII letter or digit.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
    double epsilon = 0.25;  // floor for negative idf, as a fraction of the mean idf
};

/// Okapi BM25 over a fixed tokenized corpus.
class Bm25Index {
 public:
    explicit Bm25Index(std::vector<std::vector<std::string>> docs, Bm25Params params = {});

    std::size_t size() const { return doc_len_.size(); }
    double idf(const std::string& term) const;
    std::vector<double> scores(const std::vector<std::string>& query) const;

 private:
    Bm25Params params_;
    std::vector<std::map<std::string, std::size_t>> tf_;
    std::vector<double> doc_len_;
    double avgdl_ = 0.0;
    std::map<std::string, double> idf_;
};

/// Indices of the `top_n` best-scoring documents (ties by index).
std::vector<std::size_t> bm25_top(const Bm25Index& index, const std::vector<std::string>& query, std::size_t top_n);

}  // namespace cream
