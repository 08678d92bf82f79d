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

// Reference implementations the library is checked against. Deliberately
// naive: plain loops, no shared code with src/.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cream/common.hpp"
#include "cream/simkernel.hpp"

namespace cream::testing {

inline Matrix random_unit_rows(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<double> g;
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            m(i, j) = g(rng);
            ss += m(i, j) * m(i, j);
        }
        for (std::size_t j = 0; j < d; ++j) {
            m(i, j) /= std::sqrt(ss);
        }
    }
    return m;
}

inline EmbeddedItem make_item(std::string id, ItemKind kind, Matrix emb) {
    EmbeddedItem it;
    it.id = std::move(id);
    it.kind = kind;
    it.emb = std::move(emb);
    return it;
}

inline double brute_maxsim(const Matrix& q, const Matrix& x) {
    double total = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        double best = -1e300;
        for (std::size_t j = 0; j < x.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < q.cols(); ++k) {
                s += q(i, k) * x(j, k);
            }
            best = std::max(best, s);
        }
        total += best;
    }
    return total;
}

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

// Two-pass population statistics over a multiset.
inline Moments moments(const std::vector<double>& xs) {
    Moments m;
    if (xs.empty()) {
        return m;
    }
    for (double x : xs) {
        m.mean += x;
    }
    m.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) {
        var += (x - m.mean) * (x - m.mean);
    }
    m.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return m;
}

// Textbook Okapi scoring; negative idf is floored at eps times the mean idf,
// as rank_bm25 does.
inline std::vector<double> okapi_scores(const std::vector<std::vector<std::string>>& docs,
                                        const std::vector<std::string>& query, double k1, double b, double eps) {
    const double n = static_cast<double>(docs.size());
    double avgdl = 0.0;
    for (const auto& d : docs) {
        avgdl += static_cast<double>(d.size());
    }
    avgdl /= n;
    std::map<std::string, double> df;
    for (const auto& d : docs) {
        std::vector<std::string> uniq = d;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (const auto& t : uniq) {
            df[t] += 1.0;
        }
    }
    std::map<std::string, double> idf;
    double idf_sum = 0.0;
    std::vector<std::string> negative;
    for (const auto& [t, f] : df) {
        idf[t] = std::log(n - f + 0.5) - std::log(f + 0.5);
        idf_sum += idf[t];
        if (idf[t] < 0.0) {
            negative.push_back(t);
        }
    }
    const double floor = eps * idf_sum / static_cast<double>(idf.size());
    for (const auto& t : negative) {
        idf[t] = floor;
    }
    std::vector<double> out;
    for (const auto& d : docs) {
        double s = 0.0;
        for (const auto& q : query) {
            double tf = 0.0;
            for (const auto& t : d) {
                tf += t == q ? 1.0 : 0.0;
            }
            const double w = idf.count(q) ? idf[q] : 0.0;
            s += w * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * static_cast<double>(d.size()) / avgdl));
        }
        out.push_back(s);
    }
    return out;
}

// Token rows for an item on one of two orthogonal topics: topic t lives in
// dims [t*d/2, (t+1)*d/2) and draws from a fixed vocabulary scattered
// around a topic direction.
struct TwoTopics {
    std::size_t dim;
    std::vector<Matrix> vocab;  // per topic, rows are the topic's tokens

    TwoTopics(std::mt19937_64& rng, std::size_t d, std::size_t words, double scatter = 0.8) : dim(d) {
        const std::size_t h = d / 2;
        for (std::size_t t = 0; t < 2; ++t) {
            const auto center = random_unit_rows(rng, 1, h);
            const auto offsets = random_unit_rows(rng, words, h);
            Matrix full(words, d);
            for (std::size_t i = 0; i < words; ++i) {
                double ss = 0.0;
                for (std::size_t j = 0; j < h; ++j) {
                    const double v = center(0, j) + scatter * offsets(i, j);
                    full(i, t * h + j) = v;
                    ss += v * v;
                }
                for (std::size_t j = 0; j < h; ++j) {
                    full(i, t * h + j) /= std::sqrt(ss);
                }
            }
            vocab.push_back(full);
        }
    }

    Matrix item(std::mt19937_64& rng, std::size_t topic, std::size_t tokens, double noise) const {
        std::normal_distribution<double> g(0.0, noise);
        std::uniform_int_distribution<std::size_t> pick(0, vocab[topic].rows() - 1);
        Matrix m(tokens, dim);
        for (std::size_t i = 0; i < tokens; ++i) {
            const auto w = vocab[topic].row(pick(rng));
            double ss = 0.0;
            for (std::size_t j = topic * (dim / 2); j < (topic + 1) * (dim / 2); ++j) {
                m(i, j) = w[j] + g(rng);
                ss += m(i, j) * m(i, j);
            }
            for (std::size_t j = 0; j < dim; ++j) {
                m(i, j) /= std::sqrt(ss);
            }
        }
        return m;
    }
};

}  // namespace cream::testing
