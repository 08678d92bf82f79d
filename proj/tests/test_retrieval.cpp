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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cream/retrieval.hpp"
#include "cream/text.hpp"
#include "oracles.hpp"

namespace cream {
namespace {

using testing::random_unit_rows;

TEST(Tokenize, LowercasesAndSplits) {
    EXPECT_EQ(tokenize("Hello, World! x2-y"), (std::vector<std::string>{"hello", "world", "x2", "y"}));
    EXPECT_TRUE(tokenize("  ,;  ").empty());
    EXPECT_EQ(tokenize("caf\xc3\xa9 bar"), (std::vector<std::string>{"caf", "bar"}));
}

std::vector<std::vector<std::string>> random_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t vocab) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i < docs; ++i) {
        std::vector<std::string> d;
        const auto n = 1 + rng() % 15;
        for (std::size_t j = 0; j < n; ++j) {
            // Skewed draw so some terms are common enough to get negative idf.
            const auto t = std::min(rng() % vocab, rng() % vocab);
            d.push_back("w" + std::to_string(t));
        }
        out.push_back(std::move(d));
    }
    return out;
}

TEST(Bm25, MatchesReferenceFormula) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const auto docs = random_corpus(rng, 2 + rng() % 40, 3 + rng() % 20);
        std::vector<std::string> query;
        for (int i = 0; i < 4; ++i) {
            query.push_back("w" + std::to_string(rng() % 25));
        }
        const Bm25Params p;
        const Bm25Index index(docs, p);
        const auto got = index.scores(query);
        const auto want = testing::okapi_scores(docs, query, p.k1, p.b, p.epsilon);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_NEAR(got[i], want[i], 1e-9);
        }
    }
}

TEST(Bm25, CommonTermGetsFlooredIdf) {
    const Bm25Index index({{"a", "b"}, {"a", "c"}, {"a", "d"}, {"e"}, {"f"}});
    const double rare = std::log(4.5 / 1.5);
    const double mean = (std::log(2.5 / 3.5) + 5 * rare) / 6.0;
    EXPECT_NEAR(index.idf("a"), 0.25 * mean, 1e-12);
    EXPECT_NEAR(index.idf("b"), rare, 1e-12);
    EXPECT_EQ(index.idf("zzz"), 0.0);
}

TEST(Bm25, TopBreaksTiesByIndex) {
    const Bm25Index index({{"x"}, {"y"}, {"x"}, {"z"}, {"w"}});
    EXPECT_EQ(bm25_top(index, {"x"}, 3), (std::vector<std::size_t>{0, 2, 1}));
    EXPECT_THROW(bm25_top(index, {"x"}, 0), Error);
}

TEST(Bm25, PrefilterReturnsIds) {
    const std::vector<TextDoc> docs{{"d2", {"cat", "dog"}}, {"d1", {"cat"}}, {"d3", {"fish"}}};
    EXPECT_EQ(bm25_prefilter({"cat"}, docs, 2), (std::vector<std::string>{"d1", "d2"}));
    EXPECT_TRUE(bm25_prefilter({"cat"}, {}, 2).empty());
}

TEST(Metrics, SuccessAndRecall) {
    const std::vector<std::string> ranked{"a", "b", "c", "d", "e", "f"};
    EXPECT_EQ(success_at_k(ranked, {"e"}, 5), 1.0);
    EXPECT_EQ(success_at_k(ranked, {"f"}, 5), 0.0);
    EXPECT_DOUBLE_EQ(recall_at_k(ranked, {"a", "f", "z", "c"}, 5), 0.5);
    EXPECT_DOUBLE_EQ(recall_at_k({"a"}, {"a", "b"}, 10), 0.5);
    EXPECT_THROW(success_at_k(ranked, {}, 5), Error);
    EXPECT_THROW(recall_at_k(ranked, {"a"}, 0), Error);
}

TEST(Retrieve, OrdersByScoreThenId) {
    const auto q = testing::make_item("q", ItemKind::kQuery, Matrix::from_rows({{1, 0}}));
    const auto a = testing::make_item("a", ItemKind::kDocument, Matrix::from_rows({{0.6, 0.8}}));
    const auto b = testing::make_item("b", ItemKind::kDocument, Matrix::from_rows({{1, 0}}));
    const auto c = testing::make_item("c", ItemKind::kDocument, Matrix::from_rows({{0.6, -0.8}}));
    const auto r = retrieve(q, {&c, &a, &b}, 10);
    EXPECT_EQ(ids_of(r), (std::vector<std::string>{"b", "a", "c"}));
    EXPECT_EQ(retrieve(q, {&c, &a, &b}, 1).size(), 1u);
    EXPECT_THROW(retrieve(q, {}, 1), Error);
    EXPECT_THROW(retrieve(q, {&a}, 0), Error);
}

TEST(Retrieve, PrunedOverAllClustersEqualsExact) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        MemoryConfig cfg;
        cfg.sim.dim = 16;
        cfg.bits = 6;
        cfg.seed = rng();
        SoftMemory mem(cfg);
        std::vector<MemoryEntry> entries;
        for (int i = 0; i < 60; ++i) {
            MemoryEntry e;
            e.item = testing::make_item("d" + std::to_string(i), ItemKind::kDocument, random_unit_rows(rng, 1 + rng() % 5, 16));
            e.base = e.item.emb;
            entries.push_back(std::move(e));
        }
        mem.init_clusters(entries, 5);
        std::vector<const EmbeddedItem*> corpus;
        for (const auto& [id, e] : mem.entries()) {
            corpus.push_back(&e.item);
        }
        const auto q = testing::make_item("q", ItemKind::kQuery, random_unit_rows(rng, 4, 16));
        const auto exact = retrieve(q, corpus, corpus.size());
        const auto pruned = retrieve_pruned(q, mem, corpus.size(), mem.clusters().size());
        EXPECT_EQ(ids_of(pruned), ids_of(exact));
        const auto fewer = retrieve_pruned(q, mem, corpus.size(), 1);
        EXPECT_LE(fewer.size(), exact.size());
    }
}

}  // namespace
}  // namespace cream
