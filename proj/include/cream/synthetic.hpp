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
#include <optional>
#include <vector>

#include "cream/session.hpp"

namespace cream {

/// Shape of a synthetic drifting stream. Each topic owns a disjoint
/// vocabulary of facets, each facet a handful of interchangeable surface
/// tokens; a small generic vocabulary is shared by every topic.
struct SynthConfig {
    std::size_t topics = 5;
    std::size_t sessions = 10;
    std::uint64_t seed = 0;

    std::size_t facets_per_topic = 6;
    std::size_t synonyms_per_facet = 2;
    std::size_t generic_vocab = 4;

    std::size_t query_facets = 3;
    std::size_t query_generic = 1;
    std::size_t doc_length = 12;
    double length_spread = 0.5;     // doc lengths uniform in doc_length * [1 - spread, 1 + spread]
    std::size_t doc_facets = 3;     // facets a document draws its topical tokens from
    double doc_topic_share = 0.8;   // fraction of filler tokens drawn from the document's facets
    double exact_share = 0.0;       // fraction of query tokens a relevant doc repeats verbatim
    double paraphrase_prob = 1.0;   // chance a relevant doc restates an unmatched query facet

    std::size_t relevant_per_query = 3;
    std::size_t train_queries_per_topic = 20;
    std::size_t eval_queries_per_topic = 20;
    std::size_t distractors = 40;   // per pool
    std::size_t spam = 30;          // per pool: one generic token repeated, a few topical ones

    void validate() const;
};

/// Topic roles within a session: the recurring topic carried over from the
/// previous session, the newly introduced one, and (from session 1 on) the
/// topic dropped from training.
struct SessionTopics {
    std::size_t recurring = 0;
    std::size_t introduced = 0;
    std::optional<std::size_t> dropped;
};

SessionTopics session_topics(std::size_t session, std::size_t topics);

std::vector<SessionStream> generate_synthetic_stream(const SynthConfig& cfg);

}  // namespace cream
