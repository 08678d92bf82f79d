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

#include "cream/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace cream {

void SynthConfig::validate() const {
    if (topics < 3 || sessions < 2) {
        throw Error("synthetic stream needs at least 3 topics and 2 sessions");
    }
    if (facets_per_topic < std::max(query_facets, doc_facets) || query_facets == 0 || doc_facets == 0 ||
        synonyms_per_facet == 0) {
        throw Error("invalid facet layout");
    }
    if (generic_vocab < query_generic || generic_vocab == 0 || doc_length == 0 || relevant_per_query == 0) {
        throw Error("invalid synthetic document layout");
    }
    for (double p : {doc_topic_share, paraphrase_prob, exact_share, length_spread}) {
        if (p < 0.0 || p > 1.0) {
            throw Error("synthetic probabilities must lie in [0, 1]");
        }
    }
}

SessionTopics session_topics(std::size_t session, std::size_t topics) {
    SessionTopics st;
    st.recurring = session % topics;
    st.introduced = (session + 1) % topics;
    if (session > 0) {
        st.dropped = (session - 1) % topics;
    }
    return st;
}

namespace {

class Generator {
 public:
    explicit Generator(const SynthConfig& cfg) : cfg_(cfg), rng_(mix_seed(cfg.seed, 0x73796e)) {}

    std::string facet_token(std::size_t topic, std::size_t facet, std::size_t syn) const {
        return "t" + std::to_string(topic) + "f" + std::to_string(facet) + "s" + std::to_string(syn);
    }
    std::string generic_token(std::size_t j) const { return "g" + std::to_string(j); }

    std::size_t uniform(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }

    std::vector<std::size_t> pick_facets(std::size_t n) {
        std::vector<std::size_t> facets(cfg_.facets_per_topic);
        for (std::size_t i = 0; i < facets.size(); ++i) {
            facets[i] = i;
        }
        std::shuffle(facets.begin(), facets.end(), rng_);
        facets.resize(n);
        return facets;
    }

    std::size_t doc_length() {
        const double lo = static_cast<double>(cfg_.doc_length) * (1.0 - cfg_.length_spread);
        const double hi = static_cast<double>(cfg_.doc_length) * (1.0 + cfg_.length_spread);
        const auto n = static_cast<std::size_t>(std::llround(std::uniform_real_distribution<double>(lo, hi)(rng_)));
        return std::max<std::size_t>(n, 1);
    }

    std::string filler(std::size_t topic, const std::vector<std::size_t>& facets, double share) {
        if (coin(share)) {
            return facet_token(topic, facets[uniform(facets.size())], uniform(cfg_.synonyms_per_facet));
        }
        return generic_token(uniform(cfg_.generic_vocab));
    }

    struct Query {
        std::vector<std::string> tokens;
        std::vector<std::size_t> facets;
    };

    Query make_query(std::size_t topic) {
        Query q;
        q.facets = pick_facets(cfg_.query_facets);
        for (auto f : q.facets) {
            q.tokens.push_back(facet_token(topic, f, uniform(cfg_.synonyms_per_facet)));
        }
        std::set<std::size_t> generic;
        while (generic.size() < cfg_.query_generic) {
            generic.insert(uniform(cfg_.generic_vocab));
        }
        for (auto g : generic) {
            q.tokens.push_back(generic_token(g));
        }
        std::shuffle(q.tokens.begin(), q.tokens.end(), rng_);
        return q;
    }

    std::vector<std::string> make_relevant(std::size_t topic, const Query& q) {
        std::vector<std::string> shuffled = q.tokens;
        std::shuffle(shuffled.begin(), shuffled.end(), rng_);
        const auto keep = static_cast<std::size_t>(std::ceil(cfg_.exact_share * static_cast<double>(q.tokens.size())));
        std::vector<std::string> doc(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(keep));
        const std::set<std::string> kept(doc.begin(), doc.end());

        std::vector<std::size_t> facets = q.facets;
        for (auto f : pick_facets(cfg_.facets_per_topic)) {
            if (facets.size() >= std::max(cfg_.doc_facets, q.facets.size())) {
                break;
            }
            if (std::find(facets.begin(), facets.end(), f) == facets.end()) {
                facets.push_back(f);
            }
        }
        // Unmatched query facets come back under a different surface form.
        for (auto f : q.facets) {
            std::size_t used = cfg_.synonyms_per_facet;
            for (std::size_t syn = 0; syn < cfg_.synonyms_per_facet; ++syn) {
                if (std::find(q.tokens.begin(), q.tokens.end(), facet_token(topic, f, syn)) != q.tokens.end()) {
                    used = syn;
                }
            }
            if (kept.count(facet_token(topic, f, used)) == 0 && cfg_.synonyms_per_facet > 1 &&
                coin(cfg_.paraphrase_prob)) {
                const auto other = (used + 1 + uniform(cfg_.synonyms_per_facet - 1)) % cfg_.synonyms_per_facet;
                doc.push_back(facet_token(topic, f, other));
            }
        }
        const auto n = std::max(doc_length(), doc.size());
        while (doc.size() < n) {
            doc.push_back(filler(topic, facets, cfg_.doc_topic_share));
        }
        std::shuffle(doc.begin(), doc.end(), rng_);
        return doc;
    }

    std::vector<std::string> make_distractor(std::size_t topic) {
        const auto facets = pick_facets(cfg_.doc_facets);
        std::vector<std::string> doc;
        const auto n = doc_length();
        while (doc.size() < n) {
            doc.push_back(filler(topic, facets, cfg_.doc_topic_share));
        }
        return doc;
    }

    // One generic token repeated; dominates a pooled vector while adding
    // a single exact match to a token-level score.
    std::vector<std::string> make_spam(std::size_t topic) {
        const auto facets = pick_facets(cfg_.doc_facets);
        const auto n = doc_length();
        std::vector<std::string> doc(n - std::min<std::size_t>(n - 1, 3), generic_token(uniform(cfg_.generic_vocab)));
        while (doc.size() < n) {
            doc.push_back(facet_token(topic, facets[uniform(facets.size())], uniform(cfg_.synonyms_per_facet)));
        }
        std::shuffle(doc.begin(), doc.end(), rng_);
        return doc;
    }

    static std::string join(const std::vector<std::string>& tokens) {
        std::string s;
        for (const auto& t : tokens) {
            if (!s.empty()) {
                s += ' ';
            }
            s += t;
        }
        return s;
    }

    SessionStream session(std::size_t t) {
        SessionStream s;
        s.index = t;
        const auto roles = session_topics(t, cfg_.topics);
        std::size_t next_doc = 0;
        auto doc_id = [&]() { return "s" + std::to_string(t) + "d" + std::to_string(next_doc++); };
        auto add_doc = [&](std::vector<TextItem>& pool, std::size_t topic, const std::vector<std::string>& toks) {
            pool.push_back({doc_id(), join(toks), static_cast<int>(topic)});
            return pool.back().id;
        };

        std::size_t next_query = 0;
        for (auto topic : {roles.recurring, roles.introduced}) {
            for (std::size_t i = 0; i < cfg_.train_queries_per_topic; ++i) {
                const auto q = make_query(topic);
                const auto qid = "s" + std::to_string(t) + "q" + std::to_string(next_query++);
                s.queries.push_back({qid, join(q.tokens), static_cast<int>(topic)});
                for (std::size_t r = 0; r < cfg_.relevant_per_query; ++r) {
                    s.qrels[qid].insert(add_doc(s.documents, topic, make_relevant(topic, q)));
                }
            }
        }
        std::vector<std::size_t> eval_topics;
        if (roles.dropped) {
            eval_topics.push_back(*roles.dropped);
        }
        eval_topics.push_back(roles.recurring);
        eval_topics.push_back(roles.introduced);
        for (auto topic : eval_topics) {
            for (std::size_t i = 0; i < cfg_.eval_queries_per_topic; ++i) {
                const auto q = make_query(topic);
                const auto qid = "s" + std::to_string(t) + "e" + std::to_string(next_query++);
                s.eval_queries.push_back({qid, join(q.tokens), static_cast<int>(topic)});
                // Relevant documents in both pools so either protocol can score the query.
                for (std::size_t r = 0; r < cfg_.relevant_per_query; ++r) {
                    s.qrels[qid].insert(add_doc(s.documents, topic, make_relevant(topic, q)));
                    s.qrels[qid].insert(add_doc(s.eval_documents, topic, make_relevant(topic, q)));
                }
            }
        }
        // Unjudged background from every topic, active or not.
        for (auto* pool : {&s.documents, &s.eval_documents}) {
            for (std::size_t i = 0; i < cfg_.distractors; ++i) {
                const auto topic = uniform(cfg_.topics);
                add_doc(*pool, topic, make_distractor(topic));
            }
            for (std::size_t i = 0; i < cfg_.spam; ++i) {
                const auto topic = uniform(cfg_.topics);
                add_doc(*pool, topic, make_spam(topic));
            }
        }
        return s;
    }

 private:
    const SynthConfig& cfg_;
    std::mt19937_64 rng_;
};

}  // namespace

std::vector<SessionStream> generate_synthetic_stream(const SynthConfig& cfg) {
    cfg.validate();
    Generator g(cfg);
    std::vector<SessionStream> out;
    for (std::size_t t = 0; t < cfg.sessions; ++t) {
        out.push_back(g.session(t));
        out.back().validate();
    }
    return out;
}

}  // namespace cream
