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

#include "cream/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "cream/retrieval.hpp"
#include "cream/text.hpp"

namespace cream {

std::string to_string(Protocol p) { return p == Protocol::kShared ? "shared" : "disjoint"; }

std::string to_string(Variant v) {
    switch (v) {
        case Variant::kFull:
            return "full";
        case Variant::kNoFinegrained:
            return "no-finegrained";
        case Variant::kNoTrain:
            return "no-train";
        case Variant::kNoSoftMemory:
            return "no-softmem";
    }
    return "full";
}

Protocol protocol_from_string(const std::string& s) {
    if (s == "shared") {
        return Protocol::kShared;
    }
    if (s == "disjoint") {
        return Protocol::kDisjoint;
    }
    throw Error("unknown protocol '" + s + "'");
}

Variant variant_from_string(const std::string& s) {
    for (auto v : {Variant::kFull, Variant::kNoFinegrained, Variant::kNoTrain, Variant::kNoSoftMemory}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    throw Error("unknown variant '" + s + "'");
}

void Config::validate() const {
    if (bits < 1 || bits > LshFamily::kMaxBits) {
        throw Error("bits must lie in [1, 30]");
    }
    if (init_clusters == 0 || top_clusters == 0 || group_size < 2 || top_k < 10) {
        throw Error("need init_clusters >= 1, K >= 1, k >= 2 and top_k >= 10");
    }
    if (max_tokens == 0 || dim == 0 || !(gamma >= 0.0) || !(lambda >= 0.0)) {
        throw Error("invalid memory configuration");
    }
    TrainConfig{tau, lr, epochs, batch, token_level_loss}.validate();
}

nlohmann::json Config::to_json() const {
    return {{"lambda", lambda},
            {"gamma", gamma},
            {"bits", bits},
            {"init_clusters", init_clusters},
            {"K", top_clusters},
            {"k", group_size},
            {"tau", tau},
            {"lr", lr},
            {"epochs", epochs},
            {"batch", batch},
            {"token_level_loss", token_level_loss},
            {"L", max_tokens},
            {"d", dim},
            {"top_k", top_k},
            {"bm25_top_n", bm25_top_n},
            {"query_budget", query_budget}};
}

Config Config::from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {"lambda", "gamma", "bits",  "init_clusters", "K",
                                                "k",      "tau",   "lr",    "epochs",        "batch",
                                                "token_level_loss", "L", "d", "top_k", "bm25_top_n",
                                                "query_budget"};
    for (const auto& [key, value] : j.items()) {
        if (known.count(key) == 0) {
            throw Error("unknown config key '" + key + "'");
        }
    }
    Config c;
    c.lambda = j.value("lambda", c.lambda);
    c.gamma = j.value("gamma", c.gamma);
    c.bits = j.value("bits", c.bits);
    c.init_clusters = j.value("init_clusters", c.init_clusters);
    c.top_clusters = j.value("K", c.top_clusters);
    c.group_size = j.value("k", c.group_size);
    c.tau = j.value("tau", c.tau);
    c.lr = j.value("lr", c.lr);
    c.epochs = j.value("epochs", c.epochs);
    c.batch = j.value("batch", c.batch);
    c.token_level_loss = j.value("token_level_loss", c.token_level_loss);
    c.max_tokens = j.value("L", c.max_tokens);
    c.dim = j.value("d", c.dim);
    c.top_k = j.value("top_k", c.top_k);
    c.bm25_top_n = j.value("bm25_top_n", c.bm25_top_n);
    c.query_budget = j.value("query_budget", c.query_budget);
    c.validate();
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read " + path);
    }
    return from_json(nlohmann::json::parse(in));
}

namespace {

double mean_of(const std::vector<SessionReport>& rows, double SessionReport::*field) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
        if (r.eval_queries > 0) {
            total += r.*field;
            ++n;
        }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace

double EvalReport::average_success_at_5() const { return mean_of(sessions, &SessionReport::success_at_5); }
double EvalReport::average_recall_at_10() const { return mean_of(sessions, &SessionReport::recall_at_10); }

nlohmann::json EvalReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : sessions) {
        rows.push_back({{"session", r.session},
                        {"eval_queries", r.eval_queries},
                        {"S@5", 100.0 * r.success_at_5},
                        {"R@10", 100.0 * r.recall_at_10},
                        {"online_queries", r.online_queries},
                        {"online_S@5", 100.0 * r.online_success_at_5},
                        {"online_R@10", 100.0 * r.online_recall_at_10},
                        {"memory_clusters", r.memory_clusters},
                        {"memory_documents", r.memory_documents},
                        {"memory_queries", r.memory_queries},
                        {"evicted_documents", r.evicted_documents},
                        {"training_queries", r.training_queries},
                        {"training_samples", r.training_samples},
                        {"loss_before", r.loss_before},
                        {"loss_after", r.loss_after}});
    }
    return {{"protocol", to_string(protocol)},
            {"variant", to_string(variant)},
            {"seed", seed},
            {"config", config.to_json()},
            {"sessions", rows},
            {"average", {{"S@5", 100.0 * average_success_at_5()}, {"R@10", 100.0 * average_recall_at_10()}}}};
}

Pipeline::Pipeline(Config cfg, Variant variant, Protocol protocol, std::uint64_t seed,
                   std::shared_ptr<const EmbeddingTable> precomputed)
    : cfg_(cfg),
      variant_(variant),
      protocol_(protocol),
      seed_(seed),
      precomputed_(std::move(precomputed)),
      adapter_(mix_seed(seed, 0x656e63), cfg.dim) {
    cfg_.validate();
    if (precomputed_ && precomputed_->dim != cfg_.dim) {
        throw Error("precomputed embeddings have d=" + std::to_string(precomputed_->dim) + " but config has d=" +
                    std::to_string(cfg_.dim));
    }
    if (variant_ != Variant::kNoSoftMemory) {
        MemoryConfig mc;
        mc.lambda = cfg_.lambda;
        mc.gamma = cfg_.gamma;
        // Pooled items share one bucket: the prototype is the pooled centroid.
        mc.bits = variant_ == Variant::kNoFinegrained ? 0 : cfg_.bits;
        mc.seed = mix_seed(seed, 0x6d656d);
        mc.sim = {cfg_.max_tokens, cfg_.dim};
        memory_.emplace(mc);
    }
}

std::uint64_t Pipeline::session_seed(std::size_t t) const { return mix_seed(seed_, 0x1000 + t); }

Matrix Pipeline::base_rows(const TextItem& item) const {
    if (precomputed_) {
        auto it = precomputed_->rows.find(item.id);
        if (it == precomputed_->rows.end()) {
            throw Error("no precomputed embedding for item '" + item.id + "'");
        }
        if (it->second.rows() == 0 || it->second.rows() > cfg_.max_tokens) {
            throw Error("precomputed embedding for '" + item.id + "' has an invalid token count");
        }
        return it->second;
    }
    return adapter_.base_rows(tokenize(item.text), cfg_.max_tokens);
}

Matrix Pipeline::embed(const Matrix& base) const {
    Matrix rows = adapter_.apply(base);
    if (variant_ != Variant::kNoFinegrained) {
        return rows;
    }
    Matrix pooled(0, rows.cols());
    pooled.append_row(pooled_embedding(rows));
    return pooled;
}

EmbeddedItem Pipeline::embed_item(const TextItem& item, ItemKind kind, const Matrix& base) const {
    EmbeddedItem e;
    e.id = item.id;
    e.kind = kind;
    e.tokens = precomputed_ ? std::vector<std::string>{} : tokenize(item.text);
    e.emb = embed(base);
    e.tokens.resize(std::min(e.tokens.size(), base.rows()));
    return e;
}

namespace {

struct Scores {
    std::size_t n = 0;
    double success = 0.0;
    double recall = 0.0;
};

Scores evaluate(const std::vector<EmbeddedItem>& queries, const std::vector<EmbeddedItem>& pool,
                const std::map<std::string, std::set<std::string>>& qrels, std::size_t top_k) {
    Scores s;
    if (pool.empty()) {
        return s;
    }
    std::set<std::string> pool_ids;
    std::vector<const EmbeddedItem*> corpus;
    for (const auto& d : pool) {
        pool_ids.insert(d.id);
        corpus.push_back(&d);
    }
    for (const auto& q : queries) {
        auto it = qrels.find(q.id);
        std::set<std::string> relevant;
        if (it != qrels.end()) {
            std::set_intersection(it->second.begin(), it->second.end(), pool_ids.begin(), pool_ids.end(),
                                  std::inserter(relevant, relevant.end()));
        }
        if (relevant.empty()) {
            spdlog::debug("query {} has no relevant documents in the pool; excluded", q.id);
            continue;
        }
        const auto ranked = ids_of(retrieve(q, corpus, top_k));
        s.success += success_at_k(ranked, relevant, 5);
        s.recall += recall_at_k(ranked, relevant, 10);
        ++s.n;
    }
    if (s.n > 0) {
        s.success /= static_cast<double>(s.n);
        s.recall /= static_cast<double>(s.n);
    }
    return s;
}

}  // namespace

SessionReport Pipeline::run_session(const SessionStream& s) {
    SessionReport rep;
    rep.session = s.index;
    samples_.clear();
    const auto seed = session_seed(s.index);

    std::map<std::string, Matrix> base;
    auto base_of = [&](const TextItem& it) -> const Matrix& {
        auto found = base.find(it.id);
        if (found == base.end()) {
            found = base.emplace(it.id, base_rows(it)).first;
        }
        return found->second;
    };
    auto embed_all = [&](const std::vector<TextItem>& items, ItemKind kind) {
        std::vector<EmbeddedItem> out;
        out.reserve(items.size());
        for (const auto& it : items) {
            out.push_back(embed_item(it, kind, base_of(it)));
        }
        return out;
    };

    // Retrieval for the incoming queries with the encoder as it stands.
    const auto train_queries = embed_all(s.queries, ItemKind::kQuery);
    const auto train_docs = embed_all(s.documents, ItemKind::kDocument);
    {
        const auto online = evaluate(train_queries, train_docs, s.qrels, cfg_.top_k);
        rep.online_queries = online.n;
        rep.online_success_at_5 = online.success;
        rep.online_recall_at_10 = online.recall;
    }

    // Optional BM25 prefilter: only documents in some query's top-n enter memory.
    std::vector<std::size_t> kept_docs;
    if (cfg_.bm25_top_n > 0 && !s.queries.empty()) {
        std::vector<TextDoc> docs;
        std::map<std::string, std::size_t> position;
        for (std::size_t i = 0; i < s.documents.size(); ++i) {
            docs.push_back({s.documents[i].id, tokenize(s.documents[i].text)});
            position[s.documents[i].id] = i;
        }
        std::set<std::size_t> keep;
        for (const auto& q : s.queries) {
            for (const auto& id : bm25_prefilter(tokenize(q.text), docs, cfg_.bm25_top_n)) {
                keep.insert(position.at(id));
            }
        }
        kept_docs.assign(keep.begin(), keep.end());
    } else {
        for (std::size_t i = 0; i < s.documents.size(); ++i) {
            kept_docs.push_back(i);
        }
    }

    const Reembedder reembed = [this](const Matrix& b) { return embed(b); };
    std::vector<TrainingExample> examples;

    if (memory_) {
        auto& mem = *memory_;
        std::vector<MemoryEntry> incoming;
        for (auto i : kept_docs) {
            incoming.push_back({train_docs[i], base_of(s.documents[i]), 0});
        }
        for (std::size_t i = 0; i < s.queries.size(); ++i) {
            incoming.push_back({train_queries[i], base_of(s.queries[i]), 0});
        }
        std::size_t consumed = 0;
        if (!mem.initialized() && !incoming.empty()) {
            const auto k = std::min(cfg_.init_clusters, incoming.size());
            consumed = mem.init_clusters({incoming.begin(), incoming.end()}, k);
        }
        for (std::size_t i = consumed; i < incoming.size(); ++i) {
            mem.assign(std::move(incoming[i]));
        }
        if (mem.initialized()) {
            rep.evicted_documents = mem.maintain(reembed, seed).evicted_docs;
        }

        const auto selected = mem.initialized() ? select_queries(mem, cfg_.query_budget, seed)
                                                : std::vector<std::string>{};
        rep.training_queries = selected.size();
        for (const auto& qid : selected) {
            const auto& q = mem.find(qid)->item;
            std::optional<TrainingSample> sample;
            for (auto top = cfg_.top_clusters; top <= std::max(cfg_.top_clusters, mem.clusters().size()); ++top) {
                try {
                    sample = select_documents(q, mem, top, cfg_.group_size);
                    break;
                } catch (const Error&) {
                    if (top >= mem.clusters().size()) {
                        break;
                    }
                }
            }
            if (!sample) {
                spdlog::warn("session {}: not enough documents to build a training group for {}", s.index, qid);
                continue;
            }
            TrainingExample ex{mem.find(sample->query_id)->base, {mem.find(sample->positive_id)->base}};
            for (const auto& n : sample->negative_ids) {
                ex.docs.push_back(mem.find(n)->base);
            }
            examples.push_back(std::move(ex));
            samples_.push_back(std::move(*sample));
        }
    } else {
        // Without clusters: every incoming query, global argmax / argmin by pooled cosine.
        std::vector<std::size_t> order(s.queries.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
        order.resize(std::min(order.size(), cfg_.query_budget));
        std::sort(order.begin(), order.end());
        rep.training_queries = order.size();
        std::vector<std::vector<double>> doc_pooled;
        for (auto i : kept_docs) {
            doc_pooled.push_back(pooled_embedding(train_docs[i]));
        }
        for (auto qi : order) {
            if (kept_docs.size() < cfg_.group_size) {
                break;
            }
            const auto qp = pooled_embedding(train_queries[qi]);
            std::vector<std::pair<std::string, double>> scored;
            for (std::size_t j = 0; j < kept_docs.size(); ++j) {
                scored.emplace_back(s.documents[kept_docs[j]].id, dot(qp, doc_pooled[j]));
            }
            auto sample = contrast_from_scores(s.queries[qi].id, std::move(scored), cfg_.group_size);
            TrainingExample ex{base.at(sample.query_id), {base.at(sample.positive_id)}};
            for (const auto& n : sample.negative_ids) {
                ex.docs.push_back(base.at(n));
            }
            examples.push_back(std::move(ex));
            samples_.push_back(std::move(sample));
        }
    }
    rep.training_samples = samples_.size();

    if (variant_ != Variant::kNoTrain && !examples.empty()) {
        UpdateStats stats;
        adapter_ = update_encoder(examples, adapter_, TrainConfig{cfg_.tau, cfg_.lr, cfg_.epochs, cfg_.batch,
                                                                  cfg_.token_level_loss},
                                  &stats);
        rep.loss_before = stats.loss_before;
        rep.loss_after = stats.loss_after;
        if (memory_ && memory_->initialized()) {
            memory_->refresh(reembed);
        }
    }

    if (memory_) {
        rep.memory_clusters = memory_->clusters().size();
        rep.memory_documents = memory_->document_count();
        rep.memory_queries = memory_->query_count();
    }

    // Held-out queries against the shared training pool or the disjoint pool.
    const auto eval_queries = embed_all(s.eval_queries, ItemKind::kQuery);
    const auto pool = protocol_ == Protocol::kShared ? embed_all(s.documents, ItemKind::kDocument)
                                                     : embed_all(s.eval_documents, ItemKind::kDocument);
    const auto scores = evaluate(eval_queries, pool, s.qrels, cfg_.top_k);
    rep.eval_queries = scores.n;
    rep.success_at_5 = scores.success;
    rep.recall_at_10 = scores.recall;
    spdlog::info("session {}: S@5 {:.2f} R@10 {:.2f} over {} queries; memory {} clusters / {} docs / {} queries",
                 s.index, 100.0 * rep.success_at_5, 100.0 * rep.recall_at_10, rep.eval_queries,
                 rep.memory_clusters, rep.memory_documents, rep.memory_queries);
    return rep;
}

EvalReport Pipeline::run(const std::vector<SessionStream>& sessions) {
    EvalReport r;
    r.protocol = protocol_;
    r.variant = variant_;
    r.seed = seed_;
    r.config = cfg_;
    for (const auto& s : sessions) {
        r.sessions.push_back(run_session(s));
    }
    return r;
}

void write_samples_jsonl(std::ostream& out, std::size_t session, const std::vector<TrainingSample>& samples) {
    for (const auto& s : samples) {
        out << nlohmann::json{{"session", session},
                              {"query", s.query_id},
                              {"positive", s.positive_id},
                              {"negatives", s.negative_ids}}
                   .dump()
            << '\n';
    }
}

}  // namespace cream
