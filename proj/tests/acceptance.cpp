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


// Runs the acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include <spdlog/spdlog.h>

#include "cream/lshproto.hpp"
#include "cream/pipeline.hpp"
#include "cream/retrieval.hpp"
#include "cream/sampler.hpp"
#include "cream/softmem.hpp"
#include "cream/synthetic.hpp"
#include "cream/text.hpp"
#include "cream/trainer.hpp"
#include "oracles.hpp"

#ifndef CREAM_BENCH_CONFIG
#define CREAM_BENCH_CONFIG "configs/synthetic.json"
#endif

namespace {

using namespace cream;
using testing::random_unit_rows;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

MemoryEntry entry(std::string id, ItemKind kind, Matrix emb) {
    MemoryEntry e;
    e.base = emb;
    e.item = testing::make_item(std::move(id), kind, std::move(emb));
    return e;
}

Outcome bit_size() {
    const auto t0 = Clock::now();
    const auto r = sufficient_bits(80'000'000, 0.2);
    const double ms = seconds_since(t0) * 1e3;
    return {r.bits == 12 && r.buckets == 4096 && ms < 1.0,
            fmt("bits=%.0f buckets=%.0f in %.3f ms", r.bits, static_cast<double>(r.buckets), ms)};
}

Outcome optimal_distortion() {
    const auto t0 = Clock::now();
    const double exact = 1.0 / (3.0 * std::sqrt(std::numbers::e));
    constexpr int n = 1'000'000;
    const double lo = 1e-6, hi = 1.0 / 3.0;
    double best_eps = lo, best = -1.0;
    for (int i = 0; i < n; ++i) {
        // Open interval: interior grid points only.
        const double eps = lo + (hi - lo) * (i + 0.5) / n;
        const double b = lsh_benefit(eps);
        if (b > best) {
            best = b;
            best_eps = eps;
        }
    }
    const double s = seconds_since(t0);
    const double err = std::abs(optimal_epsilon() - exact);
    return {err <= 1e-12 && std::abs(best_eps - exact) <= 1e-5 && s < 1.0,
            fmt("eps*=%.9f grid argmax=%.9f in %.3f s", optimal_epsilon(), best_eps, s)};
}

Outcome maxsim_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> len(1, 16), width(1, 32);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto d = width(rng);
        const auto q = random_unit_rows(rng, len(rng), d);
        const auto x = random_unit_rows(rng, len(rng), d);
        worst = std::max(worst, std::abs(maxsim(q, x) - testing::brute_maxsim(q, x)));
    }
    const double s = seconds_since(t0);
    return {worst <= 1e-10 && s < 5.0, fmt("max |diff|=%.2e over 1000 pairs in %.3f s", worst, s)};
}

Outcome summary_triplet() {
    const auto t0 = Clock::now();
    ClusterSummary base;
    for (double x : {3.0, 4.0, 5.0}) {
        base = update_summary_add(base, x);
    }
    const bool example = std::abs(base.mean() - 4.0) <= 1e-12 && std::abs(base.stddev() - std::sqrt(2.0 / 3.0)) <= 1e-12;

    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> dist(0.0, 128.0);
    ClusterSummary s;
    std::vector<double> live;
    double worst_mu = 0.0, worst_sd = 0.0;
    for (int op = 0; op < 10000; ++op) {
        if (!live.empty() && rng() % 2 == 0) {
            const auto i = rng() % live.size();
            s = update_summary_remove(s, live[i]);
            live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            live.push_back(dist(rng));
            s = update_summary_add(s, live.back());
        }
    }
    const auto m = testing::moments(live);
    worst_mu = std::abs(s.mean() - m.mean);
    worst_sd = std::abs(s.stddev() - m.stddev);
    const double secs = seconds_since(t0);
    return {example && s.n == live.size() && worst_mu <= 1e-9 && worst_sd <= 1e-9 && secs < 1.0,
            fmt("{3,4,5} ok=%.0f; after 10000 ops |dmu|=%.1e |dsigma|=%.1e", example, worst_mu, worst_sd)};
}

Outcome prototype_consistency() {
    std::mt19937_64 rng(103);
    double worst = 0.0;
    bool occupancy = true;
    for (int seq = 0; seq < 100; ++seq) {
        const LshFamily fam(static_cast<unsigned>(rng() % 13), 16, rng());
        std::vector<Matrix> items;
        for (int i = 0; i < 15; ++i) {
            items.push_back(random_unit_rows(rng, 1 + rng() % 8, 16));
        }
        std::vector<bool> live(items.size(), false);
        ClusterPrototype p(16);
        for (int op = 0; op < 60; ++op) {
            const auto i = rng() % items.size();
            live[i] ? p.remove(items[i], fam) : p.add(items[i], fam);
            live[i] = !live[i];
        }
        std::vector<const Matrix*> members;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (live[i]) {
                members.push_back(&items[i]);
            }
        }
        const auto rebuilt = build_prototype(members, fam);
        worst = std::max(worst, p.max_abs_diff(rebuilt));
        occupancy = occupancy && p.occupied() == rebuilt.occupied();
        auto shuffled = members;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        worst = std::max(worst, build_prototype(shuffled, fam).max_abs_diff(rebuilt));
    }
    return {worst <= 1e-12 && occupancy, fmt("max |diff|=%.2e over 100 sequences and shuffled rebuilds", worst)};
}

Outcome lsh_rank() {
    std::mt19937_64 rng(104);
    int wins = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const testing::TwoTopics topics(rng, 32, 10);
        const LshFamily fam(12, 32, rng());
        std::vector<Matrix> a, b;
        for (int i = 0; i < 8; ++i) {
            a.push_back(topics.item(rng, 0, 6, 0.1));
            b.push_back(topics.item(rng, 1, 6, 0.1));
        }
        std::vector<const Matrix*> pa, pb;
        for (int i = 0; i < 8; ++i) {
            pa.push_back(&a[i]);
            pb.push_back(&b[i]);
        }
        const auto va = build_prototype(pa, fam).view();
        const auto vb = build_prototype(pb, fam).view();
        const auto x = topics.item(rng, 0, 6, 0.1);
        const auto y = topics.item(rng, 1, 6, 0.1);
        wins += maxsim(x, va) > maxsim(x, vb) && maxsim(y, vb) > maxsim(y, va);
    }
    return {wins >= 95, fmt("%.0f/100 trials rank the own-topic prototype higher", wins)};
}

Outcome eviction() {
    // Hand case first.
    std::map<std::string, double> d5{{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}, {"e", 10}};
    ClusterSummary s5;
    for (const auto& [id, x] : d5) {
        s5 = update_summary_add(s5, x);
    }
    const auto plan = plan_eviction(d5, s5, 0.25);
    bool ok = plan.evicted == std::vector<std::string>{"e"} && std::abs(plan.threshold - 3.7) < 1e-12;

    // Then whole memories: survivors must be exactly those under the pre-eviction threshold.
    std::mt19937_64 rng(105);
    const Reembedder identity = [](const Matrix& m) { return m; };
    std::size_t checked = 0, mismatched = 0;
    for (int trial = 0; trial < 20; ++trial) {
        MemoryConfig cfg;
        cfg.sim.dim = 16;
        cfg.bits = 6;
        cfg.seed = rng();
        SoftMemory mem(cfg);
        std::vector<MemoryEntry> items;
        for (int i = 0; i < 60; ++i) {
            const auto kind = i % 5 == 0 ? ItemKind::kQuery : ItemKind::kDocument;
            items.push_back(entry("i" + std::to_string(i), kind, random_unit_rows(rng, 1 + rng() % 6, 16)));
        }
        mem.init_clusters(items, 4);
        mem.refresh(identity);
        std::map<std::string, bool> keep;
        for (const auto& [id, c] : mem.clusters()) {
            std::vector<double> all;
            for (const auto& [mid, x] : c.member_distances) {
                all.push_back(x);
            }
            const auto m = testing::moments(all);
            const double thr = m.mean + cfg.gamma * m.stddev;
            for (const auto& did : c.doc_ids) {
                keep[did] = c.member_distances.at(did) < thr;
            }
        }
        mem.maintain(identity, rng());
        for (const auto& [did, k] : keep) {
            ++checked;
            mismatched += (mem.find(did) != nullptr) != k;
        }
    }
    ok = ok && mismatched == 0;
    return {ok, fmt("{1,1,1,1,10} threshold=%.3f; %.0f of %.0f documents disagree with the direct threshold",
                    plan.threshold, static_cast<double>(mismatched), static_cast<double>(checked))};
}

Outcome greedy_selection() {
    std::mt19937_64 rng(106);
    int bad = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const auto n = 1 + rng() % 8;
        const auto docs = 2 + rng() % 12;
        std::vector<QueryCandidate> cands;
        for (std::size_t i = 0; i < n; ++i) {
            std::set<std::string> cov;
            const auto m = std::min<std::size_t>(1 + rng() % 4, docs);
            while (cov.size() < m) {
                cov.insert("d" + std::to_string(rng() % docs));
            }
            cands.push_back({"q" + std::to_string(i), {cov.begin(), cov.end()}});
        }
        const auto picks = greedy_coverage(cands, 1 + rng() % n, rng());
        std::set<std::string> covered, chosen;
        auto cand = [&](const std::string& id) {
            return *std::find_if(cands.begin(), cands.end(), [&](const auto& c) { return c.query_id == id; });
        };
        for (std::size_t step = 0; step < picks.size(); ++step) {
            if (step > 0) {
                // Exhaustive scan: largest union, then smallest overlap, then id.
                std::tuple<long, std::size_t, std::string> best{1, 0, ""};
                bool first = true;
                for (const auto& c : cands) {
                    if (chosen.count(c.query_id)) {
                        continue;
                    }
                    std::set<std::string> u = covered;
                    u.insert(c.coverage.begin(), c.coverage.end());
                    std::size_t overlap = 0;
                    for (const auto& d : c.coverage) {
                        overlap += covered.count(d);
                    }
                    const std::tuple<long, std::size_t, std::string> key{-static_cast<long>(u.size()), overlap,
                                                                         c.query_id};
                    if (first || key < best) {
                        best = key;
                        first = false;
                    }
                }
                bad += std::get<2>(best) != picks[step];
            }
            const auto& c = cand(picks[step]);
            covered.insert(c.coverage.begin(), c.coverage.end());
            chosen.insert(picks[step]);
        }
    }
    return {bad == 0, fmt("%.0f greedy steps disagree with the exhaustive oracle over 100 instances", bad)};
}

Outcome document_selection() {
    std::mt19937_64 rng(107);
    int bad = 0, pools = 0;
    while (pools < 200) {
        MemoryConfig cfg;
        cfg.sim.dim = 8;
        cfg.bits = 3;
        cfg.seed = rng();
        SoftMemory mem(cfg);
        std::vector<MemoryEntry> items;
        for (int i = 0; i < 20; ++i) {
            items.push_back(entry("d" + std::to_string(i), ItemKind::kDocument, random_unit_rows(rng, 1 + rng() % 4, 8)));
        }
        mem.init_clusters(items, 1 + rng() % 4);
        const auto q = testing::make_item("q", ItemKind::kQuery, random_unit_rows(rng, 3, 8));
        const std::size_t top = 1 + rng() % 3, k = 2 + rng() % 6;
        std::vector<std::pair<std::string, double>> scored;
        const auto ranked = mem.nearest_clusters(q.emb);
        for (std::size_t i = 0; i < std::min(top, ranked.size()); ++i) {
            for (const auto& did : mem.cluster(ranked[i].second).doc_ids) {
                scored.emplace_back(did, testing::brute_maxsim(q.emb, mem.find(did)->item.emb));
            }
        }
        if (scored.size() < k) {
            continue;
        }
        ++pools;
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        TrainingSample want{"q", scored.front().first, {}};
        std::vector<std::pair<std::string, double>> rest(scored.begin() + 1, scored.end());
        std::sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second < b.second : a.first < b.first;
        });
        for (std::size_t i = 0; i + 1 < k; ++i) {
            want.negative_ids.push_back(rest[i].first);
        }
        bad += !(select_documents(q, mem, top, k) == want);
    }
    return {bad == 0, fmt("%.0f of 200 pools disagree with the full-sort oracle", bad)};
}

Outcome gradient_check() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(108);
    std::normal_distribution<double> g;
    constexpr std::size_t d = 8;
    constexpr double h = 1e-5;
    const TrainConfig cfg;
    double worst = 0.0;
    for (int b = 0; b < 20; ++b) {
        Matrix w(d, d);
        for (auto& x : w.data()) {
            x = g(rng);
        }
        std::vector<TrainingExample> batch;
        for (int i = 0; i < 4; ++i) {
            TrainingExample ex{random_unit_rows(rng, 1 + rng() % 4, d), {}};
            for (int j = 0; j < 5; ++j) {
                ex.docs.push_back(random_unit_rows(rng, 1 + rng() % 6, d));
            }
            batch.push_back(std::move(ex));
        }
        const auto an = loss_gradient(batch, EncoderAdapter(0, w), cfg).grad;
        auto loss_at = [&](const Matrix& m) {
            double total = 0.0;
            for (const auto& ex : batch) {
                total += contrastive_loss(ex, EncoderAdapter(0, m), cfg);
            }
            return total / static_cast<double>(batch.size());
        };
        for (std::size_t i = 0; i < d * d; ++i) {
            Matrix wp = w, wm = w;
            wp.data()[i] += h;
            wm.data()[i] -= h;
            const double fd = (loss_at(wp) - loss_at(wm)) / (2 * h);
            const double scale = std::max({std::abs(fd), std::abs(an.data()[i]), 1e-6});
            worst = std::max(worst, std::abs(fd - an.data()[i]) / scale);
        }
    }
    const double s = seconds_since(t0);
    return {worst <= 1e-4 && s < 10.0, fmt("max relative error %.2e over 20 batches in %.2f s", worst, s)};
}

Outcome ablation_direction(const std::string& config_path) {
    const auto t0 = Clock::now();
    const auto cfg = Config::load(config_path);
    const std::vector<Variant> variants{Variant::kFull, Variant::kNoSoftMemory, Variant::kNoTrain,
                                        Variant::kNoFinegrained};
    bool ok = true;
    std::string detail;
    std::size_t min_docs = SIZE_MAX;
    for (std::uint64_t seed : {1, 2, 3}) {
        SynthConfig sc;
        sc.seed = seed;
        const auto stream = generate_synthetic_stream(sc);
        for (const auto& s : stream) {
            min_docs = std::min(min_docs, s.documents.size());
        }
        std::map<Variant, double> s5;
        for (auto v : variants) {
            s5[v] = 100.0 * Pipeline(cfg, v, Protocol::kShared, seed).run(stream).average_success_at_5();
        }
        const bool seed_ok = s5[Variant::kFull] > s5[Variant::kNoSoftMemory] &&
                             s5[Variant::kFull] > s5[Variant::kNoTrain] &&
                             s5[Variant::kNoFinegrained] < std::min({s5[Variant::kFull], s5[Variant::kNoSoftMemory],
                                                                     s5[Variant::kNoTrain]});
        ok = ok && seed_ok;
        char buf[200];
        std::snprintf(buf, sizeof buf, "seed %llu: full %.2f no-softmem %.2f no-train %.2f no-finegrained %.2f; ",
                      static_cast<unsigned long long>(seed), s5[Variant::kFull], s5[Variant::kNoSoftMemory],
                      s5[Variant::kNoTrain], s5[Variant::kNoFinegrained]);
        detail += buf;
    }
    const double s = seconds_since(t0);
    detail += fmt("min %.0f docs/session; %.1f s", static_cast<double>(min_docs), s);
    return {ok && min_docs >= 200 && s < 300.0, detail};
}

Outcome retrieval_and_bm25() {
    std::mt19937_64 rng(109);
    int rank_mismatch = 0;
    for (int trial = 0; trial < 50; ++trial) {
        MemoryConfig cfg;
        cfg.sim.dim = 16;
        cfg.bits = 8;
        cfg.seed = rng();
        SoftMemory mem(cfg);
        std::vector<MemoryEntry> items;
        for (int i = 0; i < 80; ++i) {
            items.push_back(entry("d" + std::to_string(i), ItemKind::kDocument, random_unit_rows(rng, 1 + rng() % 6, 16)));
        }
        mem.init_clusters(items, 6);
        std::vector<const EmbeddedItem*> corpus;
        for (const auto& [id, e] : mem.entries()) {
            corpus.push_back(&e.item);
        }
        const auto q = testing::make_item("q", ItemKind::kQuery, random_unit_rows(rng, 4, 16));
        rank_mismatch += ids_of(retrieve(q, corpus, corpus.size())) !=
                         ids_of(retrieve_pruned(q, mem, corpus.size(), mem.clusters().size()));
    }
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<std::string>> docs;
        const auto vocab = 3 + rng() % 20;
        for (std::size_t i = 0, n = 2 + rng() % 40; i < n; ++i) {
            std::vector<std::string> d;
            for (std::size_t j = 0, len = 1 + rng() % 15; j < len; ++j) {
                d.push_back("w" + std::to_string(std::min(rng() % vocab, rng() % vocab)));
            }
            docs.push_back(std::move(d));
        }
        std::vector<std::string> query;
        for (int i = 0; i < 4; ++i) {
            query.push_back("w" + std::to_string(rng() % 25));
        }
        const Bm25Params p;
        const auto got = Bm25Index(docs, p).scores(query);
        const auto want = testing::okapi_scores(docs, query, p.k1, p.b, p.epsilon);
        for (std::size_t i = 0; i < got.size(); ++i) {
            worst = std::max(worst, std::abs(got[i] - want[i]));
        }
    }
    return {rank_mismatch == 0 && worst <= 1e-9,
            fmt("%.0f of 50 pruned rankings differ from exact; BM25 max |diff|=%.2e", rank_mismatch, worst)};
}

Outcome determinism(const std::string& config_path) {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "cream_acceptance_stream";
    fs::remove_all(dir);
    SynthConfig sc;
    sc.seed = 13;
    sc.sessions = 4;
    write_sessions(generate_synthetic_stream(sc), dir.string());
    auto run_once = [&](Variant v, Protocol p) {
        const auto cfg = Config::load(config_path);
        return Pipeline(cfg, v, p, 21).run(read_sessions(dir.string())).to_json().dump(2);
    };
    bool same = true;
    for (auto v : {Variant::kFull, Variant::kNoSoftMemory}) {
        for (auto p : {Protocol::kShared, Protocol::kDisjoint}) {
            same = same && run_once(v, p) == run_once(v, p);
        }
    }
    fs::remove_all(dir);
    return {same, same ? "report JSON byte-identical across repeated runs" : "report JSON differs between runs"};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    const std::string config_path = argc > 1 ? argv[1] : CREAM_BENCH_CONFIG;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"bit-size calculator", bit_size},
        {"optimal distortion rate", optimal_distortion},
        {"maxsim vs brute force", maxsim_oracle},
        {"summary triplet", summary_triplet},
        {"prototype add/remove", prototype_consistency},
        {"LSH rank property", lsh_rank},
        {"eviction threshold", eviction},
        {"greedy query selection", greedy_selection},
        {"document selection", document_selection},
        {"gradient check", gradient_check},
        {"ablation direction", [&] { return ablation_direction(config_path); }},
        {"pruned retrieval and BM25", retrieval_and_bm25},
        {"determinism", [&] { return determinism(config_path); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %2zu %-28s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures;
}
