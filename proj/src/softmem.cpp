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

#include "cream/softmem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "json.hpp"

#include "cream/binary_io.hpp"

namespace cream {

namespace {

struct Dd {
    double hi = 0.0;
    double lo = 0.0;
};

Dd two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

Dd dd_add(Dd a, Dd b) {
    Dd s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    return two_sum(s.hi, s.lo);
}

Dd dd_mul(Dd a, Dd b) {
    const double p = a.hi * b.hi;
    const double e = std::fma(a.hi, b.hi, -p) + (a.hi * b.lo + a.lo * b.hi);
    return two_sum(p, e);
}

Dd square(double x) { return {x * x, std::fma(x, x, -(x * x))}; }

ClusterSummary shifted(ClusterSummary s, double dist, double sign) {
    const Dd ls = dd_add({s.ls, s.ls_lo}, {sign * dist, 0.0});
    const Dd sq = square(dist);
    const Dd ss = dd_add({s.ss, s.ss_lo}, {sign * sq.hi, sign * sq.lo});
    s.ls = ls.hi;
    s.ls_lo = ls.lo;
    s.ss = ss.hi;
    s.ss_lo = ss.lo;
    return s;
}

}  // namespace

double ClusterSummary::mean() const {
    if (n == 0) {
        return 0.0;
    }
    const double nn = static_cast<double>(n);
    const double hi = ls / nn;
    // One correction step recovers the low word of the quotient.
    const Dd back = dd_mul({hi, 0.0}, {nn, 0.0});
    return hi + ((ls - back.hi) - back.lo + ls_lo) / nn;
}

double ClusterSummary::stddev() const {
    if (n == 0) {
        return 0.0;
    }
    const double nn = static_cast<double>(n);
    const Dd l{ls, ls_lo};
    const Dd m2 = dd_add(dd_mul({ss, ss_lo}, {nn, 0.0}), [&] {
        const Dd sq = dd_mul(l, l);
        return Dd{-sq.hi, -sq.lo};
    }());
    const double var = (m2.hi + m2.lo) / (nn * nn);
    return var > 0.0 ? std::sqrt(var) : 0.0;
}

ClusterSummary update_summary_add(ClusterSummary s, double dist) {
    ++s.n;
    return shifted(s, dist, 1.0);
}

ClusterSummary update_summary_remove(ClusterSummary s, double dist) {
    if (s.n == 0) {
        throw Error("cannot remove from an empty cluster summary");
    }
    if (--s.n == 0) {
        return {};
    }
    return shifted(s, dist, -1.0);
}

EvictionDecision plan_eviction(const std::map<std::string, double>& doc_distances, const ClusterSummary& summary,
                               double gamma) {
    EvictionDecision d;
    d.mean = summary.mean();
    d.stddev = summary.stddev();
    d.threshold = d.mean + gamma * d.stddev;
    for (const auto& [id, dist] : doc_distances) {
        (dist >= d.threshold ? d.evicted : d.retained).push_back(id);
    }
    return d;
}

std::size_t retained_query_count(std::size_t queries, std::size_t retained_docs, std::size_t previous_docs) {
    if (queries == 0 || retained_docs == 0 || previous_docs == 0) {
        return 0;
    }
    const double exact = static_cast<double>(queries) * static_cast<double>(retained_docs) /
                         static_cast<double>(previous_docs);
    auto keep = static_cast<std::size_t>(std::floor(exact + 0.5));
    return std::clamp<std::size_t>(keep, 1, queries);
}

namespace {

struct KMeansRun {
    std::vector<std::size_t> labels;
    double cohesion = 0.0;  // sum of point-to-center cosines
};

KMeansRun kmeans_once(const std::vector<std::vector<double>>& points, std::size_t k, std::mt19937_64& rng,
                      unsigned max_iterations) {
    const std::size_t n = points.size();
    auto cos_dist = [](const std::vector<double>& a, const std::vector<double>& b) { return 1.0 - dot(a, b); };

    std::vector<std::vector<double>> centers;
    std::vector<bool> chosen(n, false);
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    centers.push_back(points[first]);
    chosen[first] = true;
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], std::max(0.0, cos_dist(points[i], centers.back())));
            if (!chosen[i]) {
                total += nearest[i] * nearest[i];
            }
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) {
                    continue;
                }
                pick = i;
                r -= nearest[i] * nearest[i];
                if (r <= 0.0 && nearest[i] > 0.0) {
                    break;
                }
            }
        } else {
            // Every remaining point coincides with a center.
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                if (!chosen[i]) {
                    pick = i;
                }
            }
        }
        chosen[pick] = true;
        centers.push_back(points[pick]);
    }

    std::vector<std::size_t> labels(n, k);
    for (unsigned iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double dd = cos_dist(points[i], centers[c]);
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        // Refill empty clusters with the worst-fitting point of a cluster that can spare one.
        std::vector<std::size_t> sizes(k, 0);
        for (auto l : labels) {
            ++sizes[l];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) {
                continue;
            }
            std::size_t worst = n;
            double worst_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[labels[i]] < 2) {
                    continue;
                }
                const double dd = cos_dist(points[i], centers[labels[i]]);
                if (dd > worst_d) {
                    worst_d = dd;
                    worst = i;
                }
            }
            --sizes[labels[worst]];
            labels[worst] = c;
            sizes[c] = 1;
            changed = true;
        }
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<double> sum(points.front().size(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] == c) {
                    for (std::size_t j = 0; j < sum.size(); ++j) {
                        sum[j] += points[i][j];
                    }
                }
            }
            if (normalize_in_place(sum)) {
                centers[c] = std::move(sum);
            }
        }
        if (!changed) {
            break;
        }
    }
    KMeansRun run{std::move(labels), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        run.cohesion += dot(points[i], centers[run.labels[i]]);
    }
    return run;
}

constexpr int kKMeansRestarts = 10;

}  // namespace

std::vector<std::size_t> spherical_kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                                          std::uint64_t seed, unsigned max_iterations) {
    const std::size_t n = points.size();
    if (k == 0 || k > n) {
        throw Error("k-means needs 1 <= k <= points (k=" + std::to_string(k) + ", points=" + std::to_string(n) + ")");
    }
    std::mt19937_64 rng(mix_seed(seed, 0x6b6d));
    KMeansRun best;
    for (int r = 0; r < kKMeansRestarts; ++r) {
        auto run = kmeans_once(points, k, rng, max_iterations);
        if (r == 0 || run.cohesion > best.cohesion) {
            best = std::move(run);
        }
    }
    return best.labels;
}

SoftMemory::SoftMemory(MemoryConfig cfg) : cfg_(cfg), fam_(cfg.bits, cfg.sim.dim, cfg.seed) {
    cfg_.sim.validate();
}

const MemoryEntry* SoftMemory::find(const std::string& id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
}

const Cluster& SoftMemory::cluster(ClusterId id) const {
    auto it = clusters_.find(id);
    if (it == clusters_.end()) {
        throw Error("unknown cluster " + std::to_string(id));
    }
    return it->second;
}

std::size_t SoftMemory::document_count() const {
    std::size_t n = 0;
    for (const auto& [id, c] : clusters_) {
        n += c.doc_ids.size();
    }
    return n;
}

std::size_t SoftMemory::query_count() const {
    std::size_t n = 0;
    for (const auto& [id, c] : clusters_) {
        n += c.query_ids.size();
    }
    return n;
}

void SoftMemory::rebuild(Cluster& c) {
    c.prototype = ClusterPrototype(fam_.dim());
    auto add_members = [&](const std::set<std::string>& ids) {
        for (const auto& id : ids) {
            c.prototype.add(entries_.at(id).item.emb, fam_);
        }
    };
    add_members(c.doc_ids);
    add_members(c.query_ids);
    c.view = c.prototype.view();
    c.summary = {};
    c.member_distances.clear();
    if (c.view.rows() == 0) {
        return;
    }
    auto measure = [&](const std::set<std::string>& ids) {
        for (const auto& id : ids) {
            const double dist = sim_dist(entries_.at(id).item.emb, c.view, cfg_.sim);
            c.member_distances[id] = dist;
            c.summary = update_summary_add(c.summary, dist);
        }
    };
    measure(c.doc_ids);
    measure(c.query_ids);
}

std::size_t SoftMemory::init_clusters(std::vector<MemoryEntry> entries, std::size_t k) {
    if (k == 0 || k > entries.size()) {
        throw Error("cannot form " + std::to_string(k) + " initial clusters from " + std::to_string(entries.size()) +
                    " items");
    }
    const std::size_t take = std::min(cfg_.init_sample, entries.size());
    if (k > take) {
        throw Error("initial sample of " + std::to_string(take) + " items is smaller than k=" + std::to_string(k));
    }
    std::vector<std::vector<double>> pooled;
    pooled.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        validate_item(entries[i].item, cfg_.sim);
        if (entries_.count(entries[i].item.id) != 0) {
            throw Error("duplicate item id '" + entries[i].item.id + "'");
        }
        pooled.push_back(pooled_embedding(entries[i].item));
    }
    const auto labels = spherical_kmeans(pooled, k, cfg_.seed, cfg_.kmeans_iterations);

    std::vector<ClusterId> ids(k);
    for (std::size_t c = 0; c < k; ++c) {
        ids[c] = next_id_++;
        clusters_[ids[c]].id = ids[c];
    }
    for (std::size_t i = 0; i < take; ++i) {
        auto& cl = clusters_[ids[labels[i]]];
        auto& e = entries[i];
        const auto& id = e.item.id;
        (e.item.kind == ItemKind::kQuery ? cl.query_ids : cl.doc_ids).insert(id);
        e.cluster = cl.id;
        entries_.emplace(id, std::move(e));
    }
    for (auto id : ids) {
        rebuild(clusters_[id]);
    }
    return take;
}

std::vector<std::pair<double, ClusterId>> SoftMemory::nearest_clusters(const Matrix& emb) const {
    std::vector<std::pair<double, ClusterId>> out;
    out.reserve(clusters_.size());
    for (const auto& [id, c] : clusters_) {
        if (c.view.rows() == 0) {
            continue;
        }
        out.emplace_back(sim_dist(emb, c.view, cfg_.sim), id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

ClusterId SoftMemory::open_cluster(MemoryEntry entry) {
    const ClusterId id = next_id_++;
    auto& c = clusters_[id];
    c.id = id;
    c.prototype = ClusterPrototype(fam_.dim());
    c.prototype.add(entry.item.emb, fam_);
    c.view = c.prototype.view();
    const double dist = sim_dist(entry.item.emb, c.view, cfg_.sim);
    c.summary = update_summary_add({}, dist);
    c.member_distances[entry.item.id] = dist;
    (entry.item.kind == ItemKind::kQuery ? c.query_ids : c.doc_ids).insert(entry.item.id);
    entry.cluster = id;
    entries_.emplace(entry.item.id, std::move(entry));
    return id;
}

ClusterId SoftMemory::assign(MemoryEntry entry) {
    if (clusters_.empty()) {
        throw Error("memory uninitialized");
    }
    validate_item(entry.item, cfg_.sim);
    if (entries_.count(entry.item.id) != 0) {
        throw Error("duplicate item id '" + entry.item.id + "'");
    }
    const auto ranked = nearest_clusters(entry.item.emb);
    if (ranked.empty()) {
        return open_cluster(std::move(entry));
    }
    const auto [dist, target] = ranked.front();
    auto& c = clusters_.at(target);
    if (dist <= c.summary.mean() + cfg_.lambda * c.summary.stddev()) {
        c.prototype.add(entry.item.emb, fam_);
        c.view = c.prototype.view();
        c.summary = update_summary_add(c.summary, dist);
        c.member_distances[entry.item.id] = dist;
        (entry.item.kind == ItemKind::kQuery ? c.query_ids : c.doc_ids).insert(entry.item.id);
        entry.cluster = target;
        entries_.emplace(entry.item.id, std::move(entry));
        return target;
    }
    return open_cluster(std::move(entry));
}

void SoftMemory::erase_member(Cluster& c, const std::string& id) {
    c.doc_ids.erase(id);
    c.query_ids.erase(id);
    c.member_distances.erase(id);
    entries_.erase(id);
}

void SoftMemory::refresh(const Reembedder& reembed) {
    for (auto& [id, e] : entries_) {
        e.item.emb = reembed(e.base);
    }
    for (auto& [id, c] : clusters_) {
        rebuild(c);
    }
}

MaintenanceStats SoftMemory::maintain(const Reembedder& reembed, std::uint64_t seed) {
    MaintenanceStats stats;
    refresh(reembed);
    std::vector<ClusterId> dead;
    for (auto& [cid, c] : clusters_) {
        std::map<std::string, double> doc_dist;
        for (const auto& id : c.doc_ids) {
            doc_dist[id] = c.member_distances.at(id);
        }
        const auto decision = plan_eviction(doc_dist, c.summary, cfg_.gamma);
        for (const auto& id : decision.evicted) {
            erase_member(c, id);
        }
        stats.evicted_docs += decision.evicted.size();

        const std::size_t keep =
            retained_query_count(c.query_ids.size(), decision.retained.size(), doc_dist.size());
        if (keep < c.query_ids.size()) {
            std::vector<std::string> queries(c.query_ids.begin(), c.query_ids.end());
            std::mt19937_64 rng(mix_seed(seed, cid));
            std::shuffle(queries.begin(), queries.end(), rng);
            for (std::size_t i = keep; i < queries.size(); ++i) {
                erase_member(c, queries[i]);
            }
            stats.dropped_queries += queries.size() - keep;
        }
        if (c.size() == 0) {
            dead.push_back(cid);
        } else {
            rebuild(c);
        }
    }
    for (auto cid : dead) {
        clusters_.erase(cid);
    }
    stats.deleted_clusters = dead.size();
    return stats;
}

MemorySnapshot snapshot_of(const SoftMemory& mem) {
    MemorySnapshot s;
    const auto& cfg = mem.config();
    s.lambda = cfg.lambda;
    s.gamma = cfg.gamma;
    s.bits = cfg.bits;
    s.dim = cfg.sim.dim;
    s.max_tokens = cfg.sim.max_tokens;
    s.seed = cfg.seed;
    s.next_cluster_id = mem.next_cluster_id();
    for (const auto& [id, c] : mem.clusters()) {
        MemorySnapshot::ClusterRecord r;
        r.id = id;
        r.summary = c.summary;
        r.doc_ids.assign(c.doc_ids.begin(), c.doc_ids.end());
        r.query_ids.assign(c.query_ids.begin(), c.query_ids.end());
        r.member_distances = c.member_distances;
        r.prototype = c.prototype;
        s.clusters.push_back(std::move(r));
    }
    return s;
}

namespace {
constexpr std::uint32_t kSnapshotVersion = 1;
}

void write_snapshot(const MemorySnapshot& snap, const std::string& manifest_path, const std::string& sidecar_path) {
    nlohmann::json j;
    j["config"] = {{"lambda", snap.lambda}, {"gamma", snap.gamma},         {"bits", snap.bits},
                   {"d", snap.dim},         {"L", snap.max_tokens},        {"seed", snap.seed},
                   {"next_cluster_id", snap.next_cluster_id}};
    j["clusters"] = nlohmann::json::array();
    for (const auto& c : snap.clusters) {
        j["clusters"].push_back({{"id", c.id},
                                 {"N", c.summary.n},
                                 {"LS", c.summary.ls},
                                 {"SS", c.summary.ss},
                                 {"LS_lo", c.summary.ls_lo},
                                 {"SS_lo", c.summary.ss_lo},
                                 {"documents", c.doc_ids},
                                 {"queries", c.query_ids},
                                 {"distances", c.member_distances}});
    }
    std::ofstream mf(manifest_path);
    if (!mf) {
        throw Error("cannot write " + manifest_path);
    }
    mf << j.dump(2) << '\n';

    std::ofstream out(sidecar_path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + sidecar_path);
    }
    const std::uint32_t h = std::uint32_t{1} << snap.bits;
    bin::put_magic(out, "CRMP");
    bin::put<std::uint32_t>(out, kSnapshotVersion);
    bin::put<std::uint32_t>(out, h);
    bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(snap.dim));
    for (const auto& c : snap.clusters) {
        const auto sums = c.prototype.dense_sums(h);
        for (double v : sums.data()) {
            bin::put<float>(out, static_cast<float>(v));
        }
        for (auto n : c.prototype.dense_counts(h)) {
            bin::put<std::uint32_t>(out, n);
        }
    }
}

MemorySnapshot read_snapshot(const std::string& manifest_path, const std::string& sidecar_path) {
    std::ifstream mf(manifest_path);
    if (!mf) {
        throw Error("cannot read " + manifest_path);
    }
    const auto j = nlohmann::json::parse(mf);
    MemorySnapshot s;
    const auto& cfg = j.at("config");
    s.lambda = cfg.at("lambda").get<double>();
    s.gamma = cfg.at("gamma").get<double>();
    s.bits = cfg.at("bits").get<unsigned>();
    s.dim = cfg.at("d").get<std::size_t>();
    s.max_tokens = cfg.at("L").get<std::size_t>();
    s.seed = cfg.at("seed").get<std::uint64_t>();
    s.next_cluster_id = cfg.at("next_cluster_id").get<ClusterId>();

    std::ifstream in(sidecar_path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + sidecar_path);
    }
    bin::expect_magic(in, "CRMP");
    if (bin::get<std::uint32_t>(in) != kSnapshotVersion) {
        throw Error("unsupported prototype sidecar version");
    }
    const auto h = bin::get<std::uint32_t>(in);
    const auto d = bin::get<std::uint32_t>(in);
    if (h != (std::uint32_t{1} << s.bits) || d != s.dim) {
        throw Error("prototype sidecar shape disagrees with manifest");
    }
    for (const auto& jc : j.at("clusters")) {
        MemorySnapshot::ClusterRecord r;
        r.id = jc.at("id").get<ClusterId>();
        r.summary.n = jc.at("N").get<std::uint64_t>();
        r.summary.ls = jc.at("LS").get<double>();
        r.summary.ss = jc.at("SS").get<double>();
        r.summary.ls_lo = jc.value("LS_lo", 0.0);
        r.summary.ss_lo = jc.value("SS_lo", 0.0);
        r.doc_ids = jc.at("documents").get<std::vector<std::string>>();
        r.query_ids = jc.at("queries").get<std::vector<std::string>>();
        r.member_distances = jc.at("distances").get<std::map<std::string, double>>();
        Matrix sums(h, d);
        for (auto& v : sums.data()) {
            v = bin::get<float>(in);
        }
        std::vector<std::uint32_t> counts(h);
        for (auto& n : counts) {
            n = bin::get<std::uint32_t>(in);
        }
        r.prototype = ClusterPrototype::from_dense(sums, counts);
        s.clusters.push_back(std::move(r));
    }
    return s;
}

}  // namespace cream
