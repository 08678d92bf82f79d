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

#include "cream/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "cream/binary_io.hpp"
#include "json.hpp"

namespace cream {

std::vector<double> base_embedding(std::string_view token, std::uint64_t seed, std::size_t dim) {
    std::mt19937_64 rng(mix_seed(seed, fnv1a64(token)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    do {
        for (auto& x : v) {
            x = normal(rng);
        }
    } while (!normalize_in_place(v));
    return v;
}

EncoderAdapter::EncoderAdapter(std::uint64_t base_seed, std::size_t dim)
    : base_seed_(base_seed), dim_(dim), w_(Matrix::identity(dim)) {
    if (dim == 0) {
        throw Error("encoder dimension must be positive");
    }
}

EncoderAdapter::EncoderAdapter(std::uint64_t base_seed, Matrix weights, std::uint64_t steps)
    : base_seed_(base_seed), dim_(weights.rows()), steps_(steps) {
    set_weights(std::move(weights));
}

void EncoderAdapter::set_weights(Matrix w) {
    if (w.rows() != w.cols() || w.rows() == 0) {
        throw Error("adapter weights must be a non-empty square matrix");
    }
    dim_ = w.rows();
    w_ = std::move(w);
}

Matrix EncoderAdapter::base_rows(const std::vector<std::string>& tokens, std::size_t max_tokens) const {
    if (tokens.empty()) {
        throw Error("cannot encode an empty token list");
    }
    const auto n = std::min(tokens.size(), max_tokens);
    Matrix m(0, dim_);
    for (std::size_t i = 0; i < n; ++i) {
        m.append_row(base_embedding(tokens[i], base_seed_, dim_));
    }
    return m;
}

Matrix EncoderAdapter::apply(const Matrix& base) const {
    if (base.cols() != dim_) {
        throw Error("encoder input width " + std::to_string(base.cols()) + " does not match adapter dimension " +
                    std::to_string(dim_));
    }
    Matrix out(base.rows(), dim_);
    for (std::size_t i = 0; i < base.rows(); ++i) {
        const auto b = base.row(i);
        auto o = out.row(i);
        for (std::size_t r = 0; r < dim_; ++r) {
            o[r] = dot(w_.row(r), b);
        }
        if (!normalize_in_place(o)) {
            throw Error("adapter maps a token embedding to zero");
        }
    }
    return out;
}

EmbeddedItem EncoderAdapter::encode(std::string id, ItemKind kind, std::vector<std::string> tokens,
                                    std::size_t max_tokens) const {
    EmbeddedItem item;
    item.emb = apply(base_rows(tokens, max_tokens));
    tokens.resize(item.emb.rows());
    item.id = std::move(id);
    item.kind = kind;
    item.tokens = std::move(tokens);
    return item;
}

void TrainConfig::validate() const {
    if (!(tau > 0.0)) {
        throw Error("temperature must be positive");
    }
    if (lr < 0.0 || epochs == 0 || batch == 0) {
        throw Error("invalid training configuration");
    }
}

double softmax_cross_entropy(const std::vector<double>& sims, double tau) {
    if (!(tau > 0.0)) {
        throw Error("temperature must be positive");
    }
    if (sims.empty()) {
        throw Error("empty training group");
    }
    double top = sims[0] / tau;
    for (double s : sims) {
        top = std::max(top, s / tau);
    }
    double z = 0.0;
    for (double s : sims) {
        z += std::exp(s / tau - top);
    }
    return top + std::log(z) - sims[0] / tau;
}

namespace {

/// Forward state of one item through the adapter, kept for backprop.
struct ItemPass {
    const Matrix* base = nullptr;
    Matrix e;                    // normalized rows
    std::vector<double> norms;   // |W b_i|
    std::vector<double> pooled;  // unit pooled vector (pooled mode)
    double pooled_norm = 0.0;    // |mean e_i|
    Matrix grad_e;               // dL/de_i
};

bool forward(ItemPass& p, const Matrix& base, const Matrix& w, bool pooled) {
    const auto d = w.rows();
    p.base = &base;
    p.e = Matrix(base.rows(), d);
    p.norms.assign(base.rows(), 0.0);
    for (std::size_t i = 0; i < base.rows(); ++i) {
        auto row = p.e.row(i);
        for (std::size_t r = 0; r < d; ++r) {
            row[r] = dot(w.row(r), base.row(i));
        }
        p.norms[i] = norm(row);
        if (!normalize_in_place(row)) {
            return false;
        }
    }
    p.grad_e = Matrix(base.rows(), d);
    if (pooled) {
        p.pooled.assign(d, 0.0);
        for (std::size_t i = 0; i < p.e.rows(); ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                p.pooled[j] += p.e(i, j);
            }
        }
        for (auto& x : p.pooled) {
            x /= static_cast<double>(p.e.rows());
        }
        p.pooled_norm = norm(p.pooled);
        if (p.pooled_norm < 1e-12 || !normalize_in_place(p.pooled)) {
            return false;
        }
    }
    return true;
}

/// Pushes a gradient on the pooled unit vector back onto the token rows.
void backprop_pooled(ItemPass& p, const std::vector<double>& g_pooled) {
    const double along = dot(p.pooled, g_pooled);
    const double n = static_cast<double>(p.e.rows());
    for (std::size_t i = 0; i < p.e.rows(); ++i) {
        auto ge = p.grad_e.row(i);
        for (std::size_t j = 0; j < ge.size(); ++j) {
            ge[j] += (g_pooled[j] - p.pooled[j] * along) / (p.pooled_norm * n);
        }
    }
}

/// Accumulates dL/dW from the per-row gradients of normalized outputs.
void backprop_rows(const ItemPass& p, Matrix& grad, double scale) {
    const auto d = grad.rows();
    std::vector<double> gz(d);
    for (std::size_t i = 0; i < p.e.rows(); ++i) {
        const auto e = p.e.row(i);
        const auto ge = p.grad_e.row(i);
        const double along = dot(e, ge);
        for (std::size_t r = 0; r < d; ++r) {
            gz[r] = (ge[r] - e[r] * along) / p.norms[i];
        }
        const auto b = p.base->row(i);
        for (std::size_t r = 0; r < d; ++r) {
            if (gz[r] == 0.0) {
                continue;
            }
            auto gw = grad.row(r);
            const double s = gz[r] * scale;
            for (std::size_t c = 0; c < d; ++c) {
                gw[c] += s * b[c];
            }
        }
    }
}

/// Token-level score and, when `grad_scale` is nonzero, its gradient on both
/// sides. Ties in the max go to the first target row.
double token_score(ItemPass& q, ItemPass& x, double grad_scale) {
    double total = 0.0;
    for (std::size_t i = 0; i < q.e.rows(); ++i) {
        std::size_t best = 0;
        double best_s = dot(q.e.row(i), x.e.row(0));
        for (std::size_t j = 1; j < x.e.rows(); ++j) {
            const double s = dot(q.e.row(i), x.e.row(j));
            if (s > best_s) {
                best_s = s;
                best = j;
            }
        }
        total += best_s;
        if (grad_scale != 0.0) {
            auto gq = q.grad_e.row(i);
            auto gx = x.grad_e.row(best);
            const auto eq = q.e.row(i);
            const auto ex = x.e.row(best);
            for (std::size_t c = 0; c < gq.size(); ++c) {
                gq[c] += grad_scale * ex[c];
                gx[c] += grad_scale * eq[c];
            }
        }
    }
    return total;
}

struct ExampleResult {
    bool ok = false;
    double loss = 0.0;
};

ExampleResult run_example(const TrainingExample& ex, const Matrix& w, const TrainConfig& cfg, Matrix* grad,
                          double scale) {
    const bool pooled = !cfg.token_level;
    ItemPass q;
    if (!forward(q, ex.query, w, pooled)) {
        return {};
    }
    std::vector<ItemPass> docs(ex.docs.size());
    for (std::size_t j = 0; j < docs.size(); ++j) {
        if (!forward(docs[j], ex.docs[j], w, pooled)) {
            return {};
        }
    }
    std::vector<double> sims(docs.size());
    for (std::size_t j = 0; j < docs.size(); ++j) {
        sims[j] = pooled ? dot(q.pooled, docs[j].pooled) : token_score(q, docs[j], 0.0);
    }
    ExampleResult res{true, softmax_cross_entropy(sims, cfg.tau)};
    if (grad == nullptr) {
        return res;
    }

    // dL/ds_j = (softmax_j - [j == 0]) / tau
    double top = sims[0];
    for (double s : sims) {
        top = std::max(top, s);
    }
    std::vector<double> g(sims.size());
    double z = 0.0;
    for (std::size_t j = 0; j < sims.size(); ++j) {
        g[j] = std::exp((sims[j] - top) / cfg.tau);
        z += g[j];
    }
    for (std::size_t j = 0; j < sims.size(); ++j) {
        g[j] = (g[j] / z - (j == 0 ? 1.0 : 0.0)) / cfg.tau;
    }

    if (pooled) {
        std::vector<double> gq(w.rows(), 0.0);
        for (std::size_t j = 0; j < docs.size(); ++j) {
            std::vector<double> gd(w.rows());
            for (std::size_t c = 0; c < gd.size(); ++c) {
                gq[c] += g[j] * docs[j].pooled[c];
                gd[c] = g[j] * q.pooled[c];
            }
            backprop_pooled(docs[j], gd);
        }
        backprop_pooled(q, gq);
    } else {
        for (std::size_t j = 0; j < docs.size(); ++j) {
            token_score(q, docs[j], g[j]);
        }
    }
    backprop_rows(q, *grad, scale);
    for (const auto& dp : docs) {
        backprop_rows(dp, *grad, scale);
    }
    return res;
}

}  // namespace

double contrastive_loss(const TrainingExample& ex, const EncoderAdapter& adapter, const TrainConfig& cfg) {
    cfg.validate();
    const auto r = run_example(ex, adapter.weights(), cfg, nullptr, 0.0);
    if (!r.ok) {
        throw Error("degenerate embedding in training example");
    }
    return r.loss;
}

GradientResult loss_gradient(const std::vector<TrainingExample>& batch, const EncoderAdapter& adapter,
                             const TrainConfig& cfg) {
    cfg.validate();
    if (batch.empty()) {
        throw Error("gradient of an empty batch");
    }
    const auto d = adapter.dim();
    GradientResult out;
    out.grad = Matrix(d, d);
    Matrix scratch(d, d);
    for (const auto& ex : batch) {
        std::fill(scratch.data().begin(), scratch.data().end(), 0.0);
        const auto r = run_example(ex, adapter.weights(), cfg, &scratch, 1.0);
        if (!r.ok) {
            spdlog::warn("skipping training example with a degenerate pooled embedding");
            ++out.skipped;
            continue;
        }
        ++out.used;
        out.loss += r.loss;
        for (std::size_t i = 0; i < scratch.data().size(); ++i) {
            out.grad.data()[i] += scratch.data()[i];
        }
    }
    if (out.used > 0) {
        const double inv = 1.0 / static_cast<double>(out.used);
        out.loss *= inv;
        for (auto& x : out.grad.data()) {
            x *= inv;
        }
    }
    return out;
}

namespace {

double mean_loss(const std::vector<TrainingExample>& examples, const Matrix& w, const TrainConfig& cfg) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& ex : examples) {
        const auto r = run_example(ex, w, cfg, nullptr, 0.0);
        if (r.ok) {
            total += r.loss;
            ++n;
        }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace

EncoderAdapter update_encoder(const std::vector<TrainingExample>& examples, const EncoderAdapter& adapter,
                              const TrainConfig& cfg, UpdateStats* stats) {
    cfg.validate();
    if (examples.empty()) {
        throw Error("no training examples");
    }
    EncoderAdapter next = adapter;
    UpdateStats local;
    local.loss_before = mean_loss(examples, adapter.weights(), cfg);
    for (unsigned epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t start = 0; start < examples.size(); start += cfg.batch) {
            const auto stop = std::min(examples.size(), start + cfg.batch);
            std::vector<TrainingExample> batch(examples.begin() + static_cast<std::ptrdiff_t>(start),
                                               examples.begin() + static_cast<std::ptrdiff_t>(stop));
            const auto g = loss_gradient(batch, next, cfg);
            local.skipped += g.skipped;
            if (g.used == 0) {
                continue;
            }
            if (!std::isfinite(g.loss)) {
                throw Error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                            std::to_string(start) + " (step " + std::to_string(next.steps()) + ")");
            }
            Matrix w = next.weights();
            for (std::size_t i = 0; i < w.data().size(); ++i) {
                w.data()[i] -= cfg.lr * g.grad.data()[i];
            }
            next.set_weights(std::move(w));
            next.record_step();
            ++local.steps;
        }
    }
    local.loss_after = mean_loss(examples, next.weights(), cfg);
    if (stats != nullptr) {
        *stats = local;
    }
    return next;
}

void write_checkpoint(const EncoderAdapter& adapter, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path);
    }
    const nlohmann::json header = {{"d", adapter.dim()}, {"base_seed", adapter.base_seed()}, {"steps", adapter.steps()}};
    out << header.dump() << '\n';
    for (double v : adapter.weights().data()) {
        bin::put<float>(out, static_cast<float>(v));
    }
}

EncoderAdapter read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path);
    }
    std::string line;
    std::getline(in, line);
    const auto header = nlohmann::json::parse(line);
    const auto d = header.at("d").get<std::size_t>();
    Matrix w(d, d);
    for (auto& v : w.data()) {
        v = bin::get<float>(in);
    }
    return EncoderAdapter(header.at("base_seed").get<std::uint64_t>(), std::move(w),
                          header.at("steps").get<std::uint64_t>());
}

}  // namespace cream
