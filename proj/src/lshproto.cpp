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

#include "cream/lshproto.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace cream {

LshFamily::LshFamily(unsigned bits, std::size_t dim, std::uint64_t seed)
    : bits_(bits), dim_(dim), seed_(seed), hyperplanes_(bits, dim) {
    if (bits > kMaxBits) {
        throw Error("LSH bit count " + std::to_string(bits) + " exceeds " + std::to_string(kMaxBits));
    }
    if (dim == 0) {
        throw Error("LSH dimension must be positive");
    }
    std::mt19937_64 rng(mix_seed(seed, 0x4c5348));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (unsigned i = 0; i < bits; ++i) {
        auto r = hyperplanes_.row(i);
        do {
            for (auto& x : r) {
                x = normal(rng);
            }
        } while (!normalize_in_place(r));
    }
}

std::uint32_t LshFamily::bucket_of(std::span<const double> v) const {
    if (v.size() != dim_) {
        throw Error("bucket_of dimension mismatch: " + std::to_string(v.size()) + " vs " +
                    std::to_string(dim_));
    }
    std::uint32_t key = 0;
    for (unsigned i = 0; i < bits_; ++i) {
        if (dot(hyperplanes_.row(i), v) >= 0.0) {
            key |= std::uint32_t{1} << i;
        }
    }
    return key;
}

void ClusterPrototype::add(const Matrix& rows, const LshFamily& fam) {
    if (dim_ == 0) {
        dim_ = fam.dim();
    }
    if (rows.cols() != dim_ || fam.dim() != dim_) {
        throw Error("prototype dimension mismatch");
    }
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        const auto r = rows.row(i);
        auto& b = buckets_[fam.bucket_of(r)];
        if (b.sum.empty()) {
            b.sum.assign(dim_, 0.0);
        }
        for (std::size_t j = 0; j < dim_; ++j) {
            b.sum[j] += r[j];
        }
        ++b.count;
    }
}

void ClusterPrototype::remove(const Matrix& rows, const LshFamily& fam) {
    if (rows.cols() != dim_ || fam.dim() != dim_) {
        throw Error("prototype dimension mismatch");
    }
    std::vector<std::uint32_t> keys(rows.rows());
    std::map<std::uint32_t, std::uint32_t> needed;
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        keys[i] = fam.bucket_of(rows.row(i));
        ++needed[keys[i]];
    }
    for (const auto& [key, n] : needed) {
        auto it = buckets_.find(key);
        if (it == buckets_.end() || it->second.count < n) {
            throw Error("item not in prototype");
        }
    }
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        auto it = buckets_.find(keys[i]);
        auto& b = it->second;
        const auto r = rows.row(i);
        for (std::size_t j = 0; j < dim_; ++j) {
            b.sum[j] -= r[j];
        }
        if (--b.count == 0) {
            buckets_.erase(it);
        }
    }
}

std::uint64_t ClusterPrototype::token_count() const {
    std::uint64_t n = 0;
    for (const auto& [key, b] : buckets_) {
        n += b.count;
    }
    return n;
}

Matrix ClusterPrototype::view() const {
    Matrix out(0, dim_);
    std::vector<double> row(dim_);
    for (const auto& [key, b] : buckets_) {
        row = b.sum;
        // A bucket whose members cancel has no direction; it cannot match anything.
        if (norm(row) > 1e-12 && normalize_in_place(row)) {
            out.append_row(row);
        }
    }
    return out;
}

Matrix ClusterPrototype::dense_sums(std::uint32_t bucket_count) const {
    Matrix m(bucket_count, dim_);
    for (const auto& [key, b] : buckets_) {
        if (key >= bucket_count) {
            throw Error("bucket key out of range");
        }
        std::copy(b.sum.begin(), b.sum.end(), m.row(key).begin());
    }
    return m;
}

std::vector<std::uint32_t> ClusterPrototype::dense_counts(std::uint32_t bucket_count) const {
    std::vector<std::uint32_t> counts(bucket_count, 0);
    for (const auto& [key, b] : buckets_) {
        counts.at(key) = b.count;
    }
    return counts;
}

ClusterPrototype ClusterPrototype::from_dense(const Matrix& sums, const std::vector<std::uint32_t>& counts) {
    if (sums.rows() != counts.size()) {
        throw Error("prototype sums and counts disagree on bucket count");
    }
    ClusterPrototype p(sums.cols());
    for (std::uint32_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) {
            continue;
        }
        auto r = sums.row(k);
        p.buckets_[k] = Bucket{{r.begin(), r.end()}, counts[k]};
    }
    return p;
}

double ClusterPrototype::max_abs_diff(const ClusterPrototype& other) const {
    double worst = 0.0;
    auto compare = [&worst](const ClusterPrototype& a, const ClusterPrototype& b) {
        for (const auto& [key, ba] : a.buckets_) {
            auto it = b.buckets_.find(key);
            if (it == b.buckets_.end()) {
                worst = std::max(worst, static_cast<double>(ba.count));
                for (double x : ba.sum) {
                    worst = std::max(worst, std::abs(x));
                }
                continue;
            }
            worst = std::max(worst, std::abs(static_cast<double>(ba.count) - it->second.count));
            for (std::size_t j = 0; j < ba.sum.size(); ++j) {
                worst = std::max(worst, std::abs(ba.sum[j] - it->second.sum[j]));
            }
        }
    };
    compare(*this, other);
    compare(other, *this);
    return worst;
}

ClusterPrototype build_prototype(const std::vector<const Matrix*>& members, const LshFamily& fam) {
    ClusterPrototype p(fam.dim());
    for (const auto* m : members) {
        p.add(*m, fam);
    }
    return p;
}

namespace {

void check_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0 / 3.0)) {
        throw Error("distortion rate must lie in (0, 1/3), got " + std::to_string(epsilon));
    }
}

}  // namespace

BitSizeReport sufficient_bits(std::uint64_t tokens, double epsilon) {
    if (tokens < 2) {
        throw Error("token count must be at least 2");
    }
    check_epsilon(epsilon);
    const double target = 8.0 * std::log(static_cast<double>(tokens)) / (epsilon * epsilon);
    const double bits = std::ceil(std::log2(target));
    if (bits > LshFamily::kMaxBits) {
        throw Error("required bit count exceeds " + std::to_string(LshFamily::kMaxBits));
    }
    BitSizeReport r;
    r.tokens = tokens;
    r.epsilon = epsilon;
    r.bits = static_cast<unsigned>(bits);
    r.buckets = std::uint64_t{1} << r.bits;
    return r;
}

double lsh_benefit(double epsilon) {
    if (epsilon == 1.0 / 3.0) {
        return 0.0;
    }
    check_epsilon(epsilon);
    return -std::log(3.0 * epsilon) * epsilon * epsilon;
}

double optimal_epsilon() { return 1.0 / (3.0 * std::sqrt(std::numbers::e)); }

}  // namespace cream
