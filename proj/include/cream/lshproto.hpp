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
#include <map>
#include <vector>

#include "cream/common.hpp"
#include "cream/simkernel.hpp"

namespace cream {

/// Random-hyperplane LSH shared by every cluster prototype of a run.
///
/// Bit i of a key is set when the vector lies on the non-negative side of
/// hyperplane i. `bits == 0` is accepted and yields a single bucket, which
/// turns a prototype into a plain normalized centroid.
class LshFamily {
 public:
    static constexpr unsigned kMaxBits = 30;

    LshFamily(unsigned bits, std::size_t dim, std::uint64_t seed);

    unsigned bits() const { return bits_; }
    std::size_t dim() const { return dim_; }
    std::uint64_t seed() const { return seed_; }
    std::uint32_t bucket_count() const { return std::uint32_t{1} << bits_; }
    const Matrix& hyperplanes() const { return hyperplanes_; }

    std::uint32_t bucket_of(std::span<const double> v) const;

 private:
    unsigned bits_;
    std::size_t dim_;
    std::uint64_t seed_;
    Matrix hyperplanes_;
};

/// H x d bucket accumulator. Only occupied buckets are stored; unoccupied
/// buckets are implicitly all-zero with count zero.
class ClusterPrototype {
 public:
    struct Bucket {
        std::vector<double> sum;
        std::uint32_t count = 0;
        bool operator==(const Bucket&) const = default;
    };

    ClusterPrototype() = default;
    explicit ClusterPrototype(std::size_t dim) : dim_(dim) {}

    void add(const Matrix& rows, const LshFamily& fam);
    /// Throws "item not in prototype" if a bucket count would go negative;
    /// the prototype is left unchanged in that case.
    void remove(const Matrix& rows, const LshFamily& fam);

    std::size_t dim() const { return dim_; }
    bool empty() const { return buckets_.empty(); }
    std::size_t occupied() const { return buckets_.size(); }
    std::uint64_t token_count() const;
    const std::map<std::uint32_t, Bucket>& buckets() const { return buckets_; }

    /// Normalized nonzero bucket rows in bucket order.
    Matrix view() const;

    /// Dense H x d sums and H counts, for serialization.
    Matrix dense_sums(std::uint32_t bucket_count) const;
    std::vector<std::uint32_t> dense_counts(std::uint32_t bucket_count) const;
    static ClusterPrototype from_dense(const Matrix& sums, const std::vector<std::uint32_t>& counts);

    /// Largest elementwise difference against `other` (sums and counts).
    double max_abs_diff(const ClusterPrototype& other) const;

 private:
    std::size_t dim_ = 0;
    std::map<std::uint32_t, Bucket> buckets_;
};

ClusterPrototype build_prototype(const std::vector<const Matrix*>& members, const LshFamily& fam);

struct BitSizeReport {
    std::uint64_t tokens = 0;  // M
    double epsilon = 0.0;
    unsigned bits = 0;
    std::uint64_t buckets = 0;
};

/// ceil(log2(8 ln M / eps^2)) with eps restricted to (0, 1/3).
BitSizeReport sufficient_bits(std::uint64_t tokens, double epsilon);

/// -ln(3 eps) * eps^2 on (0, 1/3]; the closed interval end gives zero.
double lsh_benefit(double epsilon);

/// Maximizer of lsh_benefit: 1 / (3 sqrt(e)).
double optimal_epsilon();

}  // namespace cream
