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

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cream {

class Error : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Rows are token embeddings or
/// hyperplanes; all kernels read it through spans.
class Matrix {
 public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    void append_row(std::span<const double> r);

    bool operator==(const Matrix&) const = default;

 private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Scales v to unit Euclidean norm. Returns false (leaving v untouched) when
/// the norm is zero or not finite.
bool normalize_in_place(std::span<double> v);

/// 64-bit FNV-1a; stable across platforms, used to key token embeddings and
/// to derive sub-seeds.
std::uint64_t fnv1a64(std::string_view s);

/// SplitMix64 finalizer; combines a seed with a stream tag.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace cream
