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
#include <string>
#include <string_view>
#include <vector>

#include "cream/simkernel.hpp"

namespace cream {

/// Seeded unit vector for a token; the frozen base embedder.
std::vector<double> base_embedding(std::string_view token, std::uint64_t seed, std::size_t dim);

/// Frozen token embedder followed by a trainable d x d linear map whose
/// output rows are renormalized.
class EncoderAdapter {
 public:
    EncoderAdapter(std::uint64_t base_seed, std::size_t dim);
    EncoderAdapter(std::uint64_t base_seed, Matrix weights, std::uint64_t steps = 0);

    std::uint64_t base_seed() const { return base_seed_; }
    std::size_t dim() const { return dim_; }
    const Matrix& weights() const { return w_; }
    std::uint64_t steps() const { return steps_; }

    void set_weights(Matrix w);
    void record_step() { ++steps_; }

    /// Base rows for the first `max_tokens` tokens.
    Matrix base_rows(const std::vector<std::string>& tokens, std::size_t max_tokens) const;

    /// normalize(W b) per row.
    Matrix apply(const Matrix& base) const;

    EmbeddedItem encode(std::string id, ItemKind kind, std::vector<std::string> tokens,
                        std::size_t max_tokens) const;

 private:
    std::uint64_t base_seed_;
    std::size_t dim_;
    Matrix w_;
    std::uint64_t steps_ = 0;
};

struct TrainConfig {
    double tau = 0.1;
    double lr = 0.05;
    unsigned epochs = 1;
    std::size_t batch = 16;
    /// Score pairs by token-level late interaction instead of pooled cosine.
    bool token_level = false;

    void validate() const;
};

/// Encoder inputs for one query and its training group, positive first.
struct TrainingExample {
    Matrix query;
    std::vector<Matrix> docs;
};

/// Softmax cross-entropy of similarities / tau with index 0 as the target.
double softmax_cross_entropy(const std::vector<double>& sims, double tau);

double contrastive_loss(const TrainingExample& ex, const EncoderAdapter& adapter, const TrainConfig& cfg);

struct GradientResult {
    Matrix grad;        // d x d, mean over used examples
    double loss = 0.0;  // mean over used examples
    std::size_t used = 0;
    std::size_t skipped = 0;
};

GradientResult loss_gradient(const std::vector<TrainingExample>& batch, const EncoderAdapter& adapter,
                             const TrainConfig& cfg);

struct UpdateStats {
    double loss_before = 0.0;  // mean loss over all examples before the update
    double loss_after = 0.0;
    std::size_t steps = 0;
    std::size_t skipped = 0;
};

/// Plain mini-batch gradient descent over the examples, in order, for
/// cfg.epochs passes. Throws on a non-finite loss.
EncoderAdapter update_encoder(const std::vector<TrainingExample>& examples, const EncoderAdapter& adapter,
                              const TrainConfig& cfg, UpdateStats* stats = nullptr);

/// Checkpoint: one JSON header line {"d","base_seed","steps"} then d*d
/// little-endian f32 weights, row-major.
void write_checkpoint(const EncoderAdapter& adapter, const std::string& path);
EncoderAdapter read_checkpoint(const std::string& path);

}  // namespace cream
