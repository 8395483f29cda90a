#pragma once

// Synthetic target/draft pair.
//
// The target keeps a recurrent context feature
//
//   h[n] = rho * h[n-1] + (1 - rho) * M e(x[n]),   h[-1] = 0,  rho = 1 - 1/w
//
// where e(.) is the codebook row and M an orthogonal mixing matrix. The
// feature is an exponentially weighted mean of recent embeddings pushed
// through M, with effective window w. The next-token distribution is
// softmax(E h / (|h| temperature)): a linear readout through the codebook of
// the feature direction, so peakedness does not depend on how much recent
// embeddings cancel. The zero feature reads out as uniform.
//
// The drafter sees (feature, token) pairs where the feature belongs to the
// position preceding the token. It advances the feature with the same
// one-step recurrence and reads it out as
//
//   softmax((1 - eps) * E h / (|h| temperature) + eps * R h / (|h| draft_temperature))
//
// with R a seeded noise readout, so eps = 0 reproduces the target exactly
// given fresh features and eps = 1 is unrelated to it.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "vvs/core.hpp"

namespace vvs {

struct EngineConfig;

using Feature = std::vector<double>;

struct ModelOutput {
  ProbDist dist;
  Feature feature;
};

// Counts target forward passes. Each forward call ticks it exactly once no
// matter how many positions are scored.
class PassCounter {
 public:
  void tick() { ++passes_; }
  std::uint64_t passes() const { return passes_; }

 private:
  std::uint64_t passes_ = 0;
};

class TargetModel {
 public:
  TargetModel(std::shared_ptr<const EmbeddingCodebook> codebook, std::vector<double> mixing,
              std::size_t window, double temperature, std::uint64_t seed);

  const EmbeddingCodebook& codebook() const { return *codebook_; }
  const std::shared_ptr<const EmbeddingCodebook>& codebook_ptr() const { return codebook_; }
  std::span<const double> mixing() const { return mixing_; }
  std::size_t vocab() const { return codebook_->vocab(); }
  std::size_t dim() const { return codebook_->dim(); }
  std::size_t window() const { return window_; }
  double temperature() const { return temperature_; }
  double decay() const { return decay_; }
  std::uint64_t seed() const { return seed_; }

  // One pass. For each position p: the next-token distribution given
  // context[0..p] and the feature at p.
  std::vector<ModelOutput> forward(std::span<const TokenId> context,
                                   std::span<const std::size_t> positions,
                                   PassCounter& counter) const;

  // One pass over several continuations of a shared context. An empty
  // continuation scores the last context position.
  std::vector<ModelOutput> forward_branches(std::span<const TokenId> context,
                                            std::span<const std::vector<TokenId>> branches,
                                            PassCounter& counter) const;

  // Evaluation-mode scoring, not counted as decoding work: mean log-prob of
  // continuation given prefix.
  double mean_log_likelihood(std::span<const TokenId> prefix,
                             std::span<const TokenId> continuation) const;

  // Features of every position of a sequence, evaluation mode.
  std::vector<Feature> features_of(std::span<const TokenId> tokens) const;

  Feature advance(std::span<const double> feature, TokenId token) const;
  std::vector<double> logits(std::span<const double> feature) const;
  ProbDist readout(std::span<const double> feature) const;

  bool operator==(const TargetModel& other) const;

 private:
  Feature context_feature(std::span<const TokenId> tokens) const;

  std::shared_ptr<const EmbeddingCodebook> codebook_;
  std::vector<double> mixing_;       // dim x dim, row-major
  std::vector<double> mixed_rows_;   // vocab x dim, M e(t)
  std::size_t window_;
  double temperature_;
  double decay_;
  std::uint64_t seed_;
};

class DraftModel {
 public:
  DraftModel(const TargetModel& target, double divergence, double smoothing_temperature,
             std::uint64_t seed);

  const EmbeddingCodebook& codebook() const { return *codebook_; }
  double divergence() const { return divergence_; }
  double smoothing_temperature() const { return smoothing_temperature_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const double> noise_readout() const { return noise_; }

  // features[i] pairs with tokens[i] and belongs to the position before it.
  // Returns the distribution of the token after tokens.back().
  ProbDist forward(std::span<const Feature> features, std::span<const TokenId> tokens) const;

  // The drafter's estimate of the feature at tokens.back().
  Feature predict_feature(std::span<const Feature> features,
                          std::span<const TokenId> tokens) const;

  Feature advance(std::span<const double> feature, TokenId token) const;
  ProbDist readout(std::span<const double> feature) const;

  bool operator==(const DraftModel& other) const;

 private:
  std::shared_ptr<const EmbeddingCodebook> codebook_;
  std::vector<double> mixed_rows_;  // vocab x dim, drafter feature head
  std::vector<double> noise_;       // vocab x dim
  double decay_;
  double target_temperature_;
  double divergence_;
  double smoothing_temperature_;
  std::uint64_t seed_;
};

struct ModelPair {
  std::shared_ptr<const TargetModel> target;
  std::shared_ptr<const DraftModel> draft;
};

// Deterministic in config.model_seed; the drafter shares the target codebook.
ModelPair make_model_pair(const EngineConfig& config);

// Seeded random prompt of length config.window.
std::vector<TokenId> make_prompt(const EngineConfig& config);

}  // namespace vvs
