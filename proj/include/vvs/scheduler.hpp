#pragma once

// Skip-or-verify decisions: fixed-interval skipping and candidate-path
// similarity thresholding, with a guard that forbids two consecutive skips.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vvs/config.hpp"
#include "vvs/core.hpp"
#include "vvs/drafttree.hpp"

namespace vvs {

// w_l = alpha^l / sum_k alpha^k for l = 1..L.
std::vector<double> decay_weights(double alpha, std::size_t length);

struct PathSimilarity {
  double value = 1.0;
  bool degenerate = false;  // fewer than two paths survived down-sampling
  std::size_t depth = 0;    // common depth L used
  std::size_t paths = 0;    // paths retained
};

// Keeps every stride-th path starting with the first, truncates depth to the
// shortest retained path, and averages token-embedding cosines over all
// unordered pairs at each depth.
PathSimilarity path_similarity(std::span<const TokenPath> paths,
                               const EmbeddingCodebook& codebook, double alpha,
                               std::size_t stride);

struct SkipDecision {
  std::size_t step = 0;
  bool skip = false;
  std::optional<double> similarity;
};

class SkipPolicy {
 public:
  explicit SkipPolicy(SkipRule rule);

  SkipDecision decide(std::span<const TokenPath> paths, const EmbeddingCodebook& codebook,
                      std::size_t step);

  const SkipRule& rule() const { return rule_; }
  bool last_verified() const { return last_verified_; }
  std::size_t verified_since_skip() const { return verified_since_skip_; }
  const std::vector<SkipDecision>& log() const { return log_; }

 private:
  SkipRule rule_;
  bool last_verified_ = false;  // the first step therefore always verifies
  std::size_t verified_since_skip_ = 0;
  std::vector<SkipDecision> log_;
};

// "step=<n> policy=<kind> similarity=<value or empty> decision=<skip|verify>"
std::string decision_log_line(const SkipDecision& decision, SkipKind kind);

}  // namespace vvs
