#include "vvs/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace vvs {

std::vector<double> decay_weights(double alpha, std::size_t length) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    fail(ErrorCode::RejectedInput, "decay_weights: alpha must be positive");
  }
  if (length < 1) fail(ErrorCode::RejectedInput, "decay_weights: length must be >= 1");
  std::vector<double> w(length);
  double a = 1.0, sum = 0.0;
  for (std::size_t l = 0; l < length; ++l) {
    a *= alpha;
    w[l] = a;
    sum += a;
  }
  for (double& x : w) x /= sum;
  return w;
}

PathSimilarity path_similarity(std::span<const TokenPath> paths,
                               const EmbeddingCodebook& codebook, double alpha,
                               std::size_t stride) {
  if (stride < 1) fail(ErrorCode::RejectedInput, "path_similarity: stride must be >= 1");
  std::vector<const TokenPath*> kept;
  for (std::size_t i = 0; i < paths.size(); i += stride) kept.push_back(&paths[i]);
  PathSimilarity out;
  out.paths = kept.size();
  if (kept.size() < 2) {
    out.value = 1.0;
    out.degenerate = true;
    return out;
  }
  std::size_t depth = kept[0]->size();
  for (const auto* p : kept) depth = std::min(depth, p->size());
  if (depth < 1) fail(ErrorCode::RejectedInput, "path_similarity: empty path");
  out.depth = depth;
  const auto w = decay_weights(alpha, depth);
  double total = 0.0;
  for (std::size_t l = 0; l < depth; ++l) {
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < kept.size(); ++a) {
      for (std::size_t b = a + 1; b < kept.size(); ++b) {
        acc += cosine(codebook.row(kept[a]->tokens[l]), codebook.row(kept[b]->tokens[l]));
        ++pairs;
      }
    }
    total += w[l] * (acc / static_cast<double>(pairs));
  }
  out.value = std::clamp(total, -1.0, 1.0);
  return out;
}

SkipPolicy::SkipPolicy(SkipRule rule) : rule_(rule) {
  if (rule_.kind == SkipKind::Uniform && rule_.interval < 2) {
    fail(ErrorCode::RejectedInput, "skip policy: interval must be >= 2");
  }
}

SkipDecision SkipPolicy::decide(std::span<const TokenPath> paths,
                                const EmbeddingCodebook& codebook, std::size_t step) {
  SkipDecision d;
  d.step = step;
  switch (rule_.kind) {
    case SkipKind::Never:
      break;
    case SkipKind::Uniform:
      d.skip = last_verified_ && verified_since_skip_ == rule_.interval - 1;
      break;
    case SkipKind::Dynamic:
      if (last_verified_) {
        const auto s = path_similarity(paths, codebook, rule_.alpha, rule_.stride);
        d.similarity = s.value;
        d.skip = s.value >= rule_.threshold;
      }
      break;
  }
  if (d.skip) {
    last_verified_ = false;
    verified_since_skip_ = 0;
  } else {
    last_verified_ = true;
    ++verified_since_skip_;
  }
  log_.push_back(d);
  return d;
}

std::string decision_log_line(const SkipDecision& decision, SkipKind kind) {
  std::string sim;
  if (decision.similarity) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *decision.similarity);
    sim = buf;
  }
  return "step=" + std::to_string(decision.step) + " policy=" + std::string(to_string(kind)) +
         " similarity=" + sim + " decision=" + (decision.skip ? "skip" : "verify");
}

}  // namespace vvs
