#include "vvs/config.hpp"

#include <cmath>

#include "vvs/core.hpp"

namespace vvs {

namespace {

void require(bool ok, const char* field, const std::string& why) {
  if (!ok) fail(ErrorCode::RejectedInput, std::string("config: ") + field + " " + why);
}

}  // namespace

void EngineConfig::validate() const {
  require(vocab >= 4, "vocab", "must be >= 4");
  require(vocab <= 4096, "vocab", "must be <= 4096");
  require(dim >= 2, "dim", "must be >= 2");
  require(window >= 1, "window", "must be >= 1");
  require(temperature > 0.0 && std::isfinite(temperature), "temperature", "must be positive");
  require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon", "must lie in [0, 1]");
  require(draft_temperature > 0.0 && std::isfinite(draft_temperature), "draft_temperature",
          "must be positive");
  require(cluster_size >= 1 && cluster_size <= vocab, "cluster_size", "must lie in [1, vocab]");
  require(cluster_spread > 0.0 && std::isfinite(cluster_spread), "cluster_spread",
          "must be positive");
  require(branching >= 2, "branching", "must be >= 2");
  require(depth >= 2, "depth", "must be >= 2");
  require(budget >= branching, "budget", "must be >= branching");
  // The prompt leaves window - 1 cached features and the first verify adds at
  // least one more, so a skip of up to depth tokens always finds features.
  require(window >= depth, "window", "must be >= depth");
  require(verify.relax.delta >= 0.0 && verify.relax.delta <= 1.0, "delta", "must lie in [0, 1]");
  require(verify.relax.pool >= 1 && verify.relax.pool <= vocab, "pool", "must lie in [1, vocab]");
  if (skip.kind == SkipKind::Uniform) {
    require(skip.interval >= 2, "interval", "must be >= 2");
  }
  require(std::isfinite(skip.threshold), "threshold", "must be finite");
  require(skip.alpha > 0.0 && skip.alpha <= 1.0, "alpha", "must lie in (0, 1]");
  require(skip.stride == 1 || skip.stride == 2, "stride", "must be 1 or 2");
  require(max_length >= 1, "max_length", "must be >= 1");
}

std::string_view to_string(VerifyKind kind) {
  return kind == VerifyKind::Strict ? "strict" : "relaxed";
}

std::string_view to_string(SkipKind kind) {
  switch (kind) {
    case SkipKind::Never: return "never";
    case SkipKind::Uniform: return "uniform";
    case SkipKind::Dynamic: return "dynamic";
  }
  return "unknown";
}

std::string_view to_string(SelectionStrategy strategy) {
  return strategy == SelectionStrategy::Uniform ? "uniform" : "max_confidence";
}

}  // namespace vvs
