#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace vvs {

struct RelaxConfig {
  double delta = 0.2;     // pooled-mass ceiling
  std::size_t pool = 8;   // max neighbors considered, proposed token included
};

enum class VerifyKind { Strict, Relaxed };

struct VerifyMode {
  VerifyKind kind = VerifyKind::Relaxed;
  RelaxConfig relax;

  static VerifyMode strict() { return {VerifyKind::Strict, {}}; }
  static VerifyMode relaxed(double delta, std::size_t pool = 8) {
    return {VerifyKind::Relaxed, {delta, pool}};
  }
};

enum class SkipKind { Never, Uniform, Dynamic };

// Static part of a skip policy; the per-run state lives in SkipPolicy.
struct SkipRule {
  SkipKind kind = SkipKind::Never;
  std::size_t interval = 3;   // uniform: every interval-th step skips
  double threshold = 0.75;    // dynamic: skip when similarity >= threshold
  double alpha = 0.8;         // dynamic: depth decay of the similarity weights
  std::size_t stride = 2;     // dynamic: path down-sampling stride

  static SkipRule never() { return {}; }
  static SkipRule uniform(std::size_t interval) {
    SkipRule r;
    r.kind = SkipKind::Uniform;
    r.interval = interval;
    return r;
  }
  static SkipRule dynamic(double threshold, double alpha = 0.8, std::size_t stride = 2) {
    SkipRule r;
    r.kind = SkipKind::Dynamic;
    r.threshold = threshold;
    r.alpha = alpha;
    r.stride = stride;
    return r;
  }
};

enum class SelectionStrategy { Uniform, MaxConfidence };

struct SelectionPolicy {
  SelectionStrategy strategy = SelectionStrategy::Uniform;
  bool truncate = true;
};

struct EngineConfig {
  // Synthetic models.
  std::size_t vocab = 64;
  std::size_t dim = 8;
  std::size_t window = 8;
  double temperature = 0.04;
  double epsilon = 0.3;
  double draft_temperature = 0.08;
  std::size_t cluster_size = 4;
  double cluster_spread = 0.6;

  // Draft tree shape.
  std::size_t branching = 4;
  std::size_t depth = 5;
  std::size_t budget = 24;

  VerifyMode verify;
  SkipRule skip;
  SelectionPolicy selection;

  std::size_t max_length = 128;
  std::uint64_t seed = 1;        // decoding streams
  std::uint64_t model_seed = 1;  // model parameters and prompt

  // Throws RejectedInput naming the first invalid field.
  void validate() const;
};

std::string_view to_string(VerifyKind kind);
std::string_view to_string(SkipKind kind);
std::string_view to_string(SelectionStrategy strategy);

}  // namespace vvs
