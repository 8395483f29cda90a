#pragma once

// Decoding pipelines: vanilla autoregressive sampling, draft-and-verify
// speculative decoding, and speculative decoding with partial verification
// skipping. Skipped steps append a drafted path without a target pass; the
// next verified step scores those pending tokens together with the new tree
// and ratifies them, restoring their features in the cache.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vvs/config.hpp"
#include "vvs/core.hpp"
#include "vvs/drafttree.hpp"
#include "vvs/featcache.hpp"
#include "vvs/scheduler.hpp"
#include "vvs/toymodel.hpp"

namespace vvs {

enum class IterationKind : std::uint8_t { Verify, Skip };

std::string_view to_string(IterationKind kind);

// Sentinel feature offset meaning "features straight from the verify pass".
inline constexpr int kFreshFeatures = -1;

struct IterationRecord {
  std::size_t index = 0;          // 1-based
  IterationKind kind = IterationKind::Verify;
  std::size_t emitted = 0;        // tokens appended by this iteration
  std::size_t accept_length = 0;  // verify: drafted tokens accepted
  std::size_t pending = 0;        // verify: pending tokens ratified; skip: pending after
  std::optional<double> similarity;
  std::size_t forward_passes = 0;
  std::size_t draft_passes = 0;
  std::optional<int> feature_offset;  // staleness runs: offset actually used
  bool replaced = false;

  bool operator==(const IterationRecord&) const = default;
};

struct TraceCounters {
  std::uint64_t n_tok = 0;
  std::uint64_t n_fwd = 0;
  std::uint64_t n_draft = 0;
  std::uint64_t n_skip = 0;

  bool operator==(const TraceCounters&) const = default;
};

struct GenerationTrace {
  std::string pipeline;
  std::size_t max_length = 0;
  std::vector<TokenId> prompt;
  // Every generated token, including the overshoot of the final iteration.
  TokenSequence tokens;
  std::vector<IterationRecord> iterations;
  TraceCounters counters;

  // The first max_length generated tokens.
  TokenSequence emitted() const;
  std::size_t verify_iterations() const;

  bool operator==(const GenerationTrace&) const = default;
};

struct Metrics {
  double tpf = 0.0;
  double mal = 0.0;
  double skip_fraction = 0.0;
  double quality = 0.0;  // mean log-likelihood of the emitted tokens under the target
};

// What an observer sees right after the skip decision of an iteration.
struct IterationView {
  std::size_t index = 0;
  const DraftTree* tree = nullptr;
  std::span<const TokenPath> paths;
  const SkipDecision* decision = nullptr;
  std::span<const TokenId> context;
};

struct RunOptions {
  // Fraction of verify steps whose accepted tokens are replaced by the
  // highest-confidence path prefix of the same length.
  double replace_ratio = 0.0;
  // Feature source for tokens appended by verify iteration n:
  // feature_offsets[(n - 1) % size]; kFreshFeatures or an extra staleness
  // s >= 0 served from the cache. Empty means always fresh.
  std::vector<int> feature_offsets;
  std::function<void(const IterationView&)> observer;
  // When set, receives a copy of the feature cache at the end of the run.
  FeatureCache* cache_out = nullptr;
};

class Engine {
 public:
  explicit Engine(EngineConfig config);
  Engine(EngineConfig config, ModelPair models);

  const EngineConfig& config() const { return config_; }
  const ModelPair& models() const { return models_; }
  const std::vector<TokenId>& prompt() const { return prompt_; }
  void set_seed(std::uint64_t seed) { config_.seed = seed; }

  GenerationTrace vanilla_ar() const;
  // The configured pipeline with the skip rule forced to never.
  GenerationTrace speculative_decode(const RunOptions& options = {}) const;
  // The configured pipeline with the configured skip rule.
  GenerationTrace vvs_generate(const RunOptions& options = {}) const;
  GenerationTrace replace_verified(double ratio) const;

  Metrics metrics(const GenerationTrace& trace) const;

 private:
  GenerationTrace run(const SkipRule& rule, const RunOptions& options,
                      std::string pipeline) const;

  EngineConfig config_;
  ModelPair models_;
  std::vector<TokenId> prompt_;
  NeighborIndex neighbors_;
};

GenerationTrace vanilla_ar(const EngineConfig& config);
GenerationTrace speculative_decode(const EngineConfig& config);
GenerationTrace vvs_generate(const EngineConfig& config);
GenerationTrace replace_verified(const EngineConfig& config, double ratio);

// True when verify step n (1-based) is replaced under ratio r.
bool replace_scheduled(std::size_t verify_index, double ratio);

// DegenerateTrace when the trace has no target passes.
Metrics compute_metrics(const GenerationTrace& trace, const TargetModel& target);

// Line-oriented form, one record per iteration:
//   # vvs-trace v1
//   pipeline=<name> max_length=<L>
//   counters n_tok=.. n_fwd=.. n_draft=.. n_skip=..
//   prompt <ids...>
//   iter index=.. kind=.. emitted=.. accept=.. pending=.. similarity=.. fwd=.. draft=.. offset=.. replaced=..
//   tokens <id>:<origin-letter> ...
void write_trace(std::ostream& out, const GenerationTrace& trace);
// One row per iteration with a fixed header.
void write_trace_csv(std::ostream& out, const GenerationTrace& trace);
std::string trace_csv_header();

}  // namespace vvs
