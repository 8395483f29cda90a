#pragma once

// Shared fixtures and independent oracles for the unit tests.

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "doctest.h"
#include "vvs/core.hpp"
#include "vvs/engine.hpp"

namespace vvs::testing {

inline ProbDist dist(std::vector<double> mass) { return ProbDist(std::move(mass)); }

// Rows (1,0), (0.9,0.1), (0,1), (-1,0).
inline EmbeddingCodebook four_token_codebook() {
  return EmbeddingCodebook(4, 2, {1.0, 0.0, 0.9, 0.1, 0.0, 1.0, -1.0, 0.0});
}

// Random codebook with distinct rows.
inline EmbeddingCodebook random_codebook(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  RngStream rng(seed, "test.codebook");
  std::vector<double> rows(vocab * dim);
  for (auto& x : rows) x = rng.normal();
  return EmbeddingCodebook(vocab, dim, std::move(rows));
}

inline ProbDist random_dist(std::size_t vocab, RngStream& rng, double zero_fraction = 0.0) {
  std::vector<double> w(vocab);
  for (auto& x : w) x = rng.uniform() < zero_fraction ? 0.0 : -std::log(1.0 - rng.uniform());
  w[rng.index(vocab)] += 0.5;
  return normalize(w);
}

// Total variation between two empirical histograms over the same keys.
template <typename Key>
double empirical_tv(const std::map<Key, std::size_t>& a, std::size_t na,
                    const std::map<Key, std::size_t>& b, std::size_t nb) {
  std::map<Key, std::pair<double, double>> joint;
  for (const auto& [k, c] : a) joint[k].first = static_cast<double>(c) / static_cast<double>(na);
  for (const auto& [k, c] : b) joint[k].second = static_cast<double>(c) / static_cast<double>(nb);
  double tv = 0.0;
  for (const auto& [k, pq] : joint) tv += std::abs(pq.first - pq.second);
  return 0.5 * tv;
}

// Accounting identities every trace must satisfy, recomputed from the raw
// iteration records.
inline void check_accounting(const GenerationTrace& trace) {
  std::uint64_t emitted = 0, verifies = 0, skips = 0, fwd = 0, draft = 0;
  bool previous_skip = false;
  for (const auto& it : trace.iterations) {
    emitted += it.emitted;
    fwd += it.forward_passes;
    draft += it.draft_passes;
    if (it.kind == IterationKind::Verify) {
      ++verifies;
      CHECK(it.forward_passes == 1);
      previous_skip = false;
    } else {
      ++skips;
      CHECK(it.forward_passes == 0);
      CHECK_FALSE(previous_skip);
      previous_skip = true;
    }
  }
  CHECK(trace.counters.n_tok == emitted);
  CHECK(trace.counters.n_tok == trace.tokens.size());
  CHECK(trace.counters.n_fwd == verifies);
  CHECK(trace.counters.n_fwd == fwd);
  CHECK(trace.counters.n_fwd == trace.iterations.size() - trace.counters.n_skip);
  CHECK(trace.counters.n_skip == skips);
  if (trace.pipeline != "vanilla") CHECK(trace.counters.n_draft == draft);
  CHECK(trace.tokens.ids.size() == trace.tokens.origins.size());
  CHECK(trace.counters.n_tok >= trace.max_length);
  if (trace.counters.n_fwd > 0) {
    const double tpf = static_cast<double>(emitted) / static_cast<double>(verifies);
    CHECK(tpf == static_cast<double>(trace.counters.n_tok) / static_cast<double>(trace.counters.n_fwd));
  }
}

}  // namespace vvs::testing
