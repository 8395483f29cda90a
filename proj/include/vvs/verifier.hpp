#pragma once

// Acceptance rules and the tree verification walk.
//
// Strict verification treats each drafted child as a deterministic proposal:
// child c is accepted with probability q(c) and, on rejection, removed from
// q before the next sibling is tried. The emitted token is then an exact
// draw from the target distribution whatever the tree shape. Relaxed
// verification compares against the drafter's own distribution and pools
// target mass over embedding-space neighbors of the proposed token.

#include <cstddef>
#include <span>
#include <vector>

#include "vvs/config.hpp"
#include "vvs/core.hpp"
#include "vvs/drafttree.hpp"
#include "vvs/toymodel.hpp"

namespace vvs {

// Accept iff u < min(1, q(t)/p(t)), one uniform draw from rng.
bool strict_accept(const ProbDist& q, const ProbDist& p, TokenId t, RngStream& rng);

// normalize(max(0, q - p)); DegenerateResidual when identically zero.
ProbDist residual(const ProbDist& q, const ProbDist& p);
TokenId residual_sample(const ProbDist& q, const ProbDist& p, RngStream& rng);

// Largest prefix sum of q over neighbors (proposed token first) that stays
// <= delta; the proposed token is always counted.
double pooled_mass(const ProbDist& q, std::span<const TokenId> neighbors, double delta);

// Accept iff u < min(1, Q/p(t)), with Q pooled over the k nearest neighbors.
bool relaxed_accept(const ProbDist& q, const ProbDist& p, TokenId t,
                    const EmbeddingCodebook& codebook, const RelaxConfig& cfg, RngStream& rng);
// Same rule with a precomputed neighbor list for t (t first).
bool relaxed_accept(const ProbDist& q, const ProbDist& p, TokenId t,
                    std::span<const TokenId> neighbors, double delta, RngStream& rng);

// Target outputs for one flattened tree: the last committed context position,
// each pending position, and each tree node.
struct TreeScores {
  ModelOutput root;
  std::vector<ModelOutput> pending;
  std::vector<ModelOutput> nodes;

  const ModelOutput& tree_root() const { return pending.empty() ? root : pending.back(); }
};

// One target pass over context followed by the flattened tree.
TreeScores score_tree(const LinearizedTree& linear, const TargetModel& target,
                      std::span<const TokenId> context, PassCounter& counter);

struct VerifyStreams {
  RngStream accept;
  RngStream residual;

  explicit VerifyStreams(std::uint64_t seed)
      : accept(seed, "verify.accept"), residual(seed, "verify.residual") {}
};

struct VerifyOutcome {
  TokenSequence accepted;            // pending tokens verbatim, then accepted tree tokens
  std::size_t accept_length = 0;     // accepted tree tokens only
  std::vector<std::size_t> accepted_nodes;
  TokenId terminal = 0;
  Origin terminal_origin = Origin::Resampled;
  std::vector<Feature> fresh_features;  // last context position, then each accepted position
  std::size_t forward_passes = 1;
};

// Walk over precomputed scores. neighbors is required in relaxed mode and
// must hold at least cfg.pool entries per token.
VerifyOutcome verify_scored(const LinearizedTree& linear, const TreeScores& scores,
                            const VerifyMode& mode, const NeighborIndex* neighbors,
                            VerifyStreams& streams);

VerifyOutcome verify_tree(const LinearizedTree& linear, const TargetModel& target,
                          std::span<const TokenId> context, const VerifyMode& mode,
                          const NeighborIndex* neighbors, VerifyStreams& streams,
                          PassCounter& counter);

}  // namespace vvs
