#include "vvs/verifier.hpp"

#include <algorithm>
#include <optional>

namespace vvs {

namespace {

void check_proposal(const ProbDist& q, const ProbDist& p, TokenId t) {
  if (q.size() != p.size()) fail(ErrorCode::RejectedInput, "accept: distribution size mismatch");
  if (t >= p.size()) fail(ErrorCode::RejectedInput, "accept: token out of range");
  if (!(p[t] > 0.0)) {
    fail(ErrorCode::DegenerateProposal,
         "accept: proposed token " + std::to_string(t) + " has zero draft probability");
  }
}

bool accept_ratio(double mass, double proposal, RngStream& rng) {
  const double u = rng.uniform();
  return u < std::min(1.0, mass / proposal);
}

// q with token t removed and renormalized; nullopt when nothing remains.
std::optional<ProbDist> without(const ProbDist& q, TokenId t) {
  std::vector<double> w(q.mass().begin(), q.mass().end());
  w[t] = 0.0;
  double sum = 0.0;
  for (double x : w) sum += x;
  if (!(sum > 0.0)) return std::nullopt;
  return normalize(w);
}

}  // namespace

bool strict_accept(const ProbDist& q, const ProbDist& p, TokenId t, RngStream& rng) {
  check_proposal(q, p, t);
  return accept_ratio(q[t], p[t], rng);
}

ProbDist residual(const ProbDist& q, const ProbDist& p) {
  if (q.size() != p.size()) fail(ErrorCode::RejectedInput, "residual: distribution size mismatch");
  std::vector<double> w(q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::max(0.0, q.mass()[i] - p.mass()[i]);
    sum += w[i];
  }
  if (!(sum > 0.0)) {
    fail(ErrorCode::DegenerateResidual, "residual: max(0, q - p) is identically zero");
  }
  return normalize(w);
}

TokenId residual_sample(const ProbDist& q, const ProbDist& p, RngStream& rng) {
  return rng.sample(residual(q, p));
}

double pooled_mass(const ProbDist& q, std::span<const TokenId> neighbors, double delta) {
  if (neighbors.empty()) fail(ErrorCode::RejectedInput, "pooled_mass: empty neighbor list");
  double total = q[neighbors[0]];
  for (std::size_t i = 1; i < neighbors.size(); ++i) {
    const double next = total + q[neighbors[i]];
    if (next > delta) break;
    total = next;
  }
  return total;
}

bool relaxed_accept(const ProbDist& q, const ProbDist& p, TokenId t,
                    std::span<const TokenId> neighbors, double delta, RngStream& rng) {
  check_proposal(q, p, t);
  if (neighbors.empty() || neighbors[0] != t) {
    fail(ErrorCode::RejectedInput, "relaxed_accept: neighbor list must start with the token");
  }
  return accept_ratio(pooled_mass(q, neighbors, delta), p[t], rng);
}

bool relaxed_accept(const ProbDist& q, const ProbDist& p, TokenId t,
                    const EmbeddingCodebook& codebook, const RelaxConfig& cfg, RngStream& rng) {
  check_proposal(q, p, t);
  const auto neighbors = nearest_neighbors(codebook, t, cfg.pool);
  return relaxed_accept(q, p, t, neighbors, cfg.delta, rng);
}

TreeScores score_tree(const LinearizedTree& linear, const TargetModel& target,
                      std::span<const TokenId> context, PassCounter& counter) {
  const std::size_t g = linear.pending;
  std::vector<std::vector<TokenId>> branches;
  branches.reserve(1 + linear.tokens.size());
  branches.emplace_back();
  for (std::size_t i = 0; i < linear.tokens.size(); ++i) {
    std::vector<TokenId> b;
    b.reserve(linear.ancestors[i].size() + 1);
    for (std::size_t a : linear.ancestors[i]) b.push_back(linear.tokens.ids[a]);
    b.push_back(linear.tokens.ids[i]);
    branches.push_back(std::move(b));
  }
  auto outputs = target.forward_branches(context, branches, counter);
  TreeScores scores;
  scores.root = std::move(outputs[0]);
  for (std::size_t i = 0; i < linear.tokens.size(); ++i) {
    auto& o = outputs[i + 1];
    if (i < g) scores.pending.push_back(std::move(o));
    else scores.nodes.push_back(std::move(o));
  }
  return scores;
}

VerifyOutcome verify_scored(const LinearizedTree& linear, const TreeScores& scores,
                            const VerifyMode& mode, const NeighborIndex* neighbors,
                            VerifyStreams& streams) {
  const std::size_t g = linear.pending;
  const DraftTree& tree = linear.tree;
  if (scores.pending.size() != g || scores.nodes.size() != tree.size()) {
    fail(ErrorCode::RejectedInput, "verify: scores do not match the flattened tree");
  }
  const bool relaxed = mode.kind == VerifyKind::Relaxed;
  if (relaxed && (neighbors == nullptr || neighbors->k() < mode.relax.pool)) {
    fail(ErrorCode::RejectedInput, "verify: relaxed mode needs a neighbor index of size pool");
  }

  VerifyOutcome out;
  out.fresh_features.push_back(scores.root.feature);
  for (std::size_t i = 0; i < g; ++i) {
    out.accepted.push_back(linear.tokens.ids[i], linear.tokens.origins[i]);
    out.fresh_features.push_back(scores.pending[i].feature);
  }

  int cur = kRootParent;
  ProbDist q = scores.tree_root().dist;
  for (;;) {
    const auto kids = tree.children(cur);
    if (kids.empty()) {
      out.terminal = streams.residual.sample(q);
      out.terminal_origin = Origin::Bonus;
      break;
    }
    std::optional<ProbDist> p;
    if (relaxed) {
      const ProbDist* d = tree.dist_at(cur);
      if (d == nullptr) fail(ErrorCode::RejectedInput, "verify: tree lacks drafter distributions");
      p = *d;
    }
    ProbDist qr = q;
    std::optional<std::size_t> chosen;
    for (std::size_t c : kids) {
      const TokenId tok = tree.node(c).token;
      bool ok = false;
      if (relaxed) {
        const auto nb = neighbors->of(tok).first(mode.relax.pool);
        ok = relaxed_accept(qr, *p, tok, nb, mode.relax.delta, streams.accept);
      } else {
        ok = strict_accept(qr, ProbDist::point_mass(qr.size(), tok), tok, streams.accept);
      }
      if (ok) {
        chosen = c;
        break;
      }
      if (relaxed) {
        try {
          qr = residual(qr, *p);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateResidual) throw;
        }
        auto pr = without(*p, tok);
        if (!pr) break;
        p = std::move(*pr);
      } else {
        auto next = without(qr, tok);
        if (!next) break;
        qr = std::move(*next);
      }
    }
    if (!chosen) {
      out.terminal = streams.residual.sample(qr);
      out.terminal_origin = Origin::Resampled;
      break;
    }
    const auto& node = tree.node(*chosen);
    out.accepted.push_back(node.token, Origin::Verified);
    out.accepted_nodes.push_back(*chosen);
    out.fresh_features.push_back(scores.nodes[*chosen].feature);
    ++out.accept_length;
    q = scores.nodes[*chosen].dist;
    cur = static_cast<int>(*chosen);
  }
  return out;
}

VerifyOutcome verify_tree(const LinearizedTree& linear, const TargetModel& target,
                          std::span<const TokenId> context, const VerifyMode& mode,
                          const NeighborIndex* neighbors, VerifyStreams& streams,
                          PassCounter& counter) {
  const auto before = counter.passes();
  const auto scores = score_tree(linear, target, context, counter);
  auto out = verify_scored(linear, scores, mode, neighbors, streams);
  out.forward_passes = static_cast<std::size_t>(counter.passes() - before);
  return out;
}

}  // namespace vvs
