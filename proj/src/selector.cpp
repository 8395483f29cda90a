#include "vvs/selector.hpp"

#include <algorithm>
#include <cmath>

namespace vvs {

TokenPath select_path(std::span<const TokenPath> paths, const SelectionPolicy& policy,
                      RngStream& rng) {
  if (paths.empty()) fail(ErrorCode::RejectedInput, "select_path: no candidate paths");
  if (policy.strategy == SelectionStrategy::Uniform) return paths[rng.index(paths.size())];
  std::size_t best = 0;
  for (std::size_t i = 1; i < paths.size(); ++i) {
    const auto &a = paths[i], &b = paths[best];
    if (a.confidence > b.confidence || (a.confidence == b.confidence && a.tokens < b.tokens)) {
      best = i;
    }
  }
  return paths[best];
}

std::size_t truncation_length(const TokenPath& selected, std::span<const TokenPath> paths) {
  if (paths.empty()) fail(ErrorCode::RejectedInput, "truncate_path: no candidate paths");
  if (selected.tokens.empty()) fail(ErrorCode::RejectedInput, "truncate_path: empty selected path");
  std::size_t total = 0;
  for (const auto& p : paths) total += p.size();
  // Integer floor of the mean avoids any rounding at exact multiples.
  const std::size_t mean_floor = total / paths.size();
  return std::max<std::size_t>(1, std::min(selected.size(), mean_floor));
}

TokenPath truncate_path(const TokenPath& selected, std::span<const TokenPath> paths) {
  const std::size_t gamma = truncation_length(selected, paths);
  TokenPath out;
  out.tokens.assign(selected.tokens.begin(), selected.tokens.begin() + static_cast<std::ptrdiff_t>(gamma));
  out.probs.assign(selected.probs.begin(), selected.probs.begin() + static_cast<std::ptrdiff_t>(gamma));
  if (selected.nodes.size() >= gamma) {
    out.nodes.assign(selected.nodes.begin(), selected.nodes.begin() + static_cast<std::ptrdiff_t>(gamma));
  }
  out.confidence = 1.0;
  for (double p : out.probs) out.confidence *= p;
  return out;
}

}  // namespace vvs
