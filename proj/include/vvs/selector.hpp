#pragma once

// Verification-free path choice for skipped steps, and length truncation to
// the floor of the mean candidate-path length.

#include <span>

#include "vvs/config.hpp"
#include "vvs/core.hpp"
#include "vvs/drafttree.hpp"

namespace vvs {

// Uniform: one index draw from rng. MaxConfidence: highest confidence,
// ties to the lexicographically smaller token list; rng untouched.
TokenPath select_path(std::span<const TokenPath> paths, const SelectionPolicy& policy,
                      RngStream& rng);

// gamma = min(len(selected), floor(mean length over all paths)), at least 1.
std::size_t truncation_length(const TokenPath& selected, std::span<const TokenPath> paths);

// First gamma tokens of selected, probs and nodes cut in lockstep.
TokenPath truncate_path(const TokenPath& selected, std::span<const TokenPath> paths);

}  // namespace vvs
