#pragma once

// Candidate token trees: confidence-ranked breadth-synchronous expansion,
// root-to-leaf path enumeration, and flattening for a single verification
// pass.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vvs/core.hpp"
#include "vvs/toymodel.hpp"

namespace vvs {

inline constexpr int kRootParent = -1;

struct DraftNode {
  TokenId token = 0;
  int parent = kRootParent;  // index into DraftTree::nodes, or kRootParent
  double prob = 0.0;         // drafter probability of token given its parent
  double confidence = 0.0;   // product of probs along the root path
  std::size_t depth = 1;     // root children have depth 1
};

struct TreeShape {
  std::size_t branching = 4;
  std::size_t depth = 5;
  std::size_t budget = 24;
};

class DraftTree {
 public:
  DraftTree() = default;
  DraftTree(std::vector<DraftNode> nodes, TreeShape shape);

  const std::vector<DraftNode>& nodes() const { return nodes_; }
  const DraftNode& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const TreeShape& shape() const { return shape_; }

  // Children of node (kRootParent for the root) in descending draft prob,
  // ties to the smaller token.
  std::vector<std::size_t> children(int node) const;
  bool is_leaf(std::size_t i) const;

  // Drafter distribution used to expand a node (kRootParent for the root).
  // Present for every node that has children, and for the root.
  const ProbDist* dist_at(int node) const;
  void set_dist(int node, ProbDist dist);

  // Draft forward passes spent building the tree, one per expansion round.
  std::size_t draft_passes = 0;

 private:
  std::vector<DraftNode> nodes_;
  TreeShape shape_;
  std::optional<ProbDist> root_dist_;
  std::vector<std::optional<ProbDist>> dists_;
};

struct TokenPath {
  std::vector<TokenId> tokens;
  std::vector<double> probs;
  double confidence = 1.0;
  std::vector<std::size_t> nodes;  // tree node index per step

  std::size_t size() const { return tokens.size(); }
};

struct LinearizedTree {
  TokenSequence tokens;                         // pending chain, then tree nodes
  std::vector<std::vector<std::size_t>> ancestors;  // per position, sorted, self excluded
  std::size_t pending = 0;
  DraftTree tree;
};

// Distribution of the next token after the root followed by branch.
using ExpandFn = std::function<ProbDist(std::span<const TokenId> branch)>;

DraftTree build_tree(const ExpandFn& expand, TreeShape shape);

// features[i] pairs with tokens[i] as in DraftModel::forward.
DraftTree build_tree(const DraftModel& draft, std::span<const Feature> features,
                     std::span<const TokenId> tokens, TreeShape shape);

std::vector<TokenPath> enumerate_paths(const DraftTree& tree);

LinearizedTree linearize(const DraftTree& tree, const TokenSequence& pending);

// Text form:
//   # drafttree nodes=<n> budget=<b> branching=<k> depth=<D>
//   <index> <parent|-1> <token> <prob>
void write_tree(std::ostream& out, const DraftTree& tree);
DraftTree read_tree(std::istream& in);

}  // namespace vvs
