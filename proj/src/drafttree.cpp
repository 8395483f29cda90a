#include "vvs/drafttree.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace vvs {

namespace {

void check_shape(const TreeShape& shape) {
  if (shape.branching < 2) fail(ErrorCode::RejectedInput, "build_tree: branching must be >= 2");
  if (shape.depth < 1) fail(ErrorCode::RejectedInput, "build_tree: depth must be >= 1");
  if (shape.budget < shape.branching) {
    fail(ErrorCode::RejectedInput, "build_tree: budget must be >= branching");
  }
}

// Tokens with positive mass, most probable first, ties to the smaller id.
std::vector<TokenId> top_tokens(const ProbDist& dist, std::size_t k) {
  std::vector<TokenId> ids;
  for (TokenId t = 0; t < dist.size(); ++t) {
    if (dist[t] > 0.0) ids.push_back(t);
  }
  auto better = [&](TokenId a, TokenId b) {
    return dist[a] != dist[b] ? dist[a] > dist[b] : a < b;
  };
  const std::size_t keep = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(),
                    better);
  ids.resize(keep);
  return ids;
}

}  // namespace

DraftTree::DraftTree(std::vector<DraftNode> nodes, TreeShape shape)
    : nodes_(std::move(nodes)), shape_(shape), dists_(nodes_.size()) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& n = nodes_[i];
    if (!(n.prob > 0.0 && n.prob <= 1.0)) {
      fail(ErrorCode::RejectedInput, "draft tree: node " + std::to_string(i) +
                                         " has probability outside (0, 1]");
    }
    if (n.parent == kRootParent) {
      n.confidence = n.prob;
      n.depth = 1;
    } else {
      if (n.parent < 0 || static_cast<std::size_t>(n.parent) >= i) {
        fail(ErrorCode::RejectedInput,
             "draft tree: node " + std::to_string(i) + " does not follow its parent");
      }
      const auto& p = nodes_[static_cast<std::size_t>(n.parent)];
      n.confidence = p.confidence * n.prob;
      n.depth = p.depth + 1;
    }
  }
}

std::vector<std::size_t> DraftTree::children(int node) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].parent == node) out.push_back(i);
  }
  std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    const auto &na = nodes_[a], &nb = nodes_[b];
    return na.prob != nb.prob ? na.prob > nb.prob : na.token < nb.token;
  });
  return out;
}

bool DraftTree::is_leaf(std::size_t i) const {
  for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
    if (nodes_[j].parent == static_cast<int>(i)) return false;
  }
  return true;
}

const ProbDist* DraftTree::dist_at(int node) const {
  if (node == kRootParent) return root_dist_ ? &*root_dist_ : nullptr;
  const auto& d = dists_.at(static_cast<std::size_t>(node));
  return d ? &*d : nullptr;
}

void DraftTree::set_dist(int node, ProbDist dist) {
  if (node == kRootParent) {
    root_dist_ = std::move(dist);
  } else {
    dists_.at(static_cast<std::size_t>(node)) = std::move(dist);
  }
}

DraftTree build_tree(const ExpandFn& expand, TreeShape shape) {
  check_shape(shape);

  struct Work {
    DraftNode node;
    std::vector<TokenId> branch;  // tokens from the root through this node
    std::optional<ProbDist> dist;
  };
  std::vector<Work> kept;
  std::optional<ProbDist> root_dist;
  std::vector<int> frontier{kRootParent};
  std::size_t passes = 0;

  for (std::size_t round = 0; round < shape.depth && !frontier.empty(); ++round) {
    ++passes;
    std::vector<Work> all = kept;
    const std::size_t old_count = all.size();
    for (int f : frontier) {
      std::vector<TokenId> base;
      double base_conf = 1.0;
      std::size_t base_depth = 0;
      if (f != kRootParent) {
        base = all[static_cast<std::size_t>(f)].branch;
        base_conf = all[static_cast<std::size_t>(f)].node.confidence;
        base_depth = all[static_cast<std::size_t>(f)].node.depth;
      }
      ProbDist dist = expand(base);
      for (TokenId t : top_tokens(dist, shape.branching)) {
        Work w;
        w.node.token = t;
        w.node.parent = f;
        w.node.prob = dist[t];
        w.node.confidence = base_conf * dist[t];
        w.node.depth = base_depth + 1;
        w.branch = base;
        w.branch.push_back(t);
        all.push_back(std::move(w));
      }
      if (f == kRootParent) {
        root_dist = std::move(dist);
      } else {
        all[static_cast<std::size_t>(f)].dist = std::move(dist);
      }
    }

    // Global retention by confidence, then token, then insertion order.
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto &na = all[a].node, &nb = all[b].node;
      if (na.confidence != nb.confidence) return na.confidence > nb.confidence;
      return na.token < nb.token;
    });
    std::vector<bool> keep(all.size(), false);
    for (std::size_t i = 0; i < std::min(shape.budget, order.size()); ++i) keep[order[i]] = true;

    // Ancestor closure, then re-index. Parents precede children.
    std::vector<int> remap(all.size(), kRootParent);
    std::vector<Work> next;
    std::vector<int> next_frontier;
    for (std::size_t i = 0; i < all.size(); ++i) {
      const int parent = all[i].node.parent;
      if (!keep[i]) continue;
      if (parent != kRootParent && !keep[static_cast<std::size_t>(parent)]) {
        keep[i] = false;
        continue;
      }
      remap[i] = static_cast<int>(next.size());
      Work w = std::move(all[i]);
      if (parent != kRootParent) w.node.parent = remap[static_cast<std::size_t>(parent)];
      if (i >= old_count) next_frontier.push_back(static_cast<int>(next.size()));
      next.push_back(std::move(w));
    }
    kept = std::move(next);
    frontier = std::move(next_frontier);
  }

  std::vector<DraftNode> nodes;
  nodes.reserve(kept.size());
  for (const auto& w : kept) nodes.push_back(w.node);
  DraftTree tree(std::move(nodes), shape);
  tree.draft_passes = passes;
  if (root_dist) tree.set_dist(kRootParent, std::move(*root_dist));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i].dist) tree.set_dist(static_cast<int>(i), std::move(*kept[i].dist));
  }
  return tree;
}

DraftTree build_tree(const DraftModel& draft, std::span<const Feature> features,
                     std::span<const TokenId> tokens, TreeShape shape) {
  check_shape(shape);
  const Feature base = draft.predict_feature(features, tokens);
  auto expand = [&](std::span<const TokenId> branch) {
    Feature h = base;
    for (TokenId t : branch) h = draft.advance(h, t);
    return draft.readout(h);
  };
  return build_tree(expand, shape);
}

std::vector<TokenPath> enumerate_paths(const DraftTree& tree) {
  if (tree.empty()) fail(ErrorCode::RejectedInput, "enumerate_paths: empty tree");
  const auto& nodes = tree.nodes();
  std::vector<bool> has_child(nodes.size(), false);
  for (const auto& n : nodes) {
    if (n.parent != kRootParent) has_child[static_cast<std::size_t>(n.parent)] = true;
  }
  std::vector<TokenPath> paths;
  for (std::size_t leaf = 0; leaf < nodes.size(); ++leaf) {
    if (has_child[leaf]) continue;
    std::vector<std::size_t> chain;
    for (int i = static_cast<int>(leaf); i != kRootParent; i = nodes[static_cast<std::size_t>(i)].parent) {
      chain.push_back(static_cast<std::size_t>(i));
    }
    std::reverse(chain.begin(), chain.end());
    TokenPath path;
    path.confidence = 1.0;
    for (std::size_t i : chain) {
      path.tokens.push_back(nodes[i].token);
      path.probs.push_back(nodes[i].prob);
      path.confidence *= nodes[i].prob;
      path.nodes.push_back(i);
    }
    paths.push_back(std::move(path));
  }
  std::stable_sort(paths.begin(), paths.end(), [](const TokenPath& a, const TokenPath& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.tokens < b.tokens;
  });
  return paths;
}

LinearizedTree linearize(const DraftTree& tree, const TokenSequence& pending) {
  LinearizedTree out;
  out.pending = pending.size();
  out.tree = tree;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    out.tokens.push_back(pending.ids[i], pending.origins[i]);
    std::vector<std::size_t> anc(i);
    std::iota(anc.begin(), anc.end(), 0);
    out.ancestors.push_back(std::move(anc));
  }
  const std::size_t g = pending.size();
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& n = tree.node(i);
    // Drafted tokens are labeled Sampled until verification decides them.
    out.tokens.push_back(n.token, Origin::Sampled);
    std::vector<std::size_t> anc;
    if (n.parent == kRootParent) {
      anc.resize(g);
      std::iota(anc.begin(), anc.end(), 0);
    } else {
      const std::size_t parent_pos = g + static_cast<std::size_t>(n.parent);
      anc = out.ancestors[parent_pos];
      anc.push_back(parent_pos);
    }
    out.ancestors.push_back(std::move(anc));
  }
  return out;
}

void write_tree(std::ostream& out, const DraftTree& tree) {
  const auto& s = tree.shape();
  out << "# drafttree nodes=" << tree.size() << " budget=" << s.budget
      << " branching=" << s.branching << " depth=" << s.depth << '\n';
  char buf[64];
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& n = tree.node(i);
    std::snprintf(buf, sizeof buf, "%.17g", n.prob);
    out << i << ' ' << n.parent << ' ' << n.token << ' ' << buf << '\n';
  }
}

DraftTree read_tree(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# drafttree", 0) != 0) {
    fail(ErrorCode::RejectedInput, "read_tree: missing header line");
  }
  TreeShape shape;
  std::size_t count = 0;
  {
    std::istringstream hs(line.substr(11));
    std::string field;
    while (hs >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) fail(ErrorCode::RejectedInput, "read_tree: bad header field");
      const auto key = field.substr(0, eq);
      const auto value = std::stoull(field.substr(eq + 1));
      if (key == "nodes") count = value;
      else if (key == "budget") shape.budget = value;
      else if (key == "branching") shape.branching = value;
      else if (key == "depth") shape.depth = value;
      else fail(ErrorCode::RejectedInput, "read_tree: unknown header field " + key);
    }
  }
  std::vector<DraftNode> nodes;
  while (nodes.size() < count && std::getline(in, line)) {
    std::istringstream ls(line);
    std::size_t index = 0;
    long long parent = 0;
    unsigned long long token = 0;
    double prob = 0.0;
    if (!(ls >> index >> parent >> token >> prob) || index != nodes.size()) {
      fail(ErrorCode::RejectedInput, "read_tree: malformed node line " + std::to_string(nodes.size()));
    }
    DraftNode n;
    n.token = static_cast<TokenId>(token);
    n.parent = static_cast<int>(parent);
    n.prob = prob;
    nodes.push_back(n);
  }
  if (nodes.size() != count) fail(ErrorCode::RejectedInput, "read_tree: truncated node list");
  return DraftTree(std::move(nodes), shape);
}

}  // namespace vvs
