#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arbor/errors.hpp"

namespace arbor {

using EdgeId = std::size_t;
using VertexId = std::size_t;

inline constexpr EdgeId kNoEdge = std::numeric_limits<EdgeId>::max();
inline constexpr std::size_t kNotLeaf = std::numeric_limits<std::size_t>::max();

/**
 * Rooted, ordered tree indexed by edges.
 *
 * Edges are numbered breadth-first from the root edge 0, sons in order, so the
 * sons of every edge form a contiguous id range and levels never decrease with
 * the id. Vertices are derived from edges: vertex 0 is the root vertex o (the
 * beginning of the root edge) and vertex `a + 1` is the end vertex of edge `a`.
 *
 * A Tree is immutable once constructed.
 */
class Tree {
 public:
  /// `parents[0]` must be kNoEdge; for i > 0, `parents[i] < i` and the
  /// sequence must be non-decreasing (breadth-first numbering).
  explicit Tree(std::vector<EdgeId> parents) : parent_(std::move(parents)) {
    const std::size_t n = parent_.size();
    if (n == 0) throw StructuralError("tree must contain the root edge");
    if (parent_[0] != kNoEdge) throw StructuralError("edge 0 must be the root edge");
    for (std::size_t i = 1; i < n; ++i) {
      if (parent_[i] == kNoEdge) throw StructuralError("only the root edge may lack a parent");
      if (parent_[i] >= i) throw StructuralError("parent ids must precede their sons");
      if (parent_[i] < parent_[i - 1] && i > 1)
        throw StructuralError("edges are not in breadth-first order");
    }
    first_child_.assign(n, 0);
    child_count_.assign(n, 0);
    level_.assign(n, 0);
    ids_.resize(n);
    std::iota(ids_.begin(), ids_.end(), EdgeId{0});
    for (std::size_t i = 1; i < n; ++i) {
      const EdgeId p = parent_[i];
      if (child_count_[p] == 0) first_child_[p] = i;
      ++child_count_[p];
      level_[i] = level_[p] + 1;
    }
    leaf_index_.assign(n, kNotLeaf);
    for (std::size_t i = 0; i < n; ++i) {
      if (child_count_[i] == 0) {
        leaf_index_[i] = leaves_.size();
        leaves_.push_back(i);
      }
    }
  }

  std::size_t edge_count() const noexcept { return parent_.size(); }
  std::size_t vertex_count() const noexcept { return parent_.size() + 1; }
  EdgeId root_edge() const noexcept { return 0; }
  VertexId root_vertex() const noexcept { return 0; }

  std::optional<EdgeId> parent(EdgeId a) const {
    check(a);
    if (a == 0) return std::nullopt;
    return parent_[a];
  }
  /// Raw parent id, kNoEdge for the root edge.
  EdgeId parent_or_none(EdgeId a) const { return check(a), parent_[a]; }

  std::span<const EdgeId> children(EdgeId a) const {
    check(a);
    return {ids_.data() + first_child_[a], child_count_[a]};
  }
  std::size_t child_count(EdgeId a) const { return check(a), child_count_[a]; }
  int level(EdgeId a) const { return check(a), level_[a]; }
  int depth() const noexcept { return level_.back(); }

  bool is_leaf(EdgeId a) const { return check(a), child_count_[a] == 0; }
  std::span<const EdgeId> leaves() const noexcept { return leaves_; }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }
  /// Position of `a` in leaves(), or kNotLeaf.
  std::size_t leaf_index(EdgeId a) const { return check(a), leaf_index_[a]; }

  /// Position of `a` among the sons of its parent (0 for the root edge).
  std::size_t son_index(EdgeId a) const {
    check(a);
    return a == 0 ? 0 : a - first_child_[parent_[a]];
  }

  VertexId begin_vertex(EdgeId a) const { return check(a), a == 0 ? 0 : parent_[a] + 1; }
  VertexId end_vertex(EdgeId a) const { return check(a), a + 1; }
  /// The edge whose end vertex is `x`; `x` must not be the root vertex.
  EdgeId edge_ending_at(VertexId x) const {
    if (x == 0 || x > edge_count()) throw ParameterError("vertex has no incoming edge");
    return x - 1;
  }
  /// Number of graph neighbours of vertex `x`.
  std::size_t degree(VertexId x) const {
    if (x == 0) return 1;
    return child_count(edge_ending_at(x)) + 1;
  }

  /// True when b lies in the subtree rooted at a (b >= a in the tree order).
  bool is_below(EdgeId b, EdgeId a) const {
    check(a);
    check(b);
    while (level_[b] > level_[a]) b = parent_[b];
    return a == b;
  }

  /// Son indices along the geodesic from the root edge to `a` (root excluded).
  std::vector<std::size_t> son_path(EdgeId a) const {
    check(a);
    std::vector<std::size_t> path(static_cast<std::size_t>(level_[a]));
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      *it = son_index(a);
      a = parent_[a];
    }
    return path;
  }

  /// Follows son indices from the root edge; nullopt if the path leaves the tree.
  std::optional<EdgeId> follow(std::span<const std::size_t> path) const {
    EdgeId a = 0;
    for (std::size_t s : path) {
      if (s >= child_count_[a]) return std::nullopt;
      a = first_child_[a] + s;
    }
    return a;
  }

  std::span<const EdgeId> parents() const noexcept { return parent_; }

 private:
  void check(EdgeId a) const {
    if (a >= parent_.size()) throw ParameterError("edge id out of range");
  }

  std::vector<EdgeId> parent_;
  std::vector<EdgeId> first_child_;
  std::vector<std::size_t> child_count_;
  std::vector<int> level_;
  std::vector<EdgeId> ids_;
  std::vector<EdgeId> leaves_;
  std::vector<std::size_t> leaf_index_;
};

namespace detail {

/// Breadth-first renumbering of a tree given by an arbitrary parent array
/// (exactly one entry equal to kNoEdge). Sons keep the order of their
/// original ids. Returns the tree and, for each new id, the original id.
inline std::pair<Tree, std::vector<std::size_t>> bfs_renumber(std::span<const std::size_t> parents) {
  const std::size_t n = parents.size();
  std::size_t root = kNoEdge;
  std::vector<std::size_t> count(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (parents[i] == kNoEdge) {
      if (root != kNoEdge) throw StructuralError("more than one root edge");
      root = i;
    } else {
      if (parents[i] >= n || parents[i] == i) throw StructuralError("parent id out of range");
      ++count[parents[i] + 1];
    }
  }
  if (root == kNoEdge) throw StructuralError("no root edge");
  std::partial_sum(count.begin(), count.end(), count.begin());
  std::vector<std::size_t> sons(n > 0 ? n - 1 : 0);
  std::vector<std::size_t> fill(count.begin(), count.end() - 1);
  for (std::size_t i = 0; i < n; ++i)
    if (parents[i] != kNoEdge) sons[fill[parents[i]]++] = i;

  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<EdgeId> new_parent;
  new_parent.reserve(n);
  std::vector<std::size_t> new_id(n, kNoEdge);
  order.push_back(root);
  new_parent.push_back(kNoEdge);
  new_id[root] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::size_t old = order[head];
    for (std::size_t k = count[old]; k < count[old + 1]; ++k) {
      new_id[sons[k]] = order.size();
      order.push_back(sons[k]);
      new_parent.push_back(head);
    }
  }
  if (order.size() != n) throw StructuralError("parent array contains a cycle");
  return {Tree(std::move(new_parent)), std::move(order)};
}

}  // namespace detail

/// A set of truncation leaves; each leaf stands for the tent it subtends.
class BoundarySet {
 public:
  static BoundarySet empty(const Tree& tree) { return BoundarySet(tree.edge_count(), {}); }

  static BoundarySet full(const Tree& tree) {
    return BoundarySet(tree.edge_count(), {tree.leaves().begin(), tree.leaves().end()});
  }

  static BoundarySet from_leaves(const Tree& tree, std::vector<EdgeId> leaves) {
    for (EdgeId a : leaves)
      if (a >= tree.edge_count() || !tree.is_leaf(a))
        throw ValidationError("boundary set members must be leaf edges");
    std::sort(leaves.begin(), leaves.end());
    leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());
    return BoundarySet(tree.edge_count(), std::move(leaves));
  }

  /// Union of the tents below the given edges.
  static BoundarySet from_tents(const Tree& tree, std::span<const EdgeId> tents) {
    std::vector<char> marked(tree.edge_count(), 0);
    for (EdgeId a : tents) {
      if (a >= tree.edge_count()) throw ParameterError("tent edge out of range");
      marked[a] = 1;
    }
    for (EdgeId a = 1; a < tree.edge_count(); ++a)
      if (marked[tree.parent_or_none(a)]) marked[a] = 1;
    std::vector<EdgeId> members;
    for (EdgeId leaf : tree.leaves())
      if (marked[leaf]) members.push_back(leaf);
    return BoundarySet(tree.edge_count(), std::move(members));
  }

  bool contains(EdgeId leaf) const { return leaf < flag_.size() && flag_[leaf] != 0; }
  std::span<const EdgeId> members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  /// Edge count of the tree this set was built for.
  std::size_t universe() const noexcept { return flag_.size(); }

 private:
  BoundarySet(std::size_t edges, std::vector<EdgeId> members)
      : members_(std::move(members)), flag_(edges, 0) {
    for (EdgeId a : members_) flag_[a] = 1;
  }

  std::vector<EdgeId> members_;
  std::vector<char> flag_;
};

/// The subtree T_a re-indexed from 0, with its full boundary and the map back.
struct Tent {
  Tree tree;
  BoundarySet boundary;
  std::vector<EdgeId> origin;  ///< origin[i] = id of tent edge i in the parent tree

  /// E ∩ ∂T_a expressed in tent ids.
  BoundarySet restrict(const BoundarySet& set) const {
    std::vector<EdgeId> members;
    for (EdgeId leaf : tree.leaves())
      if (set.contains(origin[leaf])) members.push_back(leaf);
    return BoundarySet::from_leaves(tree, std::move(members));
  }
};

inline Tent tent(const Tree& tree, EdgeId a) {
  if (a >= tree.edge_count()) throw ParameterError("tent edge out of range");
  std::vector<EdgeId> origin{a};
  std::vector<EdgeId> parents{kNoEdge};
  for (std::size_t head = 0; head < origin.size(); ++head)
    for (EdgeId son : tree.children(origin[head])) {
      origin.push_back(son);
      parents.push_back(head);
    }
  Tree sub(std::move(parents));
  BoundarySet boundary = BoundarySet::full(sub);
  return Tent{std::move(sub), std::move(boundary), std::move(origin)};
}

/// [ω, a]: the edges from the root edge down to `a`, in order.
inline std::vector<EdgeId> geodesic_to(const Tree& tree, EdgeId a) {
  std::vector<EdgeId> path(static_cast<std::size_t>(tree.level(a)) + 1);
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    *it = a;
    a = tree.parent_or_none(a);
  }
  return path;
}

/// N_k = number of edges at level k.
inline std::vector<std::size_t> level_counts(const Tree& tree) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(tree.depth()) + 1, 0);
  for (EdgeId a = 0; a < tree.edge_count(); ++a) ++counts[static_cast<std::size_t>(tree.level(a))];
  return counts;
}

/**
 * A boundary point described by a son-selection rule. The rule is evaluated
 * afresh on every truncation, so the same ray can be followed through a
 * sweep of depths.
 */
class GeodesicRay {
 public:
  using Chooser = std::function<std::size_t(const Tree&, EdgeId)>;

  GeodesicRay(Chooser choose, std::string name) : choose_(std::move(choose)), name_(std::move(name)) {}

  static GeodesicRay leftmost() {
    return {[](const Tree&, EdgeId) -> std::size_t { return 0; }, "leftmost"};
  }
  static GeodesicRay rightmost() {
    return {[](const Tree& t, EdgeId a) { return t.child_count(a) - 1; }, "rightmost"};
  }
  /// Follows `path` (son indices below the root edge), then keeps leftmost.
  static GeodesicRay along(std::vector<std::size_t> path) {
    std::string name = "path:";
    for (std::size_t i = 0; i < path.size(); ++i) name += (i ? "," : "") + std::to_string(path[i]);
    return {[path = std::move(path)](const Tree& t, EdgeId a) -> std::size_t {
              const auto k = static_cast<std::size_t>(t.level(a));
              return k < path.size() ? path[k] : 0;
            },
            std::move(name)};
  }

  /// α_0 = ω, α_1, ... until a leaf or until level `horizon`.
  std::vector<EdgeId> realize(const Tree& tree, std::optional<int> horizon = std::nullopt) const {
    std::vector<EdgeId> prefix{tree.root_edge()};
    EdgeId a = tree.root_edge();
    while (!tree.is_leaf(a) && (!horizon || tree.level(a) < *horizon)) {
      const std::size_t s = choose_(tree, a);
      if (s >= tree.child_count(a)) throw ParameterError("ray chooser selected a missing son");
      a = tree.children(a)[s];
      prefix.push_back(a);
    }
    return prefix;
  }

  const std::string& name() const noexcept { return name_; }

 private:
  Chooser choose_;
  std::string name_;
};

}  // namespace arbor
