#pragma once

// Shared generators for the test suites.

#include <algorithm>
#include <cstddef>
#include <random>
#include <vector>

#include "arbor/calculus.hpp"
#include "arbor/tree.hpp"

namespace arbor::testing {

/// Random breadth-first tree with at most `max_edges` edges; sons per edge in 0..3.
inline Tree random_tree(std::mt19937_64& rng, std::size_t max_edges) {
  std::discrete_distribution<int> sons_dist({25, 35, 25, 15});
  std::vector<EdgeId> parents{kNoEdge};
  for (std::size_t head = 0; head < parents.size() && parents.size() < max_edges; ++head) {
    int k = sons_dist(rng);
    if (head == 0 && max_edges > 1) k = std::max(k, 1);
    for (int i = 0; i < k && parents.size() < max_edges; ++i) parents.push_back(head);
  }
  return Tree(std::move(parents));
}

/// Each leaf joins with probability `density`; never empty.
inline BoundarySet random_set(std::mt19937_64& rng, const Tree& tree, double density = 0.5) {
  std::bernoulli_distribution coin(density);
  std::vector<EdgeId> members;
  for (EdgeId leaf : tree.leaves())
    if (coin(rng)) members.push_back(leaf);
  if (members.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, tree.leaf_count() - 1);
    members.push_back(tree.leaves()[pick(rng)]);
  }
  return BoundarySet::from_leaves(tree, std::move(members));
}

inline EdgeFn random_edge_fn(std::mt19937_64& rng, const Tree& tree, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  EdgeFn f(tree.edge_count());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

inline VertexFn random_vertex_fn(std::mt19937_64& rng, const Tree& tree, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  VertexFn g(tree.vertex_count());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = u(rng);
  return g;
}

inline Charge random_charge(std::mt19937_64& rng, const Tree& tree, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> m(tree.leaf_count());
  for (double& v : m) v = u(rng);
  return Charge(std::move(m));
}

/// Nonnegative random charge carried by `set`.
inline Charge random_charge_on(std::mt19937_64& rng, const Tree& tree, const BoundarySet& set) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<double> m(tree.leaf_count(), 0.0);
  for (EdgeId leaf : set.members()) m[tree.leaf_index(leaf)] = u(rng);
  return Charge(std::move(m));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace arbor::testing
