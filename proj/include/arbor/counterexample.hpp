#pragma once

// The sub-dyadic tree carrying a nonzero charge whose potential vanishes at
// every boundary point but one.

#include <algorithm>
#include <span>
#include <vector>

#include "arbor/calculus.hpp"
#include "arbor/dyadic.hpp"
#include "arbor/tree_spec.hpp"

namespace arbor {

struct Counterexample {
  Tree tree;
  std::vector<Dyadic> copotential;  ///< exact M on every edge
  std::vector<EdgeId> spine;        ///< root edge first; the last one is a leaf
  std::vector<int> branch;          ///< 0 on the spine, n on the branch leaving spine vertex n
  std::vector<Dyadic> leaf_masses;  ///< exact, in leaves() order
  Charge charge;
};

inline Counterexample counterexample(int spine_depth, int generations = 1) {
  TreeSpec::counterexample(spine_depth, generations).validate();
  auto shape = detail::counterexample_shape(spine_depth, generations);
  std::vector<Dyadic> masses;
  std::vector<double> approx;
  for (EdgeId leaf : shape.tree.leaves()) {
    masses.push_back(shape.labels[leaf]);
    approx.push_back(shape.labels[leaf].to_double());
  }
  return Counterexample{std::move(shape.tree), std::move(shape.labels), std::move(shape.spine),
                        std::move(shape.branch), std::move(masses), Charge(std::move(approx))};
}

/// max over interior edges of |M(a) - Σ_{b ∈ s(a)} M(b)|, exactly.
inline Dyadic exact_forward_defect(const Tree& tree, std::span<const Dyadic> m) {
  if (m.size() != tree.edge_count()) throw ParameterError("edge function size does not match the tree");
  Dyadic worst;
  for (EdgeId a = 0; a < tree.edge_count(); ++a) {
    if (tree.is_leaf(a)) continue;
    Dyadic d = m[a];
    for (EdgeId b : tree.children(a)) d -= m[b];
    if (d < Dyadic()) d = -d;
    worst = std::max(worst, d);
  }
  return worst;
}

/// Exact co-potential of a dyadic charge, summed bottom-up.
inline std::vector<Dyadic> exact_copotential(const Tree& tree, std::span<const Dyadic> leaf_masses) {
  if (leaf_masses.size() != tree.leaf_count()) throw ParameterError("charge size does not match the tree");
  std::vector<Dyadic> m(tree.edge_count());
  for (EdgeId a = tree.edge_count(); a-- > 0;) {
    if (tree.is_leaf(a)) {
      m[a] = leaf_masses[tree.leaf_index(a)];
    } else {
      for (EdgeId b : tree.children(a)) m[a] += m[b];
    }
  }
  return m;
}

/**
 * IM(ζ) for the boundary point reached by continuing each leaf's geodesic.
 * Off the spine the dyadic subtree halves forever, so the untruncated tail
 * beyond the leaf adds M(leaf) once more. The spine point has IM = +∞; its
 * entry is the truncated partial sum.
 */
inline std::vector<Dyadic> exact_ray_potentials(const Counterexample& ce) {
  const Tree& t = ce.tree;
  std::vector<Dyadic> at_end(t.edge_count());
  for (EdgeId a = 0; a < t.edge_count(); ++a) {
    const auto up = t.parent(a);
    at_end[a] = (up ? at_end[*up] : Dyadic()) + ce.copotential[a];
  }
  std::vector<Dyadic> out;
  out.reserve(t.leaf_count());
  for (EdgeId leaf : t.leaves()) {
    Dyadic v = at_end[leaf];
    if (ce.branch[leaf] != 0) v += ce.copotential[leaf];
    out.push_back(v);
  }
  return out;
}

}  // namespace arbor
