#pragma once

// Simple random walk on a truncated tree, absorbed at o and at leaf ends.

#include <cmath>
#include <cstdint>
#include <vector>

#include "arbor/capacity.hpp"
#include "arbor/parallel.hpp"

namespace arbor {

/// Exit distribution of the walk started at one vertex.
struct HarmonicMeasure {
  VertexId at_vertex = 0;
  std::vector<double> boundary_mass;  ///< leaves() order
  double root_mass = 0.0;

  double boundary_total() const {
    double s = 0.0;
    for (double v : boundary_mass) s += v;
    return s;
  }
};

/**
 * q(a) = probability that the walk from e(a) ever reaches b(a). Leaves are
 * absorbing, so q = 0 there; otherwise q(a) = 1 / (k + 1 - Σ_{c ∈ s(a)} q(c)).
 */
inline std::vector<double> return_probabilities(const Tree& tree) {
  std::vector<double> q(tree.edge_count(), 0.0);
  for (EdgeId a = tree.edge_count(); a-- > 0;) {
    if (tree.is_leaf(a)) continue;
    double back = 0.0;
    for (EdgeId c : tree.children(a)) back += q[c];
    q[a] = 1.0 / (static_cast<double>(tree.child_count(a)) + 1.0 - back);
  }
  return q;
}

inline HarmonicMeasure harmonic_measure_exact(const Tree& tree, VertexId x) {
  if (x >= tree.vertex_count()) throw ParameterError("vertex out of range");
  HarmonicMeasure h{x, std::vector<double>(tree.leaf_count(), 0.0), 0.0};
  if (x == tree.root_vertex()) {
    h.root_mass = 1.0;
    return h;
  }
  const EdgeId top = tree.edge_ending_at(x);
  if (tree.is_leaf(top)) {
    h.boundary_mass[tree.leaf_index(top)] = 1.0;
    return h;
  }
  const std::vector<double> q = return_probabilities(tree);
  const std::vector<EdgeId> chain = geodesic_to(tree, top);
  const std::size_t m = chain.size();

  // s[j]: probability of ever reaching e(α_j) from b(α_j), with α_j's own
  // subtree excluded from the excursions.
  std::vector<double> s(m, 0.0);
  auto sons_back = [&](EdgeId a, EdgeId skip) {
    double back = 0.0;
    for (EdgeId c : tree.children(a))
      if (c != skip) back += q[c];
    return back;
  };
  for (std::size_t j = 1; j < m; ++j) {
    const double deg = static_cast<double>(tree.degree(tree.end_vertex(chain[j - 1])));
    s[j] = 1.0 / (deg - sons_back(chain[j - 1], chain[j]) - s[j - 1]);
  }

  // π_j = G(x, e(α_j)) / deg: the weight of each single step out of e(α_j).
  std::vector<double> pi(m, 0.0);
  double reach = 1.0;
  for (std::size_t j = m; j-- > 0;) {
    const double deg = static_cast<double>(tree.degree(tree.end_vertex(chain[j])));
    pi[j] = reach / (deg - sons_back(chain[j], kNoEdge) - s[j]);
    reach *= q[chain[j]];
  }
  h.root_mass = pi[0];

  // Off-chain subtrees: an entered edge a is left downwards towards a leaf
  // below son c with the extra factor q(a).
  std::vector<double> coef(tree.edge_count(), 0.0);
  std::vector<char> on_chain(tree.edge_count(), 0);
  for (EdgeId a : chain) on_chain[a] = 1;
  for (std::size_t j = 0; j < m; ++j)
    for (EdgeId c : tree.children(chain[j]))
      if (!on_chain[c]) coef[c] = pi[j];
  for (EdgeId a = 0; a < tree.edge_count(); ++a) {
    if (on_chain[a] || coef[a] == 0.0) continue;
    if (tree.is_leaf(a)) {
      h.boundary_mass[tree.leaf_index(a)] = coef[a];
    } else {
      for (EdgeId c : tree.children(a)) coef[c] = coef[a] * q[a];
    }
  }
  return h;
}

struct WalkEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_walks = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// SplitMix64 stream; one per (seed, walk index).
class WalkRng {
 public:
  WalkRng(std::uint64_t seed, std::uint64_t index) : state_(mix64(seed) ^ mix64(index + 0x9e3779b97f4a7c15ULL)) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }
  /// Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }
  /// Uniform in [0, 1) on the 2^-53 grid.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace detail

/// Fraction of n_walks walks from x absorbed at a leaf end rather than at o.
inline WalkEstimate simulate_escape(const Tree& tree, VertexId x, std::uint64_t n_walks, std::uint64_t seed) {
  if (x >= tree.vertex_count()) throw ParameterError("vertex out of range");
  if (n_walks < 1) throw ParameterError("need at least one walk");
  const std::size_t chunks = std::min<std::uint64_t>(n_walks, 256);
  std::vector<std::uint64_t> escaped(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    const std::uint64_t lo = n_walks * c / chunks, hi = n_walks * (c + 1) / chunks;
    std::uint64_t hits = 0;
    for (std::uint64_t w = lo; w < hi; ++w) {
      detail::WalkRng rng(seed, w);
      VertexId v = x;
      while (v != tree.root_vertex()) {
        const EdgeId a = tree.edge_ending_at(v);
        if (tree.is_leaf(a)) {
          ++hits;
          break;
        }
        const std::uint64_t step = rng.below(tree.child_count(a) + 1);
        v = step == 0 ? tree.begin_vertex(a) : tree.end_vertex(tree.children(a)[step - 1]);
      }
    }
    escaped[c] = hits;
  });
  std::uint64_t total = 0;
  for (std::uint64_t e : escaped) total += e;
  const double n = static_cast<double>(n_walks);
  const double value = static_cast<double>(total) / n;
  return WalkEstimate{value, std::sqrt(value * (1.0 - value) / n), n_walks, seed};
}

struct EscapeIdentity {
  double capacity = 0.0;       ///< c_2(∂T)
  double exact_escape = 0.0;   ///< λ_{e(ω)}(∂T)
  WalkEstimate estimate;
};

inline EscapeIdentity capacity_escape_identity(const Tree& tree, std::uint64_t n_walks, std::uint64_t seed) {
  const VertexId start = tree.end_vertex(tree.root_edge());
  return EscapeIdentity{capacity_recursive(tree, BoundarySet::full(tree), Exponent(2.0)).capacity,
                        harmonic_measure_exact(tree, start).boundary_total(),
                        simulate_escape(tree, start, n_walks, seed)};
}

}  // namespace arbor
