#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "arbor/errors.hpp"
#include "arbor/tree.hpp"

namespace arbor {

/// Exponent p in (1, ∞) together with its Hölder conjugate p'.
class Exponent {
 public:
  explicit Exponent(double p) : p_(p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("exponent p must lie in (1, inf)");
    conj_ = p / (p - 1.0);
  }

  double p() const noexcept { return p_; }
  double conj() const noexcept { return conj_; }
  /// The exponent p'.
  Exponent conjugate() const { return Exponent(conj_); }

 private:
  double p_;
  double conj_;
};

/// Values indexed by edge ids or vertex ids of one tree.
template <class Tag>
class IndexedFn {
 public:
  IndexedFn() = default;
  explicit IndexedFn(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit IndexedFn(std::vector<double> values) : values_(std::move(values)) {}

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& raw() noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const IndexedFn&, const IndexedFn&) = default;

 private:
  std::vector<double> values_;
};

struct EdgeTag {};
struct VertexTag {};

/// Function on E(T).
using EdgeFn = IndexedFn<EdgeTag>;
/// Function on V(T); index 0 is the root vertex o, index a + 1 is e(a).
using VertexFn = IndexedFn<VertexTag>;

/// Signed measure on the realized boundary: one mass per leaf, ordered as tree.leaves().
class Charge {
 public:
  Charge() = default;
  explicit Charge(std::vector<double> leaf_masses) : masses_(std::move(leaf_masses)) {
    for (double m : masses_)
      if (!std::isfinite(m)) throw ValidationError("charge masses must be finite");
  }
  static Charge zero(const Tree& tree) { return Charge(std::vector<double>(tree.leaf_count(), 0.0)); }

  double operator[](std::size_t leaf_pos) const { return masses_[leaf_pos]; }
  double& operator[](std::size_t leaf_pos) { return masses_[leaf_pos]; }
  std::size_t size() const noexcept { return masses_.size(); }
  std::span<const double> masses() const noexcept { return masses_; }
  double total() const { return std::accumulate(masses_.begin(), masses_.end(), 0.0); }
  bool nonnegative() const {
    return std::all_of(masses_.begin(), masses_.end(), [](double m) { return m >= 0.0; });
  }

 private:
  std::vector<double> masses_;
};

namespace detail {

inline void require_edges(const Tree& tree, std::size_t n) {
  if (n != tree.edge_count()) throw ParameterError("edge function does not match the tree");
}
inline void require_vertices(const Tree& tree, std::size_t n) {
  if (n != tree.vertex_count()) throw ParameterError("vertex function does not match the tree");
}
inline void require_leaves(const Tree& tree, const Charge& mu) {
  if (mu.size() != tree.leaf_count()) throw ParameterError("charge does not match the tree");
}

}  // namespace detail

/// a^s := sgn(a)|a|^s.
inline double signed_pow(double a, double s) {
  if (!(s > 0.0)) throw ParameterError("signed_pow needs s > 0");
  if (a == 0.0) return 0.0;
  if (s == 1.0) return a;
  const double m = std::pow(std::abs(a), s);
  return a < 0.0 ? -m : m;
}

/// If(x) = Σ_{a < x} f(a), with If(o) = 0.
inline VertexFn potential(const Tree& tree, const EdgeFn& f) {
  detail::require_edges(tree, f.size());
  VertexFn g(tree.vertex_count());
  for (EdgeId a = 0; a < tree.edge_count(); ++a) g[tree.end_vertex(a)] = g[tree.begin_vertex(a)] + f[a];
  return g;
}

/// ∇g(a) = g(e(a)) - g(b(a)).
inline EdgeFn gradient(const Tree& tree, const VertexFn& g) {
  detail::require_vertices(tree, g.size());
  EdgeFn f(tree.edge_count());
  for (EdgeId a = 0; a < tree.edge_count(); ++a) f[a] = g[tree.end_vertex(a)] - g[tree.begin_vertex(a)];
  return f;
}

/// M(a) = μ(∂T_a), the mass of the leaves below a.
inline EdgeFn copotential(const Tree& tree, const Charge& mu) {
  detail::require_leaves(tree, mu);
  EdgeFn m(tree.edge_count());
  const auto leaves = tree.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) m[leaves[i]] = mu[i];
  for (EdgeId a = tree.edge_count(); a-- > 1;) m[tree.parent_or_none(a)] += m[a];
  return m;
}

/// Charge carried by the leaves of f (the inverse of copotential on forward additive f).
inline Charge leaf_charge(const Tree& tree, const EdgeFn& f) {
  detail::require_edges(tree, f.size());
  std::vector<double> masses;
  masses.reserve(tree.leaf_count());
  for (EdgeId leaf : tree.leaves()) masses.push_back(f[leaf]);
  return Charge(std::move(masses));
}

/// max over interior edges of |f(a) - Σ_{b ∈ s(a)} f(b)|.
inline double forward_defect(const Tree& tree, const EdgeFn& f) {
  detail::require_edges(tree, f.size());
  double worst = 0.0;
  for (EdgeId a = 0; a < tree.edge_count(); ++a) {
    if (tree.is_leaf(a)) continue;
    double sons = 0.0;
    for (EdgeId b : tree.children(a)) sons += f[b];
    worst = std::max(worst, std::abs(f[a] - sons));
  }
  return worst;
}

/// f_p(a) = f(a)^{p'-1} (signed).
inline EdgeFn footnote_map(const EdgeFn& f, const Exponent& p) {
  EdgeFn out(f.size());
  const double s = p.conj() - 1.0;
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = signed_pow(f[i], s);
  return out;
}

/// Δ_p at every vertex other than o. Truncation leaves miss their son terms
/// and are flagged; harmonicity checks should skip them.
struct PLaplacian {
  VertexFn values;
  std::vector<char> truncated;  ///< 1 at leaf-end vertices (and at o, which is excluded)

  double max_interior_abs() const {
    double worst = 0.0;
    for (std::size_t x = 0; x < values.size(); ++x)
      if (!truncated[x]) worst = std::max(worst, std::abs(values[x]));
    return worst;
  }
};

inline PLaplacian p_laplacian(const Tree& tree, const VertexFn& g, const Exponent& p) {
  detail::require_vertices(tree, g.size());
  const double s = p.p() - 1.0;
  PLaplacian out{VertexFn(tree.vertex_count()), std::vector<char>(tree.vertex_count(), 0)};
  out.truncated[0] = 1;
  for (EdgeId a = 0; a < tree.edge_count(); ++a) {
    const VertexId x = tree.end_vertex(a);
    double sum = signed_pow(g[tree.begin_vertex(a)] - g[x], s);
    for (EdgeId b : tree.children(a)) sum += signed_pow(g[tree.end_vertex(b)] - g[x], s);
    out.values[x] = sum;
    out.truncated[x] = tree.is_leaf(a) ? 1 : 0;
  }
  return out;
}

/// Σ_a |M(a)|^{p'} for a precomputed co-potential.
inline double energy_of_copotential(const EdgeFn& m, const Exponent& p) {
  double e = 0.0;
  for (double v : m) e += std::pow(std::abs(v), p.conj());
  return e;
}

/// ℰ_p(μ) = ‖I*μ‖_{p'}^{p'}.
inline double energy(const Tree& tree, const Charge& mu, const Exponent& p) {
  return energy_of_copotential(copotential(tree, mu), p);
}

/// ℰ(μ, f) = Σ_b f(b) M(b).
inline double mutual_energy(const Tree& tree, const Charge& mu, const EdgeFn& f) {
  detail::require_edges(tree, f.size());
  const EdgeFn m = copotential(tree, mu);
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) e += f[i] * m[i];
  return e;
}

/**
 * k ↦ Σ |f| over the level-k cut of the truncation: the edges at level k plus
 * the leaves above level k, which stand for the unary continuations of their
 * rays. For trees whose leaves all sit on the last level this is the plain
 * level sum; for forward additive f it is non-decreasing in k.
 */
inline std::vector<double> level_sums(const Tree& tree, const EdgeFn& f) {
  detail::require_edges(tree, f.size());
  const auto depth = static_cast<std::size_t>(tree.depth());
  std::vector<double> at_level(depth + 1, 0.0);
  std::vector<double> leaves_ending(depth + 1, 0.0);
  for (EdgeId a = 0; a < tree.edge_count(); ++a) {
    const auto k = static_cast<std::size_t>(tree.level(a));
    at_level[k] += std::abs(f[a]);
    if (tree.is_leaf(a)) leaves_ending[k] += std::abs(f[a]);
  }
  std::vector<double> sums(depth + 1, 0.0);
  double carried = 0.0;
  for (std::size_t k = 0; k <= depth; ++k) {
    sums[k] = at_level[k] + carried;
    carried += leaves_ending[k];
  }
  return sums;
}

}  // namespace arbor
