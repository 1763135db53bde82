#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "arbor/capacity.hpp"

namespace arbor {

/// ‖∇g‖_p^p over the truncation; g(o) does not enter.
inline double sobolev_norm(const Tree& tree, const VertexFn& g, const Exponent& p) {
  double s = 0.0;
  for (double v : gradient(tree, g)) s += std::pow(std::abs(v), p.p());
  return s;
}

struct CarlesonReport {
  double cm_norm = 0.0;
  EdgeId attaining_edge = kNoEdge;
  double capacity_lower_bound = 0.0;  ///< μ(∂T) / cm_norm^{p-1}
  bool infinite = false;
};

namespace detail {

inline double nonnegative_total(const Charge& mu) {
  double total = 0.0;
  for (double v : mu.masses()) {
    if (v < 0.0) throw ValidationError("Carleson norms need a nonnegative measure");
    total += v;
  }
  return total;
}

}  // namespace detail

/// sup_a ℰ_{p,a}(μ) / M(a) with ℰ_{p,a} = Σ_{b >= a} M(b)^{p'}.
inline CarlesonReport carleson_norm(const Tree& tree, const Charge& mu, const Exponent& p) {
  detail::require_leaves(tree, mu);
  const double total = detail::nonnegative_total(mu);
  const EdgeFn m = copotential(tree, mu);
  const EdgeFn tails = subtree_energies(tree, m, p);
  CarlesonReport r;
  for (EdgeId a = 0; a < tree.edge_count(); ++a) {
    if (m[a] > 0.0) {
      const double q = tails[a] / m[a];
      if (q > r.cm_norm) {
        r.cm_norm = q;
        r.attaining_edge = a;
      }
    } else if (tails[a] > 0.0) {
      r.infinite = true;
      r.cm_norm = std::numeric_limits<double>::infinity();
      r.attaining_edge = a;
      break;
    }
  }
  if (r.cm_norm > 0.0 && !r.infinite) r.capacity_lower_bound = total / std::pow(r.cm_norm, p.p() - 1.0);
  return r;
}

struct CarlesonBound {
  double best = 0.0;                ///< max μ(E) / ‖μ‖_CM^{p-1}
  std::size_t best_index = 0;
  double worst_sandwich_gap = 0.0;  ///< max of (CM bound - energy bound), <= 0 when the sandwich holds
};

/**
 * Lower bounds for c_p(E) from candidate measures carried by E, together
 * with the sandwich μ(E)/‖μ‖_CM^{p-1} <= μ(E)^p / ℰ_p(μ)^{p-1}. Zero
 * candidates contribute nothing.
 */
inline CarlesonBound capacity_via_carleson(const Tree& tree, const BoundarySet& set, const Exponent& p,
                                           std::span<const Charge> candidates) {
  detail::require_set(tree, set);
  CarlesonBound out;
  out.worst_sandwich_gap = -std::numeric_limits<double>::infinity();
  const auto leaves = tree.leaves();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Charge& mu = candidates[i];
    detail::require_leaves(tree, mu);
    for (std::size_t k = 0; k < mu.size(); ++k)
      if (mu[k] != 0.0 && !set.contains(leaves[k])) throw ValidationError("candidate measure charges a leaf outside E");
    const CarlesonReport r = carleson_norm(tree, mu, p);
    if (r.cm_norm == 0.0 || r.infinite) continue;
    const double total = mu.total();
    const double by_energy = std::pow(total, p.p()) / std::pow(energy(tree, mu, p), p.p() - 1.0);
    out.worst_sandwich_gap = std::max(out.worst_sandwich_gap, r.capacity_lower_bound - by_energy);
    if (r.capacity_lower_bound > out.best) {
      out.best = r.capacity_lower_bound;
      out.best_index = i;
    }
  }
  if (!std::isfinite(out.worst_sandwich_gap)) out.worst_sandwich_gap = 0.0;
  return out;
}

/// g*_n = I(|∇g| χ_{|a| <= n}).
inline VertexFn radial_variation(const Tree& tree, const VertexFn& g, int n) {
  if (n < 0 || n > tree.depth()) throw ParameterError("radial variation level outside the truncation");
  EdgeFn d = gradient(tree, g);
  for (EdgeId a = 0; a < tree.edge_count(); ++a) d[a] = tree.level(a) <= n ? std::abs(d[a]) : 0.0;
  return potential(tree, d);
}

enum class GramMethod { automatic, dense, elimination };

inline constexpr std::size_t kDenseGramLimit = 4096;

/**
 * The charge μ whose potential IM equals `values` at every leaf end. The
 * system is G μ = v with G(l, k) the number of edges shared by the two
 * geodesics. Dense Cholesky for small trees; otherwise exact elimination
 * along the tree: with P the potential already gained above a,
 * M(a) = A_a - B_a P, A = v and B = 1 at a leaf, and for interior a
 * A_a = ΣA / (1 + ΣB), B_a = ΣB / (1 + ΣB) over the sons.
 */
inline Charge gram_solve(const Tree& tree, std::span<const double> values, GramMethod method = GramMethod::automatic) {
  if (values.size() != tree.leaf_count()) throw ParameterError("boundary values must cover every leaf");
  if (method == GramMethod::automatic)
    method = tree.leaf_count() <= kDenseGramLimit ? GramMethod::dense : GramMethod::elimination;

  std::vector<double> masses(tree.leaf_count(), 0.0);
  if (method == GramMethod::dense) {
    const detail::MeetBlocks layout(tree, tree.leaves());
    std::vector<double> shared(tree.edge_count());
    for (EdgeId a = 0; a < tree.edge_count(); ++a) shared[a] = static_cast<double>(tree.level(a) + 1);
    const Eigen::MatrixXd g = layout.fill(shared);
    const auto order = layout.order();
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = values[tree.leaf_index(order[i])];
    const Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) throw NumericalError("Gram matrix is not positive definite");
    const Eigen::VectorXd x = llt.solve(rhs);
    for (std::size_t i = 0; i < order.size(); ++i) masses[tree.leaf_index(order[i])] = x(static_cast<Eigen::Index>(i));
  } else {
    const std::size_t n = tree.edge_count();
    std::vector<double> a_coef(n, 0.0), b_coef(n, 0.0);
    for (EdgeId a = n; a-- > 0;) {
      if (tree.is_leaf(a)) {
        a_coef[a] = values[tree.leaf_index(a)];
        b_coef[a] = 1.0;
        continue;
      }
      double sa = 0.0, sb = 0.0;
      for (EdgeId c : tree.children(a)) {
        sa += a_coef[c];
        sb += b_coef[c];
      }
      a_coef[a] = sa / (1.0 + sb);
      b_coef[a] = sb / (1.0 + sb);
    }
    std::vector<double> above(tree.vertex_count(), 0.0);
    for (EdgeId a = 0; a < n; ++a) {
      const double m = a_coef[a] - b_coef[a] * above[tree.begin_vertex(a)];
      above[tree.end_vertex(a)] = above[tree.begin_vertex(a)] + m;
      if (tree.is_leaf(a)) masses[tree.leaf_index(a)] = m;
    }
  }

  Charge mu(std::move(masses));
  const VertexFn check = potential(tree, copotential(tree, mu));
  double worst = 0.0, scale = 1.0;
  for (EdgeId leaf : tree.leaves()) {
    worst = std::max(worst, std::abs(check[tree.end_vertex(leaf)] - values[tree.leaf_index(leaf)]));
    scale = std::max(scale, std::abs(values[tree.leaf_index(leaf)]));
  }
  if (worst > 1e-10 * scale) throw NumericalError("Gram solve residual above tolerance");
  return mu;
}

/// Σ_b (M - V)(M_p - V_p)(b): nonnegative, zero iff the co-potentials agree.
inline double uniqueness_pairing(const Tree& tree, const Charge& mu, const Charge& nu, const Exponent& p) {
  const EdgeFn m = copotential(tree, mu), v = copotential(tree, nu);
  const EdgeFn mp = footnote_map(m, p), vp = footnote_map(v, p);
  double s = 0.0;
  for (EdgeId a = 0; a < tree.edge_count(); ++a) s += (m[a] - v[a]) * (mp[a] - vp[a]);
  return s;
}

}  // namespace arbor
