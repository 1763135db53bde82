#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "arbor/calculus.hpp"
#include "arbor/errors.hpp"
#include "arbor/tree.hpp"

namespace arbor {

/// Capacity of a boundary set with its extremal function and measure.
struct EquilibriumResult {
  double capacity = 0.0;
  EdgeFn eq_fn;        ///< f^E >= 0, If^E = 1 on E
  Charge eq_measure;   ///< μ^E >= 0 supported on E; I*μ^E = (f^E)^{p-1}
  Exponent p{2.0};
  BoundarySet set;     ///< E
  std::string solver;
  double tol = 0.0;
};

/// Σ_{b >= a} |M(b)|^{p'} for every edge a.
inline EdgeFn subtree_energies(const Tree& tree, const EdgeFn& m, const Exponent& p) {
  detail::require_edges(tree, m.size());
  EdgeFn e(tree.edge_count());
  for (EdgeId a = tree.edge_count(); a-- > 0;) {
    e[a] += std::pow(std::abs(m[a]), p.conj());
    if (a > 0) e[tree.parent_or_none(a)] += e[a];
  }
  return e;
}

namespace detail {

inline void require_set(const Tree& tree, const BoundarySet& set) {
  if (set.universe() != tree.edge_count()) throw ParameterError("boundary set belongs to another tree");
}

/// Number of members of `set` below each edge.
inline std::vector<std::size_t> members_below(const Tree& tree, const BoundarySet& set) {
  std::vector<std::size_t> count(tree.edge_count(), 0);
  for (EdgeId leaf : set.members()) count[leaf] = 1;
  for (EdgeId a = tree.edge_count(); a-- > 1;) count[tree.parent_or_none(a)] += count[a];
  return count;
}

}  // namespace detail

/**
 * Relative capacities c_a = c_{a,p}(E_a) of every tent, by one bottom-up pass.
 * Sons combine in parallel (capacities add) and the edge a itself is in
 * series with them: c_a = C / (1 + C^{p'-1})^{p-1} with C the sons' sum.
 */
inline std::vector<double> relative_capacities(const Tree& tree, const BoundarySet& set, const Exponent& p) {
  detail::require_set(tree, set);
  std::vector<double> cap(tree.edge_count(), 0.0);
  std::vector<double> sons(tree.edge_count(), 0.0);
  for (EdgeId a = tree.edge_count(); a-- > 0;) {
    if (tree.is_leaf(a)) {
      cap[a] = set.contains(a) ? 1.0 : 0.0;
    } else if (sons[a] > 0.0) {
      cap[a] = sons[a] / std::pow(1.0 + std::pow(sons[a], p.conj() - 1.0), p.p() - 1.0);
    }
    if (a > 0) sons[tree.parent_or_none(a)] += cap[a];
  }
  return cap;
}

/// p-capacity, equilibrium function and equilibrium measure by exact recursion.
inline EquilibriumResult capacity_recursive(const Tree& tree, const BoundarySet& set, const Exponent& p) {
  const std::vector<double> cap = relative_capacities(tree, set, p);
  const std::size_t n = tree.edge_count();

  // Top-down: `remaining[a]` is the potential still to be gained below b(a).
  // The optimal split puts the fraction C^{p'-1} / (1 + C^{p'-1}) on a.
  EdgeFn f(n);
  std::vector<double> remaining(n, 0.0);
  remaining[0] = 1.0;
  for (EdgeId a = 0; a < n; ++a) {
    if (cap[a] == 0.0) continue;
    if (tree.is_leaf(a)) {
      f[a] = remaining[a];
      continue;
    }
    double sons = 0.0;
    for (EdgeId b : tree.children(a)) sons += cap[b];
    const double x = std::pow(sons, p.conj() - 1.0);
    f[a] = remaining[a] * x / (1.0 + x);
    const double rest = remaining[a] / (1.0 + x);
    for (EdgeId b : tree.children(a)) remaining[b] = rest;
  }

  std::vector<double> masses(tree.leaf_count(), 0.0);
  for (EdgeId leaf : set.members()) masses[tree.leaf_index(leaf)] = std::pow(f[leaf], p.p() - 1.0);

  return EquilibriumResult{cap[0], std::move(f), Charge(std::move(masses)), p, set, "recursive", 0.0};
}

namespace detail {

/**
 * Leaves of a set in depth-first order, plus the list of blocks (meet edge,
 * two son ranges) that cover every off-diagonal pair exactly once. Fills
 * matrices of the form G(l, k) = W(meet(l, k)) in O(m^2).
 */
class MeetBlocks {
 public:
  MeetBlocks(const Tree& tree, std::span<const EdgeId> leaves) {
    std::vector<char> wanted(tree.edge_count(), 0);
    for (EdgeId l : leaves) wanted[l] = 1;
    std::vector<std::size_t> lo(tree.edge_count()), hi(tree.edge_count());
    // Iterative post-order DFS, sons in order.
    std::vector<std::pair<EdgeId, std::size_t>> stack{{0, 0}};
    lo[0] = 0;
    while (!stack.empty()) {
      auto& [a, next] = stack.back();
      const auto sons = tree.children(a);
      if (next == 0) {
        lo[a] = order_.size();
        if (sons.empty() && wanted[a]) order_.push_back(a);
      }
      if (next < sons.size()) {
        const EdgeId b = sons[next++];
        stack.emplace_back(b, 0);
        continue;
      }
      hi[a] = order_.size();
      if (sons.size() > 1) {
        for (std::size_t i = 0; i < sons.size(); ++i)
          for (std::size_t j = i + 1; j < sons.size(); ++j) {
            const EdgeId u = sons[i], v = sons[j];
            if (lo[u] < hi[u] && lo[v] < hi[v]) blocks_.push_back({a, lo[u], hi[u], lo[v], hi[v]});
          }
      }
      stack.pop_back();
    }
  }

  std::span<const EdgeId> order() const noexcept { return order_; }

  /// G(i, j) = weight[meet] for i != j, G(i, i) = weight[leaf i].
  Eigen::MatrixXd fill(std::span<const double> weight) const {
    const auto m = static_cast<Eigen::Index>(order_.size());
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) g(i, i) = weight[order_[static_cast<std::size_t>(i)]];
    for (const Block& b : blocks_) {
      const double w = weight[b.meet];
      for (std::size_t i = b.a_lo; i < b.a_hi; ++i)
        for (std::size_t j = b.b_lo; j < b.b_hi; ++j) {
          g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
          g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
        }
    }
    return g;
  }

 private:
  struct Block {
    EdgeId meet;
    std::size_t a_lo, a_hi, b_lo, b_hi;
  };
  std::vector<EdgeId> order_;
  std::vector<Block> blocks_;
};

}  // namespace detail

/**
 * p-capacity by convex optimization, independent of the tree recursion.
 *
 * Maximizes the Lagrangian dual of min Σ|f|^p s.t. If >= 1 on E,
 *   g(y) = Σ y - (p-1) Σ_a (M_a / p)^{p'},  M = I*y,  y >= 0,
 * with damped Newton steps. Each iterate yields a feasible primal f (the
 * dual's minimizer rescaled so min_E If = 1) and the lower bound
 * y(E)^p / ℰ_p(y)^{p-1}; iteration stops when the gap is below
 * tol * max(1, capacity).
 */
inline EquilibriumResult capacity_optimize(const Tree& tree, const BoundarySet& set, const Exponent& p,
                                           double tol = 1e-9, int max_iter = 200) {
  detail::require_set(tree, set);
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
  const std::size_t n = tree.edge_count();
  if (set.empty()) {
    return EquilibriumResult{0.0, EdgeFn(n), Charge::zero(tree), p, set, "optimize", tol};
  }
  const double pp = p.p(), pc = p.conj();
  const detail::MeetBlocks layout(tree, set.members());
  const auto order = layout.order();
  const auto m = static_cast<Eigen::Index>(order.size());

  std::vector<double> mass(tree.leaf_count(), 0.0);
  auto charge_of = [&](const Eigen::VectorXd& y) {
    std::fill(mass.begin(), mass.end(), 0.0);
    for (Eigen::Index i = 0; i < m; ++i) mass[tree.leaf_index(order[static_cast<std::size_t>(i)])] = y(i);
    return Charge(mass);
  };
  struct Eval {
    EdgeFn M, f;
    double dual = 0.0;
    Eigen::VectorXd grad;
    VertexFn If;
  };
  auto evaluate = [&](const Eigen::VectorXd& y) {
    Eval ev;
    ev.M = copotential(tree, charge_of(y));
    ev.f = EdgeFn(n);
    double penalty = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (ev.M[a] <= 0.0) continue;
      const double r = ev.M[a] / pp;
      ev.f[a] = std::pow(r, pc - 1.0);
      penalty += std::pow(r, pc);
    }
    ev.dual = y.sum() - (pp - 1.0) * penalty;
    ev.If = potential(tree, ev.f);
    ev.grad.resize(m);
    for (Eigen::Index i = 0; i < m; ++i)
      ev.grad(i) = 1.0 - ev.If[tree.end_vertex(order[static_cast<std::size_t>(i)])];
    return ev;
  };
  auto optimal_scale = [&](const Eigen::VectorXd& y) {
    const EdgeFn M = copotential(tree, charge_of(y));
    double q = 0.0;
    for (double v : M)
      if (v > 0.0) q += std::pow(v / pp, pc);
    return std::pow(y.sum() / (pp * q), pp - 1.0);
  };

  Eigen::VectorXd y = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  y *= optimal_scale(y);

  double best_upper = std::numeric_limits<double>::infinity();
  double best_lower = 0.0;
  EdgeFn best_f(n);
  Eigen::VectorXd best_y = y;

  for (int iter = 0; iter < max_iter; ++iter) {
    const Eval ev = evaluate(y);

    // Feasible primal: scale f so the smallest potential on E equals 1.
    double min_if = std::numeric_limits<double>::infinity();
    for (EdgeId l : order) min_if = std::min(min_if, ev.If[tree.end_vertex(l)]);
    double upper = 0.0;
    for (double v : ev.f) upper += std::pow(v / min_if, pp);
    const double total = y.sum();
    const double lower = std::max(ev.dual, std::pow(total, pp) / std::pow(energy_of_copotential(ev.M, p), pp - 1.0));
    if (upper < best_upper) {
      best_upper = upper;
      best_f = ev.f;
      for (double& v : best_f.raw()) v /= min_if;
      best_y = y;
    }
    best_lower = std::max(best_lower, lower);
    if (best_upper - best_lower <= tol * std::max(1.0, best_upper)) {
      std::vector<double> masses(tree.leaf_count(), 0.0);
      for (Eigen::Index i = 0; i < m; ++i)
        masses[tree.leaf_index(order[static_cast<std::size_t>(i)])] = best_y(i) / pp;
      return EquilibriumResult{best_upper, std::move(best_f), Charge(std::move(masses)), p, set, "optimize", tol};
    }

    // Newton direction: (A diag(d) A^T) step = grad, d = ∂f/∂M.
    std::vector<double> d(n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
      if (ev.M[a] > 0.0) d[a] = (pc - 1.0) / pp * std::pow(ev.M[a] / pp, pc - 2.0);
    const VertexFn cumulative = potential(tree, EdgeFn(d));
    std::vector<double> weight(n);
    for (std::size_t a = 0; a < n; ++a) weight[a] = cumulative[tree.end_vertex(a)];
    const Eigen::MatrixXd h = layout.fill(weight);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step = ldlt.solve(ev.grad);
    double slope = ev.grad.dot(step);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || !(slope > 0.0)) {
      step = ev.grad;
      slope = ev.grad.squaredNorm();
    }

    double t = 1.0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (step(i) < 0.0) t = std::min(t, -0.95 * y(i) / step(i));
    // Near the optimum the dual is flat to rounding while the primal bound is
    // still first order in the gradient, so a step that keeps the dual within
    // rounding and halves the gradient is also accepted.
    const double flat = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(ev.dual));
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = y + t * step;
      if ((trial.array() <= 0.0).any()) continue;
      const Eval next = evaluate(trial);
      if (next.dual >= ev.dual + 1e-4 * t * slope ||
          (next.dual >= ev.dual - flat && next.grad.norm() <= 0.5 * ev.grad.norm())) {
        y = trial;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  throw SolverError("capacity optimizer did not reach the requested gap", best_upper, best_lower);
}

/**
 * Full-boundary capacity of a spherically symmetric tree with `levels` edge
 * levels (0 .. levels-1): (Σ_k N_k^{1-p'})^{1-p}, N_k = d_1 ... d_k. The last
 * degree repeats when the list is short.
 */
inline double spherical_capacity(std::span<const int> degrees, int levels, const Exponent& p) {
  if (levels < 1) throw ParameterError("levels must be >= 1");
  if (levels > 1 && degrees.empty()) throw ParameterError("degree sequence is empty");
  double log_n = 0.0;
  double sum = 0.0;
  for (int k = 0; k < levels; ++k) {
    if (k > 0) {
      const auto i = static_cast<std::size_t>(k - 1);
      const int d = i < degrees.size() ? degrees[i] : degrees.back();
      if (d < 1) throw ParameterError("degrees must be >= 1");
      log_n += std::log(static_cast<double>(d));
    }
    sum += std::exp((1.0 - p.conj()) * log_n);
  }
  return std::pow(sum, 1.0 - p.p());
}

/**
 * Residuals of the two rescaling identities for an equilibrium result:
 * r1 = max_a max_{leaves below a} |μ^E - (1 - IM_p(b(a)))^{p-1} μ^{E_a}| with
 * μ^{E_a} solved independently on the tent T_a; r2 = max_a |M(a)(1 -
 * IM_p(b(a))) - Σ_{b>=a} M(b)^{p'}|.
 *
 * For r1 the deficit is summed upward from a leaf of E below a (where
 * IM_p = 1): 1 minus a sum close to 1 loses digits that the power p-1 < 1
 * would then amplify.
 */
inline std::pair<double, double> rescaling_residuals(const Tree& tree, const EquilibriumResult& result) {
  const Exponent& p = result.p;
  const EdgeFn m = copotential(tree, result.eq_measure);
  const EdgeFn mp = footnote_map(m, p);
  const VertexFn imp = potential(tree, mp);
  const EdgeFn tails = subtree_energies(tree, m, p);
  const auto below = detail::members_below(tree, result.set);

  // 1 - IM_p(b(a)) as Σ M_p along a path from b(a) down to a leaf of E.
  std::vector<double> from_below(tree.edge_count(), 0.0);
  for (EdgeId a = tree.edge_count(); a-- > 0;) {
    if (below[a] == 0) continue;
    double rest = 0.0;
    for (EdgeId c : tree.children(a))
      if (below[c] > 0) {
        rest = from_below[c];
        break;
      }
    from_below[a] = mp[a] + rest;
  }

  double r1 = 0.0, r2 = 0.0;
  for (EdgeId a = 0; a < tree.edge_count(); ++a) {
    const double deficit = 1.0 - imp[tree.begin_vertex(a)];
    r2 = std::max(r2, std::abs(m[a] * deficit - tails[a]));
    if (below[a] == 0) continue;
    const Tent t = tent(tree, a);
    const EquilibriumResult local = capacity_recursive(t.tree, t.restrict(result.set), p);
    const double scale = std::pow(from_below[a], p.p() - 1.0);
    for (EdgeId leaf : t.tree.leaves()) {
      const double global = result.eq_measure[tree.leaf_index(t.origin[leaf])];
      const double rescaled = scale * local.eq_measure[t.tree.leaf_index(leaf)];
      r1 = std::max(r1, std::abs(global - rescaled));
    }
  }
  return {r1, r2};
}

/**
 * Best certified lower bound μ(E)^p / ℰ_p(μ)^{p-1} over the candidates.
 * Candidates must be nonnegative, nonzero and carried by E.
 */
inline double dual_admissibility_check(const Tree& tree, const BoundarySet& set, const Exponent& p,
                                       std::span<const Charge> candidates) {
  detail::require_set(tree, set);
  double best = 0.0;
  for (const Charge& mu : candidates) {
    detail::require_leaves(tree, mu);
    const auto leaves = tree.leaves();
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (mu[i] < 0.0) throw ValidationError("candidate measure has negative mass");
      if (mu[i] > 0.0 && !set.contains(leaves[i])) throw ValidationError("candidate measure charges a leaf outside E");
      total += mu[i];
    }
    if (total <= 0.0) throw ValidationError("candidate measure is zero");
    best = std::max(best, std::pow(total, p.p()) / std::pow(energy(tree, mu, p), p.p() - 1.0));
  }
  return best;
}

}  // namespace arbor
