#pragma once

// Dirichlet problem on truncations: boundary values at leaf ends, an extra
// value at o for walks absorbed there.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "arbor/stochastic.hpp"
#include "arbor/tree_spec.hpp"

namespace arbor {

struct BoundaryData {
  std::vector<double> values;  ///< φ at leaf ends, leaves() order
  double value_at_o = 0.0;
};

/**
 * Boundary data given as a rule on rays, so that the same φ can be realized
 * on every truncation of a generator-backed tree.
 */
class BoundaryRule {
 public:
  using Fn = std::function<double(const Tree&, EdgeId)>;

  BoundaryRule(Fn fn, double value_at_o, std::string name)
      : fn_(std::move(fn)), value_at_o_(value_at_o), name_(std::move(name)) {}

  static BoundaryRule constant(double c, double value_at_o = 0.0) {
    return {[c](const Tree&, EdgeId) { return c; }, value_at_o, "constant:" + std::to_string(c)};
  }

  /// 1 on ∂T_β for β = the edge reached by `path`, 0 elsewhere.
  static BoundaryRule tent_indicator(std::vector<std::size_t> path) {
    std::string name = "tent:";
    for (std::size_t i = 0; i < path.size(); ++i) name += (i ? "," : "") + std::to_string(path[i]);
    return {[path = std::move(path)](const Tree& t, EdgeId leaf) {
              const auto sp = t.son_path(leaf);
              return sp.size() >= path.size() && std::equal(path.begin(), path.end(), sp.begin()) ? 1.0 : 0.0;
            },
            0.0, std::move(name)};
  }

  /// φ(ζ) = Σ_j 2^{-j} i_j / (k_j - 1) over the son choices of the ray
  /// (i_j of k_j sons; unary steps contribute 0). Lipschitz in the metric
  /// 2^{-|ζ ∧ η|}; truncations see the partial sum.
  static BoundaryRule binary_expansion() {
    return {[](const Tree& t, EdgeId leaf) {
              double v = 0.0, w = 0.5;
              EdgeId a = t.root_edge();
              for (std::size_t i : t.son_path(leaf)) {
                const std::size_t k = t.child_count(a);
                if (k > 1) v += w * static_cast<double>(i) / static_cast<double>(k - 1);
                w *= 0.5;
                a = t.children(a)[i];
              }
              return v;
            },
            0.0, "binary"};
  }

  double at(const Tree& tree, EdgeId leaf) const { return fn_(tree, leaf); }
  double value_at_o() const noexcept { return value_at_o_; }
  const std::string& name() const noexcept { return name_; }

  BoundaryData realize(const Tree& tree) const {
    BoundaryData d{{}, value_at_o_};
    d.values.reserve(tree.leaf_count());
    for (EdgeId leaf : tree.leaves()) d.values.push_back(fn_(tree, leaf));
    return d;
  }

 private:
  Fn fn_;
  double value_at_o_;
  std::string name_;
};

namespace detail {

inline void require_data(const Tree& tree, const BoundaryData& phi) {
  if (phi.values.size() != tree.leaf_count()) throw ParameterError("boundary data size does not match the leaves");
  for (double v : phi.values)
    if (!std::isfinite(v)) throw ParameterError("boundary data must be finite");
  if (!std::isfinite(phi.value_at_o)) throw ParameterError("boundary data must be finite");
}

}  // namespace detail

/**
 * P(φ)(x) = Σ φ(ℓ) λ_x(ℓ) + φ(o) λ_x(o) at every vertex, in two passes:
 * A(a) collects exits below a that never revisit b(a), then
 * P(e(a)) = A(a) + q(a) P(b(a)) top-down.
 */
inline VertexFn poisson(const Tree& tree, const BoundaryData& phi) {
  detail::require_data(tree, phi);
  const std::vector<double> q = return_probabilities(tree);
  std::vector<double> below(tree.edge_count(), 0.0);
  for (EdgeId a = tree.edge_count(); a-- > 0;) {
    if (tree.is_leaf(a)) {
      below[a] = phi.values[tree.leaf_index(a)];
    } else {
      double s = 0.0;
      for (EdgeId c : tree.children(a)) s += below[c];
      below[a] = q[a] * s;
    }
  }
  VertexFn out(tree.vertex_count());
  out[tree.root_vertex()] = phi.value_at_o;
  for (EdgeId a = 0; a < tree.edge_count(); ++a)
    out[tree.end_vertex(a)] = below[a] + q[a] * out[tree.begin_vertex(a)];
  return out;
}

/// ∫ φ dλ_x straight from the harmonic measure of x.
inline double poisson_at(const Tree& tree, const BoundaryData& phi, VertexId x) {
  detail::require_data(tree, phi);
  const HarmonicMeasure h = harmonic_measure_exact(tree, x);
  double v = phi.value_at_o * h.root_mass;
  for (std::size_t i = 0; i < phi.values.size(); ++i) v += phi.values[i] * h.boundary_mass[i];
  return v;
}

struct ExtensionOptions {
  double tol = 1e-10;       ///< on the interior p-Laplacian residual
  int max_sweeps = 200000;
};

/**
 * Minimizer of Σ |∇g|^p with g fixed at o and at the leaf ends, by
 * symmetric nonlinear Gauss–Seidel: every interior vertex in turn moves to
 * the exact minimizer of its local energy, leaves-to-root then root-to-leaves.
 */
inline VertexFn p_harmonic_extension(const Tree& tree, const BoundaryData& phi, const Exponent& p,
                                     ExtensionOptions options = {}) {
  detail::require_data(tree, phi);
  if (!(options.tol > 0.0)) throw ParameterError("tolerance must be positive");
  const double pm1 = p.p() - 1.0;

  // Start from the mean of the boundary data below each vertex.
  std::vector<double> sum(tree.edge_count(), 0.0), count(tree.edge_count(), 0.0);
  for (EdgeId a = tree.edge_count(); a-- > 0;) {
    if (tree.is_leaf(a)) {
      sum[a] = phi.values[tree.leaf_index(a)];
      count[a] = 1.0;
    }
    if (a > 0) {
      sum[tree.parent_or_none(a)] += sum[a];
      count[tree.parent_or_none(a)] += count[a];
    }
  }
  VertexFn g(tree.vertex_count());
  g[tree.root_vertex()] = phi.value_at_o;
  for (EdgeId a = 0; a < tree.edge_count(); ++a) g[tree.end_vertex(a)] = sum[a] / count[a];

  std::vector<double> nb;
  auto relax = [&](EdgeId a) {
    const VertexId x = tree.end_vertex(a);
    nb.clear();
    nb.push_back(g[tree.begin_vertex(a)]);
    for (EdgeId c : tree.children(a)) nb.push_back(g[tree.end_vertex(c)]);
    const auto [lo_it, hi_it] = std::minmax_element(nb.begin(), nb.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi - lo <= 0.0) {
      g[x] = lo;
      return;
    }
    auto slope = [&](double t) {
      double s = 0.0;
      for (double v : nb) s += signed_pow(t - v, pm1);
      return s;
    };
    std::uintmax_t iters = 200;
    const auto [l, r] = boost::math::tools::toms748_solve(slope, lo, hi, slope(lo), slope(hi),
                                                          boost::math::tools::eps_tolerance<double>(52), iters);
    g[x] = 0.5 * (l + r);
  };

  double residual = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    for (EdgeId a = tree.edge_count(); a-- > 0;)
      if (!tree.is_leaf(a)) relax(a);
    for (EdgeId a = 0; a < tree.edge_count(); ++a)
      if (!tree.is_leaf(a)) relax(a);
    residual = p_laplacian(tree, g, p).max_interior_abs();
    if (residual <= options.tol) return g;
  }
  throw SolverError("p-harmonic extension did not reach the residual tolerance (residual " +
                        std::to_string(residual) + ")",
                    residual, 0.0);
}

struct ConvergenceRow {
  int depth = 0;
  double value = 0.0;   ///< P(φ) at the deepest interior vertex of the ray
  double target = 0.0;  ///< φ(ζ)
  double gap = 0.0;
};

/**
 * |P(φ)(x) - φ(ζ)| along `ray` for each depth, x being b of the ray's leaf
 * edge. φ(ζ) is read at the ray's leaf on the deepest truncation.
 */
inline std::vector<ConvergenceRow> regular_convergence(const TreeSpec& spec, const BoundaryRule& rule,
                                                       const GeodesicRay& ray, std::span<const int> depths) {
  if (depths.empty()) return {};
  const int deepest = *std::max_element(depths.begin(), depths.end());
  const Tree far = build(spec.with_depth(deepest));
  const double target = rule.at(far, ray.realize(far).back());

  std::vector<ConvergenceRow> rows(depths.size());
  parallel_for(depths.size(), [&](std::size_t i) {
    const Tree tree = build(spec.with_depth(depths[i]));
    const VertexFn u = poisson(tree, rule.realize(tree));
    const VertexId x = tree.begin_vertex(ray.realize(tree).back());
    rows[i] = ConvergenceRow{depths[i], u[x], target, std::abs(u[x] - target)};
  });
  return rows;
}

/**
 * The two sides of 1 - λ_{x_n}(∂T_α) <= Π_{j=k}^{n} (1 - c_{2,α_j}(∂T_{α_j}))
 * for α = α_k on the realized ray and every n >= k, x_n = e(α_n).
 */
inline std::vector<std::pair<double, double>> escape_product_bound(const Tree& tree, const GeodesicRay& ray,
                                                                   std::size_t k) {
  const std::vector<EdgeId> prefix = ray.realize(tree);
  if (k >= prefix.size()) throw ParameterError("tent level beyond the realized ray");
  const std::vector<double> cap = relative_capacities(tree, BoundarySet::full(tree), Exponent(2.0));
  const EdgeId alpha = prefix[k];
  std::vector<std::pair<double, double>> out;
  double product = 1.0;
  for (std::size_t n = k; n < prefix.size(); ++n) {
    product *= 1.0 - cap[prefix[n]];
    const HarmonicMeasure h = harmonic_measure_exact(tree, tree.end_vertex(prefix[n]));
    double inside = 0.0;
    for (EdgeId leaf : tree.leaves())
      if (tree.is_below(leaf, alpha)) inside += h.boundary_mass[tree.leaf_index(leaf)];
    out.emplace_back(1.0 - inside, product);
  }
  return out;
}

}  // namespace arbor
