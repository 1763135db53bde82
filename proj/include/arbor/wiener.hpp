#pragma once

// Wiener-type diagnostics along a geodesic ray: relative capacities of the
// tents the ray passes through, the tails of the equilibrium function along
// it and the deficit ε = 1 - IM_p at the end of the realized prefix.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arbor/capacity.hpp"
#include "arbor/parallel.hpp"
#include "arbor/tree_spec.hpp"

namespace arbor {

enum class Verdict { regular_at_horizon, irregular_suspected, inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::regular_at_horizon: return "regular-at-horizon";
    case Verdict::irregular_suspected: return "irregular-suspected";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

/**
 * Horizon-stamped verdict. `epsilons` is the deficit over a sweep of
 * increasing depths, last entry deepest. A single entry can only ever be
 * regular or inconclusive.
 */
inline Verdict classify(double product, std::span<const double> epsilons) {
  if (epsilons.empty()) return Verdict::inconclusive;
  const double last = epsilons.back();
  if (product < 1e-6 && last < 1e-6) return Verdict::regular_at_horizon;
  if (epsilons.size() >= 3 && last > 1e-3) {
    bool stable = true;
    for (std::size_t k = epsilons.size() - 2; k < epsilons.size(); ++k)
      stable = stable && std::abs(epsilons[k] - epsilons[k - 1]) < 1e-3 * std::abs(epsilons[k]);
    if (stable) return Verdict::irregular_suspected;
  }
  return Verdict::inconclusive;
}

struct WienerReport {
  std::vector<int> levels;
  std::vector<EdgeId> prefix;
  std::vector<double> c_seq;         ///< c_{α_n,p}(E_{α_n})^{p'/p}
  std::vector<double> t_seq;         ///< Σ_{j >= n} M_p(α_j) within the prefix
  std::vector<double> partial_sums;
  std::vector<double> product_seq;   ///< Π_{j <= n} (1 - c_j)
  double epsilon = 1.0;
  Verdict verdict = Verdict::inconclusive;
  std::string status = "ok";

  /// max_N |Π_{n<=N}(1 - c_n)(ε + t_0) - (ε + t_{N+1})|, with t past the prefix = 0.
  double telescoping_residual() const {
    double worst = 0.0;
    for (std::size_t n = 0; n < product_seq.size(); ++n) {
      const double next = n + 1 < t_seq.size() ? t_seq[n + 1] : 0.0;
      worst = std::max(worst, std::abs(product_seq[n] * (epsilon + t_seq[0]) - (epsilon + next)));
    }
    return worst;
  }
};

namespace detail {

inline BoundarySet set_below(const Tree& tree, const BoundarySet& set, EdgeId a) {
  std::vector<EdgeId> members;
  for (EdgeId leaf : set.members())
    if (tree.is_below(leaf, a)) members.push_back(leaf);
  return BoundarySet::from_leaves(tree, std::move(members));
}

/// Longest prefix of `prefix` whose tents still meet E.
inline std::size_t prefix_in_closure(const Tree& tree, const BoundarySet& set, std::span<const EdgeId> prefix) {
  const auto below = members_below(tree, set);
  std::size_t n = 0;
  while (n < prefix.size() && below[prefix[n]] > 0) ++n;
  return n;
}

}  // namespace detail

/**
 * The Wiener series along `ray` up to level `horizon` (or the leaf it
 * reaches). Each c_n comes from an independent equilibrium solve on the tent
 * T_{α_n}; t_n and ε come from the global equilibrium of E.
 */
inline WienerReport wiener_series(const Tree& tree, const BoundarySet& set, const GeodesicRay& ray,
                                  const Exponent& p, std::optional<int> horizon = std::nullopt) {
  detail::require_set(tree, set);
  WienerReport r;
  std::vector<EdgeId> prefix = ray.realize(tree, horizon);
  const std::size_t inside = detail::prefix_in_closure(tree, set, prefix);
  if (inside < prefix.size()) {
    r.status = "ray leaves the closure of E at level " + std::to_string(tree.level(prefix[inside]));
    prefix.resize(inside);
  }
  r.prefix = prefix;
  if (prefix.empty()) return r;

  const EquilibriumResult global = capacity_recursive(tree, set, p);
  const EdgeFn mp = footnote_map(copotential(tree, global.eq_measure), p);

  const std::size_t n = prefix.size();
  r.c_seq.assign(n, 0.0);
  parallel_for(n, [&](std::size_t k) {
    const Tent sub = tent(tree, prefix[k]);
    const double c = capacity_recursive(sub.tree, sub.restrict(set), p).capacity;
    r.c_seq[k] = std::clamp(std::pow(c, p.conj() - 1.0), 0.0, 1.0);
  });

  r.t_seq.assign(n, 0.0);
  double tail = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    tail += mp[prefix[k]];
    r.t_seq[k] = tail;
  }
  r.epsilon = std::max(0.0, 1.0 - r.t_seq[0]);

  double sum = 0.0, prod = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    r.levels.push_back(tree.level(prefix[k]));
    sum += r.c_seq[k];
    prod *= 1.0 - r.c_seq[k];
    r.partial_sums.push_back(sum);
    r.product_seq.push_back(prod);
  }
  const std::vector<double> single{r.epsilon};
  r.verdict = classify(prod, single);
  return r;
}

/**
 * The same series written with global capacities only:
 * c_p(E_α)^{p'/p} / (1 - |α| c_p(E_α)^{p'/p}).
 */
inline std::vector<double> capacity_form_terms(const Tree& tree, const BoundarySet& set, const GeodesicRay& ray,
                                               const Exponent& p, std::optional<int> horizon = std::nullopt) {
  detail::require_set(tree, set);
  std::vector<EdgeId> prefix = ray.realize(tree, horizon);
  prefix.resize(detail::prefix_in_closure(tree, set, prefix));
  std::vector<double> terms(prefix.size(), 0.0);
  std::vector<char> bad(prefix.size(), 0);
  parallel_for(prefix.size(), [&](std::size_t k) {
    const double c = capacity_recursive(tree, detail::set_below(tree, set, prefix[k]), p).capacity;
    const double x = std::pow(c, p.conj() - 1.0);
    const double denom = 1.0 - tree.level(prefix[k]) * x;
    if (!(denom > 0.0)) {
      bad[k] = 1;
      return;
    }
    terms[k] = x / denom;
  });
  for (char b : bad)
    if (b) throw NumericalError("capacity-form denominator is not positive");
  return terms;
}

struct DeficitOptions {
  /// Where along the realized ray ε is read: index floor(fraction * (len - 1))
  /// of the prefix, at the edge's end vertex. 1 reads at the leaf end, which
  /// is always 0 for leaves in E; 0.5 keeps the probe away from the cut.
  double probe_fraction = 1.0;
};

/// ε = 1 - IM_p on the ray, one entry per truncation depth.
inline std::vector<double> deficit(const TreeSpec& spec, const SetRule& rule, const GeodesicRay& ray,
                                   const Exponent& p, std::span<const int> depths, DeficitOptions options = {}) {
  if (!(options.probe_fraction >= 0.0 && options.probe_fraction <= 1.0))
    throw ParameterError("probe fraction must lie in [0, 1]");
  std::vector<double> out(depths.size(), 0.0);
  parallel_for(depths.size(), [&](std::size_t i) {
    const Tree tree = build(spec.with_depth(depths[i]));
    const BoundarySet set = rule.resolve(tree);
    const EquilibriumResult eq = capacity_recursive(tree, set, p);
    const VertexFn pot = potential(tree, footnote_map(copotential(tree, eq.eq_measure), p));
    const std::vector<EdgeId> prefix = ray.realize(tree);
    const auto k = static_cast<std::size_t>(std::floor(options.probe_fraction * static_cast<double>(prefix.size() - 1)));
    out[i] = std::max(0.0, 1.0 - pot[tree.end_vertex(prefix[k])]);
  });
  return out;
}

}  // namespace arbor
