// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "arbor/arbor.hpp"
#include "support.hpp"

namespace {

using namespace arbor;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Values on the grid 2^-20 Z with |v| <= 1: sums of a few thousand of them are exact in double.
EdgeFn grid_edge_fn(std::mt19937_64& rng, const Tree& t) {
  std::uniform_int_distribution<int> u(-(1 << 20), 1 << 20);
  EdgeFn f(t.edge_count());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::ldexp(u(rng), -20);
  return f;
}

VertexFn grid_vertex_fn(std::mt19937_64& rng, const Tree& t) {
  std::uniform_int_distribution<int> u(-(1 << 20), 1 << 20);
  VertexFn g(t.vertex_count());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::ldexp(u(rng), -20);
  return g;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// 1. Two capacity solvers agree.
Outcome capacity_oracle() {
  struct Instance {
    Tree tree;
    BoundarySet set;
  };
  std::mt19937_64 rng(1001);
  std::vector<Instance> inst;
  for (int i = 0; i < 100; ++i) {
    Tree t = testing::random_tree(rng, 1000);
    BoundarySet e = testing::random_set(rng, t, std::uniform_real_distribution<double>(0.2, 0.9)(rng));
    inst.push_back({std::move(t), std::move(e)});
  }
  const std::vector<double> ps{1.5, 2.0, 3.0};
  std::vector<double> worst(inst.size() * ps.size(), 0.0);
  parallel_for(worst.size(), [&](std::size_t k) {
    const Instance& in = inst[k / ps.size()];
    const Exponent p(ps[k % ps.size()]);
    const double a = capacity_recursive(in.tree, in.set, p).capacity;
    const double b = capacity_optimize(in.tree, in.set, p).capacity;
    worst[k] = std::abs(a - b) / std::max(1.0, a);
  });
  const double w = *std::max_element(worst.begin(), worst.end());
  return {w <= 1e-8, fmt("300 solves, worst scaled gap %.2e", w)};
}

// 2. Capacity, exact escape and simulated escape on the dyadic tree.
Outcome escape_identity() {
  const Tree t = build(TreeSpec::homogeneous(2, 10));
  const double target = 1024.0 / 2047.0;
  const EscapeIdentity id = capacity_escape_identity(t, 100000, 2024);
  const EscapeIdentity again = capacity_escape_identity(t, 100000, 2024);
  const double e1 = std::abs(id.capacity - target), e2 = std::abs(id.exact_escape - target);
  const double z = std::abs(id.estimate.value - target) / id.estimate.std_error;
  const bool ok = e1 <= 1e-10 && e2 <= 1e-10 && z <= 3.0 && again.estimate.value == id.estimate.value;
  return {ok, fmt("exact errors %.1e / ", e1, e2) + fmt("%.1e, MC z-score %.2f", e2, z)};
}

// 3. Rescaling identities with independently solved tent equilibria.
Outcome rescaling() {
  std::mt19937_64 rng(1003);
  double r1 = 0.0, r2 = 0.0;
  for (int i = 0; i < 60; ++i) {
    const Tree t = testing::random_tree(rng, 400);
    const BoundarySet e = testing::random_set(rng, t);
    const Exponent p(std::uniform_real_distribution<double>(1.3, 4.0)(rng));
    const auto [a, b] = rescaling_residuals(t, capacity_recursive(t, e, p));
    r1 = std::max(r1, a);
    r2 = std::max(r2, b);
  }
  return {r1 <= 1e-9 && r2 <= 1e-9, fmt("60 instances, r1 %.2e, r2 %.2e", r1, r2)};
}

// 4. Telescoping identity and the capacity form of the Wiener terms.
Outcome telescoping() {
  std::mt19937_64 rng(1004);
  double tel = 0.0, form = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Tree t = testing::random_tree(rng, 600);
    const BoundarySet e = testing::random_set(rng, t, 0.6);
    const Exponent p(std::uniform_real_distribution<double>(1.3, 4.0)(rng));
    const GeodesicRay ray = i % 2 ? GeodesicRay::leftmost() : GeodesicRay::rightmost();
    const WienerReport r = wiener_series(t, e, ray, p);
    tel = std::max(tel, r.telescoping_residual());
    const auto terms = capacity_form_terms(t, e, ray, p);
    for (std::size_t k = 0; k < terms.size(); ++k)
      form = std::max(form, std::abs(terms[k] - r.c_seq[k]) / std::max(1.0, std::abs(r.c_seq[k])));
  }
  return {tel <= 1e-10 && form <= 1e-9, fmt("100 instances, telescoping %.2e, term gap %.2e", tel, form)};
}

// 5. Fundamental theorem and the harmonic-potential characterization.
Outcome calculus() {
  std::mt19937_64 rng(1005);
  bool exact = true;
  double mismatch = 0.0, additive_lap = 0.0, defect_min = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const Tree t = testing::random_tree(rng, 200);
    const EdgeFn f = grid_edge_fn(rng, t);
    const EdgeFn back = gradient(t, potential(t, f));
    const VertexFn g = grid_vertex_fn(rng, t);
    const VertexFn rebuilt = potential(t, gradient(t, g));
    for (std::size_t k = 0; k < f.size(); ++k) exact = exact && back[k] == f[k];
    for (std::size_t x = 0; x < g.size(); ++x) exact = exact && rebuilt[x] + g[0] == g[x];

    const Exponent p(std::uniform_real_distribution<double>(1.5, 4.0)(rng));
    const double lap = p_laplacian(t, potential(t, footnote_map(f, p)), p).max_interior_abs();
    const double defect = forward_defect(t, f);
    mismatch = std::max(mismatch, std::abs(lap - defect));
    if (t.edge_count() > t.leaf_count()) defect_min = std::min(defect_min, defect);

    const EdgeFn proj = copotential(t, leaf_charge(t, f));
    exact = exact && forward_defect(t, proj) == 0.0;
    additive_lap = std::max(additive_lap, p_laplacian(t, potential(t, footnote_map(proj, p)), p).max_interior_abs());
  }
  const bool ok = exact && mismatch <= 1e-9 && additive_lap <= 1e-9 && defect_min > 0.0;
  return {ok, std::string(exact ? "round trips exact" : "round trips NOT exact") +
                  fmt(", |lap - defect| %.1e, additive lap %.1e", mismatch, additive_lap)};
}

// 6. The non-uniqueness example.
Outcome counterexample_suite() {
  bool additive = true, vanishing = true, increasing = true, unique = true;
  double previous = 0.0;
  for (int s = 2; s <= 10; ++s) {
    const Counterexample ce = counterexample(s, 2);
    additive = additive && exact_forward_defect(ce.tree, ce.copotential) == Dyadic() &&
               exact_copotential(ce.tree, ce.leaf_masses) == ce.copotential;
    const auto im = exact_ray_potentials(ce);
    for (EdgeId leaf : ce.tree.leaves())
      if (leaf != ce.spine.back() && im[ce.tree.leaf_index(leaf)] != Dyadic()) vanishing = false;
    const WienerReport w = wiener_series(ce.tree, BoundarySet::full(ce.tree), GeodesicRay::leftmost(), Exponent(2.0));
    increasing = increasing && w.partial_sums.back() > previous;
    previous = w.partial_sums.back();
    const Charge zero = gram_solve(ce.tree, std::vector<double>(ce.tree.leaf_count(), 0.0));
    for (double m : zero.masses()) unique = unique && m == 0.0;
  }
  return {additive && vanishing && increasing && unique,
          fmt("spine depths 2..10, final partial sum %.4f", previous) + (additive ? "" : ", defect nonzero") +
              (vanishing ? "" : ", IM nonzero off spine") + (unique ? "" : ", nonzero Gram charge")};
}

// 7. Dirichlet convergence along rays plus maximum principle and comparison.
Outcome dirichlet_suite() {
  std::mt19937_64 rng(1007);
  const std::vector<int> depths{2, 4, 6, 8, 10, 12};
  const std::vector<std::vector<std::size_t>> tents{{1}, {0, 1}, {1, 1, 0}};
  double worst_final = 0.0;
  bool decreasing = true;
  int rays = 0;
  for (const auto& tent : tents) {
    const BoundaryRule rule = BoundaryRule::tent_indicator(tent);
    for (int k = 0; k < 8; ++k) {
      std::vector<std::size_t> path(12);
      for (auto& b : path) b = rng() & 1;
      const auto rows = regular_convergence(TreeSpec::homogeneous(2, 1), rule, GeodesicRay::along(path), depths);
      // Truncations above the tent see φ = 0 everywhere, so the sequence starts once the tent is resolved.
      for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i - 1].depth > static_cast<int>(tent.size()))
          decreasing = decreasing && rows[i].gap <= rows[i - 1].gap;
      worst_final = std::max(worst_final, rows.back().gap);
      ++rays;
    }
  }

  bool principle = true;
  for (int depth = 2; depth <= 12; depth += 2) {
    const Tree t = build(TreeSpec::homogeneous(2, depth));
    for (const auto& tent : tents) {
      const BoundaryData lo = BoundaryRule::tent_indicator(tent).realize(t);
      BoundaryData hi = lo;
      for (EdgeId leaf : t.leaves())
        if (t.son_path(leaf)[0] == 0 && t.son_path(leaf).back() == 0) hi.values[t.leaf_index(leaf)] = 1.0;
      std::vector<std::pair<VertexFn, VertexFn>> sols{{poisson(t, lo), poisson(t, hi)}};
      if (depth <= 8)
        for (double p : {1.5, 3.0})
          sols.emplace_back(p_harmonic_extension(t, lo, Exponent(p), ExtensionOptions{1e-11, 200000}),
                            p_harmonic_extension(t, hi, Exponent(p), ExtensionOptions{1e-11, 200000}));
      for (const auto& [u, w] : sols)
        for (VertexId x = 0; x < t.vertex_count(); ++x)
          principle = principle && u[x] >= -1e-12 && w[x] <= 1.0 + 1e-12 && u[x] <= w[x] + 1e-9;
    }
  }
  return {decreasing && worst_final < 1e-3 && principle,
          std::to_string(rays) + " rays" + fmt(", worst gap at depth 12 %.2e", worst_final) +
              (decreasing ? "" : ", gap not decreasing") + (principle ? "" : ", max principle/comparison broken")};
}

// 8. Carleson norms, the capacity sandwich and the radial-variation bound.
Outcome carleson_suite() {
  std::mt19937_64 rng(1008);
  double norm_err = 0.0, sandwich = -1.0, sobolev_excess = -1.0;
  for (int i = 0; i < 40; ++i) {
    const Tree t = testing::random_tree(rng, 400);
    const BoundarySet e = testing::random_set(rng, t);
    const Exponent p(std::uniform_real_distribution<double>(1.3, 4.0)(rng));
    const EquilibriumResult eq = capacity_recursive(t, e, p);
    norm_err = std::max(norm_err, std::abs(carleson_norm(t, eq.eq_measure, p).cm_norm - 1.0));
    for (int k = 0; k < 100; ++k) {
      const CarlesonReport r = carleson_norm(t, testing::random_charge_on(rng, t, e), p);
      sandwich = std::max(sandwich, (r.capacity_lower_bound - eq.capacity) / std::max(1.0, eq.capacity));
    }
    const VertexFn g = testing::random_vertex_fn(rng, t, -2.0, 2.0);
    const double bound = sobolev_norm(t, g, p);
    for (int n = 0; n <= t.depth(); ++n)
      sobolev_excess =
          std::max(sobolev_excess, (sobolev_norm(t, radial_variation(t, g, n), p) - bound) / std::max(1.0, bound));
  }
  const bool ok = norm_err <= 1e-9 && sandwich <= 1e-9 && sobolev_excess <= 1e-12;
  return {ok, fmt("|CM - 1| %.1e, worst sandwich excess %.1e", norm_err, sandwich) +
                  fmt(", Sobolev excess %.1e", sobolev_excess)};
}

// 9. Σ (M - V)(M_p - V_p) >= 0 with equality exactly for equal charges.
Outcome uniqueness_sign() {
  std::mt19937_64 rng(1009);
  double most_negative = 0.0;
  bool zero_iff_equal = true;
  for (int i = 0; i < 1000; ++i) {
    const Tree t = testing::random_tree(rng, 150);
    const Exponent p(std::uniform_real_distribution<double>(1.3, 4.0)(rng));
    const Charge mu = testing::random_charge(rng, t), nu = testing::random_charge(rng, t);
    const double s = uniqueness_pairing(t, mu, nu, p);
    most_negative = std::min(most_negative, s);
    if (!(s > 0.0) || uniqueness_pairing(t, mu, mu, p) != 0.0) zero_iff_equal = false;
    // Moving ν toward μ drives the pairing to zero, and only in the limit.
    double prev = s;
    for (double h : {1e-1, 1e-2, 1e-3, 1e-4}) {
      std::vector<double> m(mu.masses().begin(), mu.masses().end());
      for (std::size_t k = 0; k < m.size(); ++k) m[k] += h * (nu[k] - mu[k]);
      const double sh = uniqueness_pairing(t, mu, Charge(m), p);
      if (!(sh > 0.0 && sh < prev)) zero_iff_equal = false;
      prev = sh;
    }
    if (prev > 1e-4 * s) zero_iff_equal = false;
  }
  return {most_negative >= 0.0 && zero_iff_equal,
          fmt("1000 pairs, min pairing %.2e", most_negative) + (zero_iff_equal ? "" : ", zero set check failed")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"capacity oracle equivalence", capacity_oracle},
      {"capacity = escape probability", escape_identity},
      {"rescaling residuals", rescaling},
      {"Wiener telescoping identity", telescoping},
      {"calculus round trips", calculus},
      {"counterexample reproduction", counterexample_suite},
      {"Dirichlet convergence", dirichlet_suite},
      {"Carleson suite", carleson_suite},
      {"uniqueness sign identity", uniqueness_sign},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu: %s  %s (%s; %.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
