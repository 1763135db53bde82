#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "arbor/dirichlet.hpp"
#include "support.hpp"

namespace arbor {
namespace {

BoundaryData random_data(std::mt19937_64& rng, const Tree& t) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  BoundaryData d{std::vector<double>(t.leaf_count()), u(rng)};
  for (double& v : d.values) v = u(rng);
  return d;
}

TEST(Poisson, Examples) {
  const Tree d1 = build(TreeSpec::homogeneous(2, 1));
  const BoundaryData ones{std::vector<double>(2, 1.0), 0.0};
  EXPECT_NEAR(poisson(d1, ones)[1], 2.0 / 3.0, 1e-15);

  const Tree t = build(TreeSpec::spherical({3, 2}, 4));
  const BoundaryData escape{std::vector<double>(t.leaf_count(), 1.0), 0.0};
  const VertexFn u = poisson(t, escape);
  for (VertexId x = 0; x < t.vertex_count(); ++x)
    EXPECT_NEAR(u[x], harmonic_measure_exact(t, x).boundary_total(), 1e-14);

  const BoundaryData flat{std::vector<double>(t.leaf_count(), -1.25), -1.25};
  for (double v : poisson(t, flat)) EXPECT_NEAR(v, -1.25, 1e-14);

  EXPECT_THROW(poisson(t, ones), ParameterError);
}

TEST(Poisson, AgreesWithHarmonicMeasure) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 25; ++trial) {
    const Tree t = testing::random_tree(rng, 120);
    const BoundaryData phi = random_data(rng, t);
    const VertexFn u = poisson(t, phi);
    for (VertexId x = 0; x < t.vertex_count(); ++x) EXPECT_NEAR(u[x], poisson_at(t, phi, x), 1e-12);
  }
}

TEST(Poisson, MeanValueAndBoundaryValues) {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 40; ++trial) {
    const Tree t = testing::random_tree(rng, 500);
    const BoundaryData phi = random_data(rng, t);
    const VertexFn u = poisson(t, phi);
    EXPECT_EQ(u[0], phi.value_at_o);
    for (EdgeId leaf : t.leaves()) EXPECT_EQ(u[t.end_vertex(leaf)], phi.values[t.leaf_index(leaf)]);
    EXPECT_LE(p_laplacian(t, u, Exponent(2.0)).max_interior_abs(), 1e-12);
  }
}

TEST(Dirichlet, MaximumPrincipleAndComparison) {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 20; ++trial) {
    const Tree t = testing::random_tree(rng, 200);
    const BoundaryData phi = random_data(rng, t);
    BoundaryData psi = phi;
    for (double& v : psi.values) v += std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    psi.value_at_o += 0.1;
    const double lo = std::min(*std::min_element(phi.values.begin(), phi.values.end()), phi.value_at_o);
    const double hi = std::max(*std::max_element(phi.values.begin(), phi.values.end()), phi.value_at_o);
    for (double p : {1.6, 2.0, 3.0}) {
      const ExtensionOptions opts{1e-11, 200000};
      const VertexFn u = p_harmonic_extension(t, phi, Exponent(p), opts);
      const VertexFn w = p_harmonic_extension(t, psi, Exponent(p), opts);
      for (VertexId x = 0; x < t.vertex_count(); ++x) {
        EXPECT_GE(u[x], lo - 1e-12);
        EXPECT_LE(u[x], hi + 1e-12);
        EXPECT_LE(u[x], w[x] + 1e-9);
      }
    }
    const VertexFn a = poisson(t, phi), b = poisson(t, psi);
    for (VertexId x = 0; x < t.vertex_count(); ++x) {
      EXPECT_GE(a[x], lo - 1e-12);
      EXPECT_LE(a[x], hi + 1e-12);
      EXPECT_LE(a[x], b[x] + 1e-12);
    }
  }
}

TEST(PHarmonicExtension, MatchesPoissonAtP2) {
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 20; ++trial) {
    const Tree t = testing::random_tree(rng, 300);
    const BoundaryData phi = random_data(rng, t);
    const VertexFn u = p_harmonic_extension(t, phi, Exponent(2.0), ExtensionOptions{1e-13, 200000});
    const VertexFn v = poisson(t, phi);
    for (VertexId x = 0; x < t.vertex_count(); ++x) EXPECT_NEAR(u[x], v[x], 1e-9);
  }
}

TEST(PHarmonicExtension, PathRamp) {
  const int len = 8;
  const Tree t = build(TreeSpec::explicit_tree(NestedShape::path(len)));
  const BoundaryData phi{{1.0}, 0.0};
  for (double p : {1.5, 2.0, 4.0}) {
    const VertexFn g = p_harmonic_extension(t, phi, Exponent(p), ExtensionOptions{1e-12, 200000});
    for (VertexId x = 0; x < t.vertex_count(); ++x) EXPECT_NEAR(g[x], static_cast<double>(x) / len, 1e-9);
    EXPECT_LE(p_laplacian(t, g, Exponent(p)).max_interior_abs(), 1e-12);
  }
}

TEST(PHarmonicExtension, ReproducesEquilibriumPotential) {
  for (double p : {1.7, 2.0, 3.0}) {
    const Tree t = build(TreeSpec::spherical({2, 1, 3}, 5));
    const BoundaryData ones{std::vector<double>(t.leaf_count(), 1.0), 0.0};
    const VertexFn g = p_harmonic_extension(t, ones, Exponent(p), ExtensionOptions{1e-12, 200000});
    const VertexFn eq = potential(t, capacity_recursive(t, BoundarySet::full(t), Exponent(p)).eq_fn);
    for (VertexId x = 0; x < t.vertex_count(); ++x) EXPECT_NEAR(g[x], eq[x], 1e-9);
  }
}

TEST(PHarmonicExtension, BudgetExhaustion) {
  const Tree t = build(TreeSpec::homogeneous(2, 8));
  const BoundaryData phi = BoundaryRule::binary_expansion().realize(t);
  EXPECT_THROW(p_harmonic_extension(t, phi, Exponent(3.0), ExtensionOptions{1e-14, 1}), SolverError);
  EXPECT_THROW(p_harmonic_extension(t, phi, Exponent(3.0), ExtensionOptions{0.0, 10}), ParameterError);
}

TEST(BoundaryRule, Realizations) {
  const Tree t = build(TreeSpec::homogeneous(2, 3));
  const BoundaryData tent = BoundaryRule::tent_indicator({1, 0}).realize(t);
  EXPECT_EQ(tent.values, (std::vector<double>{0, 0, 0, 0, 1, 1, 0, 0}));
  const BoundaryData bin = BoundaryRule::binary_expansion().realize(t);
  for (std::size_t i = 0; i < bin.values.size(); ++i) EXPECT_DOUBLE_EQ(bin.values[i], static_cast<double>(i) / 8.0);
  const BoundaryData c = BoundaryRule::constant(2.5, 1.0).realize(t);
  EXPECT_EQ(c.value_at_o, 1.0);
  EXPECT_EQ(c.values, std::vector<double>(8, 2.5));
}

TEST(RegularConvergence, TentIndicatorInside) {
  const std::vector<int> depths{2, 4, 6, 8, 10, 12};
  const auto rows = regular_convergence(TreeSpec::homogeneous(2, 1), BoundaryRule::tent_indicator({1}),
                                        GeodesicRay::rightmost(), depths);
  ASSERT_EQ(rows.size(), depths.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].target, 1.0);
    if (i > 0) {
      EXPECT_LT(rows[i].gap, rows[i - 1].gap);
    }
  }
  EXPECT_LT(rows.back().gap, 1e-3);
}

TEST(RegularConvergence, TentIndicatorOutside) {
  const std::vector<int> depths{3, 6, 9, 12};
  const auto rows = regular_convergence(TreeSpec::homogeneous(2, 1), BoundaryRule::tent_indicator({1}),
                                        GeodesicRay::along({0, 1}), depths);
  for (const auto& r : rows) {
    EXPECT_EQ(r.target, 0.0);
    EXPECT_NEAR(r.gap, r.value, 0.0);
  }
  EXPECT_LT(rows.back().gap, 1e-3);
}

TEST(RegularConvergence, ConstantDataSeesOnlyTheRoot) {
  const std::vector<int> depths{2, 5, 8, 11};
  const auto rows = regular_convergence(TreeSpec::homogeneous(3, 1), BoundaryRule::constant(1.0, 0.0),
                                        GeodesicRay::leftmost(), depths);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Tree t = build(TreeSpec::homogeneous(3, depths[i]));
    const VertexId x = t.begin_vertex(GeodesicRay::leftmost().realize(t).back());
    EXPECT_NEAR(rows[i].gap, harmonic_measure_exact(t, x).root_mass, 1e-13);
    if (i > 0) {
      EXPECT_LT(rows[i].gap, rows[i - 1].gap);
    }
  }
}

TEST(EscapeProductBound, HoldsAlongRays) {
  const Tree t = build(TreeSpec::homogeneous(2, 9));
  for (std::size_t k : {0u, 2u, 5u})
    for (const auto& [lhs, rhs] : escape_product_bound(t, GeodesicRay::along({1, 0, 1, 1}), k)) {
      EXPECT_GE(lhs, -1e-15);
      EXPECT_LE(lhs, rhs + 1e-12);
    }
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const Tree r = testing::random_tree(rng, 300);
    const std::size_t len = GeodesicRay::rightmost().realize(r).size();
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, len - 1)(rng);
    for (const auto& [lhs, rhs] : escape_product_bound(r, GeodesicRay::rightmost(), k)) EXPECT_LE(lhs, rhs + 1e-12);
  }
  EXPECT_THROW(escape_product_bound(t, GeodesicRay::leftmost(), 40), ParameterError);
}

}  // namespace
}  // namespace arbor
