#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mcv/grid.hpp"
#include "mcv/interface.hpp"
#include "mcv/shell.hpp"

using namespace mcv;
constexpr double pi = std::numbers::pi;

TEST(Grid, SpacingAndNodes) {
  GridSpec g(3, 8.0, 48);
  EXPECT_DOUBLE_EQ(g.spacing(), 16.0 / 47.0);
  EXPECT_DOUBLE_EQ(g.coord(0), -8.0);
  EXPECT_NEAR(g.coord(47), 8.0, 1e-13);
  EXPECT_EQ(g.node_count(), 48u * 48u * 48u);
  // x_d runs fastest
  EXPECT_EQ(g.stride(2), 1u);
  EXPECT_EQ(g.stride(0), 48u * 48u);
  for (std::size_t p : {0ul, 1ul, 4711ul, g.node_count() - 1}) EXPECT_EQ(g.flat(g.indices(p)), p);
}

TEST(Grid, Validation) {
  EXPECT_THROW(GridSpec(3, 8.0, 7), InvalidArgument);
  EXPECT_THROW(GridSpec(3, 0.0, 16), InvalidArgument);
  EXPECT_THROW(GridSpec(4, 1.0, 16), InvalidArgument);
  EXPECT_THROW(GridSpec(2, 1.0, 16), InvalidArgument);
  EXPECT_NO_THROW(GridSpec(2, 1.0, 16, true));
}

TEST(Grid, TrapezoidWeightsIntegrateConstants) {
  for (int d : {2, 3}) {
    GridSpec g(d, 1.5, 11, true);
    double s = 0.0;
    for (double w : trapezoid_weights(g)) s += w;
    EXPECT_NEAR(s, g.box_volume(), 1e-12 * g.box_volume());
  }
}

TEST(Annulus, Bounds) {
  EXPECT_EQ(annulus_bounds(0).inner, 1.0);
  EXPECT_EQ(annulus_bounds(0).outer, 2.0);
  EXPECT_EQ(annulus_bounds(-1).inner, 0.5);
  EXPECT_EQ(annulus_bounds(-1).outer, 1.0);
  EXPECT_EQ(annulus_bounds(3).inner, 8.0);
  EXPECT_EQ(annulus_bounds(3).outer, 16.0);
  for (int j = -20; j < 20; ++j) {
    EXPECT_EQ(annulus_bounds(j).outer, annulus_bounds(j + 1).inner);
    EXPECT_EQ(annulus_bounds(j).outer, 2.0 * annulus_bounds(j).inner);
  }
}

TEST(Annulus, CoverL8H025) {
  // h = 16/64 = 0.25
  GridSpec g(3, 8.0, 65);
  ASSERT_DOUBLE_EQ(g.spacing(), 0.25);
  const auto c = dyadic_cover(g);
  ASSERT_EQ(c.size(), 7u);
  EXPECT_EQ(c.front().index, -2);
  EXPECT_EQ(c.back().index, 4);
}

TEST(Annulus, CoverL1H1) {
  // h = 1 would need N = 3, below the grid minimum, so use the (h, box radius) form.
  const auto c = dyadic_cover(1.0, std::sqrt(3.0));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.front().index, 0);
  EXPECT_EQ(c.back().index, 1);
}

TEST(Annulus, CoverGrowsDownwardUnderRefinement) {
  int prev = 100;
  for (int N : {9, 17, 33, 65, 129}) {
    const int jmin = dyadic_cover(GridSpec(3, 8.0, N)).front().index;
    EXPECT_LT(jmin, prev);
    prev = jmin;
  }
}

TEST(Annulus, RadiusSet) {
  GridSpec g(3, 8.0, 48);
  const auto r = radius_set(g);
  EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
  EXPECT_NE(std::find(r.begin(), r.end(), g.box_radius()), r.end());
  EXPECT_NE(std::find(r.begin(), r.end(), 1.5), r.end());
  RadiusOptions capped;
  capped.max_radius = 8.0;
  EXPECT_DOUBLE_EQ(radius_set(g, capped).back(), 8.0);
}

TEST(Interface, NormalFlat) {
  const auto n = normal_vector(flat_interface(), {0.3, -2.0}, 3);
  EXPECT_EQ(n[0], 0.0);
  EXPECT_EQ(n[1], 0.0);
  EXPECT_EQ(n[2], 1.0);
}

TEST(Interface, NormalTilted) {
  const auto n = normal_vector(tilted_interface(1.0), {0.7, 0.1}, 3);
  EXPECT_NEAR(n[0], -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(n[2], 0.70711, 1e-5);
  EXPECT_NEAR(normal_vector(tilted_interface(0.5), {0.0, 0.0}, 3)[2], 0.89443, 1e-5);
}

TEST(Interface, NormalIsUnitAndOriented) {
  const auto s = sinusoidal_interface(0.7, 1.3);
  for (double x1 = -5.0; x1 <= 5.0; x1 += 0.37) {
    const auto n = normal_vector(s, {x1, 0.2}, 3);
    EXPECT_NEAR(n[0] * n[0] + n[1] * n[1] + n[2] * n[2], 1.0, 1e-12);
    EXPECT_GT(n[2], 0.0);
    // points from Omega_- to Omega_+
    Point x{x1, 0.2, s.height({x1, 0.2})};
    Point above = x, below = x;
    for (int k = 0; k < 3; ++k) {
      above[k] += 1e-3 * n[k];
      below[k] -= 1e-3 * n[k];
    }
    EXPECT_EQ(side_of(s, above, 3), Side::plus);
    EXPECT_EQ(side_of(s, below, 3), Side::minus);
  }
}

TEST(Interface, Alpha) {
  GridSpec g(3, 8.0, 48);
  EXPECT_EQ(alpha_of(flat_interface(), g), 1.0);
  EXPECT_NEAR(alpha_of(tilted_interface(0.5), g), 0.89443, 1e-5);
  // odd N puts a node at x_1 = 0 where |cos| = 1
  EXPECT_NEAR(alpha_of(sinusoidal_interface(1.0, 1.0), GridSpec(3, 8.0, 49)), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Interface, AlphaRejectsDegenerateGraph) {
  GridSpec g(3, 8.0, 16);
  try {
    alpha_of(tilted_interface(1e7), g);
    FAIL() << "expected H1 violation";
  } catch (const HypothesisViolation& e) {
    EXPECT_EQ(e.hypothesis(), "H1");
  }
}

TEST(Interface, SideOf) {
  const auto f = flat_interface();
  EXPECT_EQ(side_of(f, {0, 0, 1}, 3), Side::plus);
  EXPECT_EQ(side_of(f, {0, 0, -1}, 3), Side::minus);
  EXPECT_EQ(side_of(f, {1, 1, 0}, 3), Side::plus);
}

TEST(Interface, Registry) {
  EXPECT_TRUE(make_interface("flat", {}).is_flat());
  EXPECT_DOUBLE_EQ(make_interface("tilted", {{"a", 0.25}}).height({2.0, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(make_interface("sinusoidal", {{"a", 2.0}, {"b", 0.5}}).height({pi, 0.0}), 2.0);
  EXPECT_THROW(make_interface("helix", {}), InvalidArgument);
}

double quadrature_sum(const InterfaceGraph& s, const GridSpec& g, double integrand = 1.0) {
  double a = 0.0;
  for (const auto& n : interface_quadrature(s, g)) a += n.weight * integrand;
  return a;
}

TEST(Interface, QuadratureArea) {
  EXPECT_NEAR(quadrature_sum(flat_interface(), GridSpec(3, 8.0, 48)), 256.0, 256.0 * 1e-10);
  EXPECT_NEAR(quadrature_sum(tilted_interface(0.5), GridSpec(3, 1.0, 48)), 4.0 * std::sqrt(1.25), 1e-10);
  EXPECT_NEAR(quadrature_sum(flat_interface(), GridSpec(3, 8.0, 48), 4.0), 4.0 * 256.0, 1e-8);
  EXPECT_NEAR(quadrature_sum(flat_interface(), GridSpec(2, 3.0, 20, true)), 6.0, 1e-12);
}

TEST(Shell, WeightsMatchSphereArea) {
  for (double R : {0.5, 1.0, 2.0, 4.0}) {
    EXPECT_NEAR(make_shell(3, R, 24).area(), 4.0 * pi * R * R, 1e-10 * 4.0 * pi * R * R);
    EXPECT_NEAR(make_shell(2, R, 24).area(), 2.0 * pi * R, 1e-10 * 2.0 * pi * R);
  }
}

TEST(Shell, IntegratesPolynomialsExactly) {
  // int_{S(1)} z^2 = 4 pi / 3, int x^2 y^2 = 4 pi / 15
  const auto q = make_shell(3, 1.0, 16);
  double z2 = 0.0, x2y2 = 0.0;
  for (std::size_t k = 0; k < q.weights.size(); ++k) {
    const auto x = q.node(k);
    z2 += q.weights[k] * x[2] * x[2];
    x2y2 += q.weights[k] * x[0] * x[0] * x[1] * x[1];
  }
  EXPECT_NEAR(z2, 4.0 * pi / 3.0, 1e-12);
  EXPECT_NEAR(x2y2, 4.0 * pi / 15.0, 1e-12);
}

TEST(Shell, GaussLegendre) {
  const auto gl = gauss_legendre(5);
  double s = 0.0, x4 = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    s += gl.weights[i];
    x4 += gl.weights[i] * std::pow(gl.nodes[i], 8);
  }
  EXPECT_NEAR(s, 2.0, 1e-14);
  EXPECT_NEAR(x4, 2.0 / 9.0, 1e-14);
}
