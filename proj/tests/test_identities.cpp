#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mcv/identities.hpp"
#include "mcv/solver.hpp"

using namespace mcv;

namespace {

// --- radial distribution oracle -------------------------------------------
// chi(r) = (1 + r^2) exp(-r^2), smooth and even in r.
double chi(double r) { return (1.0 + r * r) * std::exp(-r * r); }

double fd_dr(double r) {
  const double dl = 1e-4;
  return (chi(r + dl) - chi(r - dl)) / (2.0 * dl);
}

double fd_lap(double r, int d) {
  const double dl = 1e-3;
  const double d2 = (chi(r + dl) - 2.0 * chi(r) + chi(r - dl)) / (dl * dl);
  return d2 + (d - 1.0) * (chi(r + dl) - chi(r - dl)) / (2.0 * dl) / r;
}

template <class Fn>
double simpson(Fn&& fn, double a, double b, int m = 20000) {
  const double step = (b - a) / m;
  double s = fn(a) + fn(b);
  for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * fn(a + k * step);
  return s * step / 3.0;
}

// int F Lap(chi) r^{d-1} dr, split at R so the jump of F sits on a panel edge.
template <class F>
double weak_laplacian(F&& field, double R, int d) {
  auto integrand = [&](double r) { return field(r) * fd_lap(r, d) * std::pow(r, d - 1); };
  const double r0 = 1e-6;  // chi is even; the r^{d-1} weight kills the origin
  return simpson(integrand, r0, R - 1e-12) + simpson(integrand, R + 1e-12, 14.0);
}

double claimed(const RadialDistribution& T, int d) {
  const double tail = simpson([&](double r) { return chi(r) * std::pow(r, d - 4); }, T.R, 14.0);
  const double Rd = std::pow(T.R, d - 1);
  return T.pair(tail, chi(T.R) * Rd, fd_dr(T.R) * Rd);
}

Point on_axis(double r) { return {r, 0.0, 0.0}; }

// --- manufactured solutions -------------------------------------------------
enum class Scene { piecewise, graded };

RefractionIndex scene_index(Scene s) {
  return s == Scene::piecewise ? piecewise_constant_index(1.0, 2.0) : graded_index(1.0, 2.0, 0.1, 1.5);
}

ClosedFormField mms_exact() {
  const double a = 0.25;
  return modulated_gaussian(a, {0.3, -0.2, 0.4}, {1.2 * a, 0.0, 0.6 * a});
}

const SolutionView& mms_view(Scene s, int N) {
  static std::map<std::pair<Scene, int>, SolutionView> cache;
  const auto key = std::make_pair(s, N);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  GridSpec g(3, 8.0, N);
  const auto n = scene_index(s);
  const auto gamma = flat_interface();
  const auto f = mms_source(mms_exact(), n, gamma, 1.0, g);
  SolverSettings st;
  st.method = KrylovMethod::bicgstab;
  st.tol = 1e-10;
  const auto u = solve(HelmholtzOperator(g, 1.0, n, gamma), f, st).u;
  return cache.emplace(key, make_view(u, f, n, gamma, 1.0)).first->second;
}

IdentityResidual named(const SolutionView& v, const std::string& name, double R = 2.0) {
  const auto pair = multiplier_pair(R, v.grid);
  if (name == "eg1") return residual_eg1(v, pair);
  if (name == "eg2") return residual_eg2(v, pair);
  if (name == "eg3") return residual_eg3(v, pair);
  if (name == "eg4") return residual_eg4(v);
  return residual_deux(v);
}

double term(const IdentityResidual& r, const std::string& name) {
  for (const auto& [k, v] : r.terms)
    if (k == name) return v;
  ADD_FAILURE() << "no term " << name << " in " << r.name;
  return std::nan("");
}

}  // namespace

TEST(Multiplier, InsideBall) {
  GridSpec g(3, 8.0, 16);
  const auto m = multiplier_pair(2.0, g);
  const Point x{0.3, -0.5, 1.0};
  const Point gp = m.grad_psi(x);
  for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(gp[k], x[k] / 2.0);
  EXPECT_DOUBLE_EQ(m.lap_psi(x), 1.5);
  EXPECT_DOUBLE_EQ(m.phi(x), 0.25);
}

TEST(Multiplier, OutsideBall) {
  GridSpec g(3, 8.0, 16);
  const double R = 1.5;
  const auto m = multiplier_pair(R, g);
  EXPECT_DOUBLE_EQ(m.lap_psi(on_axis(2.0 * R)), 1.0 / R);
  EXPECT_EQ(m.phi(on_axis(2.0 * R)), 0.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ud(-6.0, 6.0);
  for (int t = 0; t < 200; ++t) {
    const Point x{ud(rng), ud(rng), ud(rng)};
    const double r = norm(x, 3);
    const Point gp = m.grad_psi(x);
    EXPECT_LE(norm(gp, 3), 1.0 + 1e-15);
    if (r <= R) continue;
    const auto H = m.hess_psi(x);
    double xhx = 0.0, tr = 0.0;
    for (int a = 0; a < 3; ++a) {
      tr += H[a][a];
      for (int b = 0; b < 3; ++b) xhx += x[a] * H[a][b] * x[b];
    }
    EXPECT_NEAR(xhx, 0.0, 1e-12 * r);
    EXPECT_NEAR(tr, 2.0 / r, 1e-14);
    EXPECT_NEAR(tr, m.lap_psi(x), 1e-14);
  }
}

TEST(Multiplier, RejectsNonpositiveRadius) {
  EXPECT_THROW(multiplier_pair(0.0, GridSpec(3, 8.0, 16)), InvalidArgument);
}

TEST(RadialOracle, LapPhi) {
  for (int d : {2, 3})
    for (double R : {0.5, 1.0, 2.0}) {
      const MultiplierPair m{R, d};
      const double weak = weak_laplacian([&](double r) { return m.phi(on_axis(r)); }, R, d);
      EXPECT_NEAR(weak, claimed(m.lap_phi(), d), 1e-4 * std::abs(weak)) << "d=" << d << " R=" << R;
    }
}

TEST(RadialOracle, BilapPsi) {
  for (int d : {2, 3})
    for (double R : {0.5, 1.0, 2.0}) {
      const MultiplierPair m{R, d};
      const double weak = weak_laplacian([&](double r) { return m.lap_psi(on_axis(r)); }, R, d);
      EXPECT_NEAR(weak, claimed(m.bilap_psi(), d), 1e-4 * std::abs(weak)) << "d=" << d << " R=" << R;
    }
}

TEST(RadialOracle, LapW) {
  for (int d : {2, 3})
    for (double R : {0.5, 1.0, 2.0}) {
      const MultiplierPair m{R, d};
      auto w = [&](double r) { return 2.0 * m.phi(on_axis(r)) - m.lap_psi(on_axis(r)); };
      const double weak = weak_laplacian(w, R, d);
      EXPECT_NEAR(weak, claimed(m.lap_w(), d), 1e-4 * std::abs(weak)) << "d=" << d << " R=" << R;
    }
}

TEST(Residuals, ZeroFieldsBalance) {
  GridSpec g(3, 8.0, 16);
  const ComplexGridField z(g);
  const auto v = make_view(z, z, piecewise_constant_index(1.0, 2.0), flat_interface(), 1.0);
  for (const auto& r : {residual_eg1(v, multiplier_pair(1.0, g)), residual_eg1(v, gaussian_weight(1.0, 3)),
                        residual_eg2(v, multiplier_pair(1.0, g)), residual_eg2(v, gaussian_weight(1.0, 3)),
                        residual_eg3(v, multiplier_pair(1.0, g)), residual_eg4(v), residual_deux(v)}) {
    EXPECT_EQ(r.lhs, 0.0) << r.name;
    EXPECT_EQ(r.rhs, 0.0) << r.name;
    EXPECT_EQ(r.rel_residual, 0.0) << r.name;
  }
  const auto t = trace_estimate_check(v, 1.0, Side::plus);
  EXPECT_EQ(t.lhs, 0.0);
  EXPECT_TRUE(t.holds);
}

TEST(Residuals, RelativeResidualBounded) {
  const auto r = make_residual("x", 3.0, -1.0);
  EXPECT_DOUBLE_EQ(r.rel_residual, 1.0);
  EXPECT_LE(make_residual("x", 1.0, 1.1).rel_residual, 1.0);
}

TEST(Eg1, SmoothWeight) {
  const auto& v = mms_view(Scene::piecewise, 48);
  EXPECT_LE(residual_eg1(v, gaussian_weight(1.0, 3)).rel_residual, 1e-2);
}

TEST(Eg2, UnitWeightIsDissipation) {
  // at the default tolerance; the half-weighted faces leave a flux term far below it
  GridSpec g(3, 8.0, 48);
  const auto n = scene_index(Scene::piecewise);
  const auto f = mms_source(mms_exact(), n, flat_interface(), 1.0, g);
  SolverSettings st;
  st.method = KrylovMethod::bicgstab;
  const auto u = solve(HelmholtzOperator(g, 1.0, n, flat_interface()), f, st).u;
  const auto r = residual_eg2(make_view(u, f, n, flat_interface(), 1.0), constant_weight());
  EXPECT_EQ(term(r, "grad_phi"), 0.0);
  EXPECT_LE(r.rel_residual, 10.0 * st.tol);
}

TEST(Eg2, SmoothWeight) {
  const auto& v = mms_view(Scene::piecewise, 48);
  EXPECT_LE(residual_eg2(v, gaussian_weight(1.0, 3)).rel_residual, 1e-2);
}

TEST(Eg3, PiecewiseAtUnitRadius) {
  EXPECT_LE(residual_eg3(mms_view(Scene::piecewise, 48), multiplier_pair(1.0, GridSpec(3, 8.0, 48))).rel_residual,
            3e-2);
}

TEST(Eg3, ContinuousIndexHasNoInterfaceTerm) {
  GridSpec g(3, 8.0, 16);
  const auto u = sample(mms_exact(), g);
  const auto v = make_view(u, u, radial_bump_index(2.0, 2.0, 1.0, 1.0), flat_interface(), 1.0);
  EXPECT_EQ(term(residual_eg3(v, multiplier_pair(1.0, g)), "interface"), 0.0);
  const auto dx = residual_deux(v);
  for (const char* k : {"interface_tangential", "interface_normal", "interface_n2"}) EXPECT_EQ(term(dx, k), 0.0);
}

TEST(Eg4, PiecewiseReducesToTrace) {
  EXPECT_EQ(term(residual_eg4(mms_view(Scene::piecewise, 48)), "dd_n"), 0.0);
}

TEST(Eg4, Graded) { EXPECT_LE(residual_eg4(mms_view(Scene::graded, 48)).rel_residual, 3e-2); }

TEST(Deux, RejectsCurvedInterface) {
  GridSpec g(3, 8.0, 12);
  const ComplexGridField z(g);
  EXPECT_THROW(residual_deux(make_view(z, z, piecewise_constant_index(1.0, 2.0), tilted_interface(0.1), 1.0)),
               InvalidArgument);
}

class Refinement : public ::testing::TestWithParam<std::tuple<Scene, std::string>> {};

TEST_P(Refinement, SmallAndHalving) {
  const auto [scene, name] = GetParam();
  const double coarse = named(mms_view(scene, 24), name).rel_residual;
  const double fine = named(mms_view(scene, 48), name).rel_residual;
  EXPECT_LE(fine, 5e-2) << name;
  EXPECT_GE(coarse / fine, 2.0) << name << " " << coarse << " -> " << fine;
}

INSTANTIATE_TEST_SUITE_P(Identities, Refinement,
                         ::testing::Combine(::testing::Values(Scene::piecewise, Scene::graded),
                                            ::testing::Values("eg1", "eg2", "eg3", "eg4", "deux")),
                         [](const auto& info) {
                           return std::string(std::get<0>(info.param) == Scene::piecewise ? "piecewise_" : "graded_") +
                                  std::get<1>(info.param);
                         });

TEST(Ineg, SeededFieldsAreEquality) {
  GridSpec g(3, 4.0, 24);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(g.node_count());
    for (auto& s : v) s = ud(rng);
    for (double R : {0.5, 1.0, 2.0}) {
      const auto r = check_ineg(g, v, R);
      EXPECT_GE(r.lhs, r.rhs * (1.0 - 1e-8));
      EXPECT_LE(r.rel_residual, 1e-8);
      EXPECT_EQ(term(r, "tail"), 0.0);
    }
  }
}

TEST(Ineg, ZeroAndNegative) {
  GridSpec g(3, 4.0, 12);
  const auto r = check_ineg(g, std::vector<double>(g.node_count(), 0.0), 1.0);
  EXPECT_EQ(r.lhs, 0.0);
  std::vector<double> v(g.node_count(), 1.0);
  v[17] = -0.1;
  EXPECT_THROW(check_ineg(g, v, 1.0), InvalidArgument);
}

TEST(Ineg, ShellOfOnesIsSphereArea) {
  GridSpec g(3, 4.0, 24);
  const auto r = check_ineg(g, std::vector<double>(g.node_count(), 1.0), 1.0);
  EXPECT_NEAR(r.rhs, 0.5 * 4.0 * std::numbers::pi, 1e-6);
}

TEST(Trace, PiecewiseAndGradedHold) {
  for (Scene s : {Scene::piecewise, Scene::graded}) {
    const auto& v = mms_view(s, 48);
    const auto hyp = check_hypotheses(v.n, v.gamma, v.grid);
    ASSERT_TRUE(hyp.h6_satisfied);
    const auto c = trace_estimate_check(v, hyp.alpha, hyp.sigma);
    EXPECT_TRUE(c.holds) << c.lhs << " vs " << c.rhs;
  }
}

TEST(Trace, GradedQuarterEpsilon) {
  GridSpec g(3, 8.0, 48);
  const auto n = scene_index(Scene::graded);
  const auto gamma = flat_interface();
  const auto f = ComplexGridField::sample(g, [](const Point& x) { return std::exp(-norm(x, 3) * norm(x, 3)); });
  SolverSettings st;
  st.method = KrylovMethod::bicgstab;
  const auto u = solve(HelmholtzOperator(g, 0.25, n, gamma), f, st).u;
  const auto hyp = check_hypotheses(n, gamma, g);
  const auto c = trace_estimate_check(make_view(u, f, n, gamma, 0.25), hyp.alpha, hyp.sigma);
  EXPECT_TRUE(c.holds);
  EXPECT_GT(c.rhs, c.lhs);
}

TEST(Trace, PiecewiseDropsIndexTerms) {
  const auto& v = mms_view(Scene::piecewise, 48);
  const auto c = trace_estimate_check(v, 1.0, Side::plus);
  EXPECT_EQ(c.lhs, c.lhs_alt);
}

TEST(Ledger, ZeroSourceRatioZero) {
  GridSpec g(3, 8.0, 16);
  const ComplexGridField z(g);
  const auto n = piecewise_constant_index(1.0, 2.0);
  const auto L = theorem_ledger(z, z, n, flat_interface(), 1.0, check_hypotheses(n, flat_interface(), g));
  EXPECT_EQ(L.ratio, 0.0);
  EXPECT_TRUE(L.valid);
}

TEST(Ledger, GatesInvalidate) {
  const auto& v = mms_view(Scene::piecewise, 24);
  const auto hyp = check_hypotheses(v.n, v.gamma, v.grid);
  const auto ok = theorem_ledger(v.u, v.f, v.n, v.gamma, 1.0, hyp);
  EXPECT_TRUE(ok.valid);
  EXPECT_GT(ok.ratio, 0.0);
  EXPECT_TRUE(std::isfinite(ok.ratio));
  EXPECT_FALSE(theorem_ledger(v.u, v.f, v.n, v.gamma, 1.0, hyp, {false, 0.0, 0.05}).valid);
  EXPECT_FALSE(theorem_ledger(v.u, v.f, v.n, v.gamma, 1.0, hyp, {true, 0.2, 0.05}).valid);
  auto bad = hyp;
  bad.h6_satisfied = false;
  EXPECT_FALSE(theorem_ledger(v.u, v.f, v.n, v.gamma, 1.0, bad).valid);
}

TEST(GradientTrace, FlatOnly) {
  GridSpec g(3, 8.0, 12);
  const ComplexGridField z(g);
  const auto n = piecewise_constant_index(1.0, 2.0);
  EXPECT_THROW(theorem2_ledger(z, z, n, tilted_interface(0.2), 1.0), InvalidArgument);
  EXPECT_THROW(theorem2_ledger(z, z, n, flat_interface(), 1.0, 0.0), InvalidArgument);
  const auto T = theorem2_ledger(z, z, n, flat_interface(), 1.0);
  EXPECT_EQ(T.lhs, 0.0);
  EXPECT_EQ(T.ratio, 0.0);
  EXPECT_EQ(T.precondition, 0.0);
}

TEST(GradientTrace, FinitePositive) {
  const auto& v = mms_view(Scene::piecewise, 48);
  const auto T = theorem2_ledger(v.u, v.f, v.n, v.gamma, 1.0);
  EXPECT_GT(T.lhs, 0.0);
  EXPECT_TRUE(std::isfinite(T.ratio));
}

TEST(GradientTrace, TangentialDecay) {
  GridSpec g(3, 8.0, 24);
  EXPECT_EQ(tangential_index_decay(piecewise_constant_index(1.0, 2.0), flat_interface(), g, 0.5), 0.0);
  EXPECT_GT(tangential_index_decay(radial_bump_index(2.0, 2.0, 1.0, 1.0), flat_interface(), g, 0.5), 0.0);
}
