#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mcv/field.hpp"
#include "mcv/index.hpp"
#include "mcv/norms.hpp"
#include "mcv/shell.hpp"

namespace mcv {

/// Two sides of an integral identity evaluated by quadrature.
struct IdentityResidual {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_residual = 0.0;
  double rel_residual = 0.0;
  /// Individual left-hand terms, in the order they are written.
  std::vector<std::pair<std::string, double>> terms;
};

inline IdentityResidual make_residual(std::string name, double lhs, double rhs,
                                      std::vector<std::pair<std::string, double>> terms = {}) {
  constexpr double floor = 1e-30;
  IdentityResidual r{std::move(name), lhs, rhs, std::abs(lhs - rhs), 0.0, std::move(terms)};
  r.rel_residual = r.abs_residual / (std::abs(lhs) + std::abs(rhs) + floor);
  return r;
}

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Radial distribution supported on |x| >= R:
///   <T, v> = tail int_{|x|>R} v/|x|^3 + single int_{S(R)} v + layer int_{S(R)} d_r v.
struct RadialDistribution {
  double R = 1.0;
  double tail = 0.0;
  double single = 0.0;
  double layer = 0.0;

  /// Given the three integrals of v.
  double pair(double tail_integral, double shell_integral, double shell_dr_integral) const {
    return tail * tail_integral + single * shell_integral + layer * shell_dr_integral;
  }
};

/// Test functions of the Morawetz argument for a radius R:
///   grad psi = x/R inside B(R), x/|x| outside;  phi = 1/(2R) inside, 0 outside.
struct MultiplierPair {
  double R = 1.0;
  int d = 3;

  Point grad_psi(const Point& x) const {
    const double r = norm(x, d);
    const double s = r <= R ? 1.0 / R : 1.0 / r;
    Point gp{0.0, 0.0, 0.0};
    for (int k = 0; k < d; ++k) gp[k] = s * x[k];
    return gp;
  }

  double lap_psi(const Point& x) const {
    const double r = norm(x, d);
    return r <= R ? d / R : (d - 1) / r;
  }

  Matrix3 hess_psi(const Point& x) const {
    const double r = norm(x, d);
    Matrix3 m{};
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const double delta = a == b ? 1.0 : 0.0;
        m[a][b] = r <= R ? delta / R : (delta * r * r - x[a] * x[b]) / (r * r * r);
      }
    return m;
  }

  double phi(const Point& x) const { return norm(x, d) <= R ? 0.5 / R : 0.0; }

  RadialDistribution lap_phi() const { return {R, 0.0, 0.0, 0.5 / R}; }

  /// Lap(psi) jumps by -1/R across S(R) and is (d-1)/|x| outside.
  RadialDistribution bilap_psi() const { return {R, (d - 1.0) * (3.0 - d), -(d - 1.0) / (R * R), 1.0 / R}; }

  /// Lap(2 phi - Lap psi); 2 phi - Lap psi = -(d-1) min(1/R, 1/|x|) is continuous, so no d_r layer.
  RadialDistribution lap_w() const { return {R, (d - 1.0) * (d - 3.0), (d - 1.0) / (R * R), 0.0}; }
};

inline MultiplierPair multiplier_pair(double R, const GridSpec& g) {
  if (!(R > 0.0)) throw InvalidArgument("multiplier radius must be positive");
  return {R, g.dimension};
}

/// Cell average of a function with a jump or kink on |x| = R.
///
/// Cells that the sphere does not cut return the nodal value; cut cells are
/// averaged over a sub-lattice so that the node-weight quadrature of
/// (kinked weight) x (smooth field) stays second order.
template <class Fn>
auto cell_average(const GridSpec& g, const Point& x, double R, Fn&& fn) -> decltype(fn(x)) {
  const int d = g.dimension;
  const double h = g.spacing();
  const double r = norm(x, d);
  if (std::abs(r - R) > 0.5 * h * std::sqrt(static_cast<double>(d))) return fn(x);
  constexpr int sub = 8;
  using T = decltype(fn(x));
  T acc{};
  int count = 0;
  std::array<int, 3> c{0, 0, 0};
  const int kmax = d == 3 ? sub : 1;
  for (c[0] = 0; c[0] < sub; ++c[0])
    for (c[1] = 0; c[1] < sub; ++c[1])
      for (c[2] = 0; c[2] < kmax; ++c[2]) {
        Point y = x;
        for (int a = 0; a < d; ++a) y[a] += h * ((c[a] + 0.5) / sub - 0.5);
        const T v = fn(y);
        if constexpr (std::is_same_v<T, Matrix3>) {
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) acc[a][b] += v[a][b];
        } else {
          acc += v;
        }
        ++count;
      }
  if constexpr (std::is_same_v<T, Matrix3>) {
    for (auto& row : acc)
      for (auto& v : row) v /= count;
  } else {
    acc /= count;
  }
  return acc;
}

/// Smooth real test weight with analytic gradient and Laplacian.
struct SmoothWeight {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::function<double(const Point&)> laplacian;
};

inline SmoothWeight constant_weight(double c = 1.0) {
  return {[c](const Point&) { return c; }, [](const Point&) { return Point{0.0, 0.0, 0.0}; },
          [](const Point&) { return 0.0; }};
}

/// exp(-a |x|^2).
inline SmoothWeight gaussian_weight(double a, int d) {
  return {[=](const Point& x) { return std::exp(-a * norm(x, d) * norm(x, d)); },
          [=](const Point& x) {
            const double e = std::exp(-a * norm(x, d) * norm(x, d));
            Point gr{0.0, 0.0, 0.0};
            for (int k = 0; k < d; ++k) gr[k] = -2.0 * a * x[k] * e;
            return gr;
          },
          [=](const Point& x) {
            const double r2 = norm(x, d) * norm(x, d);
            return (4.0 * a * a * r2 - 2.0 * a * d) * std::exp(-a * r2);
          }};
}

/// Precomputed quantities shared by every identity evaluated on one solution.
struct SolutionView {
  GridSpec grid;
  ComplexGridField u;
  ComplexGridField f;
  VectorGridField grad;
  IndexSamples index;
  std::vector<double> weight;
  double eps = 0.0;
  RefractionIndex n;
  InterfaceGraph gamma;
};

inline SolutionView make_view(const ComplexGridField& u, const ComplexGridField& f, const RefractionIndex& n,
                              const InterfaceGraph& gamma, double eps) {
  if (!(u.grid() == f.grid())) throw InvalidArgument("u and f live on different grids");
  const auto& g = u.grid();
  return {g, u, f, gradient_field(u), sample_index(n, gamma, g), trapezoid_weights(g), eps, n, gamma};
}

inline Point midpoint(const Point& a, const Point& b) {
  return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
}

namespace detail {

inline cplx radial_derivative(const VectorGridField& grad, const Point& x, int d) {
  const double r = norm(x, d);
  cplx s{};
  for (int k = 0; k < d; ++k) s += (x[k] / r) * interpolate(grad.grid, grad.components[k], x);
  return s;
}

/// Integrals over S(R) of |u|^2 and conj(u) d_r u.
struct ShellTerms {
  double mass = 0.0;
  cplx flux{};
};

inline ShellTerms shell_terms(const SolutionView& v, double R) {
  const auto q = make_shell(v.grid, R);
  ShellTerms t;
  for (std::size_t k = 0; k < q.weights.size(); ++k) {
    const Point x = q.node(k);
    const cplx uu = interpolate(v.u, x);
    t.mass += q.weights[k] * std::norm(uu);
    t.flux += q.weights[k] * std::conj(uu) * radial_derivative(v.grad, x, v.grid.dimension);
  }
  return t;
}

inline double jump_at(const SolutionView& v, const InterfaceNode& node) {
  const int d = v.grid.dimension;
  return jump(v.n, v.gamma, TangentPoint{node.x[0], d == 3 ? node.x[1] : 0.0}, d);
}

inline cplx u_trace(const SolutionView& v, const InterfaceNode& node) {
  return interface_trace(v.grid, v.u.values(), node.tangent_index, node.x[v.grid.dimension - 1]);
}

}  // namespace detail

/// int phi |grad u|^2 summed over grid edges: |u_b - u_a|^2 / h^2 times
/// phi_edge(a, b). Edges to the zero ghost layer are included, so with the
/// 2d+1 stencil this is the summation-by-parts partner of Re sum phi conj(u) Lap_h u.
template <class EdgeWeight>
double edge_gradient_energy(const ComplexGridField& u, EdgeWeight&& phi_edge) {
  const auto& g = u.grid();
  const int d = g.dimension;
  const int N = g.nodes_per_axis;
  const double h = g.spacing();
  std::vector<double> w1(static_cast<std::size_t>(N), h);
  w1.front() = w1.back() = 0.5 * h;
  double s = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    const auto idx = g.indices(p);
    const Point x = g.point(p);
    for (int a = 0; a < d; ++a) {
      double we = h;
      for (int b = 0; b < d; ++b)
        if (b != a) we *= w1[static_cast<std::size_t>(idx[b])];
      Point y = x;
      y[a] += h;
      const cplx next = idx[a] == N - 1 ? cplx{} : u[p + g.stride(a)];
      s += we * phi_edge(x, y) * std::norm(next - u[p]);
      if (idx[a] == 0) {
        y[a] = x[a] - h;
        s += we * phi_edge(y, x) * std::norm(u[p]);
      }
    }
  }
  return s / (h * h);
}

/// 2d+1 point Laplacian of phi at a node, using phi's values beyond the box.
inline double discrete_laplacian(const GridSpec& g, const std::function<double(const Point&)>& phi, const Point& x) {
  const double h = g.spacing();
  const double c = phi(x);
  double s = 0.0;
  for (int a = 0; a < g.dimension; ++a) {
    Point y = x;
    y[a] = x[a] + h;
    s += phi(y);
    y[a] = x[a] - h;
    s += phi(y);
  }
  return (s - 2.0 * g.dimension * c) / (h * h);
}

/// -int phi |grad u|^2 + 1/2 int Lap(phi) |u|^2 + int phi n |u|^2 = Re int f phi conj(u).
/// Lap(phi) is the discrete Laplacian and phi on an edge the mean of its endpoints,
/// so on a converged solve the two sides agree up to the solver tolerance.
inline IdentityResidual residual_eg1(const SolutionView& v, const SmoothWeight& phi) {
  double t1 = 0.0, t2 = 0.0, t3 = 0.0, rhs = 0.0;
  for (std::size_t p = 0; p < v.weight.size(); ++p) {
    const Point x = v.grid.point(p);
    const double w = v.weight[p], ph = phi.value(x), m = std::norm(v.u[p]);
    t2 += 0.5 * w * discrete_laplacian(v.grid, phi.value, x) * m;
    t3 += w * ph * v.index.value[p] * m;
    rhs += w * ph * std::real(v.f[p] * std::conj(v.u[p]));
  }
  t1 = -edge_gradient_energy(v.u, [&](const Point& a, const Point& b) { return 0.5 * (phi.value(a) + phi.value(b)); });
  return make_residual("eg1", t1 + t2 + t3, rhs, {{"phi_grad", t1}, {"lap_phi", t2}, {"phi_n", t3}});
}

/// eg1 with the step weight phi = 1/(2R) on B(R): Lap(phi) is the surface term
/// (1/(2R)) d_r on S(R).
inline IdentityResidual residual_eg1(const SolutionView& v, const MultiplierPair& pair) {
  double t1 = 0.0, t3 = 0.0, rhs = 0.0;
  for (std::size_t p = 0; p < v.weight.size(); ++p) {
    const Point x = v.grid.point(p);
    const double w = v.weight[p] * cell_average(v.grid, x, pair.R, [&](const Point& y) { return pair.phi(y); });
    if (w == 0.0) continue;
    const double m = std::norm(v.u[p]);
    t3 += w * v.index.value[p] * m;
    rhs += w * std::real(v.f[p] * std::conj(v.u[p]));
  }
  t1 = -edge_gradient_energy(v.u, [&](const Point& a, const Point& b) {
    return cell_average(v.grid, midpoint(a, b), pair.R, [&](const Point& y) { return pair.phi(y); });
  });
  const auto sh = detail::shell_terms(v, pair.R);
  // d_r |u|^2 = 2 Re(conj(u) d_r u)
  const double t2 = 0.5 * pair.lap_phi().pair(0.0, sh.mass, 2.0 * std::real(sh.flux));
  return make_residual("eg1", t1 + t2 + t3, rhs, {{"phi_grad", t1}, {"lap_phi", t2}, {"phi_n", t3}});
}

/// eps int phi |u|^2 - Im int grad(phi) . grad(u) conj(u) = Im int f phi conj(u).
inline IdentityResidual residual_eg2(const SolutionView& v, const SmoothWeight& phi) {
  const int d = v.grid.dimension;
  double t1 = 0.0, t2 = 0.0, rhs = 0.0;
  for (std::size_t p = 0; p < v.weight.size(); ++p) {
    const Point x = v.grid.point(p);
    const double w = v.weight[p], ph = phi.value(x);
    const Point gphi = phi.gradient(x);
    cplx gg{};
    for (int k = 0; k < d; ++k) gg += gphi[k] * v.grad.components[k][p];
    t1 += v.eps * w * ph * std::norm(v.u[p]);
    t2 -= w * std::imag(gg * std::conj(v.u[p]));
    rhs += w * ph * std::imag(v.f[p] * std::conj(v.u[p]));
  }
  return make_residual("eg2", t1 + t2, rhs, {{"eps_phi", t1}, {"grad_phi", t2}});
}

inline IdentityResidual residual_eg2(const SolutionView& v, const MultiplierPair& pair) {
  double t1 = 0.0, rhs = 0.0;
  for (std::size_t p = 0; p < v.weight.size(); ++p) {
    const Point x = v.grid.point(p);
    const double w = v.weight[p] * cell_average(v.grid, x, pair.R, [&](const Point& y) { return pair.phi(y); });
    if (w == 0.0) continue;
    t1 += v.eps * w * std::norm(v.u[p]);
    rhs += w * std::imag(v.f[p] * std::conj(v.u[p]));
  }
  // grad(phi) = -(1/(2R)) x/|x| dS(R)
  const auto sh = detail::shell_terms(v, pair.R);
  const double t2 = (0.5 / pair.R) * std::imag(std::conj(sh.flux));
  return make_residual("eg2", t1 - t2, rhs, {{"eps_phi", t1}, {"grad_phi", -t2}});
}

/// Morawetz identity for the pair (psi, R):
///   int grad(u)* D2psi grad(u) - 1/4 <Lap^2 psi, |u|^2> + 1/2 int grad n . grad psi |u|^2
///   - eps Im int grad psi . grad u conj(u) + 1/2 int_Gamma [n] nu . grad psi |u|^2
///   = -Re int f (grad psi . grad conj(u) + 1/2 Lap(psi) conj(u)).
///
/// Lap^2 psi = (d-1)(3-d)|x|^{-3} on |x| > R, plus on S(R) the single layer
/// -(d-1)/R^2 and the double layer from the jump -1/R of Lap(psi):
///   <Lap^2 psi, v> = (d-1)(3-d) int_{|x|>R} v/|x|^3 + int_{S(R)} (d_r v / R - (d-1) v / R^2).
inline IdentityResidual residual_eg3(const SolutionView& v, const MultiplierPair& pair) {
  const int d = v.grid.dimension;
  const double R = pair.R;
  double hess = 0.0, tail = 0.0, gradn = 0.0, epsterm = 0.0, rhs = 0.0;
  for (std::size_t p = 0; p < v.weight.size(); ++p) {
    const Point x = v.grid.point(p);
    const double w = v.weight[p];
    const double lap = cell_average(v.grid, x, R, [&](const Point& y) { return pair.lap_psi(y); });
    const Point gp = pair.grad_psi(x);
    const auto& gu = v.grad.components;
    cplx gpu{};
    double gnp = 0.0;
    for (int a = 0; a < d; ++a) {
      gpu += gp[a] * gu[a][p];
      gnp += v.index.grad[p][a] * gp[a];
    }
    const double m = std::norm(v.u[p]);
    const double r = norm(x, d);
    if (r > 0.0) {
      const double wr = cell_average(v.grid, x, R, [&](const Point& y) {
        const double ry = norm(y, d);
        return ry > R ? 1.0 / ry : 0.0;
      });
      if (wr > 0.0) {
        cplx ur{};
        for (int a = 0; a < d; ++a) ur += (x[a] / r) * gu[a][p];
        hess -= w * wr * std::norm(ur);
      }
    }
    if (d != 3) {
      const double wt = cell_average(v.grid, x, R, [&](const Point& y) {
        const double r = norm(y, d);
        return r > R ? 1.0 / (r * r * r) : 0.0;
      });
      tail += w * wt * m;
    }
    gradn += 0.5 * w * gnp * m;
    epsterm -= v.eps * w * std::imag(gpu * std::conj(v.u[p]));
    rhs -= w * std::real(v.f[p] * (std::conj(gpu) + 0.5 * lap * std::conj(v.u[p])));
  }
  // D2psi = min(1/R, 1/|x|) I minus the radial projection outside B(R).
  hess += edge_gradient_energy(v.u, [&](const Point& a, const Point& b) {
    return cell_average(v.grid, midpoint(a, b), R, [&](const Point& y) { return 1.0 / std::max(R, norm(y, d)); });
  });
  const auto sh = detail::shell_terms(v, R);
  const double bilap = pair.bilap_psi().pair(tail, sh.mass, 2.0 * std::real(sh.flux));
  const double t2 = -0.25 * bilap;

  double gamma_term = 0.0;
  for (const auto& node : interface_quadrature(v.gamma, v.grid)) {
    const double jn = detail::jump_at(v, node);
    if (jn == 0.0) continue;
    const Point gp = pair.grad_psi(node.x);
    double nd = 0.0;
    for (int k = 0; k < d; ++k) nd += node.normal[k] * gp[k];
    gamma_term += 0.5 * node.weight * jn * nd * std::norm(detail::u_trace(v, node));
  }
  const double lhs = hess + t2 + gradn + epsterm + gamma_term;
  return make_residual("eg3", lhs, rhs,
                       {{"hess_psi", hess}, {"bilap_psi", t2}, {"grad_n", gradn}, {"eps", epsterm},
                        {"interface", gamma_term}});
}

/// 1/2 int_Gamma [n] nu_d |u|^2 + 1/2 int d_d n |u|^2 = -Re int f d_d conj(u) - eps Im int u d_d conj(u).
inline IdentityResidual residual_eg4(const SolutionView& v) {
  const int d = v.grid.dimension;
  const auto& dd = v.grad.components[d - 1];
  double vol = 0.0, rhs = 0.0;
  for (std::size_t p = 0; p < v.weight.size(); ++p) {
    const double w = v.weight[p];
    vol += 0.5 * w * v.index.grad[p][d - 1] * std::norm(v.u[p]);
    rhs -= w * (std::real(v.f[p] * std::conj(dd[p])) + v.eps * std::imag(v.u[p] * std::conj(dd[p])));
  }
  double surf = 0.0;
  for (const auto& node : interface_quadrature(v.gamma, v.grid)) {
    const double jn = detail::jump_at(v, node);
    if (jn == 0.0) continue;
    surf += 0.5 * node.weight * jn * node.normal[d - 1] * std::norm(detail::u_trace(v, node));
  }
  return make_residual("eg4", surf + vol, rhs, {{"interface", surf}, {"dd_n", vol}});
}

/// Trace inequality obtained from eg4 and nu_d >= alpha:
///   int_Gamma |[n]| |u|^2 + (1/alpha) int (d_d n)_{-sigma} |u|^2
///     <= (2/alpha) (int |f d_d u| + eps |Im int u d_d conj(u)|) + (1/alpha) int (d_d n)_sigma |u|^2.
struct TraceCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.1;
  bool holds = true;
  /// The same quantities with sigma and -sigma exchanged and prefactor 2 in place of 2/alpha.
  double lhs_alt = 0.0;
  double rhs_alt = 0.0;
  bool holds_alt = true;
};

inline TraceCheck trace_estimate_check(const SolutionView& v, double alpha, Side sigma, double slack = 0.1) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  const int d = v.grid.dimension;
  const auto& dd = v.grad.components[d - 1];
  double fdu = 0.0, pos = 0.0, neg = 0.0;
  cplx udu{};
  for (std::size_t p = 0; p < v.weight.size(); ++p) {
    const double w = v.weight[p], m = std::norm(v.u[p]);
    const double dn = v.index.grad[p][d - 1];
    fdu += w * std::abs(v.f[p] * std::conj(dd[p]));
    udu += w * v.u[p] * std::conj(dd[p]);
    pos += w * std::max(dn, 0.0) * m;
    neg += w * std::max(-dn, 0.0) * m;
  }
  double tr = 0.0;
  for (const auto& node : interface_quadrature(v.gamma, v.grid)) {
    const double jn = std::abs(detail::jump_at(v, node));
    if (jn == 0.0) continue;
    tr += node.weight * jn * std::norm(detail::u_trace(v, node));
  }
  const double with_sigma = sigma == Side::plus ? pos : neg;
  const double against_sigma = sigma == Side::plus ? neg : pos;
  const double source = fdu + v.eps * std::abs(std::imag(udu));
  TraceCheck c;
  c.slack = slack;
  c.lhs = tr + against_sigma / alpha;
  c.rhs = 2.0 * source / alpha + with_sigma / alpha;
  c.holds = c.lhs <= c.rhs * (1.0 + slack);
  c.lhs_alt = tr + with_sigma / alpha;
  c.rhs_alt = 2.0 * source + against_sigma / alpha;
  c.holds_alt = c.lhs_alt <= c.rhs_alt * (1.0 + slack);
  return c;
}

/// (1/4) int v Lap(2 phi - Lap psi) >= ((d-1)/(4R^2)) int_{S(R)} v for v >= 0, using
/// Lap(2 phi - Lap psi) = (d-1)(d-3)|x|^{-3} 1_{|x|>R} + ((d-1)/R^2) dS(R).
inline IdentityResidual check_ineg(const GridSpec& g, const std::vector<double>& v, double R) {
  if (v.size() != g.node_count()) throw InvalidArgument("field size does not match the grid");
  for (double s : v)
    if (s < 0.0 || !std::isfinite(s)) throw InvalidArgument("check_ineg needs a nonnegative field");
  const int d = g.dimension;
  std::vector<cplx> vc(v.begin(), v.end());
  const auto q = make_shell(g, R);
  double surface = 0.0;
  for (std::size_t k = 0; k < q.weights.size(); ++k) surface += q.weights[k] * std::real(interpolate(g, vc, q.node(k)));
  double tail = 0.0;
  if (d != 3) {
    const auto w = trapezoid_weights(g);
    for (std::size_t p = 0; p < v.size(); ++p) {
      const Point x = g.point(p);
      tail += w[p] * v[p] * cell_average(g, x, R, [&](const Point& y) {
        const double r = norm(y, d);
        return r > R ? 1.0 / (r * r * r) : 0.0;
      });
    }
  }
  const auto lw = MultiplierPair{R, d}.lap_w();
  const double lhs = 0.25 * lw.pair(tail, surface, 0.0);
  const double rhs = (d - 1.0) / (4.0 * R * R) * surface;
  auto r = make_residual("ineg", lhs, rhs, {{"surface", 0.25 * lw.single * surface}, {"tail", 0.25 * lw.tail * tail}});
  return r;
}

/// Identity for the multiplier n d_d conj(u) on the flat interface x_d = 0:
///   1/2 int_Gamma [n] |grad' u|^2 - 1/2 int_Gamma [n] |d_d u|^2 - 1/2 int_Gamma [n^2] |u|^2
///   - 1/2 int d_d(n^2) |u|^2 + 1/2 int d_d n |grad u|^2 - Re int (grad n . grad u) d_d conj(u)
///   - eps Im int n u d_d conj(u) = Re int n f d_d conj(u).
/// The two gradient-of-n volume terms vanish for piecewise-constant n.
inline IdentityResidual residual_deux(const SolutionView& v) {
  if (!v.gamma.is_flat()) throw InvalidArgument("the n d_d u identity is stated for the flat interface x_d = 0");
  const int d = v.grid.dimension;
  const auto& gu = v.grad.components;
  const auto& dd = gu[d - 1];
  double tang = 0.0, normal = 0.0, sq = 0.0;
  for (const auto& node : interface_quadrature(v.gamma, v.grid)) {
    const Point& x = node.x;
    const double np = v.n.plus.value(x), nm = v.n.minus.value(x);
    const double jn = np - nm, jn2 = np * np - nm * nm;
    if (jn == 0.0 && jn2 == 0.0) continue;
    const double z = x[d - 1];
    double gt = 0.0;
    for (int k = 0; k + 1 < d; ++k) gt += std::norm(interface_trace(v.grid, gu[k], node.tangent_index, z));
    const cplx du = interface_trace(v.grid, v.u.values(), node.tangent_index, z, true);
    const cplx uu = interface_trace(v.grid, v.u.values(), node.tangent_index, z);
    tang += 0.5 * node.weight * jn * gt;
    normal -= 0.5 * node.weight * jn * std::norm(du);
    sq -= 0.5 * node.weight * jn2 * std::norm(uu);
  }
  double dn2 = 0.0, gradn = 0.0, epsterm = 0.0, rhs = 0.0;
  for (std::size_t p = 0; p < v.weight.size(); ++p) {
    const double w = v.weight[p], nn = v.index.value[p];
    const Point& gn = v.index.grad[p];
    const double m = std::norm(v.u[p]);
    dn2 -= w * nn * gn[d - 1] * m;
    cplx gnu{};
    for (int k = 0; k < d; ++k) gnu += gn[k] * gu[k][p];
    gradn += w * (0.5 * gn[d - 1] * v.grad.magnitude_sq(p) - std::real(gnu * std::conj(dd[p])));
    epsterm -= v.eps * w * nn * std::imag(v.u[p] * std::conj(dd[p]));
    rhs += w * nn * std::real(v.f[p] * std::conj(dd[p]));
  }
  return make_residual("deux", tang + normal + sq + dn2 + gradn + epsterm, rhs,
                       {{"interface_tangential", tang},
                        {"interface_normal", normal},
                        {"interface_n2", sq},
                        {"dd_n2", dn2},
                        {"grad_n", gradn},
                        {"eps", epsterm}});
}

/// Theorem-estimate ledger for one solve.
struct EstimateLedger {
  double epsilon = 0.0;
  NormBundle terms;
  double bnorm_f_sq = 0.0;
  double ratio = 0.0;
  bool valid = true;
  std::vector<std::string> notes;
};

struct LedgerGates {
  bool converged = true;
  double boundary_fraction = 0.0;
  double boundary_threshold = 0.05;
};

inline EstimateLedger theorem_ledger(const ComplexGridField& u, const ComplexGridField& f, const RefractionIndex& n,
                                     const InterfaceGraph& gamma, double eps, const HypothesisReport& hyp,
                                     const LedgerGates& gates = {}, const RadiusOptions& opt = {}) {
  EstimateLedger L;
  L.epsilon = eps;
  L.terms = norm_bundle(u, f, n, gamma, opt);
  L.bnorm_f_sq = L.terms.bnorm_f * L.terms.bnorm_f;
  L.ratio = L.bnorm_f_sq > 0.0 ? L.terms.lhs_sum() / L.bnorm_f_sq : 0.0;
  if (!hyp.h6_satisfied) {
    L.valid = false;
    L.notes.push_back("H6 fails: beta1 + beta2 = " + std::to_string(hyp.beta1 + hyp.beta2));
  }
  if (!gates.converged) {
    L.valid = false;
    L.notes.push_back("solver did not converge");
  }
  if (gates.boundary_fraction > gates.boundary_threshold) {
    L.valid = false;
    L.notes.push_back("boundary energy fraction " + std::to_string(gates.boundary_fraction) + " above " +
                      std::to_string(gates.boundary_threshold));
  }
  if (hyp.sigma_by_convention) L.notes.push_back("[n] == 0 on Gamma; sigma = plus by convention");
  return L;
}

/// Ledger for the interface trace of |grad u|^2 on the flat interface.
struct Theorem2Ledger {
  double epsilon = 0.0;
  double lhs = 0.0;
  double bnorm_f_sq = 0.0;
  double bnorm_gradxf_sq = 0.0;
  double ratio = 0.0;
  double precondition = 0.0;
  bool valid = true;
};

/// sup over the box of <x>^{1+beta} |grad' n|.
inline double tangential_index_decay(const RefractionIndex& n, const InterfaceGraph& gamma, const GridSpec& g,
                                     double beta) {
  const int d = g.dimension;
  const auto s = sample_index(n, gamma, g);
  double sup = 0.0;
  for (std::size_t p = 0; p < s.value.size(); ++p) {
    double gt = 0.0;
    for (int k = 0; k + 1 < d; ++k) gt += s.grad[p][k] * s.grad[p][k];
    sup = std::max(sup, std::pow(1.0 + s.radius[p] * s.radius[p], 0.5 * (1.0 + beta)) * std::sqrt(gt));
  }
  return sup;
}

inline Theorem2Ledger theorem2_ledger(const ComplexGridField& u, const ComplexGridField& f, const RefractionIndex& n,
                                      const InterfaceGraph& gamma, double eps, double beta = 0.5) {
  if (!gamma.is_flat()) throw InvalidArgument("the gradient trace estimate is stated for the flat interface x_d = 0");
  if (!(beta > 0.0)) throw InvalidArgument("decay exponent beta must be positive");
  const auto& g = u.grid();
  const int d = g.dimension;
  Theorem2Ledger T;
  T.epsilon = eps;
  T.precondition = tangential_index_decay(n, gamma, g, beta);
  if (!std::isfinite(T.precondition))
    throw HypothesisViolation("decay", "<x>^{1+beta} |grad' n| is not bounded on the box");

  const auto grad = gradient_field(u);
  for (const auto& node : interface_quadrature(gamma, g)) {
    const double jn = std::abs(jump(n, gamma, TangentPoint{node.x[0], d == 3 ? node.x[1] : 0.0}, d));
    if (jn == 0.0) continue;
    const double z = node.x[d - 1];
    double m = std::norm(interface_trace(g, u.values(), node.tangent_index, z, true));
    for (int k = 0; k + 1 < d; ++k) m += std::norm(interface_trace(g, grad.components[k], node.tangent_index, z));
    T.lhs += node.weight * jn * m;
  }
  const double bf = b_norm(f);
  const auto gf = gradient_field(f);
  VectorGridField tangential{g, {}};
  for (int k = 0; k + 1 < d; ++k) tangential.components.push_back(gf.components[k]);
  const double bg = b_norm(tangential);
  T.bnorm_f_sq = bf * bf;
  T.bnorm_gradxf_sq = bg * bg;
  const double rhs = T.bnorm_f_sq + T.bnorm_gradxf_sq;
  T.ratio = rhs > 0.0 ? T.lhs / rhs : 0.0;
  return T;
}

}  // namespace mcv
