#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mcv/field.hpp"
#include "mcv/index.hpp"
#include "mcv/shell.hpp"

namespace mcv {

/// Cumulative radial mass of a nodal density: answers ball and annulus sums in O(log n).
class RadialMass {
public:
  RadialMass(const std::vector<double>& radii, const std::vector<double>& density) {
    std::vector<std::size_t> order(radii.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return radii[a] < radii[b]; });
    radius_.reserve(order.size());
    prefix_.reserve(order.size() + 1);
    prefix_.push_back(0.0);
    for (std::size_t k : order) {
      radius_.push_back(radii[k]);
      prefix_.push_back(prefix_.back() + density[k]);
    }
  }

  /// Mass of nodes with |x| <= R.
  double ball(double R) const {
    const auto it = std::upper_bound(radius_.begin(), radius_.end(), R);
    return prefix_[static_cast<std::size_t>(it - radius_.begin())];
  }

  /// Mass of nodes with a <= |x| <= b.
  double shell(double a, double b) const {
    const auto lo = std::lower_bound(radius_.begin(), radius_.end(), a);
    const auto hi = std::upper_bound(radius_.begin(), radius_.end(), b);
    return prefix_[static_cast<std::size_t>(hi - radius_.begin())] -
           prefix_[static_cast<std::size_t>(lo - radius_.begin())];
  }

private:
  std::vector<double> radius_;
  std::vector<double> prefix_;
};

struct SupResult {
  double value = 0.0;
  double radius = 0.0;
};

/// sup_R (1/R) sum_{|x| <= R} density over the radius set. `density` already carries quadrature weights.
inline SupResult bstar_from_density(const GridSpec& g, const std::vector<double>& density,
                                    const RadiusOptions& opt = {}) {
  const RadialMass mass(node_radii(g), density);
  SupResult best;
  for (double R : radius_set(g, opt)) {
    const double v = mass.ball(R) / R;
    if (v > best.value) best = {v, R};
  }
  return best;
}

/// sum_j (2^{j+1} sum_{C(j)} density)^{1/2} over the dyadic cover.
inline double bnorm_from_density(const GridSpec& g, const std::vector<double>& density) {
  const RadialMass mass(node_radii(g), density);
  double s = 0.0;
  for (const auto& a : dyadic_cover(g)) s += std::sqrt(a.outer * mass.shell(a.inner, a.outer));
  return s;
}

inline std::vector<double> weighted_density(const ComplexGridField& u, const std::vector<double>* weight = nullptr) {
  const auto w = trapezoid_weights(u.grid());
  std::vector<double> rho(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) rho[p] = w[p] * std::norm(u[p]) * (weight ? (*weight)[p] : 1.0);
  return rho;
}

inline std::vector<double> weighted_density(const VectorGridField& v) {
  const auto w = trapezoid_weights(v.grid);
  std::vector<double> rho(w.size());
  for (std::size_t p = 0; p < w.size(); ++p) rho[p] = w[p] * v.magnitude_sq(p);
  return rho;
}

/// ||u||_{B*}^2 = sup_R (1/R) int_{B(R)} |u|^2.
inline double bstar_norm_sq(const ComplexGridField& u, const RadiusOptions& opt = {}) {
  return bstar_from_density(u.grid(), weighted_density(u), opt).value;
}

inline double bstar_norm_sq(const VectorGridField& v, const RadiusOptions& opt = {}) {
  return bstar_from_density(v.grid, weighted_density(v), opt).value;
}

/// ||f||_B = sum_j (2^{j+1} int_{C(j)} |f|^2)^{1/2}.
inline double b_norm(const ComplexGridField& f) { return bnorm_from_density(f.grid(), weighted_density(f)); }

inline double b_norm(const VectorGridField& f) { return bnorm_from_density(f.grid, weighted_density(f)); }

/// ||f||_B ||u||_{B*} - |int f conj(u)|. The pairing runs over the nodes seen by the dyadic cover.
inline double duality_gap(const ComplexGridField& f, const ComplexGridField& u, const RadiusOptions& opt = {}) {
  if (!(f.grid() == u.grid())) throw InvalidArgument("duality_gap needs fields on the same grid");
  const auto& g = f.grid();
  const auto w = trapezoid_weights(g);
  const auto r = node_radii(g);
  const double r_min = dyadic_cover(g).front().inner;
  cplx pairing{};
  for (std::size_t p = 0; p < f.size(); ++p)
    if (r[p] >= r_min) pairing += w[p] * f[p] * std::conj(u[p]);
  return b_norm(f) * std::sqrt(bstar_norm_sq(u, opt)) - std::abs(pairing);
}

/// int |grad_tau u|^2 / |x| over the box minus the ball |x| <= 2h.
inline double tangential_gradient_integral(const VectorGridField& grad) {
  const auto& g = grad.grid;
  const int d = g.dimension;
  const auto w = trapezoid_weights(g);
  const double cutoff = 2.0 * g.spacing();
  double s = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) {
    const Point x = g.point(p);
    const double r = norm(x, d);
    if (r <= cutoff) continue;
    cplx radial{};
    for (int k = 0; k < d; ++k) radial += (x[k] / r) * grad.components[k][p];
    s += w[p] * std::max(0.0, grad.magnitude_sq(p) - std::norm(radial)) / r;
  }
  return s;
}

inline double tangential_gradient_integral(const ComplexGridField& u) {
  return tangential_gradient_integral(gradient_field(u));
}

/// int_{S(R)} |u|^2 dsigma with u interpolated onto the shell nodes.
inline double shell_integral(const ComplexGridField& u, double R) {
  const auto q = make_shell(u.grid(), R);
  double s = 0.0;
  for (std::size_t k = 0; k < q.weights.size(); ++k) s += q.weights[k] * std::norm(interpolate(u, q.node(k)));
  return s;
}

/// sup_R (1/R^2) int_{S(R)} |u|^2 over the radius set.
inline SupResult shell_sup_detail(const ComplexGridField& u, const RadiusOptions& opt = {}) {
  SupResult best;
  for (double R : radius_set(u.grid(), opt)) {
    const double v = shell_integral(u, R) / (R * R);
    if (v > best.value) best = {v, R};
  }
  return best;
}

inline double shell_sup(const ComplexGridField& u, const RadiusOptions& opt = {}) {
  return shell_sup_detail(u, opt).value;
}

/// int_Gamma |[n]| |u|^2 dgamma.
inline double trace_integral_jump(const ComplexGridField& u, const RefractionIndex& n, const InterfaceGraph& gamma) {
  const auto& g = u.grid();
  const int d = g.dimension;
  double s = 0.0;
  for (const auto& node : interface_quadrature(gamma, g)) {
    const TangentPoint xp{node.x[0], d == 3 ? node.x[1] : 0.0};
    const double jn = std::abs(jump(n, gamma, xp, d));
    if (jn == 0.0) continue;
    s += node.weight * jn * std::norm(interface_trace(g, u.values(), node.tangent_index, node.x[d - 1]));
  }
  return s;
}

/// int w |u|^2 for a nonnegative nodal weight w.
inline double weighted_volume_integral(const ComplexGridField& u, const std::vector<double>& w) {
  if (w.size() != u.size()) throw InvalidArgument("weight size does not match the field");
  for (double v : w)
    if (v < 0.0 || !std::isfinite(v)) throw InvalidArgument("weighted_volume_integral needs a nonnegative weight");
  const auto rho = weighted_density(u, &w);
  return std::accumulate(rho.begin(), rho.end(), 0.0);
}

/// Left-hand terms of the uniform estimate together with ||f||_B.
struct NormBundle {
  double bstar_grad = 0.0;      ///< ||grad u||_{B*}^2
  double bstar_nu = 0.0;        ///< ||n^{1/2} u||_{B*}^2
  double bstar_xgradn = 0.0;    ///< ||(x . grad n)_+^{1/2} u||_{B*}^2
  double tang_integral = 0.0;   ///< int |grad_tau u|^2 / |x|
  double shell_sup = 0.0;       ///< sup_R R^{-2} int_{S(R)} |u|^2
  double trace_jump = 0.0;      ///< int_Gamma |[n]| |u|^2
  double ddn_integral = 0.0;    ///< int |d_d n| |u|^2
  double bnorm_f = 0.0;         ///< ||f||_B

  double lhs_sum() const {
    return bstar_grad + bstar_nu + bstar_xgradn + tang_integral + shell_sup + trace_jump + ddn_integral;
  }
};

inline NormBundle norm_bundle(const ComplexGridField& u, const ComplexGridField& f, const RefractionIndex& n,
                              const InterfaceGraph& gamma, const RadiusOptions& opt = {}) {
  const auto& g = u.grid();
  const int d = g.dimension;
  const auto s = sample_index(n, gamma, g);
  const auto grad = gradient_field(u);

  std::vector<double> xgradn(u.size()), ddn(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    const Point x = g.point(p);
    double xg = 0.0;
    for (int k = 0; k < d; ++k) xg += x[k] * s.grad[p][k];
    xgradn[p] = std::max(xg, 0.0);
    ddn[p] = std::abs(s.grad[p][d - 1]);
  }

  NormBundle b;
  b.bstar_grad = bstar_norm_sq(grad, opt);
  b.bstar_nu = bstar_from_density(g, weighted_density(u, &s.value), opt).value;
  b.bstar_xgradn = bstar_from_density(g, weighted_density(u, &xgradn), opt).value;
  b.tang_integral = tangential_gradient_integral(grad);
  b.shell_sup = shell_sup(u, opt);
  b.trace_jump = trace_integral_jump(u, n, gamma);
  b.ddn_integral = weighted_volume_integral(u, ddn);
  b.bnorm_f = b_norm(f);
  return b;
}

}  // namespace mcv
