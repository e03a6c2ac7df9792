#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcv/field.hpp"
#include "mcv/index.hpp"

namespace mcv {

/// A_eps u = i eps u + Delta_h u + n u on the box, with zero ghost values outside.
class HelmholtzOperator {
public:
  HelmholtzOperator(const GridSpec& g, double eps, std::vector<double> n_nodes)
      : grid_(g), eps_(eps), n_(std::move(n_nodes)) {
    if (n_.size() != g.node_count()) throw InvalidArgument("index samples do not match the grid");
    if (!std::isfinite(eps)) throw InvalidArgument("epsilon must be finite");
  }

  HelmholtzOperator(const GridSpec& g, double eps, const RefractionIndex& n, const InterfaceGraph& gamma)
      : HelmholtzOperator(g, eps, sample_index(n, gamma, g).value) {}

  const GridSpec& grid() const { return grid_; }
  double epsilon() const { return eps_; }
  const std::vector<double>& index_samples() const { return n_; }

  /// Diagonal entry i eps + n - 2d/h^2.
  cplx diagonal(std::size_t p) const {
    const double h = grid_.spacing();
    return {n_[p] - 2.0 * grid_.dimension / (h * h), eps_};
  }

  void apply(const std::vector<cplx>& u, std::vector<cplx>& out) const {
    const int d = grid_.dimension;
    const int N = grid_.nodes_per_axis;
    const double h = grid_.spacing();
    const double c = 1.0 / (h * h);
    out.resize(u.size());
    if (d == 3) {
      const std::size_t sx = static_cast<std::size_t>(N) * N, sy = N;
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const std::size_t row = i * sx + j * sy;
          for (int k = 0; k < N; ++k) {
            const std::size_t p = row + k;
            cplx nb{};
            if (i > 0) nb += u[p - sx];
            if (i < N - 1) nb += u[p + sx];
            if (j > 0) nb += u[p - sy];
            if (j < N - 1) nb += u[p + sy];
            if (k > 0) nb += u[p - 1];
            if (k < N - 1) nb += u[p + 1];
            out[p] = c * nb + cplx(n_[p] - 6.0 * c, eps_) * u[p];
          }
        }
      return;
    }
    const std::size_t sx = N;
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < N; ++k) {
        const std::size_t p = i * sx + k;
        cplx nb{};
        if (i > 0) nb += u[p - sx];
        if (i < N - 1) nb += u[p + sx];
        if (k > 0) nb += u[p - 1];
        if (k < N - 1) nb += u[p + 1];
        out[p] = c * nb + cplx(n_[p] - 4.0 * c, eps_) * u[p];
      }
  }

  ComplexGridField apply(const ComplexGridField& u) const {
    if (!(u.grid() == grid_)) throw InvalidArgument("field and operator grids differ");
    std::vector<cplx> out;
    apply(u.values(), out);
    return ComplexGridField(grid_, std::move(out));
  }

private:
  GridSpec grid_;
  double eps_;
  std::vector<double> n_;
};

enum class KrylovMethod { gmres, bicgstab };

inline const char* to_string(KrylovMethod m) { return m == KrylovMethod::gmres ? "gmres" : "bicgstab"; }

struct SolverSettings {
  KrylovMethod method = KrylovMethod::gmres;
  int restart = 60;
  double tol = 1e-8;
  int max_iterations = 20000;
  /// Reductions here are single-threaded and therefore always in a fixed order.
  bool reproducible = true;
};

/// Mass of |u|^2 in the outermost three node layers over the total mass.
inline double boundary_energy_fraction(const ComplexGridField& u, int margin = 3) {
  const auto& g = u.grid();
  const int N = g.nodes_per_axis;
  double edge = 0.0, total = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    const auto idx = g.indices(p);
    const double m = std::norm(u[p]);
    total += m;
    bool outer = false;
    for (int a = 0; a < g.dimension; ++a)
      if (idx[a] < margin || idx[a] > N - 1 - margin) outer = true;
    if (outer) edge += m;
  }
  return total > 0.0 ? edge / total : 0.0;
}

struct SolveResult {
  ComplexGridField u;
  int iterations = 0;
  double relative_residual = 0.0;
  double boundary_energy_fraction = 0.0;
};

/// Raised when the Krylov iteration stops above tolerance; carries the best iterate.
class SolveFailure : public std::runtime_error {
public:
  SolveFailure(const std::string& what, SolveResult best) : std::runtime_error(what), best_(std::move(best)) {}
  const SolveResult& best() const { return best_; }

private:
  SolveResult best_;
};

namespace detail {

inline cplx dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double norm2(const std::vector<cplx>& a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return std::sqrt(s);
}

inline double true_residual(const HelmholtzOperator& op, const std::vector<cplx>& f, const std::vector<cplx>& u,
                            std::vector<cplx>& scratch) {
  op.apply(u, scratch);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::norm(f[i] - scratch[i]);
  return std::sqrt(s);
}

/// Right-preconditioned restarted GMRES. Returns iterations used; u holds the iterate.
inline int gmres(const HelmholtzOperator& op, const std::vector<cplx>& f, std::vector<cplx>& u,
                 const std::vector<cplx>& inv_diag, const SolverSettings& s, double fnorm, double& rel) {
  const std::size_t n = f.size();
  const int m = std::max(2, s.restart);
  std::vector<std::vector<cplx>> V(m + 1, std::vector<cplx>(n));
  std::vector<cplx> H((m + 1) * m), cs(m), sn(m), g(m + 1), w(n), z(n);
  auto Hij = [&](int i, int j) -> cplx& { return H[i * m + j]; };
  int total = 0;
  rel = true_residual(op, f, u, w) / fnorm;
  while (total < s.max_iterations && rel > s.tol) {
    for (std::size_t i = 0; i < n; ++i) V[0][i] = f[i] - w[i];
    const double beta = norm2(V[0]);
    for (auto& v : V[0]) v /= beta;
    std::fill(g.begin(), g.end(), cplx{});
    g[0] = beta;
    int k = 0;
    for (; k < m && total < s.max_iterations; ++k, ++total) {
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * V[k][i];
      op.apply(z, w);
      for (int i = 0; i <= k; ++i) {
        const cplx hik = dot(V[i], w);
        Hij(i, k) = hik;
        for (std::size_t t = 0; t < n; ++t) w[t] -= hik * V[i][t];
      }
      const double hn = norm2(w);
      Hij(k + 1, k) = hn;
      if (hn > 0.0)
        for (std::size_t t = 0; t < n; ++t) V[k + 1][t] = w[t] / hn;
      for (int i = 0; i < k; ++i) {
        const cplx a = Hij(i, k), b = Hij(i + 1, k);
        Hij(i, k) = std::conj(cs[i]) * a + std::conj(sn[i]) * b;
        Hij(i + 1, k) = -sn[i] * a + cs[i] * b;
      }
      const cplx a = Hij(k, k), b = Hij(k + 1, k);
      const double r = std::sqrt(std::norm(a) + std::norm(b));
      cs[k] = r > 0.0 ? a / r : cplx{1.0};
      sn[k] = r > 0.0 ? b / r : cplx{};
      Hij(k, k) = r;
      Hij(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = std::conj(cs[k]) * g[k];
      if (std::abs(g[k + 1]) / fnorm <= 0.5 * s.tol || hn == 0.0) {
        ++k;
        ++total;
        break;
      }
    }
    std::vector<cplx> y(k);
    for (int i = k - 1; i >= 0; --i) {
      cplx acc = g[i];
      for (int j = i + 1; j < k; ++j) acc -= Hij(i, j) * y[j];
      y[i] = acc / Hij(i, i);
    }
    std::fill(z.begin(), z.end(), cplx{});
    for (int j = 0; j < k; ++j)
      for (std::size_t t = 0; t < n; ++t) z[t] += y[j] * V[j][t];
    for (std::size_t t = 0; t < n; ++t) u[t] += inv_diag[t] * z[t];
    rel = true_residual(op, f, u, w) / fnorm;
  }
  return total;
}

/// Right-preconditioned BiCGStab.
inline int bicgstab(const HelmholtzOperator& op, const std::vector<cplx>& f, std::vector<cplx>& u,
                    const std::vector<cplx>& inv_diag, const SolverSettings& s, double fnorm, double& rel) {
  const std::size_t n = f.size();
  std::vector<cplx> r(n), r0(n), p(n, cplx{}), v(n, cplx{}), y(n), t(n), zz(n), scratch(n);
  rel = true_residual(op, f, u, scratch) / fnorm;
  for (std::size_t i = 0; i < n; ++i) r[i] = f[i] - scratch[i];
  r0 = r;
  cplx rho{1.0}, alpha{1.0}, omega{1.0};
  int it = 0;
  std::vector<cplx> best = u;
  double best_rel = rel;
  while (it < s.max_iterations && rel > s.tol) {
    ++it;
    const cplx rho_new = dot(r0, r);
    if (std::abs(rho_new) < 1e-300) break;
    const cplx beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    for (std::size_t i = 0; i < n; ++i) y[i] = inv_diag[i] * p[i];
    op.apply(y, v);
    alpha = rho / dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * v[i];
    for (std::size_t i = 0; i < n; ++i) zz[i] = inv_diag[i] * r[i];
    op.apply(zz, t);
    const double tt = std::real(dot(t, t));
    omega = tt > 0.0 ? dot(t, r) / tt : cplx{};
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += alpha * y[i] + omega * zz[i];
      r[i] -= omega * t[i];
    }
    rel = norm2(r) / fnorm;
    if (rel <= s.tol) {
      // The recursive residual drifts; confirm against the true one.
      rel = true_residual(op, f, u, scratch) / fnorm;
      if (rel > s.tol)
        for (std::size_t i = 0; i < n; ++i) r[i] = f[i] - scratch[i];
    }
    if (rel < best_rel) {
      best_rel = rel;
      best = u;
    }
  }
  if (rel > best_rel) {
    u = best;
    rel = best_rel;
  }
  return it;
}

}  // namespace detail

/// Solves A_eps u = f to relative residual `tol` with diagonal preconditioning.
/// Throws SolveFailure (carrying the best iterate) when max_iterations is exhausted.
inline SolveResult solve(const HelmholtzOperator& op, const ComplexGridField& f, const SolverSettings& s = {}) {
  if (!(op.epsilon() != 0.0)) throw InvalidArgument("epsilon must be nonzero");
  if (!(s.tol > 0.0) || s.tol > 1e-4) throw InvalidArgument("solver tolerance must lie in (0, 1e-4]");
  if (!(f.grid() == op.grid())) throw InvalidArgument("source and operator grids differ");
  f.require_finite();

  SolveResult res;
  res.u = ComplexGridField(op.grid());
  const double fnorm = detail::norm2(f.values());
  if (fnorm == 0.0) return res;

  std::vector<cplx> inv_diag(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) inv_diag[p] = 1.0 / op.diagonal(p);

  auto& u = res.u.values();
  double rel = 1.0;
  res.iterations = s.method == KrylovMethod::gmres ? detail::gmres(op, f.values(), u, inv_diag, s, fnorm, rel)
                                                   : detail::bicgstab(op, f.values(), u, inv_diag, s, fnorm, rel);
  res.relative_residual = rel;
  res.boundary_energy_fraction = boundary_energy_fraction(res.u);
  if (!(rel <= s.tol))
    throw SolveFailure(std::string(to_string(s.method)) + " stopped at relative residual " + std::to_string(rel) +
                           " after " + std::to_string(res.iterations) + " iterations",
                       std::move(res));
  return res;
}

/// Closed-form field with analytic gradient and Laplacian (manufactured solutions, test multipliers).
struct ClosedFormField {
  std::function<cplx(const Point&)> value;
  std::function<std::array<cplx, 3>(const Point&)> gradient;
  std::function<cplx(const Point&)> laplacian;
};

inline ClosedFormField zero_field() {
  return {[](const Point&) { return cplx{}; }, [](const Point&) { return std::array<cplx, 3>{}; },
          [](const Point&) { return cplx{}; }};
}

/// exp(-a |x - c|^2) exp(i q . x).
inline ClosedFormField modulated_gaussian(double a, Point c, Point q, int d = 3) {
  auto phase_grad = [=](const Point& x) {
    std::array<cplx, 3> gphi{};
    for (int k = 0; k < d; ++k) gphi[k] = cplx(-2.0 * a * (x[k] - c[k]), q[k]);
    return gphi;
  };
  auto val = [=](const Point& x) {
    double r2 = 0.0, qx = 0.0;
    for (int k = 0; k < d; ++k) {
      r2 += (x[k] - c[k]) * (x[k] - c[k]);
      qx += q[k] * x[k];
    }
    return std::exp(cplx(-a * r2, qx));
  };
  return {val,
          [=](const Point& x) {
            auto gp = phase_grad(x);
            const cplx v = val(x);
            for (int k = 0; k < d; ++k) gp[k] *= v;
            return gp;
          },
          [=](const Point& x) {
            const auto gp = phase_grad(x);
            cplx s = -2.0 * a * d;
            for (int k = 0; k < d; ++k) s += gp[k] * gp[k];
            return s * val(x);
          }};
}

inline ClosedFormField gaussian(double a = 1.0, int d = 3) {
  return modulated_gaussian(a, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, d);
}

/// f = i eps u + Delta u + n u sampled at the nodes, n taken on the node's side of Gamma.
inline ComplexGridField mms_source(const ClosedFormField& exact, const RefractionIndex& n,
                                   const InterfaceGraph& gamma, double eps, const GridSpec& g) {
  ComplexGridField f(g);
  for (std::size_t p = 0; p < f.size(); ++p) {
    const Point x = g.point(p);
    const cplx u = exact.value(x);
    f[p] = cplx(0.0, eps) * u + exact.laplacian(x) + evaluate(n, gamma, x, g.dimension) * u;
  }
  return f;
}

inline ComplexGridField sample(const ClosedFormField& field, const GridSpec& g) {
  return ComplexGridField::sample(g, [&](const Point& x) { return field.value(x); });
}

}  // namespace mcv
