#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcv/grid.hpp"
#include "mcv/interface.hpp"

namespace mcv {

/// One side of the refraction index: a closed-form scalar field with its gradient.
struct IndexPiece {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
};

/// n = n_+ on Omega_+, n_- on Omega_-. Gradients are the one-sided
/// derivatives of the pieces; nothing is differentiated across Gamma.
struct RefractionIndex {
  std::string name;
  std::map<std::string, double> params;
  IndexPiece plus;
  IndexPiece minus;

  const IndexPiece& piece(Side s) const { return s == Side::plus ? plus : minus; }
};

inline IndexPiece constant_piece(double c) {
  return {[c](const Point&) { return c; }, [](const Point&) { return Point{0.0, 0.0, 0.0}; }};
}

inline RefractionIndex piecewise_constant_index(double n_plus, double n_minus) {
  return {"piecewise-constant", {{"n_plus", n_plus}, {"n_minus", n_minus}}, constant_piece(n_plus),
          constant_piece(n_minus)};
}

/// n_+- = base_+- + sign * amplitude_+- * exp(-|x|^2 / width^2), d = 3 evaluation.
/// The minus side uses `amplitude` unless `amplitude_minus` is given.
inline RefractionIndex radial_bump_index(double base_plus, double base_minus, double amplitude, double sign,
                                         double width = 1.0, int d = 3,
                                         std::optional<double> amplitude_minus = std::nullopt) {
  auto piece = [=](double base, double amp) {
    const double a = sign * amp;
    const double inv_w2 = 1.0 / (width * width);
    return IndexPiece{[=](const Point& x) { return base + a * std::exp(-norm(x, d) * norm(x, d) * inv_w2); },
                      [=](const Point& x) {
                        const double r2 = norm(x, d) * norm(x, d);
                        const double c = -2.0 * a * inv_w2 * std::exp(-r2 * inv_w2);
                        Point gr{0.0, 0.0, 0.0};
                        for (int k = 0; k < d; ++k) gr[k] = c * x[k];
                        return gr;
                      }};
  };
  const double am = amplitude_minus.value_or(amplitude);
  return {"radial-gaussian-bump",
          {{"base_plus", base_plus}, {"base_minus", base_minus}, {"amplitude", amplitude},
           {"amplitude_minus", am}, {"sign", sign}, {"width", width}},
          piece(base_plus, amplitude),
          piece(base_minus, am)};
}

/// n_+- = base_+- + slope * x_d * exp(-|x|^2 / width^2).
inline RefractionIndex graded_index(double base_plus, double base_minus, double slope, double width = 1.0,
                                    int d = 3) {
  auto piece = [=](double base) {
    const double inv_w2 = 1.0 / (width * width);
    return IndexPiece{[=](const Point& x) {
                        const double r2 = norm(x, d) * norm(x, d);
                        return base + slope * x[d - 1] * std::exp(-r2 * inv_w2);
                      },
                      [=](const Point& x) {
                        const double r2 = norm(x, d) * norm(x, d);
                        const double e = std::exp(-r2 * inv_w2);
                        Point gr{0.0, 0.0, 0.0};
                        for (int k = 0; k < d; ++k) gr[k] = -2.0 * slope * x[d - 1] * x[k] * inv_w2 * e;
                        gr[d - 1] += slope * e;
                        return gr;
                      }};
  };
  return {"graded-x_d",
          {{"base_plus", base_plus}, {"base_minus", base_minus}, {"slope", slope}, {"width", width}},
          piece(base_plus),
          piece(base_minus)};
}

inline RefractionIndex make_index(const std::string& name, const std::map<std::string, double>& p, int d = 3) {
  auto get = [&](const char* key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
  };
  if (name == "piecewise-constant") return piecewise_constant_index(get("n_plus", 1.0), get("n_minus", 2.0));
  if (name == "radial-gaussian-bump") {
    const double base = get("base", 2.0);
    const double amp = get("amplitude", 1.0);
    return radial_bump_index(get("base_plus", base), get("base_minus", base), amp, get("sign", 1.0),
                             get("width", 1.0), d, get("amplitude_minus", amp));
  }
  if (name == "graded-x_d") {
    const double base = get("base", 2.0);
    return graded_index(get("base_plus", base), get("base_minus", base), get("slope", 0.1), get("width", 1.0), d);
  }
  throw InvalidArgument("unknown index '" + name +
                        "' (expected piecewise-constant, radial-gaussian-bump or graded-x_d)");
}

inline double evaluate(const RefractionIndex& n, const InterfaceGraph& gamma, const Point& x, int d) {
  return n.piece(side_of(gamma, x, d)).value(x);
}

inline Point gradient(const RefractionIndex& n, const InterfaceGraph& gamma, const Point& x, int d) {
  return n.piece(side_of(gamma, x, d)).gradient(x);
}

/// Point (x', g(x')) on Gamma.
inline Point interface_point(const InterfaceGraph& gamma, const TangentPoint& xp, int d) {
  Point x{xp[0], d == 3 ? xp[1] : 0.0, 0.0};
  x[d - 1] = gamma.height(xp);
  return x;
}

/// [n](x') = n_+ - n_- on Gamma.
inline double jump(const RefractionIndex& n, const InterfaceGraph& gamma, const TangentPoint& xp, int d) {
  const Point x = interface_point(gamma, xp, d);
  return n.plus.value(x) - n.minus.value(x);
}

/// Index, one-sided gradient and radius at every grid node.
struct IndexSamples {
  std::vector<double> value;
  std::vector<Point> grad;
  std::vector<double> radius;
};

inline IndexSamples sample_index(const RefractionIndex& n, const InterfaceGraph& gamma, const GridSpec& g) {
  IndexSamples s;
  const std::size_t count = g.node_count();
  s.value.resize(count);
  s.grad.resize(count);
  s.radius.resize(count);
  for (std::size_t p = 0; p < count; ++p) {
    const Point x = g.point(p);
    const auto& piece = n.piece(side_of(gamma, x, g.dimension));
    s.value[p] = piece.value(x);
    s.grad[p] = piece.gradient(x);
    s.radius[p] = norm(x, g.dimension);
  }
  return s;
}

struct SigmaResult {
  Side sigma = Side::plus;
  /// Set when [n] vanishes on every sample and sigma is the convention value.
  bool by_convention = false;
};

/// sigma = minus if [n] >= 0 on Gamma, plus if [n] <= 0; plus when [n] == 0.
inline SigmaResult sigma_of(const RefractionIndex& n, const InterfaceGraph& gamma, const GridSpec& g,
                            double n_max = 0.0) {
  const int d = g.dimension;
  double max_pos = 0.0, max_neg = 0.0;
  double scale = n_max;
  for (const auto& node : interface_quadrature(gamma, g)) {
    const TangentPoint xp{node.x[0], d == 3 ? node.x[1] : 0.0};
    const double j = jump(n, gamma, xp, d);
    const Point x = interface_point(gamma, xp, d);
    scale = std::max({scale, std::abs(n.plus.value(x)), std::abs(n.minus.value(x))});
    max_pos = std::max(max_pos, j);
    max_neg = std::max(max_neg, -j);
  }
  const double tol = 1e-12 * scale;
  if (max_pos > tol && max_neg > tol)
    throw HypothesisViolation("H2", "jump [n] changes sign on the interface (max +" + std::to_string(max_pos) +
                                        ", max -" + std::to_string(max_neg) + ")");
  if (max_pos <= tol && max_neg <= tol) return {Side::plus, true};
  return {max_pos > tol ? Side::minus : Side::plus, false};
}

struct AnnulusTerm {
  int j = 0;
  /// max over the grid nodes of C(j) of the annulus integrand (0 if no node falls inside).
  double sup = 0.0;
  /// Contribution of this annulus to the functional.
  double contribution = 0.0;
};

struct HypothesisFunctional {
  double value = 0.0;
  std::vector<AnnulusTerm> terms;
};

namespace detail {

template <class Integrand>
HypothesisFunctional annulus_sum(const GridSpec& g, const IndexSamples& s, Integrand&& integrand,
                                 const std::function<double(int)>& prefactor) {
  HypothesisFunctional out;
  for (const auto& a : dyadic_cover(g)) {
    double sup = 0.0;
    for (std::size_t p = 0; p < s.radius.size(); ++p)
      if (a.contains(s.radius[p])) sup = std::max(sup, integrand(p));
    const double c = prefactor(a.index) * sup;
    out.terms.push_back({a.index, sup, c});
    out.value += c;
  }
  return out;
}

inline double positive_part(double a) { return a > 0.0 ? a : 0.0; }
inline double negative_part(double a) { return a < 0.0 ? -a : 0.0; }

}  // namespace detail

/// beta_1 = 2 sum_j sup_{C(j)} (x . grad n)_- / n.
inline HypothesisFunctional beta1(const GridSpec& g, const IndexSamples& s) {
  const int d = g.dimension;
  return detail::annulus_sum(
      g, s,
      [&](std::size_t p) {
        const Point x = g.point(p);
        double xg = 0.0;
        for (int k = 0; k < d; ++k) xg += x[k] * s.grad[p][k];
        return detail::negative_part(xg) / s.value[p];
      },
      [](int) { return 2.0; });
}

inline HypothesisFunctional beta1(const RefractionIndex& n, const InterfaceGraph& gamma, const GridSpec& g) {
  return beta1(g, sample_index(n, gamma, g));
}

/// Proof-side variant sum_j 2^{j+1} sup_{C(j)} (x . grad n)_- / (n |x|), dominated by beta_1.
inline HypothesisFunctional beta1_proof_form(const GridSpec& g, const IndexSamples& s) {
  const int d = g.dimension;
  return detail::annulus_sum(
      g, s,
      [&](std::size_t p) {
        const Point x = g.point(p);
        double xg = 0.0;
        for (int k = 0; k < d; ++k) xg += x[k] * s.grad[p][k];
        return s.radius[p] > 0.0 ? detail::negative_part(xg) / (s.value[p] * s.radius[p]) : 0.0;
      },
      [](int j) { return std::ldexp(1.0, j + 1); });
}

/// beta_2 = (1/alpha) sum_j 2^{j+1} sup_{C(j)} (d_d n)_sigma / n.
inline HypothesisFunctional beta2(const GridSpec& g, const IndexSamples& s, double alpha, Side sigma) {
  if (!(alpha > 0.0)) throw InvalidArgument("beta2 needs alpha > 0");
  const int d = g.dimension;
  return detail::annulus_sum(
      g, s,
      [&](std::size_t p) {
        const double dd = s.grad[p][d - 1];
        const double part = sigma == Side::plus ? detail::positive_part(dd) : detail::negative_part(dd);
        return part / s.value[p];
      },
      [alpha](int j) { return std::ldexp(1.0, j + 1) / alpha; });
}

inline HypothesisFunctional beta2(const RefractionIndex& n, const InterfaceGraph& gamma, const GridSpec& g,
                                  double alpha, Side sigma) {
  return beta2(g, sample_index(n, gamma, g), alpha, sigma);
}

struct HypothesisReport {
  double alpha = 1.0;
  Side sigma = Side::plus;
  bool sigma_by_convention = false;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta1_proof_form = 0.0;
  double n_min = 0.0;
  double n_max = 0.0;
  bool h6_satisfied = true;
  std::vector<AnnulusTerm> beta1_terms;
  std::vector<AnnulusTerm> beta2_terms;
};

/// Evaluates (H1)-(H6) on the grid. Hard violations of (H1)-(H3) throw
/// HypothesisViolation naming the hypothesis; (H6) is reported, not thrown.
inline HypothesisReport check_hypotheses(const RefractionIndex& n, const InterfaceGraph& gamma, const GridSpec& g) {
  HypothesisReport r;
  r.alpha = alpha_of(gamma, g);

  const auto s = sample_index(n, gamma, g);
  r.n_min = std::numeric_limits<double>::infinity();
  r.n_max = -std::numeric_limits<double>::infinity();
  for (double v : s.value) {
    if (!std::isfinite(v)) throw HypothesisViolation("H3", "index is not finite on the box");
    r.n_min = std::min(r.n_min, v);
    r.n_max = std::max(r.n_max, v);
  }
  if (r.n_min < 0.0) throw HypothesisViolation("H3", "index is negative (min " + std::to_string(r.n_min) + ")");
  if (r.n_min == 0.0) throw HypothesisViolation("H3", "index touches zero; a positive floor is required");

  const auto sig = sigma_of(n, gamma, g, r.n_max);
  r.sigma = sig.sigma;
  r.sigma_by_convention = sig.by_convention;

  const auto b1 = beta1(g, s);
  const auto b2 = beta2(g, s, r.alpha, r.sigma);
  r.beta1 = b1.value;
  r.beta1_terms = b1.terms;
  r.beta2 = b2.value;
  r.beta2_terms = b2.terms;
  r.beta1_proof_form = beta1_proof_form(g, s).value;
  r.h6_satisfied = r.beta1 + r.beta2 < 1.0;
  return r;
}

}  // namespace mcv
