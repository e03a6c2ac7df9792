#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mcv/grid.hpp"

namespace mcv {

struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline GaussLegendreRule gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Quadrature on the sphere S(R) centred at the origin.
///
/// d = 3 uses a Gauss-Legendre (in cos theta) x uniform (in phi) product
/// rule; d = 2 uses uniform angles. Weights carry the R^{d-1} factor.
struct ShellQuadrature {
  int dimension = 3;
  double radius = 1.0;
  std::vector<Point> directions;
  std::vector<double> weights;

  Point node(std::size_t k) const {
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < dimension; ++a) x[a] = radius * directions[k][a];
    return x;
  }

  double area() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

inline ShellQuadrature make_shell(int d, double R, int polar_nodes) {
  ShellQuadrature q;
  q.dimension = d;
  q.radius = R;
  if (d == 2) {
    const int m = 2 * polar_nodes;
    for (int k = 0; k < m; ++k) {
      const double t = 2.0 * std::numbers::pi * (k + 0.5) / m;
      q.directions.push_back({std::cos(t), std::sin(t), 0.0});
      q.weights.push_back(2.0 * std::numbers::pi * R / m);
    }
    return q;
  }
  const auto gl = gauss_legendre(polar_nodes);
  const int m = 2 * polar_nodes;
  const double dphi = 2.0 * std::numbers::pi / m;
  for (int i = 0; i < polar_nodes; ++i) {
    const double c = gl.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int k = 0; k < m; ++k) {
      const double phi = dphi * (k + 0.5);
      q.directions.push_back({s * std::cos(phi), s * std::sin(phi), c});
      q.weights.push_back(gl.weights[i] * dphi * R * R);
    }
  }
  return q;
}

/// Shell rule with node spacing on S(R) comparable to h / 2.
inline ShellQuadrature make_shell(const GridSpec& g, double R) {
  const int polar = std::clamp(static_cast<int>(std::ceil(2.0 * std::numbers::pi * R / g.spacing())), 12, 400);
  return make_shell(g.dimension, R, polar);
}

}  // namespace mcv
