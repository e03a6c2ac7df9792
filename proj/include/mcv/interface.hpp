#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcv/grid.hpp"

namespace mcv {

/// Tangential coordinates x' = (x_1, ..., x_{d-1}).
using TangentPoint = std::array<double, 2>;

enum class Side { plus, minus };

inline const char* to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }

/// Interface Gamma = { x_d = g(x') } given by a closed-form Lipschitz graph.
///
/// Omega_+ lies above the graph, Omega_- below; the unit normal points from
/// Omega_- into Omega_+.
struct InterfaceGraph {
  std::string name = "flat";
  std::map<std::string, double> params;
  std::function<double(const TangentPoint&)> height = [](const TangentPoint&) { return 0.0; };
  std::function<TangentPoint(const TangentPoint&)> slope = [](const TangentPoint&) {
    return TangentPoint{0.0, 0.0};
  };
  /// sup |grad g|.
  double lipschitz = 0.0;

  bool is_flat() const { return lipschitz == 0.0 && height({0.0, 0.0}) == 0.0; }
};

class HypothesisViolation : public std::runtime_error {
public:
  HypothesisViolation(std::string hypothesis, const std::string& what)
      : std::runtime_error(hypothesis + ": " + what), hypothesis_(std::move(hypothesis)) {}
  const std::string& hypothesis() const { return hypothesis_; }

private:
  std::string hypothesis_;
};

inline TangentPoint tangent_part(const Point& x, int d) {
  TangentPoint xp{0.0, 0.0};
  for (int k = 0; k + 1 < d; ++k) xp[k] = x[k];
  return xp;
}

inline InterfaceGraph flat_interface() { return InterfaceGraph{}; }

/// g(x') = a x_1.
inline InterfaceGraph tilted_interface(double a) {
  InterfaceGraph g;
  g.name = "tilted";
  g.params = {{"a", a}};
  g.height = [a](const TangentPoint& xp) { return a * xp[0]; };
  g.slope = [a](const TangentPoint&) { return TangentPoint{a, 0.0}; };
  g.lipschitz = std::abs(a);
  return g;
}

/// g(x') = a sin(b x_1).
inline InterfaceGraph sinusoidal_interface(double a, double b) {
  InterfaceGraph g;
  g.name = "sinusoidal";
  g.params = {{"a", a}, {"b", b}};
  g.height = [a, b](const TangentPoint& xp) { return a * std::sin(b * xp[0]); };
  g.slope = [a, b](const TangentPoint& xp) { return TangentPoint{a * b * std::cos(b * xp[0]), 0.0}; };
  g.lipschitz = std::abs(a * b);
  return g;
}

/// Registry lookup used by scenario files.
inline InterfaceGraph make_interface(const std::string& name, const std::map<std::string, double>& p) {
  auto get = [&](const char* key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
  };
  if (name == "flat") return flat_interface();
  if (name == "tilted") return tilted_interface(get("a", 0.5));
  if (name == "sinusoidal") return sinusoidal_interface(get("a", 0.5), get("b", 1.0));
  throw InvalidArgument("unknown interface '" + name + "' (expected flat, tilted or sinusoidal)");
}

inline Point normal_vector(const InterfaceGraph& gamma, const TangentPoint& xp, int d) {
  const auto s = gamma.slope(xp);
  double q = 1.0;
  for (int k = 0; k + 1 < d; ++k) q += s[k] * s[k];
  const double inv = 1.0 / std::sqrt(q);
  Point nu{0.0, 0.0, 0.0};
  for (int k = 0; k + 1 < d; ++k) nu[k] = -s[k] * inv;
  nu[d - 1] = inv;
  return nu;
}

/// Points on the graph belong to Omega_+.
inline Side side_of(const InterfaceGraph& gamma, const Point& x, int d) {
  return x[d - 1] >= gamma.height(tangent_part(x, d)) ? Side::plus : Side::minus;
}

/// Calls fn(idx', x') for every node of the (d-1)-dimensional tangential grid.
template <class Fn>
void for_each_tangent_node(const GridSpec& g, Fn&& fn) {
  const int N = g.nodes_per_axis;
  const int n1 = N;
  const int n2 = g.dimension == 3 ? N : 1;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      TangentPoint xp{g.coord(i), g.dimension == 3 ? g.coord(j) : 0.0};
      fn(std::array<int, 2>{i, j}, xp);
    }
}

/// alpha = min nu_d over the tangential grid nodes. Rejects (H1) violations.
inline double alpha_of(const InterfaceGraph& gamma, const GridSpec& g) {
  double alpha = 1.0;
  for_each_tangent_node(g, [&](const std::array<int, 2>&, const TangentPoint& xp) {
    alpha = std::min(alpha, normal_vector(gamma, xp, g.dimension)[g.dimension - 1]);
  });
  if (alpha < 1e-6)
    throw HypothesisViolation("H1", "normal component nu_d drops to " + std::to_string(alpha));
  return alpha;
}

struct InterfaceNode {
  std::array<int, 2> tangent_index;
  Point x;
  Point normal;
  double weight;
};

/// Surface quadrature over Gamma inside the box: trapezoid weights on the
/// tangential grid times the graph area element sqrt(1 + |grad g|^2).
/// Nodes whose graph point leaves the box are dropped.
inline std::vector<InterfaceNode> interface_quadrature(const InterfaceGraph& gamma, const GridSpec& g) {
  const int d = g.dimension;
  const int N = g.nodes_per_axis;
  const double h = g.spacing();
  const double L = g.halfwidth;
  std::vector<InterfaceNode> nodes;
  for_each_tangent_node(g, [&](const std::array<int, 2>& idx, const TangentPoint& xp) {
    const double z = gamma.height(xp);
    if (z < -L || z > L) return;
    double w = std::pow(h, d - 1);
    for (int k = 0; k + 1 < d; ++k)
      if (idx[k] == 0 || idx[k] == N - 1) w *= 0.5;
    const auto s = gamma.slope(xp);
    double q = 1.0;
    for (int k = 0; k + 1 < d; ++k) q += s[k] * s[k];
    InterfaceNode node;
    node.tangent_index = idx;
    node.x = {xp[0], d == 3 ? xp[1] : z, d == 3 ? z : 0.0};
    node.normal = normal_vector(gamma, xp, d);
    node.weight = w * std::sqrt(q);
    nodes.push_back(node);
  });
  return nodes;
}

}  // namespace mcv
