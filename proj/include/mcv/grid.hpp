#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcv {

/// Spatial point. Only the first `d` entries are meaningful; the rest are 0.
using Point = std::array<double, 3>;

class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline double norm(const Point& x, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += x[k] * x[k];
  return std::sqrt(s);
}

/// Uniform Cartesian grid on the box [-L, L]^d with N nodes per axis.
///
/// Node (i_1, ..., i_d) sits at x_k = -L + i_k h with h = 2L/(N-1). Flat
/// indices are row-major with the last axis (x_d) fastest.
struct GridSpec {
  int dimension = 3;
  double halfwidth = 8.0;
  int nodes_per_axis = 48;
  /// d = 2 is accepted only when this is set; the estimates are stated for d >= 3.
  bool out_of_theorem = false;

  GridSpec() = default;
  GridSpec(int d, double L, int N, bool allow_2d = false)
      : dimension(d), halfwidth(L), nodes_per_axis(N), out_of_theorem(allow_2d) {
    validate();
  }

  void validate() const {
    if (dimension != 2 && dimension != 3)
      throw InvalidArgument("grid dimension must be 2 or 3");
    if (dimension == 2 && !out_of_theorem)
      throw InvalidArgument("d = 2 requires the out-of-theorem flag");
    if (!(halfwidth > 0.0) || !std::isfinite(halfwidth))
      throw InvalidArgument("grid halfwidth must be positive");
    if (nodes_per_axis < 8)
      throw InvalidArgument("grid needs at least 8 nodes per axis");
  }

  double spacing() const { return 2.0 * halfwidth / (nodes_per_axis - 1); }
  double coord(int i) const { return -halfwidth + i * spacing(); }

  std::size_t node_count() const {
    std::size_t n = 1;
    for (int k = 0; k < dimension; ++k) n *= static_cast<std::size_t>(nodes_per_axis);
    return n;
  }

  /// Flat-index distance between neighbours along `axis`.
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int k = axis + 1; k < dimension; ++k) s *= static_cast<std::size_t>(nodes_per_axis);
    return s;
  }

  std::array<int, 3> indices(std::size_t flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int k = dimension - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(flat % nodes_per_axis);
      flat /= nodes_per_axis;
    }
    return idx;
  }

  std::size_t flat(const std::array<int, 3>& idx) const {
    std::size_t f = 0;
    for (int k = 0; k < dimension; ++k) f = f * nodes_per_axis + static_cast<std::size_t>(idx[k]);
    return f;
  }

  Point point(std::size_t flat_index) const {
    const auto idx = indices(flat_index);
    Point x{0.0, 0.0, 0.0};
    for (int k = 0; k < dimension; ++k) x[k] = coord(idx[k]);
    return x;
  }

  /// Radius of the smallest ball centred at 0 containing the box.
  double box_radius() const { return std::sqrt(static_cast<double>(dimension)) * halfwidth; }

  double box_volume() const { return std::pow(2.0 * halfwidth, dimension); }

  bool operator==(const GridSpec&) const = default;
};

/// Trapezoid weights: h^d with a factor 1/2 per axis on which the node lies on a face.
inline std::vector<double> trapezoid_weights(const GridSpec& g) {
  const double h = g.spacing();
  const int N = g.nodes_per_axis;
  std::vector<double> w(g.node_count());
  for (std::size_t p = 0; p < w.size(); ++p) {
    const auto idx = g.indices(p);
    double wt = std::pow(h, g.dimension);
    for (int k = 0; k < g.dimension; ++k)
      if (idx[k] == 0 || idx[k] == N - 1) wt *= 0.5;
    w[p] = wt;
  }
  return w;
}

/// Distance of every node from the origin.
inline std::vector<double> node_radii(const GridSpec& g) {
  std::vector<double> r(g.node_count());
  for (std::size_t p = 0; p < r.size(); ++p) r[p] = norm(g.point(p), g.dimension);
  return r;
}

/// C(j) = { 2^j <= |x| <= 2^{j+1} }.
struct DyadicAnnulus {
  int index = 0;
  double inner = 1.0;
  double outer = 2.0;

  bool contains(double r) const { return r >= inner && r <= outer; }
};

struct AnnulusBounds {
  double inner;
  double outer;
};

inline AnnulusBounds annulus_bounds(int j) {
  return {std::ldexp(1.0, j), std::ldexp(1.0, j + 1)};
}

inline DyadicAnnulus make_annulus(int j) {
  const auto b = annulus_bounds(j);
  return {j, b.inner, b.outer};
}

/// Annuli carrying discrete information: j from floor(log2 h) to ceil(log2(sqrt(d) L)).
inline std::vector<DyadicAnnulus> dyadic_cover(double h, double box_radius) {
  // The nudge keeps exact powers of two (h = 0.25) from flooring one step too low.
  constexpr double nudge = 1e-12;
  const int jmin = static_cast<int>(std::floor(std::log2(h) + nudge));
  const int jmax = static_cast<int>(std::ceil(std::log2(box_radius) - nudge));
  std::vector<DyadicAnnulus> cover;
  for (int j = jmin; j <= jmax; ++j) cover.push_back(make_annulus(j));
  return cover;
}

inline std::vector<DyadicAnnulus> dyadic_cover(const GridSpec& g) { return dyadic_cover(g.spacing(), g.box_radius()); }

/// Radii at which suprema over R > 0 are sampled.
struct RadiusOptions {
  bool midpoints = true;
  bool include_box_radius = true;
  /// Extra log-uniform radii per octave (0 keeps the dyadic + midpoint set).
  int extra_per_octave = 0;
  /// Radii above this are dropped when positive.
  double max_radius = 0.0;
};

inline std::vector<double> radius_set(const GridSpec& g, const RadiusOptions& opt = {}) {
  std::vector<double> radii;
  for (const auto& a : dyadic_cover(g)) {
    radii.push_back(a.inner);
    if (opt.midpoints) radii.push_back(1.5 * a.inner);
    for (int k = 1; k <= opt.extra_per_octave; ++k)
      radii.push_back(a.inner * std::exp2(static_cast<double>(k) / (opt.extra_per_octave + 1)));
  }
  if (opt.include_box_radius) radii.push_back(g.box_radius());
  if (opt.max_radius > 0.0) {
    std::erase_if(radii, [&](double r) { return r > opt.max_radius * (1.0 + 1e-14); });
    radii.push_back(opt.max_radius);
  }
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  return radii;
}

}  // namespace mcv
