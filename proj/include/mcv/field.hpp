#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mcv/grid.hpp"
#include "mcv/interface.hpp"

namespace mcv {

using cplx = std::complex<double>;

/// Complex values at the nodes of a grid (the discrete u or f).
class ComplexGridField {
public:
  ComplexGridField() = default;
  explicit ComplexGridField(const GridSpec& g) : grid_(g), values_(g.node_count(), cplx{}) {}
  ComplexGridField(const GridSpec& g, std::vector<cplx> values) : grid_(g), values_(std::move(values)) {
    if (values_.size() != grid_.node_count())
      throw InvalidArgument("field value count does not match the grid");
  }

  template <class Fn>
  static ComplexGridField sample(const GridSpec& g, Fn&& fn) {
    ComplexGridField u(g);
    for (std::size_t p = 0; p < u.size(); ++p) u.values_[p] = cplx(fn(g.point(p)));
    return u;
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<cplx>& values() const { return values_; }
  std::vector<cplx>& values() { return values_; }
  cplx operator[](std::size_t p) const { return values_[p]; }
  cplx& operator[](std::size_t p) { return values_[p]; }

  bool all_finite() const {
    for (const auto& v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  void require_finite() const {
    if (!all_finite()) throw InvalidArgument("field contains NaN or Inf");
  }

  ComplexGridField conj() const {
    ComplexGridField c(*this);
    for (auto& v : c.values_) v = std::conj(v);
    return c;
  }

private:
  GridSpec grid_;
  std::vector<cplx> values_;
};

/// d complex components per node.
struct VectorGridField {
  GridSpec grid;
  std::vector<std::vector<cplx>> components;

  double magnitude_sq(std::size_t p) const {
    double s = 0.0;
    for (const auto& c : components) s += std::norm(c[p]);
    return s;
  }
};

/// Second-order finite-difference gradient: centred in the interior,
/// one-sided three-point at the box faces.
inline VectorGridField gradient_field(const ComplexGridField& u) {
  const auto& g = u.grid();
  const int d = g.dimension;
  const int N = g.nodes_per_axis;
  const double inv2h = 1.0 / (2.0 * g.spacing());
  VectorGridField grad{g, std::vector<std::vector<cplx>>(d, std::vector<cplx>(u.size()))};
  for (int a = 0; a < d; ++a) {
    const std::size_t s = g.stride(a);
    auto& out = grad.components[a];
    for (std::size_t p = 0; p < u.size(); ++p) {
      const int i = g.indices(p)[a];
      if (i == 0)
        out[p] = (-3.0 * u[p] + 4.0 * u[p + s] - u[p + 2 * s]) * inv2h;
      else if (i == N - 1)
        out[p] = (3.0 * u[p] - 4.0 * u[p - s] + u[p - 2 * s]) * inv2h;
      else
        out[p] = (u[p + s] - u[p - s]) * inv2h;
    }
  }
  return grad;
}

/// Multilinear interpolation of nodal values; zero outside the box.
inline cplx interpolate(const GridSpec& g, const std::vector<cplx>& values, const Point& x) {
  const int d = g.dimension;
  const int N = g.nodes_per_axis;
  const double h = g.spacing();
  const double L = g.halfwidth;
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> t{0.0, 0.0, 0.0};
  for (int a = 0; a < d; ++a) {
    const double s = (x[a] + L) / h;
    if (s < -1e-12 || s > N - 1 + 1e-12) return cplx{};
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, N - 2);
    base[a] = i;
    t[a] = std::clamp(s - i, 0.0, 1.0);
  }
  cplx acc{};
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::array<int, 3> idx{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      const int bit = (c >> a) & 1;
      idx[a] = base[a] + bit;
      w *= bit ? t[a] : 1.0 - t[a];
    }
    if (w != 0.0) acc += w * values[g.flat(idx)];
  }
  return acc;
}

inline cplx interpolate(const ComplexGridField& u, const Point& x) {
  return interpolate(u.grid(), u.values(), x);
}

/// Value of a nodal quantity on Gamma above a tangential grid node.
///
/// Cubic through the two nearest x_d planes on each side of x_d = g(x'),
/// shifted inward at the box faces. u and grad u are continuous across Gamma,
/// so the centred stencil is used for both; `derivative` returns its x_d derivative.
inline cplx interface_trace(const GridSpec& g, const std::vector<cplx>& values,
                            const std::array<int, 2>& tangent_index, double z, bool derivative = false) {
  const int d = g.dimension;
  const int N = g.nodes_per_axis;
  const double h = g.spacing();
  std::array<int, 3> idx{tangent_index[0], d == 3 ? tangent_index[1] : 0, 0};
  const double s = (z + g.halfwidth) / h;
  if (s < -1e-12 || s > N - 1 + 1e-12) return cplx{};
  const int k0 = std::clamp(static_cast<int>(std::floor(s + 1e-12)) - 1, 0, N - 4);
  cplx acc{};
  for (int i = 0; i < 4; ++i) {
    double w = 0.0;
    if (!derivative) {
      w = 1.0;
      for (int j = 0; j < 4; ++j)
        if (j != i) w *= (s - (k0 + j)) / static_cast<double>(i - j);
    } else {
      for (int m = 0; m < 4; ++m) {
        if (m == i) continue;
        double t = 1.0 / (i - m);
        for (int j = 0; j < 4; ++j)
          if (j != i && j != m) t *= (s - (k0 + j)) / static_cast<double>(i - j);
        w += t;
      }
      w /= h;
    }
    idx[d - 1] = k0 + i;
    acc += w * values[g.flat(idx)];
  }
  return acc;
}

/// Flat binary export: row-major (x_d fastest), little-endian, re/im doubles per node,
/// plus a text sidecar `<path>.hdr` holding d, N, L.
inline void write_field(const ComplexGridField& u, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "binary field format is little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& v : u.values()) {
    const double re = v.real(), im = v.imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof re);
    out.write(reinterpret_cast<const char*>(&im), sizeof im);
  }
  std::ofstream hdr(path + ".hdr");
  hdr.precision(17);
  hdr << "d " << u.grid().dimension << "\nN " << u.grid().nodes_per_axis << "\nL " << u.grid().halfwidth
      << "\n";
  if (!out || !hdr) throw std::runtime_error("failed writing " + path);
}

inline ComplexGridField read_field(const std::string& path) {
  std::ifstream hdr(path + ".hdr");
  if (!hdr) throw std::runtime_error("missing header " + path + ".hdr");
  GridSpec g;
  std::string key;
  while (hdr >> key) {
    if (key == "d") hdr >> g.dimension;
    else if (key == "N") hdr >> g.nodes_per_axis;
    else if (key == "L") hdr >> g.halfwidth;
    else throw std::runtime_error("unknown header key '" + key + "' in " + path + ".hdr");
  }
  g.out_of_theorem = g.dimension == 2;
  g.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<cplx> values(g.node_count());
  for (auto& v : values) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), sizeof re);
    in.read(reinterpret_cast<char*>(&im), sizeof im);
    v = {re, im};
  }
  if (!in) throw std::runtime_error("truncated field file " + path);
  return ComplexGridField(g, std::move(values));
}

}  // namespace mcv
