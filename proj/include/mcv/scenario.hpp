#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "mcv/index.hpp"
#include "mcv/interface.hpp"
#include "mcv/solver.hpp"

namespace mcv {

using Params = std::map<std::string, double>;

/// Right-hand side named in a scenario.
///   gaussian:        amplitude exp(-|x-c|^2 / width^2)
///   annulus:         amplitude on inner <= |x-c| <= outer
///   mollified-point: unit-mass Gaussian of width max(width, 2h)
///   slab:            amplitude exp(-(x_d - c_d)^2 / width^2), independent of x'
///   mms:             i eps u + Lap u + n u for u = exp(-a|x-c|^2 + i q.x)
struct SourceSpec {
  std::string name = "gaussian";
  Point center{0.0, 0.0, 0.0};
  Params params;
  Point wavevector{0.0, 0.0, 0.0};

  double get(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

struct Gates {
  double boundary_fraction = 0.05;
  double trace_slack = 0.1;
  /// Radius of the multiplier pair used for the per-epsilon identity table.
  double multiplier_radius = 2.0;
  /// Decay exponent for the gradient-trace ledger precondition.
  double beta = 0.5;
};

struct Scenario {
  std::string name = "scenario";
  GridSpec grid{3, 8.0, 48};
  std::string interface_name = "flat";
  Params interface_params;
  std::string index_name = "piecewise-constant";
  Params index_params;
  SourceSpec source;
  std::vector<double> epsilons{1.0};
  SolverSettings solver;
  Gates gates;
  std::uint64_t seed = 0;

  InterfaceGraph interface() const { return make_interface(interface_name, interface_params); }
  RefractionIndex index() const { return make_index(index_name, index_params, grid.dimension); }
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& source_names() {
  static const std::vector<std::string> names{"gaussian", "annulus", "mollified-point", "slab", "mms"};
  return names;
}

/// Exact solution behind an mms source.
inline ClosedFormField mms_exact(const SourceSpec& s, int d) {
  return modulated_gaussian(s.get("a", 0.25), s.center, s.wavevector, d);
}

inline ComplexGridField make_source(const SourceSpec& s, const GridSpec& g, const RefractionIndex& n,
                                    const InterfaceGraph& gamma, double eps) {
  const int d = g.dimension;
  const double amp = s.get("amplitude", 1.0);
  if (s.name == "mms") return mms_source(mms_exact(s, d), n, gamma, eps, g);
  ComplexGridField f(g);
  for (std::size_t p = 0; p < f.size(); ++p) {
    Point x = g.point(p);
    for (int k = 0; k < d; ++k) x[k] -= s.center[k];
    const double r = norm(x, d);
    if (s.name == "gaussian") {
      const double w = s.get("width", 0.5);
      f[p] = amp * std::exp(-r * r / (w * w));
    } else if (s.name == "annulus") {
      f[p] = r >= s.get("inner", 1.0) && r <= s.get("outer", 2.0) ? amp : 0.0;
    } else if (s.name == "mollified-point") {
      const double w = std::max(s.get("width", 0.0), 2.0 * g.spacing());
      f[p] = std::exp(-r * r / (w * w)) / std::pow(std::sqrt(M_PI) * w, d);
    } else if (s.name == "slab") {
      const double w = s.get("width", 0.5);
      f[p] = amp * std::exp(-x[d - 1] * x[d - 1] / (w * w));
    } else {
      throw ConfigError("unknown source '" + s.name + "'");
    }
  }
  return f;
}

namespace detail {

inline Params read_params(const YAML::Node& node, const std::vector<std::string>& skip) {
  Params p;
  if (!node) return p;
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
    if (!kv.second.IsScalar()) throw ConfigError("parameter '" + key + "' must be a number");
    try {
      p[key] = kv.second.as<double>();
    } catch (const YAML::Exception&) {
      throw ConfigError("parameter '" + key + "' must be a number");
    }
  }
  return p;
}

inline Point read_point(const YAML::Node& node, const std::string& what) {
  Point x{0.0, 0.0, 0.0};
  if (!node) return x;
  if (!node.IsSequence() || node.size() > 3) throw ConfigError(what + " must be a list of up to 3 numbers");
  for (std::size_t k = 0; k < node.size(); ++k) x[k] = node[k].as<double>();
  return x;
}

template <class T>
T read_or(const YAML::Node& node, const char* key, T fallback) {
  if (!node || !node[key]) return fallback;
  try {
    return node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

/// Applies "a.b.c=value" to the YAML tree, creating maps as needed.
inline void apply_override(YAML::Node root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) keys.push_back(k);
  // Node handles alias the tree, so walk with a stack of handles instead of reassigning one.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) chain.push_back(chain.back()[keys[i]]);
  chain.back()[keys.back()] = YAML::Load(value);
}

}  // namespace detail

/// Parses and validates a scenario. Throws ConfigError on the first violated
/// constraint and HypothesisViolation when (H1)-(H3) fail on the grid.
inline Scenario parse_scenario(const YAML::Node& root) {
  if (!root || !root.IsMap()) throw ConfigError("scenario must be a map");
  Scenario s;
  s.name = detail::read_or<std::string>(root, "name", s.name);

  const auto grid = root["grid"];
  const int d = detail::read_or(grid, "dimension", 3);
  const double L = detail::read_or(grid, "halfwidth", 8.0);
  const int N = detail::read_or(grid, "nodes", 48);
  const bool flag = detail::read_or(grid, "out_of_theorem", false);
  if (N < 8) throw ConfigError("grid.nodes must be at least 8");
  try {
    s.grid = GridSpec(d, L, N, flag);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  const auto iface = root["interface"];
  s.interface_name = detail::read_or<std::string>(iface, "name", "flat");
  s.interface_params = detail::read_params(iface, {"name"});
  const auto idx = root["index"];
  s.index_name = detail::read_or<std::string>(idx, "name", "piecewise-constant");
  s.index_params = detail::read_params(idx, {"name"});
  try {
    s.interface();
    s.index();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  const auto src = root["source"];
  s.source.name = detail::read_or<std::string>(src, "name", "gaussian");
  if (std::find(source_names().begin(), source_names().end(), s.source.name) == source_names().end())
    throw ConfigError("unknown source '" + s.source.name + "'");
  if (src) {
    s.source.center = detail::read_point(src["center"], "source.center");
    s.source.wavevector = detail::read_point(src["wavevector"], "source.wavevector");
  }
  s.source.params = detail::read_params(src, {"name", "center", "wavevector"});
  for (const char* key : {"width", "a"})
    if (s.source.params.count(key) && !(s.source.params[key] > 0.0))
      throw ConfigError(std::string("source.") + key + " must be positive");

  if (const auto eps = root["epsilons"]) {
    s.epsilons.clear();
    if (eps.IsScalar()) {
      s.epsilons.push_back(eps.as<double>());
    } else {
      for (const auto& e : eps) s.epsilons.push_back(e.as<double>());
    }
  }
  for (double e : s.epsilons)
    if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("epsilon must be positive");

  const auto sol = root["solver"];
  const auto method = detail::read_or<std::string>(sol, "method", "gmres");
  if (method == "gmres")
    s.solver.method = KrylovMethod::gmres;
  else if (method == "bicgstab")
    s.solver.method = KrylovMethod::bicgstab;
  else
    throw ConfigError("unknown solver method '" + method + "' (expected gmres or bicgstab)");
  s.solver.restart = detail::read_or(sol, "restart", s.solver.restart);
  s.solver.tol = detail::read_or(sol, "tol", s.solver.tol);
  s.solver.max_iterations = detail::read_or(sol, "max_iterations", s.solver.max_iterations);
  s.solver.reproducible = detail::read_or(sol, "reproducible", s.solver.reproducible);
  if (s.solver.restart < 1) throw ConfigError("solver.restart must be at least 1");
  if (!(s.solver.tol > 0.0) || s.solver.tol > 1e-4) throw ConfigError("solver.tol must lie in (0, 1e-4]");
  if (s.solver.max_iterations < 1) throw ConfigError("solver.max_iterations must be at least 1");

  const auto gates = root["gates"];
  s.gates.boundary_fraction = detail::read_or(gates, "boundary_fraction", s.gates.boundary_fraction);
  s.gates.trace_slack = detail::read_or(gates, "trace_slack", s.gates.trace_slack);
  s.gates.multiplier_radius = detail::read_or(gates, "multiplier_radius", s.gates.multiplier_radius);
  s.gates.beta = detail::read_or(gates, "beta", s.gates.beta);
  if (!(s.gates.boundary_fraction >= 0.0 && s.gates.boundary_fraction <= 1.0))
    throw ConfigError("gates.boundary_fraction must lie in [0, 1]");
  if (!(s.gates.trace_slack >= 0.0)) throw ConfigError("gates.trace_slack must be nonnegative");
  if (!(s.gates.multiplier_radius > 0.0)) throw ConfigError("gates.multiplier_radius must be positive");
  if (!(s.gates.beta > 0.0)) throw ConfigError("gates.beta must be positive");

  s.seed = detail::read_or<std::uint64_t>(root, "seed", 0);

  // Static hypotheses: throws HypothesisViolation naming H1, H2 or H3.
  check_hypotheses(s.index(), s.interface(), s.grid);
  return s;
}

inline Scenario parse_scenario(const std::string& text, const std::vector<std::string>& overrides = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("cannot parse scenario: ") + e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& o : overrides) detail::apply_override(root, o);
  return parse_scenario(root);
}

inline Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), overrides);
}

inline nlohmann::json to_json(const Scenario& s) {
  using nlohmann::json;
  auto point = [](const Point& x) { return json::array({x[0], x[1], x[2]}); };
  return json{
      {"name", s.name},
      {"grid",
       {{"dimension", s.grid.dimension},
        {"halfwidth", s.grid.halfwidth},
        {"nodes", s.grid.nodes_per_axis},
        {"out_of_theorem", s.grid.out_of_theorem}}},
      {"interface", {{"name", s.interface_name}, {"params", s.interface_params}}},
      {"index", {{"name", s.index_name}, {"params", s.index_params}}},
      {"source",
       {{"name", s.source.name},
        {"center", point(s.source.center)},
        {"wavevector", point(s.source.wavevector)},
        {"params", s.source.params}}},
      {"epsilons", s.epsilons},
      {"solver",
       {{"method", to_string(s.solver.method)},
        {"restart", s.solver.restart},
        {"tol", s.solver.tol},
        {"max_iterations", s.solver.max_iterations},
        {"reproducible", s.solver.reproducible}}},
      {"gates",
       {{"boundary_fraction", s.gates.boundary_fraction},
        {"trace_slack", s.gates.trace_slack},
        {"multiplier_radius", s.gates.multiplier_radius},
        {"beta", s.gates.beta}}},
      {"seed", s.seed}};
}

/// FNV-1a 64 of the canonical JSON (sorted keys, no whitespace), as 16 hex digits.
inline std::string config_hash(const Scenario& s) {
  const std::string text = to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mcv
