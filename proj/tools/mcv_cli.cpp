// mcv: command-line front end for the Helmholtz estimate checks.
//
//   mcv check-hypotheses scenario.yaml
//   mcv solve scenario.yaml --epsilon 0.25 --out u.bin
//   mcv norms scenario.yaml --field u.bin --epsilon 0.25
//   mcv identities scenario.yaml --epsilon 1
//   mcv sweep scenario.yaml --csv out.csv --json out.json
//   mcv mms-convergence scenario.yaml --nodes 24 --nodes 48
//
// Any scalar of the config can be overridden with --set key.path=value.

#include <chrono>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "mcv/report.hpp"

using namespace mcv;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_gate = 1;
constexpr int exit_rejected = 2;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("config", c.config, "scenario file (YAML)")->required()->check(CLI::ExistingFile);
  sub->add_option("--set", c.overrides, "override a config scalar, e.g. --set grid.nodes=24");
}

void print_hypotheses(const HypothesisReport& h) {
  std::printf("alpha            %.6g\n", h.alpha);
  std::printf("sigma            %s%s\n", to_string(h.sigma), h.sigma_by_convention ? " (convention: [n] == 0)" : "");
  std::printf("n range          [%.6g, %.6g]\n", h.n_min, h.n_max);
  std::printf("beta1            %.6g   (proof form %.6g)\n", h.beta1, h.beta1_proof_form);
  std::printf("beta2            %.6g\n", h.beta2);
  std::printf("H6 beta1+beta2<1 %s\n", h.h6_satisfied ? "yes" : "NO");
  std::printf("   j      beta1 term      beta2 term\n");
  for (std::size_t k = 0; k < h.beta1_terms.size(); ++k)
    std::printf("%4d  %14.6g  %14.6g\n", h.beta1_terms[k].j, h.beta1_terms[k].contribution,
                k < h.beta2_terms.size() ? h.beta2_terms[k].contribution : 0.0);
}

void print_residuals(const std::vector<IdentityResidual>& t) {
  std::printf("%-6s %14s %14s %11s\n", "id", "lhs", "rhs", "rel");
  for (const auto& r : t) {
    std::printf("%-6s %14.7g %14.7g %11.3e\n", r.name.c_str(), r.lhs, r.rhs, r.rel_residual);
    for (const auto& [name, v] : r.terms) std::printf("         %-22s %14.7g\n", name.c_str(), v);
  }
}

void print_bundle(const NormBundle& b) {
  std::printf("bstar_grad     %.10g\n", b.bstar_grad);
  std::printf("bstar_nu       %.10g\n", b.bstar_nu);
  std::printf("bstar_xgradn   %.10g\n", b.bstar_xgradn);
  std::printf("tang_integral  %.10g\n", b.tang_integral);
  std::printf("shell_sup      %.10g\n", b.shell_sup);
  std::printf("trace_jump     %.10g\n", b.trace_jump);
  std::printf("ddn_integral   %.10g\n", b.ddn_integral);
  std::printf("bnorm_f        %.10g\n", b.bnorm_f);
}

struct Solved {
  ComplexGridField f, u;
  bool converged = true;
  int iterations = 0;
  double residual = 0.0;
};

Solved solve_scenario(const Scenario& s, double eps) {
  const auto gamma = s.interface();
  const auto n = s.index();
  Solved out;
  out.f = make_source(s.source, s.grid, n, gamma, eps);
  try {
    auto r = solve(HelmholtzOperator(s.grid, eps, n, gamma), out.f, s.solver);
    out.u = std::move(r.u);
    out.iterations = r.iterations;
    out.residual = r.relative_residual;
  } catch (const SolveFailure& e) {
    std::fprintf(stderr, "warning: %s\n", e.what());
    out.u = e.best().u;
    out.iterations = e.best().iterations;
    out.residual = e.best().relative_residual;
    out.converged = false;
  }
  return out;
}

double pick_epsilon(const Scenario& s, double cli) { return cli > 0.0 ? cli : s.epsilons.front(); }

int cmd_check(const Common& c) {
  const auto s = load_scenario(c.config, c.overrides);
  const auto h = check_hypotheses(s.index(), s.interface(), s.grid);
  std::printf("scenario %s  hash %s\n", s.name.c_str(), config_hash(s).c_str());
  print_hypotheses(h);
  return h.h6_satisfied ? exit_ok : exit_gate;
}

int cmd_solve(const Common& c, double eps_cli, const std::string& out) {
  const auto s = load_scenario(c.config, c.overrides);
  const double eps = pick_epsilon(s, eps_cli);
  const auto r = solve_scenario(s, eps);
  const double bef = boundary_energy_fraction(r.u);
  std::printf("epsilon %.6g  method %s  iterations %d  residual %.3e  boundary fraction %.4g\n", eps,
              to_string(s.solver.method), r.iterations, r.residual, bef);
  if (!out.empty()) {
    write_field(r.u, out);
    std::printf("wrote %s (+ .hdr)\n", out.c_str());
  }
  return r.converged && bef <= s.gates.boundary_fraction ? exit_ok : exit_gate;
}

int cmd_norms(const Common& c, double eps_cli, const std::string& field) {
  const auto s = load_scenario(c.config, c.overrides);
  const double eps = pick_epsilon(s, eps_cli);
  const auto u = read_field(field);
  if (!(u.grid() == s.grid)) throw ConfigError("field grid does not match the scenario grid");
  const auto f = make_source(s.source, s.grid, s.index(), s.interface(), eps);
  const auto b = norm_bundle(u, f, s.index(), s.interface());
  print_bundle(b);
  std::printf("ratio          %.10g\n", b.bnorm_f > 0.0 ? b.lhs_sum() / (b.bnorm_f * b.bnorm_f) : 0.0);
  return exit_ok;
}

int cmd_identities(const Common& c, double eps_cli, double radius) {
  const auto s = load_scenario(c.config, c.overrides);
  const double eps = pick_epsilon(s, eps_cli);
  const auto r = solve_scenario(s, eps);
  const auto h = check_hypotheses(s.index(), s.interface(), s.grid);
  const auto v = make_view(r.u, r.f, s.index(), s.interface(), eps);
  const double R = radius > 0.0 ? radius : s.gates.multiplier_radius;
  std::printf("epsilon %.6g  R %.4g  iterations %d  residual %.3e\n", eps, R, r.iterations, r.residual);
  print_residuals(identity_table(v, R));
  const auto tc = trace_estimate_check(v, h.alpha, h.sigma, s.gates.trace_slack);
  std::printf("trace estimate  %.7g <= %.7g  %s\n", tc.lhs, tc.rhs, tc.holds ? "holds" : "FAILS");
  std::printf("  as printed    %.7g <= %.7g  %s\n", tc.lhs_alt, tc.rhs_alt, tc.holds_alt ? "holds" : "fails");
  std::vector<double> m(r.u.size());
  for (std::size_t p = 0; p < m.size(); ++p) m[p] = std::norm(r.u[p]);
  if (s.grid.dimension >= 3) {
    const auto ineg = check_ineg(s.grid, m, R);
    std::printf("ineg on |u|^2   %.7g >= %.7g\n", ineg.lhs, ineg.rhs);
  }
  const auto [defect, scale] = dissipation_defect(r.u, r.f, eps);
  std::printf("dissipation     defect %.3e  scale %.3e\n", defect, scale);
  return r.converged && tc.holds ? exit_ok : exit_gate;
}

int cmd_sweep(const Common& c, const std::string& csv, const std::string& json) {
  const auto s = load_scenario(c.config, c.overrides);
  std::printf("scenario %s  hash %s  N %d  L %g  method %s\n", s.name.c_str(), config_hash(s).c_str(),
              s.grid.nodes_per_axis, s.grid.halfwidth, to_string(s.solver.method));
  std::printf("%10s %7s %10s %8s %12s %6s %s\n", "epsilon", "iter", "residual", "bfrac", "ratio", "valid", "trace");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_sweep(s, [](const SweepRow& row) {
    std::printf("%10.6g %7d %10.2e %8.4f %12.6g %6s %s\n", row.ledger.epsilon, row.iterations, row.relative_residual,
                row.boundary_fraction, row.ledger.ratio, row.ledger.valid ? "yes" : "no",
                row.trace.holds ? "ok" : "FAIL");
    for (const auto& note : row.ledger.notes) std::printf("           note: %s\n", note.c_str());
    std::fflush(stdout);
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!csv.empty()) append_csv(r, csv);
  if (!json.empty()) std::printf("json report %s\n", write_json(r, json).c_str());
  std::printf("elapsed %.1f s  gates %s\n", secs, r.all_gates_pass() ? "pass" : "FAIL");
  return r.all_gates_pass() ? exit_ok : exit_gate;
}

int cmd_mms(const Common& c, std::vector<int> nodes, double eps_cli) {
  auto s = load_scenario(c.config, c.overrides);
  if (s.source.name != "mms") throw ConfigError("mms-convergence needs source.name: mms");
  const double eps = pick_epsilon(s, eps_cli);
  const auto gamma = s.interface();
  const auto n = s.index();
  const auto exact = mms_exact(s.source, s.grid.dimension);
  std::printf("%6s %10s %14s %8s\n", "N", "h", "rel L2 error", "ratio");
  double prev = 0.0;
  bool ok = true;
  for (int N : nodes) {
    const GridSpec g(s.grid.dimension, s.grid.halfwidth, N, s.grid.out_of_theorem);
    const auto f = mms_source(exact, n, gamma, eps, g);
    SolveResult r;
    try {
      r = solve(HelmholtzOperator(g, eps, n, gamma), f, s.solver);
    } catch (const SolveFailure& e) {
      std::fprintf(stderr, "warning: N=%d: %s\n", N, e.what());
      r = e.best();
      ok = false;
    }
    double err = 0.0, ref = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p) {
      const cplx ue = exact.value(g.point(p));
      err += std::norm(r.u[p] - ue);
      ref += std::norm(ue);
    }
    const double rel = std::sqrt(err / ref);
    if (prev > 0.0)
      std::printf("%6d %10.5g %14.6e %8.3f\n", N, g.spacing(), rel, prev / rel);
    else
      std::printf("%6d %10.5g %14.6e %8s\n", N, g.spacing(), rel, "-");
    prev = rel;
  }
  return ok ? exit_ok : exit_gate;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morrey-Campanato estimate checks for the absorbed Helmholtz equation"};
  app.require_subcommand(1);

  Common c_check, c_solve, c_norms, c_ident, c_sweep, c_mms;
  double eps_solve = 0.0, eps_norms = 0.0, eps_ident = 0.0, eps_mms = 0.0, radius = 0.0;
  std::string out, field, csv, json;
  std::vector<int> nodes{24, 48};

  auto* check = app.add_subcommand("check-hypotheses", "evaluate alpha, sigma, beta1, beta2 and H6");
  add_common(check, c_check);

  auto* solve_cmd = app.add_subcommand("solve", "solve once and optionally write the field");
  add_common(solve_cmd, c_solve);
  solve_cmd->add_option("--epsilon", eps_solve, "absorption (default: first in config)");
  solve_cmd->add_option("--out", out, "binary field output");

  auto* norms = app.add_subcommand("norms", "estimate terms of a stored field");
  add_common(norms, c_norms);
  norms->add_option("--field", field, "field written by solve")->required()->check(CLI::ExistingFile);
  norms->add_option("--epsilon", eps_norms, "absorption used for the source");

  auto* ident = app.add_subcommand("identities", "identity residual table for one solve");
  add_common(ident, c_ident);
  ident->add_option("--epsilon", eps_ident, "absorption (default: first in config)");
  ident->add_option("--radius", radius, "multiplier radius (default: gates.multiplier_radius)");

  auto* sweep = app.add_subcommand("sweep", "epsilon sweep with theorem ledger");
  add_common(sweep, c_sweep);
  sweep->add_option("--csv", csv, "append rows to this CSV");
  sweep->add_option("--json", json, "write the full report here");

  auto* mms = app.add_subcommand("mms-convergence", "manufactured-solution error under refinement");
  add_common(mms, c_mms);
  mms->add_option("--nodes", nodes, "grid sizes, in order")->expected(1, -1);
  mms->add_option("--epsilon", eps_mms, "absorption (default: first in config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return cmd_check(c_check);
    if (*solve_cmd) return cmd_solve(c_solve, eps_solve, out);
    if (*norms) return cmd_norms(c_norms, eps_norms, field);
    if (*ident) return cmd_identities(c_ident, eps_ident, radius);
    if (*sweep) return cmd_sweep(c_sweep, csv, json);
    if (*mms) return cmd_mms(c_mms, nodes, eps_mms);
  } catch (const HypothesisViolation& e) {
    std::fprintf(stderr, "rejected, hypothesis violated: %s\n", e.what());
    return exit_rejected;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_rejected;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return exit_rejected;
  }
  return exit_rejected;
}
