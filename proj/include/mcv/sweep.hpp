#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcv/identities.hpp"
#include "mcv/scenario.hpp"

namespace mcv {

/// One epsilon of a sweep: the theorem ledger plus everything needed to judge it.
struct SweepRow {
  EstimateLedger ledger;
  bool converged = true;
  int iterations = 0;
  double relative_residual = 0.0;
  double boundary_fraction = 0.0;
  /// eps sum |u|^2 h^d - Im sum f conj(u) h^d, and the scale ||f|| ||u|| h^d it is judged against.
  double dissipation_defect = 0.0;
  double dissipation_scale = 0.0;
  TraceCheck trace;
  std::vector<IdentityResidual> identities;
  std::optional<Theorem2Ledger> gradient_trace;
};

struct SweepReport {
  std::string scenario;
  std::string config_hash;
  GridSpec grid;
  SolverSettings solver;
  Gates gates;
  HypothesisReport hypotheses;
  std::vector<SweepRow> rows;

  bool all_gates_pass() const {
    if (!hypotheses.h6_satisfied) return false;
    return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ledger.valid && r.trace.holds; });
  }
};

/// Plain node sums: eps sum |u|^2 h^d - Im sum f conj(u) h^d.
inline std::pair<double, double> dissipation_defect(const ComplexGridField& u, const ComplexGridField& f, double eps) {
  const auto& g = u.grid();
  const double hd = std::pow(g.spacing(), g.dimension);
  double mass = 0.0, fu = 0.0, ff = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    mass += std::norm(u[p]);
    ff += std::norm(f[p]);
    fu += std::imag(f[p] * std::conj(u[p]));
  }
  return {(eps * mass - fu) * hd, std::sqrt(ff * mass) * hd};
}

/// Identity table for one solve: eg1-eg3 with the multiplier pair, eg4, and the
/// n d_d u identity when the interface is flat.
inline std::vector<IdentityResidual> identity_table(const SolutionView& v, double R) {
  const auto pair = multiplier_pair(R, v.grid);
  std::vector<IdentityResidual> t{residual_eg1(v, pair), residual_eg2(v, pair), residual_eg3(v, pair),
                                  residual_eg4(v)};
  if (v.gamma.is_flat()) t.push_back(residual_deux(v));
  return t;
}

using SweepProgress = std::function<void(const SweepRow&)>;

/// Solves the scenario for each epsilon in descending order. Rows are emitted
/// even when a gate fails or the solver stops short; such rows are flagged.
inline SweepReport run_sweep(const Scenario& s, const SweepProgress& progress = {}) {
  const auto gamma = s.interface();
  const auto n = s.index();
  SweepReport r;
  r.scenario = s.name;
  r.config_hash = config_hash(s);
  r.grid = s.grid;
  r.solver = s.solver;
  r.gates = s.gates;
  r.hypotheses = check_hypotheses(n, gamma, s.grid);

  auto eps_list = s.epsilons;
  std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
  for (double eps : eps_list) {
    const auto f = make_source(s.source, s.grid, n, gamma, eps);
    const HelmholtzOperator op(s.grid, eps, n, gamma);
    SweepRow row;
    ComplexGridField u(s.grid);
    try {
      auto res = solve(op, f, s.solver);
      u = std::move(res.u);
      row.iterations = res.iterations;
      row.relative_residual = res.relative_residual;
    } catch (const SolveFailure& e) {
      row.converged = false;
      u = e.best().u;
      row.iterations = e.best().iterations;
      row.relative_residual = e.best().relative_residual;
    }
    row.boundary_fraction = boundary_energy_fraction(u);

    if (!u.all_finite()) {
      row.converged = false;
      u = ComplexGridField(s.grid);
    }
    LedgerGates gates{row.converged, row.boundary_fraction, s.gates.boundary_fraction};
    row.ledger = theorem_ledger(u, f, n, gamma, eps, r.hypotheses, gates);
    std::tie(row.dissipation_defect, row.dissipation_scale) = dissipation_defect(u, f, eps);

    const auto view = make_view(u, f, n, gamma, eps);
    row.trace = trace_estimate_check(view, r.hypotheses.alpha, r.hypotheses.sigma, s.gates.trace_slack);
    row.identities = identity_table(view, s.gates.multiplier_radius);
    if (gamma.is_flat()) row.gradient_trace = theorem2_ledger(u, f, n, gamma, eps, s.gates.beta);
    if (progress) progress(row);
    r.rows.push_back(std::move(row));
  }
  return r;
}

}  // namespace mcv
