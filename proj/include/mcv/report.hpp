#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "mcv/sweep.hpp"

namespace mcv {

// JSON mapping for the report types. Doubles are written in shortest
// round-trip form, so parse(emit(r)) reproduces every scalar exactly.

inline void to_json(nlohmann::json& j, const AnnulusTerm& t) {
  j = {{"j", t.j}, {"sup", t.sup}, {"contribution", t.contribution}};
}
inline void from_json(const nlohmann::json& j, AnnulusTerm& t) {
  j.at("j").get_to(t.j);
  j.at("sup").get_to(t.sup);
  j.at("contribution").get_to(t.contribution);
}

inline void to_json(nlohmann::json& j, const HypothesisReport& h) {
  j = {{"alpha", h.alpha},
       {"sigma", to_string(h.sigma)},
       {"sigma_by_convention", h.sigma_by_convention},
       {"beta1", h.beta1},
       {"beta2", h.beta2},
       {"beta1_proof_form", h.beta1_proof_form},
       {"n_min", h.n_min},
       {"n_max", h.n_max},
       {"h6_satisfied", h.h6_satisfied},
       {"beta1_terms", h.beta1_terms},
       {"beta2_terms", h.beta2_terms}};
}
inline void from_json(const nlohmann::json& j, HypothesisReport& h) {
  j.at("alpha").get_to(h.alpha);
  h.sigma = j.at("sigma").get<std::string>() == "plus" ? Side::plus : Side::minus;
  j.at("sigma_by_convention").get_to(h.sigma_by_convention);
  j.at("beta1").get_to(h.beta1);
  j.at("beta2").get_to(h.beta2);
  j.at("beta1_proof_form").get_to(h.beta1_proof_form);
  j.at("n_min").get_to(h.n_min);
  j.at("n_max").get_to(h.n_max);
  j.at("h6_satisfied").get_to(h.h6_satisfied);
  j.at("beta1_terms").get_to(h.beta1_terms);
  j.at("beta2_terms").get_to(h.beta2_terms);
}

inline void to_json(nlohmann::json& j, const NormBundle& b) {
  j = {{"bstar_grad", b.bstar_grad},       {"bstar_nu", b.bstar_nu},         {"bstar_xgradn", b.bstar_xgradn},
       {"tang_integral", b.tang_integral}, {"shell_sup", b.shell_sup},       {"trace_jump", b.trace_jump},
       {"ddn_integral", b.ddn_integral},   {"bnorm_f", b.bnorm_f}};
}
inline void from_json(const nlohmann::json& j, NormBundle& b) {
  j.at("bstar_grad").get_to(b.bstar_grad);
  j.at("bstar_nu").get_to(b.bstar_nu);
  j.at("bstar_xgradn").get_to(b.bstar_xgradn);
  j.at("tang_integral").get_to(b.tang_integral);
  j.at("shell_sup").get_to(b.shell_sup);
  j.at("trace_jump").get_to(b.trace_jump);
  j.at("ddn_integral").get_to(b.ddn_integral);
  j.at("bnorm_f").get_to(b.bnorm_f);
}

inline void to_json(nlohmann::json& j, const EstimateLedger& L) {
  j = {{"epsilon", L.epsilon}, {"terms", L.terms}, {"bnorm_f_sq", L.bnorm_f_sq},
       {"ratio", L.ratio},     {"valid", L.valid}, {"notes", L.notes}};
}
inline void from_json(const nlohmann::json& j, EstimateLedger& L) {
  j.at("epsilon").get_to(L.epsilon);
  j.at("terms").get_to(L.terms);
  j.at("bnorm_f_sq").get_to(L.bnorm_f_sq);
  j.at("ratio").get_to(L.ratio);
  j.at("valid").get_to(L.valid);
  j.at("notes").get_to(L.notes);
}

inline void to_json(nlohmann::json& j, const Theorem2Ledger& T) {
  j = {{"epsilon", T.epsilon},
       {"lhs", T.lhs},
       {"bnorm_f_sq", T.bnorm_f_sq},
       {"bnorm_gradxf_sq", T.bnorm_gradxf_sq},
       {"ratio", T.ratio},
       {"precondition", T.precondition},
       {"valid", T.valid}};
}
inline void from_json(const nlohmann::json& j, Theorem2Ledger& T) {
  j.at("epsilon").get_to(T.epsilon);
  j.at("lhs").get_to(T.lhs);
  j.at("bnorm_f_sq").get_to(T.bnorm_f_sq);
  j.at("bnorm_gradxf_sq").get_to(T.bnorm_gradxf_sq);
  j.at("ratio").get_to(T.ratio);
  j.at("precondition").get_to(T.precondition);
  j.at("valid").get_to(T.valid);
}

inline void to_json(nlohmann::json& j, const IdentityResidual& r) {
  auto terms = nlohmann::json::array();
  for (const auto& [name, value] : r.terms) terms.push_back({name, value});
  j = {{"name", r.name},
       {"lhs", r.lhs},
       {"rhs", r.rhs},
       {"abs_residual", r.abs_residual},
       {"rel_residual", r.rel_residual},
       {"terms", terms}};
}
inline void from_json(const nlohmann::json& j, IdentityResidual& r) {
  j.at("name").get_to(r.name);
  j.at("lhs").get_to(r.lhs);
  j.at("rhs").get_to(r.rhs);
  j.at("abs_residual").get_to(r.abs_residual);
  j.at("rel_residual").get_to(r.rel_residual);
  r.terms.clear();
  for (const auto& t : j.at("terms")) r.terms.emplace_back(t.at(0).get<std::string>(), t.at(1).get<double>());
}

inline void to_json(nlohmann::json& j, const TraceCheck& c) {
  j = {{"lhs", c.lhs},         {"rhs", c.rhs},         {"slack", c.slack},        {"holds", c.holds},
       {"lhs_alt", c.lhs_alt}, {"rhs_alt", c.rhs_alt}, {"holds_alt", c.holds_alt}};
}
inline void from_json(const nlohmann::json& j, TraceCheck& c) {
  j.at("lhs").get_to(c.lhs);
  j.at("rhs").get_to(c.rhs);
  j.at("slack").get_to(c.slack);
  j.at("holds").get_to(c.holds);
  j.at("lhs_alt").get_to(c.lhs_alt);
  j.at("rhs_alt").get_to(c.rhs_alt);
  j.at("holds_alt").get_to(c.holds_alt);
}

inline void to_json(nlohmann::json& j, const SweepRow& r) {
  j = {{"ledger", r.ledger},
       {"converged", r.converged},
       {"iterations", r.iterations},
       {"relative_residual", r.relative_residual},
       {"boundary_fraction", r.boundary_fraction},
       {"dissipation_defect", r.dissipation_defect},
       {"dissipation_scale", r.dissipation_scale},
       {"trace", r.trace},
       {"identities", r.identities},
       {"gradient_trace", r.gradient_trace ? nlohmann::json(*r.gradient_trace) : nlohmann::json(nullptr)}};
}
inline void from_json(const nlohmann::json& j, SweepRow& r) {
  j.at("ledger").get_to(r.ledger);
  j.at("converged").get_to(r.converged);
  j.at("iterations").get_to(r.iterations);
  j.at("relative_residual").get_to(r.relative_residual);
  j.at("boundary_fraction").get_to(r.boundary_fraction);
  j.at("dissipation_defect").get_to(r.dissipation_defect);
  j.at("dissipation_scale").get_to(r.dissipation_scale);
  j.at("trace").get_to(r.trace);
  j.at("identities").get_to(r.identities);
  if (j.at("gradient_trace").is_null())
    r.gradient_trace.reset();
  else
    r.gradient_trace = j.at("gradient_trace").get<Theorem2Ledger>();
}

inline nlohmann::json report_json(const SweepReport& r) {
  return {{"scenario", r.scenario},
          {"config_hash", r.config_hash},
          {"grid",
           {{"dimension", r.grid.dimension},
            {"halfwidth", r.grid.halfwidth},
            {"nodes", r.grid.nodes_per_axis},
            {"out_of_theorem", r.grid.out_of_theorem}}},
          {"solver",
           {{"method", to_string(r.solver.method)},
            {"restart", r.solver.restart},
            {"tol", r.solver.tol},
            {"max_iterations", r.solver.max_iterations},
            {"reproducible", r.solver.reproducible}}},
          {"gates",
           {{"boundary_fraction", r.gates.boundary_fraction},
            {"trace_slack", r.gates.trace_slack},
            {"multiplier_radius", r.gates.multiplier_radius},
            {"beta", r.gates.beta}}},
          {"hypotheses", r.hypotheses},
          {"rows", r.rows},
          {"all_gates_pass", r.all_gates_pass()}};
}

inline SweepReport parse_report(const nlohmann::json& j) {
  SweepReport r;
  j.at("scenario").get_to(r.scenario);
  j.at("config_hash").get_to(r.config_hash);
  const auto& g = j.at("grid");
  r.grid = GridSpec(g.at("dimension").get<int>(), g.at("halfwidth").get<double>(), g.at("nodes").get<int>(),
                    g.at("out_of_theorem").get<bool>());
  const auto& s = j.at("solver");
  r.solver.method = s.at("method").get<std::string>() == "gmres" ? KrylovMethod::gmres : KrylovMethod::bicgstab;
  s.at("restart").get_to(r.solver.restart);
  s.at("tol").get_to(r.solver.tol);
  s.at("max_iterations").get_to(r.solver.max_iterations);
  s.at("reproducible").get_to(r.solver.reproducible);
  const auto& gt = j.at("gates");
  gt.at("boundary_fraction").get_to(r.gates.boundary_fraction);
  gt.at("trace_slack").get_to(r.gates.trace_slack);
  gt.at("multiplier_radius").get_to(r.gates.multiplier_radius);
  gt.at("beta").get_to(r.gates.beta);
  j.at("hypotheses").get_to(r.hypotheses);
  j.at("rows").get_to(r.rows);
  return r;
}

inline SweepReport parse_report(const std::string& text) { return parse_report(nlohmann::json::parse(text)); }

inline const char* csv_header() {
  return "epsilon,bstar_grad,bstar_nu,bstar_xgradn,tang_integral,shell_sup,trace_jump,ddn_integral,"
         "bnorm_f_sq,ratio,valid,config_hash";
}

inline std::string csv_row(const SweepRow& row, const std::string& hash) {
  const auto& L = row.ledger;
  const auto& t = L.terms;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%s", L.epsilon,
                t.bstar_grad, t.bstar_nu, t.bstar_xgradn, t.tang_integral, t.shell_sup, t.trace_jump, t.ddn_integral,
                L.bnorm_f_sq, L.ratio, L.valid ? 1 : 0, hash.c_str());
  return buf;
}

inline std::string emit_csv(const SweepReport& r, bool header = true) {
  std::string out = header ? std::string(csv_header()) + "\n" : std::string();
  for (const auto& row : r.rows) out += csv_row(row, r.config_hash) + "\n";
  return out;
}

inline std::string emit_json(const SweepReport& r) { return report_json(r).dump(2); }

/// Appends the rows to a CSV file; the header is written only when the file is new or empty.
inline void append_csv(const SweepReport& r, const std::string& path) {
  namespace fs = std::filesystem;
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << emit_csv(r, fresh);
}

/// JSON reports are one document per invocation; a new run goes next to earlier ones
/// as path, path.1, path.2, ... rather than replacing them.
inline std::string write_json(const SweepReport& r, const std::string& path) {
  namespace fs = std::filesystem;
  std::string target = path;
  for (int k = 1; fs::exists(target); ++k) target = path + "." + std::to_string(k);
  std::ofstream out(target);
  if (!out) throw std::runtime_error("cannot open " + target);
  out << emit_json(r) << "\n";
  return target;
}

}  // namespace mcv
