#pragma once

// Command dispatch for the quadshape tool. Reports are JSON documents; per-node
// data goes to CSV next to them. No timings or other run-dependent values are
// written, so identical configs give identical files.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "quadshape/bem.hpp"
#include "quadshape/config.hpp"
#include "quadshape/errors.hpp"
#include "quadshape/flow.hpp"
#include "quadshape/geometry.hpp"
#include "quadshape/riemannian.hpp"
#include "quadshape/shape.hpp"

namespace quadshape::cli {

using json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitOther = 1;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"evaluate", "gradient", "hessian", "flow", "diagnose", "spectrum"};
  return names;
}

struct RunOptions {
  std::string out_dir;  // overrides [output] dir when non-empty
  bool dump_operators = false;
  bool quiet = false;
};

namespace detail {

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const Point& p) { return json::array({p.x(), p.y()}); }

inline json describe(const RunConfig& cfg, const Curve& c) {
  json j;
  j["shape"] = cfg.geometry.shape;
  j["N"] = cfg.geometry.n;
  j["k"] = cfg.metric.k;
  j["A"] = cfg.metric.A;
  j["hadamard_factor"] = cfg.shape.hadamard_factor;
  json disks = json::array();
  for (const auto& d : cfg.disks)
    disks.push_back({{"cx", d.center.x()}, {"cy", d.center.y()}, {"rho", d.radius}, {"mass", d.mass}});
  j["sources"] = disks;
  j["area"] = c.area();
  j["length"] = c.length();
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline void write_curve(const std::filesystem::path& path, const Curve& c, const std::vector<NodalColumn>& extra) {
  std::ostringstream os;
  write_curve_csv(os, c, extra);
  write_text(path, os.str());
}

inline json state_summary(const ShapeState& st) {
  json j;
  j["J"] = st.J();
  j["dirichlet_energy"] = st.dirichlet_energy();
  j["max_abs_psi"] = st.psi().cwiseAbs().maxCoeff();
  j["min_u_nu"] = st.u_nu().minCoeff();
  j["max_u_nu"] = st.u_nu().maxCoeff();
  j["psi_integral"] = st.curve().integrate(st.psi());
  j["capacity"] = st.solver().capacity();
  j["solver_scale"] = st.solver().scale();
  j["rcond"] = st.solver().rcond();
  return j;
}

inline std::vector<Direction> directions(const RunConfig& cfg, const Curve& c) {
  std::vector<Direction> out;
  for (const auto& name : cfg.directions) out.push_back({name, mode_field(c, name)});
  return out;
}

inline json stability_json(const StabilityReport& r) {
  json j;
  j["total_curvature"] = r.total_curvature;
  j["min_curvature"] = r.min_curvature;
  j["max_curvature"] = r.max_curvature;
  j["argmin_node"] = r.argmin_node;
  j["x0"] = to_json(r.x0);
  j["h_minus_norm"] = r.h_minus_norm;
  j["minus_sign"] = {{"operator", "k^2 (L - K)"},
                     {"lambda0", r.lambda0},
                     {"eigenvalues", to_json(r.eigenvalues)},
                     {"phi0", to_json(r.phi0)}};
  j["plus_sign"] = {{"operator", "k^2 (L + K)"},
                    {"lambda0", r.lambda0_plus},
                    {"eigenvalues", to_json(r.eigenvalues_plus)},
                    {"phi0", to_json(r.phi0_plus)}};
  j["total_curvature_control"] = r.total_curvature_control;
  j["pointwise_control"] = r.pointwise_control;
  j["coercivity_constant"] = r.coercivity_constant;
  j["coercive"] = r.coercive;
  j["note"] = r.note;
  return j;
}

inline void dump_operators(const std::filesystem::path& dir, const LaplaceSolver& solver) {
  write_matrix_csv((dir / "single_layer.csv").string(), solver.single_layer());
  write_matrix_csv((dir / "adjoint_double_layer.csv").string(), solver.adjoint_double_layer());
  write_matrix_csv((dir / "dtn.csv").string(), solver.dtn_matrix());
}

}  // namespace detail

/// Runs one command and writes its artifacts. Throws the library's errors;
/// exit-code mapping is done by run().
inline json execute(const std::string& command, const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  using namespace detail;
  namespace fs = std::filesystem;
  const fs::path out = opt.out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out_dir);
  fs::create_directories(out);

  if (cfg.metric.degenerate() && !opt.quiet)
    log << "warning: A = 0 reduces G^A to the plain L2 product, which is not a Riemannian metric on the shape "
           "space\n";

  const Curve curve = cfg.geometry.build();
  const SourceTerm source = cfg.source();
  json report;
  report["command"] = command;
  report["config"] = describe(cfg, curve);

  if (command == "flow") {
    const FlowTrace trace = descend(curve, source, cfg.flow_config(), cfg.snapshot_every);
    const ConvergenceSummary s = convergence_report(trace);
    json j;
    j["status"] = to_string(s.status);
    j["iterations"] = s.iterations;
    j["accepted_steps"] = s.accepted_steps;
    j["skipped_resamples"] = trace.skipped_resamples;
    j["initial_J"] = s.initial_J;
    j["final_J"] = s.final_J;
    j["initial_grad_norm"] = s.initial_grad_norm;
    j["final_grad_norm"] = s.final_grad_norm;
    j["grad_reduction"] = s.grad_reduction;
    j["mean_decrease_ratio"] = s.mean_decrease_ratio;
    j["psi_residual"] = s.max_abs_psi;
    j["circle_fit"] = {{"center", to_json(s.circle.center)},
                       {"radius", s.circle.radius},
                       {"max_deviation", s.circle.max_deviation},
                       {"near_circular", s.near_circular}};
    report["flow"] = j;

    std::ostringstream trace_csv;
    write_trace_csv(trace_csv, trace);
    write_text(out / "trace.csv", trace_csv.str());
    write_curve(out / "curve.csv", trace.final_curve, {{"psi", trace.final_psi}});
    if (!trace.snapshots.empty()) {
      fs::create_directories(out / "snapshots");
      for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
        std::ostringstream name;
        name << std::setw(4) << std::setfill('0') << trace.snapshot_iterations[i] << ".csv";
        write_curve(out / "snapshots" / name.str(), trace.snapshots[i], {});
      }
      if (cfg.svg) write_text(out / "flow.svg", flow_svg(trace));
    }
    if (!opt.quiet)
      log << "flow: " << j["status"].get<std::string>() << " after " << s.iterations << " iterations, J "
          << std::setprecision(10) << s.final_J << ", |grad J| reduced by " << s.grad_reduction << "\n";
    write_json(out / "report.json", report);
    return report;
  }

  const ShapeState st = solve_state(curve, source, cfg.metric.k, cfg.shape);
  report["state"] = state_summary(st);
  if (opt.dump_operators || cfg.dump_operators) dump_operators(out, st.solver());

  if (command == "evaluate") {
    write_curve(out / "curve.csv", curve, {{"u_nu", st.u_nu()}, {"psi", st.psi()}});
    if (!opt.quiet)
      log << "J = " << std::setprecision(17) << st.J() << ", max|psi| = " << report["state"]["max_abs_psi"].get<double>()
          << "\n";
  } else if (command == "gradient") {
    const NormalField grad = riemannian_gradient(curve, cfg.metric, st.psi());
    json rows = json::array();
    std::vector<double> fd_values, formula_values;
    for (const auto& d : directions(cfg, curve)) {
      const double formula = hadamard_derivative(st, d.field);
      const auto fd = fd_first_derivative(curve, source, cfg.metric.k, d.field, cfg.t_step, cfg.shape);
      rows.push_back({{"direction", d.name},
                      {"hadamard", formula},
                      {"fd", fd.value},
                      {"fd_ratio", formula != 0.0 ? fd.value / formula : 0.0},
                      {"t_step", fd.t_step}});
      fd_values.push_back(fd.value);
      formula_values.push_back(formula);
    }
    report["directions"] = rows;
    report["fitted_ratio_fd_hadamard"] = quadshape::detail::fitted_ratio(fd_values, formula_values);
    report["gradient_norm"] = std::sqrt(metric_inner(curve, cfg.metric, grad, grad));
    write_curve(out / "curve.csv", curve, {{"psi", st.psi()}, {"grad", grad.values}});
  } else if (command == "hessian") {
    const HessianReport rep = hessian_report(st, cfg.metric, directions(cfg, curve), cfg.t_step);
    json rows = json::array();
    for (const auto& r : rep.rows)
      rows.push_back({{"a", r.a},
                      {"b", r.b},
                      {"q_fd", r.q_fd},
                      {"q_prop", r.q_prop},
                      {"q_corollary", r.q_corollary},
                      {"q_riem", r.q_riem},
                      {"q_riem_sampled", r.q_riem_sampled},
                      {"q_riem_state", r.q_riem_state},
                      {"q_connection", r.q_connection},
                      {"connection_term", r.connection_term},
                      {"riem_symmetry_residual", r.riem_symmetry_residual},
                      {"connection_symmetry_residual", r.connection_symmetry_residual}});
    report["pairs"] = rows;
    report["fitted_ratios"] = {{"fd_over_prop", rep.ratio_fd_prop},
                               {"fd_over_corollary", rep.ratio_fd_corollary},
                               {"fd_over_riem", rep.ratio_fd_riem},
                               {"fd_over_riem_state", rep.ratio_fd_riem_state},
                               {"fd_over_connection", rep.ratio_fd_connection},
                               {"connection_over_riem_state", rep.ratio_connection_riem_state}};
    report["t_step"] = rep.t_step;
    report["psi_reading"] = to_string(cfg.psi_reading);
    write_curve(out / "curve.csv", curve, {{"u_nu", st.u_nu()}, {"psi", st.psi()}});
  } else if (command == "diagnose") {
    const StabilityReport rep = stability_controls(st);
    report["stability"] = stability_json(rep);
    const CurvatureNormalDerivative dk = curvature_normal_derivative(curve);
    report["curvature_normal_derivative"] = {{"fitted_ratio_fd_over_K2", dk.fitted_ratio}, {"t_step", dk.t_step}};
    write_curve(out / "curve.csv", curve,
                {{"psi", st.psi()}, {"phi0", rep.phi0}, {"phi0_plus", rep.phi0_plus}, {"dK_fd", dk.fd}});
    if (!opt.quiet)
      log << "total curvature = " << std::setprecision(17) << rep.total_curvature << ", lambda0 = " << rep.lambda0
          << "\n";
  } else if (command == "spectrum") {
    const WeightedSpectrum dtn = weighted_spectrum(curve, st.solver().dtn_matrix());
    const StabilityReport rep = stability_controls(st);
    report["dtn_eigenvalues"] = to_json(dtn.eigenvalues);
    report["stability_eigenvalues_minus"] = to_json(rep.eigenvalues);
    report["stability_eigenvalues_plus"] = to_json(rep.eigenvalues_plus);
    write_curve(out / "curve.csv", curve, {{"phi0", rep.phi0}});
  } else {
    throw ValidationError("unknown command '" + command + "'");
  }
  write_json(out / "report.json", report);
  return report;
}

/// Maps library errors to exit codes: 2 validation, 3 numerical, 1 anything else.
inline int run(const std::string& command, const std::string& config_path, const RunOptions& opt, std::ostream& log,
               std::ostream& err) {
  try {
    bool known = false;
    for (const auto& c : commands()) known = known || c == command;
    if (!known) throw ValidationError("unknown command '" + command + "'");
    const RunConfig cfg = load_config(config_path);
    execute(command, cfg, opt, log);
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace quadshape::cli
