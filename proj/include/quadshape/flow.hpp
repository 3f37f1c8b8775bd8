#pragma once

// Steepest descent on curves under G^A: c <- c - tau * grad J * nu, Armijo
// backtracking on J, periodic arclength resampling.

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quadshape/errors.hpp"
#include "quadshape/geometry.hpp"
#include "quadshape/potential.hpp"
#include "quadshape/riemannian.hpp"
#include "quadshape/shape.hpp"

namespace quadshape {

struct FlowConfig {
  MetricParams metric;
  double tau0 = 0.01;         // initial trial step per iteration
  double armijo_c1 = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 30;
  int resample_every = 5;     // accepted steps between arclength resamplings (0 = never)
  double grad_tol = 1e-8;     // absolute stop tolerance on ||grad J||_{G^A}
  double grad_rtol = 1e-4;    // stop tolerance relative to the initial gradient norm
  int max_iterations = 500;
  ShapeOptions shape;

  void validate() const {
    metric.validate();
    if (!(tau0 > 0.0)) throw ValidationError("flow: tau0 must be positive");
    if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw ValidationError("flow: c1 must lie in (0, 1)");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ValidationError("flow: shrink must lie in (0, 1)");
    if (max_backtracks < 1) throw ValidationError("flow: max_backtracks must be positive");
    if (resample_every < 0) throw ValidationError("flow: resample_every must be nonnegative");
    if (grad_tol < 0.0 || grad_rtol < 0.0 || (grad_tol == 0.0 && grad_rtol == 0.0))
      throw ValidationError("flow: a positive gradient tolerance is required");
    if (max_iterations < 1) throw ValidationError("flow: max_iterations must be positive");
  }
};

/// Least-squares (algebraic) circle fit of the nodes.
struct CircleFit {
  Point center = Point::Zero();
  double radius = 0.0;
  double max_deviation = 0.0;  // max_j | |c_j - center| - radius |
};

inline CircleFit fit_circle(const Curve& c) {
  const Eigen::Index n = c.size();
  Mat a(n, 3);
  Vec b(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    a(j, 0) = 2.0 * c.x()[j];
    a(j, 1) = 2.0 * c.y()[j];
    a(j, 2) = 1.0;
    b[j] = c.x()[j] * c.x()[j] + c.y()[j] * c.y()[j];
  }
  const Vec sol = a.colPivHouseholderQr().solve(b);
  CircleFit fit;
  fit.center = Point(sol[0], sol[1]);
  fit.radius = std::sqrt(sol[2] + fit.center.squaredNorm());
  for (Eigen::Index j = 0; j < n; ++j)
    fit.max_deviation = std::max(fit.max_deviation, std::abs((c.point(j) - fit.center).norm() - fit.radius));
  return fit;
}

struct FlowRecord {
  int iteration = 0;
  double J = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;  // accepted tau, 0 when no step was taken
  bool accepted = false;
  int backtracks = 0;
  bool resampled = false;
  double min_curvature = 0.0;
  double max_curvature = 0.0;
  double circle_deviation = 0.0;
};

enum class FlowStatus { Converged, MaxIterations, StepCollapse };

inline const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Converged: return "converged";
    case FlowStatus::MaxIterations: return "max_iterations";
    case FlowStatus::StepCollapse: return "step_collapse";
  }
  return "?";
}

struct FlowTrace {
  std::vector<FlowRecord> records;
  std::vector<Curve> snapshots;  // curve at the start of every snapshot_every-th iteration
  std::vector<int> snapshot_iterations;
  Curve final_curve = make_circle(8, 1.0);
  Vec final_psi;
  double final_J = 0.0;
  double final_grad_norm = 0.0;
  double initial_grad_norm = 0.0;
  int accepted_steps = 0;
  int skipped_resamples = 0;
  FlowStatus status = FlowStatus::MaxIterations;
};

/// Descends J from `initial`. Accepted J values strictly decrease.
inline FlowTrace descend(const Curve& initial, const SourceTerm& source, const FlowConfig& cfg,
                         int snapshot_every = 0) {
  cfg.validate();
  source.validate();
  try {
    source.validate_inside(initial);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("flow: ") + e.what());
  }

  FlowTrace trace;
  Curve curve = initial;
  ShapeState state = solve_state(curve, source, cfg.metric.k, cfg.shape);
  bool last_failure_was_source = false;

  for (int it = 0;; ++it) {
    const NormalField grad = riemannian_gradient(curve, cfg.metric, state.psi());
    const double gnorm = std::sqrt(metric_inner(curve, cfg.metric, grad, grad));
    if (it == 0) trace.initial_grad_norm = gnorm;

    if (snapshot_every > 0 && it % snapshot_every == 0) {
      trace.snapshots.push_back(curve);
      trace.snapshot_iterations.push_back(it);
    }

    FlowRecord rec;
    rec.iteration = it;
    rec.J = state.J();
    rec.grad_norm = gnorm;
    rec.min_curvature = curve.curvature().minCoeff();
    rec.max_curvature = curve.curvature().maxCoeff();
    rec.circle_deviation = fit_circle(curve).max_deviation;

    const bool converged = gnorm <= cfg.grad_tol || gnorm <= cfg.grad_rtol * trace.initial_grad_norm;
    if (converged || it >= cfg.max_iterations) {
      trace.records.push_back(rec);
      trace.status = converged ? FlowStatus::Converged : FlowStatus::MaxIterations;
      break;
    }

    // Armijo on J; slope from the boundary formula, dJ[d] = factor * G^A(grad J, d).
    const NormalField direction = -grad;
    const double slope = cfg.shape.hadamard_factor * metric_inner(curve, cfg.metric, grad, direction);
    if (!(slope < 0.0)) {
      trace.records.push_back(rec);
      trace.status = FlowStatus::StepCollapse;
      break;
    }
    double tau = cfg.tau0;
    std::optional<ShapeState> accepted;
    Curve trial_curve = curve;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt, tau *= cfg.shrink) {
      rec.backtracks = bt;
      try {
        trial_curve = flow_curve(curve, direction, tau);
      } catch (const NumericalError&) {
        last_failure_was_source = false;
        continue;
      }
      if (!source.fits_inside(trial_curve)) {
        last_failure_was_source = true;
        continue;
      }
      try {
        ShapeState trial = solve_state(trial_curve, source, cfg.metric.k, cfg.shape);
        if (trial.J() <= state.J() + cfg.armijo_c1 * tau * slope && trial.J() < state.J()) {
          accepted = std::move(trial);
          break;
        }
        last_failure_was_source = false;
      } catch (const ValidationError&) {
        last_failure_was_source = true;
      }
    }

    if (!accepted) {
      trace.records.push_back(rec);
      if (last_failure_was_source) throw NumericalError("flow: source exits the domain along the descent direction");
      trace.status = FlowStatus::StepCollapse;
      break;
    }

    rec.accepted = true;
    rec.step = tau;
    ++trace.accepted_steps;
    curve = trial_curve;
    state = std::move(*accepted);
    if (cfg.resample_every > 0 && trace.accepted_steps % cfg.resample_every == 0) {
      // A resample that misses its uniformity postcondition is skipped; the
      // unresampled curve stays valid.
      try {
        Curve resampled = resample_by_arclength(curve);
        ShapeState rs = solve_state(resampled, source, cfg.metric.k, cfg.shape);
        curve = std::move(resampled);
        state = std::move(rs);
        rec.resampled = true;
      } catch (const NumericalError&) {
        ++trace.skipped_resamples;
      } catch (const ValidationError&) {
        ++trace.skipped_resamples;
      }
    }
    trace.records.push_back(rec);
  }

  trace.final_curve = curve;
  trace.final_psi = state.psi();
  trace.final_J = state.J();
  trace.final_grad_norm = trace.records.back().grad_norm;
  return trace;
}

struct ConvergenceSummary {
  FlowStatus status = FlowStatus::MaxIterations;
  int iterations = 0;
  int accepted_steps = 0;
  double initial_J = 0.0;
  double final_J = 0.0;
  double initial_grad_norm = 0.0;
  double final_grad_norm = 0.0;
  double grad_reduction = 0.0;     // initial / final gradient norm
  double mean_decrease_ratio = 0.0;  // geometric mean of successive gradient-norm ratios
  double max_abs_psi = 0.0;          // free-boundary residual
  CircleFit circle;
  bool near_circular = false;
};

inline ConvergenceSummary convergence_report(const FlowTrace& trace) {
  ConvergenceSummary s;
  s.status = trace.status;
  s.iterations = static_cast<int>(trace.records.size()) - 1;
  s.accepted_steps = trace.accepted_steps;
  if (!trace.records.empty()) {
    s.initial_J = trace.records.front().J;
    s.final_J = trace.records.back().J;
  }
  s.initial_grad_norm = trace.initial_grad_norm;
  s.final_grad_norm = trace.final_grad_norm;
  s.grad_reduction = s.final_grad_norm > 0.0 ? s.initial_grad_norm / s.final_grad_norm
                                             : std::numeric_limits<double>::infinity();
  if (s.iterations > 0 && s.initial_grad_norm > 0.0 && s.final_grad_norm > 0.0)
    s.mean_decrease_ratio = std::pow(s.final_grad_norm / s.initial_grad_norm, 1.0 / s.iterations);
  s.max_abs_psi = trace.final_psi.size() ? trace.final_psi.cwiseAbs().maxCoeff() : 0.0;
  s.circle = fit_circle(trace.final_curve);
  s.near_circular = s.circle.max_deviation <= 1e-2 * s.circle.radius;
  return s;
}

inline void write_trace_csv(std::ostream& os, const FlowTrace& trace) {
  os << "iter,J,gradnorm,step,minK,maxK,circdev\n";
  os.precision(17);
  for (const auto& r : trace.records)
    os << r.iteration << ',' << r.J << ',' << r.grad_norm << ',' << r.step << ',' << r.min_curvature << ','
       << r.max_curvature << ',' << r.circle_deviation << '\n';
}

/// One panel per snapshot, left to right, on a shared scale.
inline std::string flow_svg(const FlowTrace& trace) {
  const auto& shots = trace.snapshots;
  double extent = 0.0;
  for (const auto& c : shots)
    extent = std::max({extent, c.x().cwiseAbs().maxCoeff(), c.y().cwiseAbs().maxCoeff()});
  if (extent <= 0.0) extent = 1.0;
  const double panel = 160.0, margin = 10.0, scale = (panel / 2.0 - margin) / extent;
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << panel * std::max<std::size_t>(1, shots.size())
     << "\" height=\"" << panel + 20 << "\">\n";
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const double cx = panel * (static_cast<double>(i) + 0.5), cy = panel / 2.0;
    os << "<polygon fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
    for (Eigen::Index j = 0; j < shots[i].size(); ++j)
      os << (j ? " " : "") << cx + scale * shots[i].x()[j] << ',' << cy - scale * shots[i].y()[j];
    os << "\"/>\n";
    os << "<text x=\"" << cx << "\" y=\"" << panel + 12 << "\" font-size=\"10\" text-anchor=\"middle\">iter "
       << trace.snapshot_iterations[i] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace quadshape
