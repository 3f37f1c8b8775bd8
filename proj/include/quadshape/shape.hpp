#pragma once

// The quadrature-surface functional
//   J(Omega) = -1/2 int_Omega |grad u|^2 + (k^2/2) |Omega|,  -Laplace u = f, u = 0 on the boundary,
// its Hadamard derivative, the three second-order routes and the curvature controls.

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "quadshape/bem.hpp"
#include "quadshape/errors.hpp"
#include "quadshape/geometry.hpp"
#include "quadshape/parallel.hpp"
#include "quadshape/potential.hpp"
#include "quadshape/riemannian.hpp"

namespace quadshape {

/// Which boundary quantity stands in for d(psi)/d(nu) in the direct Riemannian form.
enum class PsiReading {
  Printed,           // closed form -2 K u_nu^2
  Sampled,           // -d/dnu |grad u|^2 from one-sided samples along -nu
  StateSensitivity,  // total variation of psi along alpha: 2 u_nu L(u_nu alpha) + 2 K u_nu^2 alpha
};

inline const char* to_string(PsiReading r) {
  switch (r) {
    case PsiReading::Printed: return "printed";
    case PsiReading::Sampled: return "sampled";
    case PsiReading::StateSensitivity: return "state";
  }
  return "?";
}

struct ShapeOptions {
  int radial_order = 32;
  int angular_order = 64;
  double hadamard_factor = 1.0;  // scales the boundary formula for dJ; 0.5 matches finite differences
  double sample_offset = 0.0;    // Sampled reading step; 0 means 2 * near-boundary distance
};

/// Solved state for one (curve, source, k). Immutable.
class ShapeState {
 public:
  const Curve& curve() const { return solver_->curve(); }
  const SourceTerm& source() const { return source_; }
  double k() const { return k_; }
  const LaplaceSolver& solver() const { return *solver_; }
  std::shared_ptr<const LaplaceSolver> solver_ptr() const { return solver_; }
  const Vec& u_nu() const { return u_nu_; }
  const Vec& psi() const { return psi_; }
  const LayerDensity& density() const { return density_; }
  double J() const { return j_; }
  double dirichlet_energy() const { return energy_; }
  const ShapeOptions& options() const { return options_; }

  // Full state u = u_p + u_h at an interior point.
  double u(const Point& x, bool strict = true) const {
    return eval_potential(source_, x) + solver_->eval_interior(density_, x, strict);
  }
  Point grad_u(const Point& x, bool strict = true) const {
    return eval_grad_potential(source_, x) + solver_->eval_interior_gradient(density_, x, strict);
  }

 private:
  friend ShapeState solve_state(const Curve&, const SourceTerm&, double, const ShapeOptions&);
  std::shared_ptr<const LaplaceSolver> solver_;
  SourceTerm source_;
  double k_ = 1.0;
  Vec u_nu_, psi_;
  LayerDensity density_;
  double j_ = 0.0;
  double energy_ = 0.0;
  ShapeOptions options_;
};

/// Solves -Laplace u = f, u = 0 on the curve by u = u_p + u_h with u_h harmonic and
/// u_h = -u_p on the boundary; fills u_nu, psi = k^2 - u_nu^2 and J.
inline ShapeState solve_state(const Curve& c, const SourceTerm& source, double k, const ShapeOptions& opt = {}) {
  if (!std::isfinite(k) || k <= 0.0) throw ValidationError("k must be positive");
  source.validate();
  source.validate_inside(c);

  ShapeState st;
  st.solver_ = std::make_shared<const LaplaceSolver>(c);
  st.source_ = source;
  st.k_ = k;
  st.options_ = opt;
  const LaplaceSolver& solver = *st.solver_;

  const Eigen::Index n = c.size();
  Vec trace(n), dpn(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    trace[j] = eval_potential(source, c.point(j));
    dpn[j] = eval_grad_potential(source, c.point(j)).dot(c.normal(j));
  }
  st.density_ = solver.solve_dirichlet(-trace);
  st.u_nu_ = dpn + solver.neumann_trace(st.density_);
  st.psi_ = (k * k - st.u_nu_.array().square()).matrix();

  // Every quadrature node sits inside a disk; a disk clear of the trapezoid
  // accuracy band keeps all of its nodes clear as well.
  for (std::size_t i = 0; i < source.disks().size(); ++i) {
    const auto& d = source.disks()[i];
    if (c.distance_to(d.center) - d.radius < solver.near_boundary_distance())
      throw ValidationError("source disk " + std::to_string(i) +
                            " is too close to the boundary for interior evaluation at this N");
  }
  const auto q = source_quadrature(source, opt.radial_order, opt.angular_order);
  std::vector<double> u(q.nodes.size());
  for (std::size_t i = 0; i < q.nodes.size(); ++i) u[i] = st.u(q.nodes[i], false);
  st.energy_ = source_energy_integral(q, u);
  st.j_ = -0.5 * st.energy_ + 0.5 * k * k * c.area();
  return st;
}

inline double evaluate_J(const ShapeState& st) { return st.J(); }

/// dJ[alpha] = factor * sum psi alpha w (factor from the options unless given).
inline double hadamard_derivative(const ShapeState& st, const NormalField& a, std::optional<double> factor = {}) {
  require_same_grid(st.curve(), a, "hadamard_derivative");
  return factor.value_or(st.options().hadamard_factor) * st.curve().integrate(st.psi().cwiseProduct(a.values));
}

/// -k^2 sum K alpha^2 w + k^2 sum alpha (L alpha) w  (mean-curvature term with the minus sign).
inline double quadratic_form_prop(const ShapeState& st, const NormalField& a) {
  require_same_grid(st.curve(), a, "quadratic_form_prop");
  const Curve& c = st.curve();
  const double k2 = st.k() * st.k();
  return -k2 * c.integrate(c.curvature().cwiseProduct(a.values.cwiseAbs2())) +
         k2 * st.solver().dirichlet_energy(a.values);
}

/// Same form with the mean-curvature term added: k^2 sum (alpha L alpha + K alpha^2) w.
inline double quadratic_form_corollary(const ShapeState& st, const NormalField& a) {
  require_same_grid(st.curve(), a, "quadratic_form_corollary");
  const Curve& c = st.curve();
  const double k2 = st.k() * st.k();
  return k2 * c.integrate(c.curvature().cwiseProduct(a.values.cwiseAbs2())) +
         k2 * st.solver().dirichlet_energy(a.values);
}

/// d(psi)/d(nu) sampled: -(d/dnu)|grad u|^2 from |grad u|^2 at x, x - h nu, x - 2h nu.
inline Vec sampled_psi_normal_derivative(const ShapeState& st, double offset = 0.0) {
  const Curve& c = st.curve();
  const double h = offset > 0.0 ? offset : 2.0 * st.solver().near_boundary_distance();
  Vec out(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const Point x = c.point(j), nu = c.normal(j);
    const Point x1 = x - h * nu, x2 = x - 2.0 * h * nu;
    if (!c.contains(x2) || c.distance_to(x1) < 0.5 * h)
      throw ValidationError("sampled d(psi)/d(nu): off-boundary samples leave the domain; reduce the offset");
    const double f0 = st.u_nu()[j] * st.u_nu()[j];
    const double f1 = st.grad_u(x1, false).squaredNorm();
    const double f2 = st.grad_u(x2, false).squaredNorm();
    out[j] = -(3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h);
  }
  return out;
}

/// Nodal values of (d psi/d nu)<V, nu> under the chosen reading.
inline Vec psi_variation(const ShapeState& st, const NormalField& a, PsiReading reading) {
  require_same_grid(st.curve(), a, "psi_variation");
  const Curve& c = st.curve();
  const Vec& un = st.u_nu();
  switch (reading) {
    case PsiReading::Printed:
      return (-2.0 * c.curvature().array() * un.array().square() * a.values.array()).matrix();
    case PsiReading::Sampled:
      return sampled_psi_normal_derivative(st, st.options().sample_offset).cwiseProduct(a.values);
    case PsiReading::StateSensitivity: {
      const Vec lu = st.solver().dtn_apply(un.cwiseProduct(a.values));
      return (2.0 * un.array() * lu.array() + 2.0 * c.curvature().array() * un.array().square() * a.values.array())
          .matrix();
    }
  }
  throw ValidationError("psi_variation: unknown reading");
}

/// sum [ (d psi/d nu) + K psi ] alpha beta w, independent of A. The
/// state-sensitivity reading is a bilinear form and is symmetrized explicitly.
inline double quadratic_form_riemannian(const ShapeState& st, const NormalField& a, const NormalField& b,
                                        PsiReading reading = PsiReading::Printed) {
  require_same_grid(st.curve(), a, "quadratic_form_riemannian");
  require_same_grid(st.curve(), b, "quadratic_form_riemannian");
  const Curve& c = st.curve();
  const Vec kpsi = c.curvature().cwiseProduct(st.psi());
  if (reading == PsiReading::StateSensitivity) {
    const double ab = c.integrate((psi_variation(st, a, reading) + kpsi.cwiseProduct(a.values)).cwiseProduct(b.values));
    const double ba = c.integrate((psi_variation(st, b, reading) + kpsi.cwiseProduct(b.values)).cwiseProduct(a.values));
    return 0.5 * (ab + ba);
  }
  const Vec nodal = psi_variation(st, NormalField::constant(c, 1.0), reading) + kpsi;
  return c.integrate(nodal.cwiseProduct(a.values).cwiseProduct(b.values));
}

// ---------------------------------------------------------------------------
// Finite-difference machinery

inline double default_t_step(const Curve& c) { return 1e-3 * c.diameter(); }

namespace detail {

constexpr int kMaxStepRetries = 5;

// Evaluates fn(t) at every offset; if any perturbed curve is invalid the whole
// stencil is retried with the step divided by 4 (at most 5 retries).
template <typename Fn>
std::pair<std::vector<double>, double> run_stencil(const std::vector<double>& multipliers, double t_step, Fn&& fn) {
  double step = t_step;
  for (int attempt = 0; attempt <= kMaxStepRetries; ++attempt) {
    std::vector<double> values(multipliers.size());
    try {
      parallel_for(multipliers.size(), [&](std::size_t i) { values[i] = fn(multipliers[i] * step); });
      return {values, step};
    } catch (const NumericalError&) {
      step *= 0.25;
    } catch (const ValidationError&) {
      step *= 0.25;  // e.g. source clearance lost on a perturbed curve
    }
  }
  throw NumericalError("finite-difference stencil: perturbed curves stay invalid after step reductions");
}

}  // namespace detail

/// j(t) = J(flow_curve(c, alpha, t)) with the source translated by t * source_drift.
inline double perturbed_J(const Curve& c, const SourceTerm& s, double k, const NormalField& a, double t,
                          const ShapeOptions& opt = {}, const Point& source_drift = Point::Zero()) {
  const Curve ct = flow_curve(c, a, t);
  const SourceTerm st = (source_drift.isZero() || t == 0.0) ? s : s.translated(t * source_drift);
  return solve_state(ct, st, k, opt).J();
}

struct FdFirstDerivative {
  double value = 0.0;  // Richardson-extrapolated j'(0)
  double coarse = 0.0;  // central difference at the final step
  double t_step = 0.0;
};

inline FdFirstDerivative fd_first_derivative(const Curve& c, const SourceTerm& s, double k, const NormalField& a,
                                             double t_step = 0.0, const ShapeOptions& opt = {},
                                             const Point& source_drift = Point::Zero()) {
  require_same_grid(c, a, "fd_first_derivative");
  if (t_step <= 0.0) t_step = default_t_step(c);
  const auto [v, h] = detail::run_stencil({-2.0, -1.0, 1.0, 2.0}, t_step, [&](double t) {
    return perturbed_J(c, s, k, a, t, opt, source_drift);
  });
  FdFirstDerivative out;
  out.t_step = h;
  const double d1 = (v[2] - v[1]) / (2.0 * h);
  const double d2 = (v[3] - v[0]) / (4.0 * h);
  out.coarse = d1;
  out.value = (4.0 * d1 - d2) / 3.0;
  return out;
}

struct FdSecondDerivative {
  double value = 0.0;            // Richardson value from steps h/2 and h/4
  double previous = 0.0;         // Richardson value from steps h and h/2
  double halving_change = 0.0;   // |value - previous|
  std::array<double, 3> five_point{};  // 5-point second differences at h, h/2, h/4
  double t_step = 0.0;           // h actually used
};

/// j''(0) for j(t) = J(Omega_t): 5-point central second differences at h, h/2, h/4 with
/// Richardson extrapolation (O(h^4) -> O(h^6)); the change between the two
/// extrapolations is reported as the step-halving convergence.
inline FdSecondDerivative fd_second_derivative(const Curve& c, const SourceTerm& s, double k, const NormalField& a,
                                               double t_step = 0.0, const ShapeOptions& opt = {},
                                               const Point& source_drift = Point::Zero()) {
  require_same_grid(c, a, "fd_second_derivative");
  if (t_step <= 0.0) t_step = default_t_step(c);
  const std::vector<double> mult = {0.0, -2.0, -1.0, 1.0, 2.0, -1.0, -0.5, 0.5, 1.0, -0.5, -0.25, 0.25, 0.5};
  const auto [v, h] = detail::run_stencil(mult, t_step, [&](double t) {
    return perturbed_J(c, s, k, a, t, opt, source_drift);
  });
  auto five = [&](std::size_t base, double step) {
    return (-v[base] + 16.0 * v[base + 1] - 30.0 * v[0] + 16.0 * v[base + 2] - v[base + 3]) / (12.0 * step * step);
  };
  FdSecondDerivative out;
  out.t_step = h;
  out.five_point = {five(1, h), five(5, 0.5 * h), five(9, 0.25 * h)};
  out.previous = (16.0 * out.five_point[1] - out.five_point[0]) / 15.0;
  out.value = (16.0 * out.five_point[2] - out.five_point[1]) / 15.0;
  out.halving_change = std::abs(out.value - out.previous);
  return out;
}

struct ConnectionHessian {
  double value = 0.0;                  // d(dJ[W])[V] - dJ[nabla_V W]
  double second_derivative_term = 0.0;  // d(dJ[W])[V], central difference
  double connection_term = 0.0;         // dJ[nabla_V W]
  double t_step = 0.0;
};

/// G^A(Hess J[V], W) = d(dJ[W])[V] - dJ[nabla_V W]. The first term differentiates
/// t -> dJ_{Omega_t}[beta_t] with beta transported along the flow.
inline ConnectionHessian hessian_via_connection(const ShapeState& st, const MetricParams& p, const NormalField& a,
                                                const NormalField& b, double t_step = 0.0) {
  const Curve& c = st.curve();
  require_same_grid(c, a, "hessian_via_connection");
  require_same_grid(c, b, "hessian_via_connection");
  if (t_step <= 0.0) t_step = default_t_step(c);
  const auto [v, h] = detail::run_stencil({-1.0, 1.0}, t_step, [&](double t) {
    const ShapeState moved = solve_state(flow_curve(c, a, t), st.source(), st.k(), st.options());
    return hadamard_derivative(moved, transport(b, a, t));
  });
  ConnectionHessian out;
  out.t_step = h;
  out.second_derivative_term = (v[1] - v[0]) / (2.0 * h);
  out.connection_term = hadamard_derivative(st, covariant_derivative(c, p, a, b));
  out.value = out.second_derivative_term - out.connection_term;
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct Direction {
  std::string name;
  NormalField field;
};

struct HessianRow {
  std::string a, b;
  double q_fd = 0.0;            // j'' (diagonal) or its polarization (off-diagonal)
  double q_prop = 0.0;          // -k^2 K term + Steklov term
  double q_corollary = 0.0;     // +k^2 K term + Steklov term
  double q_riem = 0.0;          // direct Riemannian form, printed reading
  double q_riem_sampled = 0.0;  // direct Riemannian form, sampled reading
  double q_riem_state = 0.0;    // direct Riemannian form, state-sensitivity reading
  double q_connection = 0.0;    // connection route
  double connection_term = 0.0;  // dJ[nabla_V W] part of the connection route
  double riem_symmetry_residual = 0.0;
  double connection_symmetry_residual = 0.0;
};

struct HessianReport {
  std::vector<HessianRow> rows;
  // least-squares c with q_fd ~ c * other, over all rows
  double ratio_fd_prop = 0.0;
  double ratio_fd_corollary = 0.0;
  double ratio_fd_riem = 0.0;
  double ratio_fd_riem_state = 0.0;
  double ratio_fd_connection = 0.0;
  double ratio_connection_riem_state = 0.0;
  double t_step = 0.0;
};

namespace detail {
inline double fitted_ratio(const std::vector<double>& num, const std::vector<double>& den) {
  double nd = 0.0, dd = 0.0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    nd += num[i] * den[i];
    dd += den[i] * den[i];
  }
  return dd > 0.0 ? nd / dd : 0.0;
}

// Bilinear prop/corollary forms from their quadratic versions.
template <typename Q>
double polarize(const Q& q, const ShapeState& st, const NormalField& a, const NormalField& b) {
  const NormalField sum(a.values + b.values), diff(a.values - b.values);
  return 0.25 * (q(st, sum) - q(st, diff));
}
}  // namespace detail

inline HessianReport hessian_report(const ShapeState& st, const MetricParams& p, const std::vector<Direction>& dirs,
                                    double t_step = 0.0) {
  const Curve& c = st.curve();
  if (t_step <= 0.0) t_step = default_t_step(c);
  HessianReport rep;
  rep.t_step = t_step;
  std::vector<double> fd, prop, cor, riem, riem_state, conn;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (std::size_t j = i; j < dirs.size(); ++j) {
      const NormalField& a = dirs[i].field;
      const NormalField& b = dirs[j].field;
      HessianRow row;
      row.a = dirs[i].name;
      row.b = dirs[j].name;
      if (i == j) {
        row.q_fd = fd_second_derivative(c, st.source(), st.k(), a, t_step, st.options()).value;
      } else {
        const NormalField sum(a.values + b.values), diff(a.values - b.values);
        row.q_fd = 0.25 * (fd_second_derivative(c, st.source(), st.k(), sum, t_step, st.options()).value -
                           fd_second_derivative(c, st.source(), st.k(), diff, t_step, st.options()).value);
      }
      row.q_prop = detail::polarize(quadratic_form_prop, st, a, b);
      row.q_corollary = detail::polarize(quadratic_form_corollary, st, a, b);
      row.q_riem = quadratic_form_riemannian(st, a, b, PsiReading::Printed);
      row.riem_symmetry_residual = std::abs(row.q_riem - quadratic_form_riemannian(st, b, a, PsiReading::Printed));
      try {
        row.q_riem_sampled = quadratic_form_riemannian(st, a, b, PsiReading::Sampled);
      } catch (const ValidationError&) {
        row.q_riem_sampled = std::numeric_limits<double>::quiet_NaN();
      }
      row.q_riem_state = quadratic_form_riemannian(st, a, b, PsiReading::StateSensitivity);
      const auto ab = hessian_via_connection(st, p, a, b, t_step);
      const auto ba = hessian_via_connection(st, p, b, a, t_step);
      row.q_connection = ab.value;
      row.connection_term = ab.connection_term;
      row.connection_symmetry_residual = std::abs(ab.value - ba.value);
      fd.push_back(row.q_fd);
      prop.push_back(row.q_prop);
      cor.push_back(row.q_corollary);
      riem.push_back(row.q_riem);
      riem_state.push_back(row.q_riem_state);
      conn.push_back(row.q_connection);
      rep.rows.push_back(std::move(row));
    }
  }
  rep.ratio_fd_prop = detail::fitted_ratio(fd, prop);
  rep.ratio_fd_corollary = detail::fitted_ratio(fd, cor);
  rep.ratio_fd_riem = detail::fitted_ratio(fd, riem);
  rep.ratio_fd_riem_state = detail::fitted_ratio(fd, riem_state);
  rep.ratio_fd_connection = detail::fitted_ratio(fd, conn);
  rep.ratio_connection_riem_state = detail::fitted_ratio(conn, riem_state);
  return rep;
}

/// Eigenpairs of a nodal operator in the arclength inner product: the bilinear
/// form W*op is symmetrized and the generalized problem B phi = lambda W phi solved.
/// Eigenvalues ascend; eigenvector columns are w-orthonormal.
struct WeightedSpectrum {
  Vec eigenvalues;
  Mat eigenvectors;
};

inline WeightedSpectrum weighted_spectrum(const Curve& c, const Mat& op) {
  const Vec& w = c.weights();
  const Vec sqrt_w = w.cwiseSqrt();
  const Mat form = w.asDiagonal() * op;
  const Mat sym = 0.5 * (form + form.transpose());
  const Mat scaled = sqrt_w.cwiseInverse().asDiagonal() * sym * sqrt_w.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(scaled);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolve failed");
  return {es.eigenvalues(), sqrt_w.cwiseInverse().asDiagonal() * es.eigenvectors()};
}

struct StabilityReport {
  double total_curvature = 0.0;
  double min_curvature = 0.0;
  double max_curvature = 0.0;
  Eigen::Index argmin_node = 0;
  Point x0 = Point::Zero();
  double h_minus_norm = 0.0;  // max over nodes of max(-K, 0)
  // k^2 (L - H): mean-curvature term with the minus sign
  Vec eigenvalues;
  double lambda0 = 0.0;
  Vec phi0;
  // k^2 (L + H): the sign used in the spectral characterization
  Vec eigenvalues_plus;
  double lambda0_plus = 0.0;
  Vec phi0_plus;
  bool total_curvature_control = false;  // sum K w <= 0
  bool pointwise_control = false;        // min K < 0
  double coercivity_constant = 0.0;      // lambda0
  bool coercive = false;                 // lambda0 > 0
  std::string note;
};

inline StabilityReport stability_controls(const ShapeState& st) {
  const Curve& c = st.curve();
  const Vec& kap = c.curvature();
  StabilityReport rep;
  rep.total_curvature = c.integrate(kap);
  rep.min_curvature = kap.minCoeff(&rep.argmin_node);
  rep.max_curvature = kap.maxCoeff();
  rep.x0 = c.point(rep.argmin_node);
  rep.h_minus_norm = std::max(0.0, -rep.min_curvature);

  const double k2 = st.k() * st.k();
  const Mat dtn = st.solver().dtn_matrix();
  const Mat minus = k2 * (dtn - Mat(kap.asDiagonal()));
  const Mat plus = k2 * (dtn + Mat(kap.asDiagonal()));
  const auto sm = weighted_spectrum(c, minus);
  const auto sp = weighted_spectrum(c, plus);
  rep.eigenvalues = sm.eigenvalues;
  rep.lambda0 = sm.eigenvalues[0];
  rep.phi0 = sm.eigenvectors.col(0);
  rep.eigenvalues_plus = sp.eigenvalues;
  rep.lambda0_plus = sp.eigenvalues[0];
  rep.phi0_plus = sp.eigenvectors.col(0);

  rep.total_curvature_control = rep.total_curvature <= 0.0;
  rep.pointwise_control = rep.min_curvature < 0.0;
  rep.coercivity_constant = rep.lambda0;
  rep.coercive = rep.lambda0 > 0.0;
  rep.note =
      "total curvature of a simple closed plane curve is 2*pi (Gauss-Bonnet), so the total-curvature control "
      "cannot hold in the plane";
  return rep;
}

}  // namespace quadshape
