#pragma once

// Interior Laplace Dirichlet problem on a Curve through a first-kind
// single-layer representation u = S[sigma], kernel -(1/2pi) ln|x - y|.
//
// The log singularity is split off and integrated exactly against the
// trigonometric interpolant of the density (Kress product quadrature); the
// remaining kernel is smooth and handled by the trapezoid rule. Neumann data
// follow from the interior jump relation du/dnu = (I/2 + K') sigma.
//
// The single-layer operator is singular when the logarithmic capacity of the
// curve is 1. LaplaceSolver estimates the capacity and, inside (0.5, 2),
// works on the geometry scaled by 4, mapping results back.

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "quadshape/errors.hpp"
#include "quadshape/geometry.hpp"
#include "quadshape/parallel.hpp"

namespace quadshape {

struct LayerDensity {
  Vec values;
  double scale = 1.0;  // geometry scale the density lives on
};

inline constexpr double kCapacityGuardLow = 0.5;
inline constexpr double kCapacityGuardHigh = 2.0;
inline constexpr double kCapacityRescale = 4.0;
inline constexpr double kCapacityGuardSlack = 1e-9;  // R = 2 circles land on the edge


namespace detail {

// R_d: weights of  int_0^{2pi} ln(4 sin^2((t_i - tau)/2)) phi(tau) dtau ~ sum_j R_{i-j} phi_j.
inline Vec kress_log_weights(Eigen::Index n) {
  Vec r(n);
  const Eigen::Index half = n / 2;
  const double nn = static_cast<double>(n);
  for (Eigen::Index d = 0; d < n; ++d) {
    const double t = grid_theta(d, n);
    double acc = 0.0;
    for (Eigen::Index m = 1; m < half; ++m) acc += std::cos(static_cast<double>(m) * t) / static_cast<double>(m);
    r[d] = -(4.0 * kPi / nn) * acc - (4.0 * kPi / (nn * nn)) * ((d % 2 == 0) ? 1.0 : -1.0);
  }
  return r;
}

inline Mat assemble_single_layer_raw(const Curve& c) {
  const Eigen::Index n = c.size();
  const Vec r = kress_log_weights(n);
  const double h = kTwoPi / static_cast<double>(n);
  Mat s(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    for (Eigen::Index j = 0; j < n; ++j) {
      double smooth;
      if (i == j) {
        smooth = std::log(c.speed()[i] * c.speed()[i]);
      } else {
        const double half_gap = 0.5 * (c.theta(i) - c.theta(j));
        const double s2 = std::sin(half_gap);
        smooth = std::log((c.point(i) - c.point(j)).squaredNorm() / (4.0 * s2 * s2));
      }
      const Eigen::Index d = ((i - j) % n + n) % n;
      s(i, j) = -(1.0 / (4.0 * kPi)) * (r[d] + h * smooth) * c.speed()[j];
    }
  });
  return s;
}

// Equilibrium problem S sigma = V, sum sigma w = 1; capacity = exp(-2 pi V).
inline double capacity_from_single_layer(const Mat& s, const Vec& w) {
  const Eigen::Index n = s.rows();
  Mat m(n + 1, n + 1);
  m.topLeftCorner(n, n) = s;
  m.topRightCorner(n, 1).setConstant(-1.0);
  m.bottomLeftCorner(1, n) = w.transpose();
  m(n, n) = 0.0;
  Vec rhs = Vec::Zero(n + 1);
  rhs[n] = 1.0;
  const Vec sol = m.fullPivLu().solve(rhs);
  const double cap = std::exp(-kTwoPi * sol[n]);
  if (!std::isfinite(cap) || cap <= 0.0) throw NumericalError("capacity estimate failed");
  return cap;
}

}  // namespace detail

/// Approximate transfinite diameter (logarithmic capacity) of the curve.
inline double estimate_capacity(const Curve& c) {
  return detail::capacity_from_single_layer(detail::assemble_single_layer_raw(c), c.weights());
}

/// Single-layer matrix on the curve as given. Throws when the capacity lies in
/// the degenerate window (0.5, 2); LaplaceSolver handles that case by rescaling.
inline Mat assemble_single_layer(const Curve& c) {
  Mat s = detail::assemble_single_layer_raw(c);
  const double cap = detail::capacity_from_single_layer(s, c.weights());
  if (cap > kCapacityGuardLow + kCapacityGuardSlack && cap < kCapacityGuardHigh - kCapacityGuardSlack) {
    std::ostringstream msg;
    msg << "assemble_single_layer: capacity " << cap
        << " is close to 1 (single layer nearly singular); rescale the geometry";
    throw ValidationError(msg.str());
  }
  return s;
}

/// K'_ij: normal derivative at node i of the kernel centred at node j, times w_j.
inline Mat assemble_adjoint_double_layer(const Curve& c) {
  const Eigen::Index n = c.size();
  Mat k(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    const Point xi = c.point(i), ni = c.normal(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      double kernel;
      if (i == j) {
        kernel = 0.5 * c.curvature()[i];
      } else {
        const Point d = xi - c.point(j);
        kernel = d.dot(ni) / d.squaredNorm();
      }
      k(i, j) = -(1.0 / kTwoPi) * kernel * c.weights()[j];
    }
  });
  return k;
}

/// Dirichlet solver, Dirichlet-to-Neumann map and interior evaluation on one curve.
class LaplaceSolver {
 public:
  explicit LaplaceSolver(Curve curve, double min_rcond = 1e-13) : curve_(std::move(curve)) {
    const Vec& w = curve_.weights();
    Mat raw = detail::assemble_single_layer_raw(curve_);
    capacity_ = detail::capacity_from_single_layer(raw, w);
    if (capacity_ > kCapacityGuardLow + kCapacityGuardSlack && capacity_ < kCapacityGuardHigh - kCapacityGuardSlack) {
      scale_ = kCapacityRescale;
      // Exact discrete image of the scaled geometry: kernel gains -(ln s)/2pi, weights gain s.
      const double shift = std::log(scale_) / kTwoPi;
      single_layer_ = scale_ * (raw - shift * Vec::Ones(raw.rows()) * w.transpose());
    } else {
      single_layer_ = std::move(raw);
    }
    adjoint_double_layer_ = assemble_adjoint_double_layer(curve_);
    lu_ = Eigen::PartialPivLU<Mat>(single_layer_);
    rcond_ = lu_.rcond();
    if (!(rcond_ > min_rcond)) {
      std::ostringstream msg;
      msg << "single-layer system is near-singular (rcond " << rcond_ << ", capacity " << capacity_
          << "); rescale the geometry";
      throw NumericalError(msg.str());
    }
    diameter_ = curve_.diameter();
  }

  const Curve& curve() const { return curve_; }
  double capacity() const { return capacity_; }
  double scale() const { return scale_; }
  double rcond() const { return rcond_; }
  const Mat& single_layer() const { return single_layer_; }
  const Mat& adjoint_double_layer() const { return adjoint_double_layer_; }

  LayerDensity solve_dirichlet(const Vec& boundary_data) const {
    require_same_grid(curve_, boundary_data, "solve_dirichlet");
    return {lu_.solve(boundary_data), scale_};
  }

  // Interior normal derivative of S[sigma], in the curve's own units.
  Vec neumann_trace(const LayerDensity& sigma) const {
    check_density(sigma);
    return scale_ * (0.5 * sigma.values + adjoint_double_layer_ * sigma.values);
  }

  Vec dtn_apply(const Vec& alpha) const { return neumann_trace(solve_dirichlet(alpha)); }

  /// Dense DtN matrix; the N column solves share one factorization.
  Mat dtn_matrix() const {
    const Eigen::Index n = curve_.size();
    const Mat inv = lu_.solve(Mat::Identity(n, n));
    return scale_ * (0.5 * inv + adjoint_double_layer_ * inv);
  }

  /// sum alpha (L alpha) w  ~  int |grad Lambda|^2 over the interior.
  double dirichlet_energy(const Vec& alpha) const { return curve_.integrate(alpha.cwiseProduct(dtn_apply(alpha))); }

  // Points closer than this to the boundary lose trapezoid accuracy.
  double near_boundary_distance() const { return kTwoPi * diameter_ / static_cast<double>(curve_.size()); }

  double eval_interior(const LayerDensity& sigma, const Point& x, bool strict = true) const {
    check_density(sigma);
    check_interior_point(x, strict);
    const double s = sigma.scale;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < curve_.size(); ++j)
      acc += std::log(s * (x - curve_.point(j)).norm()) * sigma.values[j] * s * curve_.weights()[j];
    return -acc / kTwoPi;
  }

  Point eval_interior_gradient(const LayerDensity& sigma, const Point& x, bool strict = true) const {
    check_density(sigma);
    check_interior_point(x, strict);
    const double s = sigma.scale;
    Point acc = Point::Zero();
    // grad_x ln(s|x - y|) = (x - y)/|x - y|^2 for any s; only the measure carries s.
    for (Eigen::Index j = 0; j < curve_.size(); ++j) {
      const Point d = x - curve_.point(j);
      acc += d / d.squaredNorm() * sigma.values[j] * s * curve_.weights()[j];
    }
    return -acc / kTwoPi;
  }

 private:
  void check_density(const LayerDensity& sigma) const {
    if (sigma.values.size() != curve_.size()) throw ValidationError("layer density: grid mismatch");
    if (sigma.scale != scale_) throw ValidationError("layer density: produced on a different geometry scale");
  }

  void check_interior_point(const Point& x, bool strict) const {
    if (!strict) return;
    if (!curve_.contains(x)) throw ValidationError("eval_interior: point is outside the curve");
    if (curve_.distance_to(x) < near_boundary_distance())
      throw ValidationError("eval_interior: point too close to the boundary for the trapezoid rule");
  }

  Curve curve_;
  Mat single_layer_, adjoint_double_layer_;
  Eigen::PartialPivLU<Mat> lu_;
  double capacity_ = 1.0;
  double scale_ = 1.0;
  double rcond_ = 0.0;
  double diameter_ = 0.0;
};

// Free-function forms; each builds a solver for the curve.

inline LayerDensity solve_dirichlet(const Curve& c, const Vec& boundary_data) {
  return LaplaceSolver(c).solve_dirichlet(boundary_data);
}

inline Vec dtn_apply(const Curve& c, const Vec& alpha) { return LaplaceSolver(c).dtn_apply(alpha); }

inline double dirichlet_energy(const Curve& c, const Vec& alpha) { return LaplaceSolver(c).dirichlet_energy(alpha); }

inline double eval_interior(const Curve& c, const LayerDensity& sigma, const Point& x) {
  return LaplaceSolver(c).eval_interior(sigma, x);
}

inline void write_matrix_csv(const std::string& path, const Mat& m) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
}

}  // namespace quadshape
