#pragma once

// Spectrally sampled closed plane curves, normal fields on them and the
// Sobolev-type inner product G^A(a, b) = int (1 + A K^2) a b ds.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "quadshape/errors.hpp"
#include "quadshape/spectral.hpp"

namespace quadshape {

/// Metric weight A >= 0 and the Neumann target k > 0.
struct MetricParams {
  double A = 1.0;
  double k = 1.0;

  void validate() const {
    if (!std::isfinite(A) || A < 0.0) throw ValidationError("A must be nonnegative");
    if (!std::isfinite(k) || k <= 0.0) throw ValidationError("k must be positive");
  }

  // A = 0 is accepted but the metric is then only the plain L2 product.
  bool degenerate() const { return A == 0.0; }
};

namespace detail {

inline bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline double cross2(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

// Proper or touching intersection of closed segments [p1,p2] and [q1,q2].
inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = cross2(q2 - q1, p1 - q1);
  const double d2 = cross2(q2 - q1, p2 - q1);
  const double d3 = cross2(p2 - p1, q1 - p1);
  const double d4 = cross2(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on_segment = [](const Point& a, const Point& b, const Point& p) {
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
  };
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

}  // namespace detail

/// A closed, simple, counterclockwise curve sampled at theta_j = 2*pi*j/N.
///
/// Derivatives are spectral. The outward normal is the unit tangent rotated
/// by -90 degrees, curvature is (x'y'' - y'x'')/|c'|^3 (positive on convex
/// counterclockwise curves) and w_j = |c'(theta_j)| * 2*pi/N are the
/// arclength quadrature weights. Immutable once constructed.
class Curve {
 public:
  Curve(Vec x, Vec y) : x_(std::move(x)), y_(std::move(y)) {
    const Eigen::Index n = x_.size();
    if (y_.size() != n) throw ValidationError("curve: x and y sample counts differ");
    if (n < 8 || !detail::is_power_of_two(n))
      throw ValidationError("curve: sample count must be a power of two >= 8");
    if (!x_.allFinite() || !y_.allFinite()) throw ValidationError("curve: non-finite sample");

    dx_ = spectral_derivative(x_, 1);
    dy_ = spectral_derivative(y_, 1);
    const Vec ddx = spectral_derivative(x_, 2);
    const Vec ddy = spectral_derivative(y_, 2);
    speed_ = (dx_.array().square() + dy_.array().square()).sqrt();

    const double mean_speed = speed_.mean();
    if (!(mean_speed > 0.0) || speed_.minCoeff() <= 1e-10 * mean_speed)
      throw ValidationError("curve: speed vanishes (positive speed violated)");

    nx_ = dy_.array() / speed_.array();
    ny_ = -dx_.array() / speed_.array();
    kappa_ = (dx_.array() * ddy.array() - dy_.array() * ddx.array()) / speed_.array().cube();
    weights_ = speed_ * (kTwoPi / static_cast<double>(n));

    const double signed_area =
        0.5 * (x_.array() * dy_.array() - y_.array() * dx_.array()).sum() * (kTwoPi / static_cast<double>(n));
    if (!(signed_area > 0.0))
      throw ValidationError("curve: orientation must be counterclockwise (enclosed area is not positive)");
    area_ = signed_area;

    check_simple();
  }

  Eigen::Index size() const { return x_.size(); }
  double theta(Eigen::Index j) const { return grid_theta(j, size()); }
  Point point(Eigen::Index j) const { return {x_[j], y_[j]}; }
  Point normal(Eigen::Index j) const { return {nx_[j], ny_[j]}; }
  Point tangent(Eigen::Index j) const { return {-ny_[j], nx_[j]}; }

  const Vec& x() const { return x_; }
  const Vec& y() const { return y_; }
  const Vec& dx() const { return dx_; }
  const Vec& dy() const { return dy_; }
  const Vec& speed() const { return speed_; }
  const Vec& normal_x() const { return nx_; }
  const Vec& normal_y() const { return ny_; }
  const Vec& curvature() const { return kappa_; }
  const Vec& weights() const { return weights_; }
  double area() const { return area_; }
  double length() const { return weights_.sum(); }

  // Arclength quadrature of nodal values.
  double integrate(const Vec& f) const { return f.dot(weights_); }

  double diameter() const {
    double d = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i)
      for (Eigen::Index j = i + 1; j < size(); ++j) d = std::max(d, (point(i) - point(j)).norm());
    return d;
  }

  Point centroid() const {
    return {x_.dot(weights_) / length(), y_.dot(weights_) / length()};
  }

  // Winding-number test against the sampled polygon.
  bool contains(const Point& p) const {
    double winding = 0.0;
    const Eigen::Index n = size();
    for (Eigen::Index j = 0; j < n; ++j) {
      const Point a = point(j) - p;
      const Point b = point((j + 1) % n) - p;
      winding += std::atan2(detail::cross2(a, b), a.dot(b));
    }
    return std::abs(winding) > kPi;
  }

  // Distance from p to the sampled polygon.
  double distance_to(const Point& p) const {
    double best = std::numeric_limits<double>::infinity();
    const Eigen::Index n = size();
    for (Eigen::Index j = 0; j < n; ++j) {
      const Point a = point(j), b = point((j + 1) % n);
      const Point ab = b - a;
      const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (a + t * ab - p).norm());
    }
    return best;
  }

 private:
  void check_simple() const {
    const Eigen::Index n = size();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Point p1 = point(i), p2 = point((i + 1) % n);
      for (Eigen::Index j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;  // adjacent through the seam
        if (detail::segments_intersect(p1, p2, point(j), point((j + 1) % n)))
          throw ValidationError("curve: self-intersection between segments " + std::to_string(i) + " and " +
                                std::to_string(j));
      }
    }
  }

  Vec x_, y_, dx_, dy_, speed_, nx_, ny_, kappa_, weights_;
  double area_ = 0.0;
};

// ---------------------------------------------------------------------------
// Named shapes

inline Curve make_circle(Eigen::Index n, double radius, Point center = Point::Zero()) {
  Vec x(n), y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double t = grid_theta(j, n);
    x[j] = center.x() + radius * std::cos(t);
    y[j] = center.y() + radius * std::sin(t);
  }
  return Curve(std::move(x), std::move(y));
}

inline Curve make_ellipse(Eigen::Index n, double a, double b, Point center = Point::Zero()) {
  Vec x(n), y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double t = grid_theta(j, n);
    x[j] = center.x() + a * std::cos(t);
    y[j] = center.y() + b * std::sin(t);
  }
  return Curve(std::move(x), std::move(y));
}

/// Star-shaped curve r(theta) = r0 + sum_m cos_coef[m-1] cos(m theta) + sin_coef[m-1] sin(m theta).
inline Curve make_fourier(Eigen::Index n, double r0, const std::vector<double>& cos_coef,
                          const std::vector<double>& sin_coef = {}, Point center = Point::Zero()) {
  Vec x(n), y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double t = grid_theta(j, n);
    double r = r0;
    for (std::size_t m = 0; m < cos_coef.size(); ++m) r += cos_coef[m] * std::cos(static_cast<double>(m + 1) * t);
    for (std::size_t m = 0; m < sin_coef.size(); ++m) r += sin_coef[m] * std::sin(static_cast<double>(m + 1) * t);
    if (!(r > 0.0)) throw ValidationError("fourier curve: radius must stay positive");
    x[j] = center.x() + r * std::cos(t);
    y[j] = center.y() + r * std::sin(t);
  }
  return Curve(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Normal fields h = alpha * nu

/// Samples of alpha on a curve's grid, plus optional samples of d(alpha)/d(nu)
/// (the ambient extension is not determined by boundary data; zero by default).
struct NormalField {
  Vec values;
  Vec normal_derivative;

  NormalField() = default;
  explicit NormalField(Vec v) : values(std::move(v)), normal_derivative(Vec::Zero(values.size())) {}
  NormalField(Vec v, Vec dnu) : values(std::move(v)), normal_derivative(std::move(dnu)) {
    if (normal_derivative.size() != values.size())
      throw ValidationError("normal field: normal-derivative sample count differs");
  }

  Eigen::Index size() const { return values.size(); }

  static NormalField from_function(const Curve& c, const std::function<double(double)>& f) {
    Vec v(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) v[j] = f(c.theta(j));
    return NormalField(std::move(v));
  }

  static NormalField constant(const Curve& c, double value) {
    return NormalField(Vec::Constant(c.size(), value));
  }

  NormalField operator-() const { return NormalField(-values, -normal_derivative); }
};

/// Fourier mode spec as used in run configs: "1" (constant), "cos<n>" or "sin<n>", in theta.
inline NormalField mode_field(const Curve& c, const std::string& spec) {
  if (spec == "1") return NormalField::constant(c, 1.0);
  const bool is_cos = spec.rfind("cos", 0) == 0;
  const bool is_sin = spec.rfind("sin", 0) == 0;
  if ((!is_cos && !is_sin) || spec.size() == 3) throw ValidationError("unknown direction mode '" + spec + "'");
  const std::string digits = spec.substr(3);
  for (char ch : digits)
    if (ch < '0' || ch > '9') throw ValidationError("unknown direction mode '" + spec + "'");
  const int n = std::stoi(digits);
  if (n < 1 || n >= c.size() / 2) throw ValidationError("direction mode '" + spec + "' out of range for this grid");
  return NormalField::from_function(c, [=](double t) { return is_cos ? std::cos(n * t) : std::sin(n * t); });
}

inline void require_same_grid(const Curve& c, const NormalField& f, const char* what) {
  if (f.size() != c.size()) throw ValidationError(std::string(what) + ": grid mismatch");
  if (!f.values.allFinite() || !f.normal_derivative.allFinite())
    throw ValidationError(std::string(what) + ": non-finite field values");
}

inline void require_same_grid(const Curve& c, const Vec& f, const char* what) {
  if (f.size() != c.size()) throw ValidationError(std::string(what) + ": grid mismatch");
  if (!f.allFinite()) throw ValidationError(std::string(what) + ": non-finite values");
}

// ---------------------------------------------------------------------------
// Operations

inline Vec curvature(const Curve& c) { return c.curvature(); }

inline double area(const Curve& c) { return c.area(); }

/// Pointwise metric weight 1 + A K^2.
inline Vec metric_weight(const Curve& c, const MetricParams& p) {
  return (1.0 + p.A * c.curvature().array().square()).matrix();
}

/// G^A(alpha, beta) = sum_j (1 + A K_j^2) alpha_j beta_j w_j. A = 0 gives G^0.
inline double metric_inner(const Curve& c, const MetricParams& p, const NormalField& a, const NormalField& b) {
  require_same_grid(c, a, "metric_inner");
  require_same_grid(c, b, "metric_inner");
  return (metric_weight(c, p).array() * a.values.array() * b.values.array() * c.weights().array()).sum();
}

/// Normal perturbation c + t * alpha * nu, with caches recomputed.
inline Curve flow_curve(const Curve& c, const NormalField& a, double t) {
  require_same_grid(c, a, "flow_curve");
  if (t == 0.0) return c;
  Vec x = c.x().array() + t * a.values.array() * c.normal_x().array();
  Vec y = c.y().array() + t * a.values.array() * c.normal_y().array();
  try {
    return Curve(std::move(x), std::move(y));
  } catch (const ValidationError& e) {
    throw NumericalError(std::string("flow_curve: perturbed curve is invalid (") + e.what() + ")");
  }
}

/// Re-samples the trigonometric interpolant of the curve at equal arclength spacing.
/// The node theta = 0 is kept fixed. Throws NumericalError when the curve is too
/// distorted for the interpolant to deliver a uniform-speed parametrization.
inline Curve resample_by_arclength(const Curve& c) {
  const Eigen::Index n = c.size();
  const TrigInterpolant speed(c.speed());
  const TrigInterpolant xi(c.x()), yi(c.y());
  const double mean_speed = speed.mean();
  const double length = kTwoPi * mean_speed;
  const double p0 = speed.periodic_antiderivative(0.0);
  auto arclength = [&](double t) { return mean_speed * t + speed.periodic_antiderivative(t) - p0; };

  if (c.speed().maxCoeff() > 1e3 * c.speed().minCoeff())
    throw NumericalError("resample_by_arclength: node distribution too distorted (speed ratio > 1e3)");

  Vec x(n), y(n);
  double lo_prev = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double target = length * static_cast<double>(j) / static_cast<double>(n);
    // s(theta) is increasing; bracketed Newton iteration.
    double lo = lo_prev, hi = kTwoPi;
    double t = std::clamp(target / mean_speed, lo, hi);
    bool converged = (j == 0);
    if (j == 0) t = 0.0;
    for (int it = 0; it < 100 && !converged; ++it) {
      const double f = arclength(t) - target;
      if (std::abs(f) <= 1e-14 * length) {
        converged = true;
        break;
      }
      if (f > 0) hi = t; else lo = t;
      const double ds = speed(t);
      double next = (ds > 0.0) ? t - f / ds : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      t = next;
    }
    if (!converged) throw NumericalError("resample_by_arclength: arclength inversion did not converge");
    lo_prev = t;
    x[j] = xi(t);
    y[j] = yi(t);
  }

  Curve out = [&] {
    try {
      return Curve(std::move(x), std::move(y));
    } catch (const ValidationError& e) {
      throw NumericalError(std::string("resample_by_arclength: interpolation failed (") + e.what() + ")");
    }
  }();
  const double spread = (out.speed().maxCoeff() - out.speed().minCoeff()) / out.speed().mean();
  const double area_change = std::abs(out.area() - c.area()) / c.area();
  if (spread > 1e-6 || area_change > 1e-8) {
    std::ostringstream msg;
    msg << "resample_by_arclength: interpolation failure (speed spread " << spread << ", area change "
        << area_change << ")";
    throw NumericalError(msg.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV: theta,x,y,nx,ny,kappa,w plus optional extra nodal columns.

struct NodalColumn {
  std::string name;
  Vec values;
};

inline void write_curve_csv(std::ostream& os, const Curve& c, const std::vector<NodalColumn>& extra = {}) {
  os << "theta,x,y,nx,ny,kappa,w";
  for (const auto& col : extra) {
    if (col.values.size() != c.size()) throw ValidationError("write_curve_csv: column '" + col.name + "' size");
    os << ',' << col.name;
  }
  os << '\n';
  os << std::setprecision(17);
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    os << c.theta(j) << ',' << c.x()[j] << ',' << c.y()[j] << ',' << c.normal_x()[j] << ','
       << c.normal_y()[j] << ',' << c.curvature()[j] << ',' << c.weights()[j];
    for (const auto& col : extra) os << ',' << col.values[j];
    os << '\n';
  }
}

inline void write_curve_csv(const std::string& path, const Curve& c, const std::vector<NodalColumn>& extra = {}) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_curve_csv(os, c, extra);
}

}  // namespace quadshape
