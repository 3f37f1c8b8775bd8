#pragma once

// Sources made of uniform-density disks and their closed-form Newtonian
// potentials u_p with -Laplace(u_p) = f on the whole plane.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "quadshape/errors.hpp"
#include "quadshape/geometry.hpp"
#include "quadshape/quadrature.hpp"

namespace quadshape {

/// Disk of radius rho carrying total mass m spread uniformly (density m / (pi rho^2)).
struct Disk {
  Point center = Point::Zero();
  double radius = 0.1;
  double mass = 1.0;

  double density() const { return mass / (kPi * radius * radius); }
};

/// Finite sum of uniform disks, pairwise disjoint.
class SourceTerm {
 public:
  SourceTerm() = default;
  explicit SourceTerm(std::vector<Disk> disks) : disks_(std::move(disks)) { validate(); }

  const std::vector<Disk>& disks() const { return disks_; }
  double total_mass() const {
    double m = 0.0;
    for (const auto& d : disks_) m += d.mass;
    return m;
  }

  SourceTerm translated(const Point& shift) const {
    auto moved = disks_;
    for (auto& d : moved) d.center += shift;
    return SourceTerm(std::move(moved));
  }

  void validate() const {
    for (std::size_t i = 0; i < disks_.size(); ++i) {
      const auto& d = disks_[i];
      if (!d.center.allFinite() || !std::isfinite(d.mass))
        throw ValidationError("source disk " + std::to_string(i) + ": non-finite parameters");
      if (!(d.radius > 0.0) || !std::isfinite(d.radius))
        throw ValidationError("source disk " + std::to_string(i) + ": rho must be positive");
      for (std::size_t j = 0; j < i; ++j) {
        const auto& e = disks_[j];
        if ((d.center - e.center).norm() <= d.radius + e.radius)
          throw ValidationError("source disks " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
      }
    }
  }

  /// supp f inside the curve: each disk strictly inside with boundary clearance >= rho.
  void validate_inside(const Curve& c) const {
    for (std::size_t i = 0; i < disks_.size(); ++i) {
      const auto& d = disks_[i];
      if (!c.contains(d.center) || c.distance_to(d.center) < 2.0 * d.radius)
        throw ValidationError("source disk " + std::to_string(i) +
                              " is not inside the curve with clearance >= rho");
    }
  }

  bool fits_inside(const Curve& c) const {
    try {
      validate_inside(c);
      return true;
    } catch (const ValidationError&) {
      return false;
    }
  }

 private:
  std::vector<Disk> disks_;
};

/// u_p(x): -(m/2pi) ln r outside each disk, matched quadratic core inside (C^1 at r = rho).
inline double eval_potential(const SourceTerm& s, const Point& x) {
  double u = 0.0;
  for (const auto& d : s.disks()) {
    const double r = (x - d.center).norm();
    const double c = d.mass / kTwoPi;
    if (r >= d.radius)
      u += -c * std::log(r);
    else
      u += -c * std::log(d.radius) - d.mass / (4.0 * kPi * d.radius * d.radius) * (r * r - d.radius * d.radius);
  }
  return u;
}

inline Point eval_grad_potential(const SourceTerm& s, const Point& x) {
  Point g = Point::Zero();
  for (const auto& d : s.disks()) {
    const Point rel = x - d.center;
    const double r2 = rel.squaredNorm();
    if (r2 >= d.radius * d.radius)
      g += -(d.mass / kTwoPi) * rel / r2;
    else
      g += -(d.mass / (kTwoPi * d.radius * d.radius)) * rel;
  }
  return g;
}

/// Source density f(x).
inline double eval_density(const SourceTerm& s, const Point& x) {
  double f = 0.0;
  for (const auto& d : s.disks())
    if ((x - d.center).norm() < d.radius) f += d.density();
  return f;
}

/// Polar tensor rule per disk; weights already include the disk density, so
/// sum_i weights[i] * u(nodes[i]) approximates int f u dx.
struct SourceQuadrature {
  std::vector<Point> nodes;
  std::vector<double> weights;
};

inline SourceQuadrature source_quadrature(const SourceTerm& s, int radial = 32, int angular = 64) {
  if (radial < 1 || angular < 1) throw ValidationError("source quadrature: orders must be positive");
  const auto [gx, gw] = gauss_legendre(radial);
  SourceQuadrature q;
  for (const auto& d : s.disks()) {
    const double dens = d.density();
    for (int i = 0; i < radial; ++i) {
      const double r = 0.5 * d.radius * (gx[static_cast<std::size_t>(i)] + 1.0);
      const double wr = 0.5 * d.radius * gw[static_cast<std::size_t>(i)] * r;
      for (int a = 0; a < angular; ++a) {
        const double phi = kTwoPi * a / angular;
        q.nodes.push_back(d.center + r * Point(std::cos(phi), std::sin(phi)));
        q.weights.push_back(dens * wr * kTwoPi / angular);
      }
    }
  }
  return q;
}

/// int f u dx from u sampled at the rule's nodes.
inline double source_energy_integral(const SourceQuadrature& q, const std::vector<double>& u_values) {
  if (u_values.size() != q.nodes.size()) throw ValidationError("source_energy_integral: value count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) acc += q.weights[i] * u_values[i];
  return acc;
}

/// Convenience form: samples u itself; nodes must lie inside the curve.
inline double source_energy_integral(const SourceTerm& s, const Curve& domain,
                                     const std::function<double(const Point&)>& u, int radial = 32,
                                     int angular = 64) {
  const auto q = source_quadrature(s, radial, angular);
  std::vector<double> values(q.nodes.size());
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    if (!domain.contains(q.nodes[i])) throw ValidationError("source_energy_integral: quadrature node outside domain");
    values[i] = u(q.nodes[i]);
  }
  return source_energy_integral(q, values);
}

}  // namespace quadshape
