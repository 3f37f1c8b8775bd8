#pragma once

// Gradient, connection and related checks for the metric G^A on normal fields.

#include <cmath>

#include "quadshape/errors.hpp"
#include "quadshape/geometry.hpp"

namespace quadshape {

/// Gamma = (3 A K^3 + K) / (1 + A K^2): the coefficient of alpha*beta in the covariant derivative.
struct ConnectionCoefficient {
  Vec values;
};

inline ConnectionCoefficient connection_coefficient(const Curve& c, const MetricParams& p) {
  const auto k = c.curvature().array();
  return {((3.0 * p.A * k.cube() + k) / (1.0 + p.A * k.square())).matrix()};
}

/// grad J = density / (1 + A K^2), so that G^A(grad J, h) = sum density * alpha * w.
inline NormalField riemannian_gradient(const Curve& c, const MetricParams& p, const Vec& euclidean_density) {
  require_same_grid(c, euclidean_density, "riemannian_gradient");
  return NormalField((euclidean_density.array() / metric_weight(c, p).array()).matrix());
}

/// nabla_h m = (d beta/d nu) alpha + Gamma alpha beta, for h = alpha nu, m = beta nu.
/// The result carries no normal-derivative data.
inline NormalField covariant_derivative(const Curve& c, const MetricParams& p, const NormalField& a,
                                        const NormalField& b) {
  require_same_grid(c, a, "covariant_derivative");
  require_same_grid(c, b, "covariant_derivative");
  const Vec gamma = connection_coefficient(c, p).values;
  return NormalField((b.normal_derivative.array() * a.values.array() +
                      gamma.array() * a.values.array() * b.values.array())
                         .matrix());
}

/// nabla_h m - nabla_m h, nodewise.
inline Vec torsion(const Curve& c, const MetricParams& p, const NormalField& a, const NormalField& b) {
  return covariant_derivative(c, p, a, b).values - covariant_derivative(c, p, b, a).values;
}

/// Lagrangian transport of a field to the curve flowed by t * alpha * nu:
/// beta_t = beta + t alpha (d beta/d nu) at each node.
inline NormalField transport(const NormalField& field, const NormalField& along, double t) {
  return NormalField((field.values.array() + t * along.values.array() * field.normal_derivative.array()).matrix(),
                     field.normal_derivative);
}

struct CompatibilityCheck {
  double fd_derivative = 0.0;    // d/dt G^A_{c_t}(beta_t, gamma_t) by central differences
  double connection_side = 0.0;  // G^A(nabla_h m, l) + G^A(m, nabla_h l)
  double residual = 0.0;         // |fd_derivative - connection_side|
  double t_step = 0.0;
};

/// Compares h G^A(m, l) with G^A(nabla_h m, l) + G^A(m, nabla_h l). The first is a
/// central difference over c_t = flow_curve(c, alpha, t) with transported fields.
inline CompatibilityCheck check_metric_compatibility(const Curve& c, const MetricParams& p, const NormalField& a,
                                                     const NormalField& b, const NormalField& g, double t_step) {
  require_same_grid(c, a, "check_metric_compatibility");
  require_same_grid(c, b, "check_metric_compatibility");
  require_same_grid(c, g, "check_metric_compatibility");
  if (!(t_step > 0.0)) throw ValidationError("check_metric_compatibility: t_step must be positive");

  auto metric_at = [&](double t) {
    const Curve ct = flow_curve(c, a, t);
    return metric_inner(ct, p, transport(b, a, t), transport(g, a, t));
  };
  CompatibilityCheck out;
  out.t_step = t_step;
  out.fd_derivative = (metric_at(t_step) - metric_at(-t_step)) / (2.0 * t_step);
  out.connection_side =
      metric_inner(c, p, covariant_derivative(c, p, a, b), g) + metric_inner(c, p, b, covariant_derivative(c, p, a, g));
  out.residual = std::abs(out.fd_derivative - out.connection_side);
  return out;
}

struct CurvatureNormalDerivative {
  Vec closed_form;  // K^2
  Vec fd;           // d/dt K(flow_curve(c, 1, t)) at t = 0
  double t_step = 0.0;
  // Least-squares ratio fd / closed_form (about -1 under the outward-normal flow).
  double fitted_ratio = 0.0;
};

inline CurvatureNormalDerivative curvature_normal_derivative(const Curve& c, double t_step = 1e-4) {
  if (!(t_step > 0.0)) throw ValidationError("curvature_normal_derivative: t_step must be positive");
  CurvatureNormalDerivative out;
  out.t_step = t_step;
  out.closed_form = c.curvature().array().square().matrix();
  const NormalField unit = NormalField::constant(c, 1.0);
  out.fd = (flow_curve(c, unit, t_step).curvature() - flow_curve(c, unit, -t_step).curvature()) / (2.0 * t_step);
  const double denom = out.closed_form.squaredNorm();
  out.fitted_ratio = denom > 0.0 ? out.fd.dot(out.closed_form) / denom : 0.0;
  return out;
}

}  // namespace quadshape
