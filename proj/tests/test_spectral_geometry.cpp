#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "quadshape/geometry.hpp"
#include "quadshape/quadrature.hpp"
#include "quadshape/spectral.hpp"

using namespace quadshape;

namespace {

Vec sample(Eigen::Index n, const std::function<double(double)>& f) {
  Vec v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = f(grid_theta(j, n));
  return v;
}

// c(theta) = e^{i theta} + a e^{2 i theta} / 2; speed |1 + a e^{i theta}| pinches as a -> 1.
Curve pinched(Eigen::Index n, double a) {
  Vec x(n), y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::complex<double> z = std::polar(1.0, grid_theta(j, n));
    const std::complex<double> c = z + 0.5 * a * z * z;
    x[j] = c.real();
    y[j] = c.imag();
  }
  return Curve(x, y);
}

}  // namespace

TEST(Spectral, FirstDerivativeOfCosine) {
  const Vec d = spectral_derivative(sample(16, [](double t) { return std::cos(t); }), 1);
  EXPECT_LT((d - sample(16, [](double t) { return -std::sin(t); })).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Spectral, ConstantHasZeroDerivative) {
  EXPECT_LT(spectral_derivative(Vec::Ones(32), 1).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Spectral, SecondDerivativeEigenfunction) {
  const Vec d = spectral_derivative(sample(32, [](double t) { return std::cos(3 * t); }), 2);
  EXPECT_LT((d + 9.0 * sample(32, [](double t) { return std::cos(3 * t); })).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spectral, RejectsOddCountAndNonFinite) {
  EXPECT_THROW(spectral_derivative(Vec::Ones(15), 1), ValidationError);
  Vec v = Vec::Ones(16);
  v[3] = std::nan("");
  EXPECT_THROW(spectral_derivative(v, 1), ValidationError);
}

TEST(Spectral, InterpolantBetweenNodes) {
  const auto f = [](double t) { return 0.3 + std::sin(2 * t) - 0.5 * std::cos(5 * t); };
  const TrigInterpolant ti(sample(32, f));
  for (double t : {0.1, 1.234, 4.0, 6.2}) {
    EXPECT_NEAR(ti(t), f(t), 1e-13);
    EXPECT_NEAR(ti.derivative(t), 2 * std::cos(2 * t) + 2.5 * std::sin(5 * t), 1e-12);
  }
  EXPECT_NEAR(ti.mean(), 0.3, 1e-15);
}

TEST(Quadrature, GaussLegendreIntegratesPolynomials) {
  const auto [x, w] = gauss_legendre(8);
  double s0 = 0, s14 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s0 += w[i];
    s14 += w[i] * std::pow(x[i], 14);
  }
  EXPECT_NEAR(s0, 2.0, 1e-14);
  EXPECT_NEAR(s14, 2.0 / 15.0, 1e-14);
}

TEST(Curve, CircleCurvatureAndNormals) {
  const Curve c = make_circle(64, 2.0);
  EXPECT_LT((c.curvature().array() - 0.5).abs().maxCoeff(), 1e-12);
  for (Eigen::Index j = 0; j < c.size(); ++j) EXPECT_NEAR(c.normal(j).dot(c.point(j).normalized()), 1.0, 1e-10);
}

TEST(Curve, EllipseCurvatureAtVertex) {
  const Curve c = make_ellipse(128, 2.0, 1.0);
  EXPECT_NEAR(c.curvature()[0], 2.0, 1e-10);
  EXPECT_NEAR(c.area(), 2.0 * kPi, 1e-12);
}

TEST(Curve, GaussBonnet) {
  for (const Curve& c : {make_circle(128, 1.0), make_ellipse(128, 2.0, 1.0), make_fourier(128, 1.0, {0, 0, 0.3}),
                         make_fourier(256, 1.0, {0.45, 0.3})})
    EXPECT_NEAR(c.integrate(c.curvature()), kTwoPi, 1e-8);
}

TEST(Curve, AreaOfUnitCircle) { EXPECT_NEAR(make_circle(64, 1.0).area(), kPi, 1e-13); }

TEST(Curve, FourierAreaMatchesDenseQuadratureAndConvergesSpectrally) {
  const int m = 1000000;
  double ref = 0.0;
  for (int j = 0; j < m; ++j) {
    const double r = 1.0 + 0.3 * std::cos(3.0 * kTwoPi * j / m);
    ref += 0.5 * r * r;
  }
  ref *= kTwoPi / m;
  EXPECT_NEAR(make_fourier(256, 1.0, {0, 0, 0.3}).area(), ref, 1e-12);
  // a band-limited radius makes the area exact once N resolves r^2
  const double e8 = std::abs(make_fourier(8, 1.0, {0, 0, 0.3}).area() - ref);
  const double e32 = std::abs(make_fourier(32, 1.0, {0, 0, 0.3}).area() - ref);
  EXPECT_GT(e8, 1e-6);
  EXPECT_LT(e32, 1e-12);
}

TEST(Curve, RejectsInvalidInput) {
  EXPECT_THROW(make_circle(12, 1.0), ValidationError);  // not a power of two
  EXPECT_THROW(make_circle(4, 1.0), ValidationError);
  const Curve c = make_circle(32, 1.0);
  EXPECT_THROW(Curve(c.x().reverse(), c.y().reverse()), ValidationError);  // clockwise
  EXPECT_THROW(Curve(Vec::Zero(32), Vec::Zero(32)), ValidationError);  // zero speed
  // figure eight (x, y) = (sin 2t, sin t) has zero signed area; a lopsided one is rejected as self-intersecting
  Vec x(64), y(64);
  for (Eigen::Index j = 0; j < 64; ++j) {
    const double t = grid_theta(j, 64);
    x[j] = std::sin(2 * t) + 0.3 * std::cos(t);
    y[j] = std::sin(t) + 0.2;
  }
  EXPECT_THROW(Curve(x, y), ValidationError);
}

TEST(Metric, InnerProductExamples) {
  const Curve c = make_circle(64, 1.0);
  const NormalField one = NormalField::constant(c, 1.0);
  EXPECT_NEAR(metric_inner(c, {0.5, 1.0}, one, one), 3.0 * kPi, 1e-12);
  EXPECT_NEAR(metric_inner(c, {0.0, 1.0}, one, one), kTwoPi, 1e-12);
  const NormalField cs = mode_field(c, "cos1"), sn = mode_field(c, "sin1");
  for (double a : {0.0, 1.0, 10.0}) EXPECT_NEAR(metric_inner(c, {a, 1.0}, cs, sn), 0.0, 1e-13);
}

TEST(Metric, SymmetricPositiveAndDominatesL2) {
  const Curve c = make_fourier(64, 1.0, {0.2, 0.1}, {0.0, 0.05});
  const NormalField a = NormalField::from_function(c, [](double t) { return std::sin(t) + 0.3; });
  const NormalField b = NormalField::from_function(c, [](double t) { return std::cos(3 * t) - 0.1; });
  const MetricParams p{2.0, 1.0};
  EXPECT_NEAR(metric_inner(c, p, a, b), metric_inner(c, p, b, a), 1e-14);
  EXPECT_GT(metric_inner(c, p, a, a), 0.0);
  EXPECT_GE(metric_inner(c, p, a, a), metric_inner(c, {0.0, 1.0}, a, a));
}

TEST(Metric, ParamsValidation) {
  EXPECT_THROW((MetricParams{-1.0, 1.0}.validate()), ValidationError);
  try {
    MetricParams{1.0, -1.0}.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("k must be positive"), std::string::npos);
  }
  EXPECT_TRUE((MetricParams{0.0, 1.0}.degenerate()));
}

TEST(Fields, ModeSpecs) {
  const Curve c = make_circle(32, 1.0);
  EXPECT_NEAR(mode_field(c, "cos2").values[1], std::cos(2 * grid_theta(1, 32)), 1e-15);
  EXPECT_THROW(mode_field(c, "tan2"), ValidationError);
  EXPECT_THROW(mode_field(c, "cos"), ValidationError);
  EXPECT_THROW(mode_field(c, "sin16"), ValidationError);
  EXPECT_THROW(metric_inner(c, {}, NormalField(Vec::Ones(16)), NormalField(Vec::Ones(32))), ValidationError);
}

TEST(Flow, UniformOffsetOfCircle) {
  const Curve c = make_circle(64, 1.0);
  const Curve d = flow_curve(c, NormalField::constant(c, 1.0), 0.2);
  for (Eigen::Index j = 0; j < d.size(); ++j) EXPECT_NEAR(d.point(j).norm(), 1.2, 1e-12);
  const Curve same = flow_curve(c, NormalField::constant(c, 1.0), 0.0);
  EXPECT_EQ((same.x() - c.x()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Flow, FirstVariationOfArea) {
  const Curve c = make_circle(128, 1.0);
  const NormalField a = mode_field(c, "cos1");
  const double e1 = std::abs(flow_curve(c, a, 0.1).area() - kPi);
  const double e2 = std::abs(flow_curve(c, a, 0.05).area() - kPi);
  EXPECT_LT(e1, 0.05);
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);  // O(t^2)
}

TEST(Flow, ForwardThenBackRecoversCurveToSecondOrder) {
  const Curve c = make_ellipse(128, 1.3, 0.9);
  const NormalField a = NormalField::from_function(c, [](double t) { return 1.0 + 0.3 * std::cos(2 * t); });
  auto err = [&](double t) {
    const Curve f = flow_curve(c, a, t);
    const Curve b = flow_curve(f, NormalField(a.values), -t);
    return std::max((b.x() - c.x()).cwiseAbs().maxCoeff(), (b.y() - c.y()).cwiseAbs().maxCoeff());
  };
  EXPECT_NEAR(err(1e-2) / err(5e-3), 4.0, 0.3);
}

TEST(Flow, InvalidResultIsNumericalError) {
  const Curve c = make_circle(64, 1.0);
  EXPECT_THROW(flow_curve(c, NormalField::constant(c, 1.0), -1.0), NumericalError);  // collapses to a point
  const Curve e = make_ellipse(128, 2.0, 1.0);
  EXPECT_THROW(flow_curve(e, NormalField::constant(e, 1.0), -0.9), NumericalError);  // passes the evolute
}

TEST(Resample, UniformCircleUnchanged) {
  const Curve c = make_circle(64, 1.0);
  const Curve r = resample_by_arclength(c);
  EXPECT_LT((r.x() - c.x()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((r.y() - c.y()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Resample, EllipseBecomesUniformSpeed) {
  const Curve c = make_ellipse(256, 2.0, 1.0);
  const Curve r = resample_by_arclength(c);
  const double spread = (r.speed().maxCoeff() - r.speed().minCoeff()) / r.speed().mean();
  EXPECT_LT(spread, 1e-6);
  EXPECT_NEAR(r.area(), 2.0 * kPi, 2.0 * kPi * 1e-8);
}

TEST(Resample, PinchedCurveFails) {
  EXPECT_THROW(resample_by_arclength(pinched(128, 0.98)), NumericalError);
  EXPECT_THROW(resample_by_arclength(pinched(128, 0.9995)), NumericalError);
}

TEST(Csv, HeaderAndRows) {
  const Curve c = make_circle(8, 1.0);
  std::ostringstream os;
  write_curve_csv(os, c, {{"psi", Vec::Zero(8)}});
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "theta,x,y,nx,ny,kappa,w,psi");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 8);
  EXPECT_THROW(write_curve_csv(os, c, {{"bad", Vec::Zero(4)}}), ValidationError);
}
