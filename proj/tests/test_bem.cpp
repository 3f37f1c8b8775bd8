#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "quadshape/bem.hpp"

using namespace quadshape;

namespace {

Vec trace(const Curve& c, const std::function<double(const Point&)>& f) {
  Vec v(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) v[j] = f(c.point(j));
  return v;
}

Vec mode(const Curve& c, int n) {
  Vec v(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) v[j] = std::cos(n * c.theta(j));
  return v;
}

}  // namespace

TEST(SingleLayer, CircleRadiusTwoConstantDensity) {
  const Curve c = make_circle(128, 2.0);
  const Mat s = assemble_single_layer(c);
  const Vec v = s * Vec::Ones(c.size());
  EXPECT_LT((v.array() + 2.0 * std::log(2.0)).abs().maxCoeff(), 1e-12);
  EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SingleLayer, SelfConvergence) {
  const Curve c1 = make_ellipse(64, 3.0, 2.0), c2 = make_ellipse(128, 3.0, 2.0);
  const auto data = [](const Curve& c) {
    Vec v(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) v[j] = std::exp(std::cos(c.theta(j)));
    return v;
  };
  const Vec a = assemble_single_layer(c1) * data(c1);
  const Vec b = assemble_single_layer(c2) * data(c2);
  double err = 0.0;
  for (Eigen::Index j = 0; j < c1.size(); ++j) err = std::max(err, std::abs(a[j] - b[2 * j]));
  EXPECT_LT(err, 1e-10);
}

TEST(SingleLayer, CapacityGuard) {
  EXPECT_NEAR(estimate_capacity(make_circle(64, 1.0)), 1.0, 1e-10);
  EXPECT_NEAR(estimate_capacity(make_ellipse(128, 2.0, 1.0)), 1.5, 1e-10);
  EXPECT_THROW(assemble_single_layer(make_circle(64, 1.0)), ValidationError);
  const LaplaceSolver unit(make_circle(64, 1.0));
  EXPECT_EQ(unit.scale(), kCapacityRescale);
  const LaplaceSolver big(make_circle(64, 3.0));
  EXPECT_EQ(big.scale(), 1.0);
}

TEST(Dirichlet, InteriorReproducesHarmonicFunctions) {
  const Curve c = make_circle(128, 1.0);
  const LaplaceSolver solver(c);
  const auto x1 = [](const Point& p) { return p.x(); };
  EXPECT_NEAR(solver.eval_interior(solver.solve_dirichlet(trace(c, x1)), Point(0.3, 0.4)), 0.3, 1e-8);
  const LayerDensity one = solver.solve_dirichlet(Vec::Ones(c.size()));
  for (const Point& p : {Point(0, 0), Point(0.5, -0.2), Point(-0.1, 0.7)}) EXPECT_NEAR(solver.eval_interior(one, p), 1.0, 1e-8);

  const Curve e = make_fourier(256, 1.0, {0.1, 0.15}, {0.05});
  const LaplaceSolver es(e);
  const auto cubic = [](const Point& p) { return std::pow(std::complex<double>(p.x(), p.y()), 3).real(); };
  const auto xy = [](const Point& p) { return 2.0 * p.x() * p.y(); };
  for (const Point& p : {Point(0.1, 0.2), Point(-0.4, 0.1), Point(0.3, -0.5)}) {
    EXPECT_NEAR(es.eval_interior(es.solve_dirichlet(trace(e, cubic)), p), cubic(p), 1e-8);
    EXPECT_NEAR(es.eval_interior(es.solve_dirichlet(trace(e, xy)), p), xy(p), 1e-8);
  }
  const LayerDensity zero = es.solve_dirichlet(Vec::Zero(e.size()));
  EXPECT_EQ(es.eval_interior(zero, Point(0.1, 0.1)), 0.0);
}

TEST(Dirichlet, InteriorGradient) {
  const Curve c = make_ellipse(128, 1.4, 0.9);
  const LaplaceSolver solver(c);
  const auto f = [](const Point& p) { return p.x() * p.x() - p.y() * p.y() + 0.5 * p.y(); };
  const LayerDensity sigma = solver.solve_dirichlet(trace(c, f));
  const Point p(0.2, -0.3);
  EXPECT_LT((solver.eval_interior_gradient(sigma, p) - Point(2 * p.x(), -2 * p.y() + 0.5)).norm(), 1e-8);
}

TEST(Dirichlet, NearBoundaryEvaluationRejected) {
  const Curve c = make_circle(64, 1.0);
  const LaplaceSolver solver(c);
  const LayerDensity sigma = solver.solve_dirichlet(Vec::Ones(64));
  EXPECT_THROW(solver.eval_interior(sigma, Point(0.99, 0.0)), ValidationError);
  EXPECT_THROW(solver.eval_interior(sigma, Point(1.5, 0.0)), ValidationError);
  EXPECT_THROW(solver.solve_dirichlet(Vec::Ones(32)), ValidationError);
}

TEST(DtN, CircleSpectrum) {
  const Curve c = make_circle(256, 1.0);
  const LaplaceSolver solver(c);
  for (int n = 1; n <= 8; ++n) EXPECT_LT((solver.dtn_apply(mode(c, n)) - n * mode(c, n)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(solver.dtn_apply(Vec::Ones(c.size())).cwiseAbs().maxCoeff(), 1e-8);

  const Curve r2 = make_circle(128, 2.0);
  EXPECT_LT((dtn_apply(r2, mode(r2, 1)) - 0.5 * mode(r2, 1)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(DtN, MatrixMatchesApply) {
  const Curve c = make_ellipse(64, 1.5, 1.0);
  const LaplaceSolver solver(c);
  const Vec a = mode(c, 3) + 0.2 * Vec::Ones(64);
  EXPECT_LT((solver.dtn_matrix() * a - solver.dtn_apply(a)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DtN, DirichletEnergyOnCircle) {
  const Curve c = make_circle(128, 1.0);
  EXPECT_NEAR(dirichlet_energy(c, mode(c, 2)), kTwoPi, 1e-8);
  EXPECT_NEAR(dirichlet_energy(c, Vec::Constant(c.size(), 3.0)), 0.0, 1e-8);
  EXPECT_NEAR(dirichlet_energy(c, mode(c, 1) + mode(c, 2)), 3.0 * kPi, 1e-8);
  for (int n = 1; n <= 5; ++n) EXPECT_NEAR(dirichlet_energy(c, mode(c, n)), n * kPi, 1e-8);
}

TEST(DtN, PositiveAndSymmetricOnRandomStarShapes) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int shape = 0; shape < 4; ++shape) {
    const Curve c = make_fourier(128, 1.0 + 0.5 * shape, {0.1 * u(rng), 0.1 * u(rng), 0.05 * u(rng)},
                                 {0.1 * u(rng), 0.05 * u(rng)});
    const LaplaceSolver solver(c);
    const Mat dtn = solver.dtn_matrix();
    for (int trial = 0; trial < 25; ++trial) {
      Vec a = Vec::Zero(c.size()), b = Vec::Zero(c.size());
      for (int m = 0; m < 6; ++m) {
        const double ca = u(rng), sa = u(rng), cb = u(rng), sb = u(rng);
        for (Eigen::Index j = 0; j < c.size(); ++j) {
          a[j] += (ca * std::cos(m * c.theta(j)) + sa * std::sin(m * c.theta(j))) / (1.0 + m * m);
          b[j] += (cb * std::cos(m * c.theta(j)) + sb * std::sin(m * c.theta(j))) / (1.0 + m * m);
        }
      }
      EXPECT_GE(c.integrate(a.cwiseProduct(dtn * a)), -1e-10);
      EXPECT_NEAR(c.integrate(a.cwiseProduct(dtn * b)), c.integrate(b.cwiseProduct(dtn * a)), 1e-8);
    }
  }
}

TEST(Operators, CsvDump) {
  const std::string path = ::testing::TempDir() + "/quadshape_s.csv";
  write_matrix_csv(path, Mat::Identity(3, 3));
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "1,0,0");
}
