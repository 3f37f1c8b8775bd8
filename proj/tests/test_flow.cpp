#include <gtest/gtest.h>

#include <sstream>

#include "quadshape/flow.hpp"

using namespace quadshape;

namespace {

SourceTerm centred() { return SourceTerm({Disk{Point(0, 0), 0.1, kTwoPi}}); }

FlowConfig plain(double A) {
  FlowConfig cfg;
  cfg.metric = {A, 1.0};
  return cfg;
}

}  // namespace

TEST(CircleFit, RecoversCircle) {
  const CircleFit fit = fit_circle(make_circle(64, 1.5, Point(0.3, -0.2)));
  EXPECT_NEAR(fit.radius, 1.5, 1e-12);
  EXPECT_LT((fit.center - Point(0.3, -0.2)).norm(), 1e-12);
  EXPECT_LT(fit.max_deviation, 1e-12);
  EXPECT_GT(fit_circle(make_ellipse(64, 1.2, 0.8)).max_deviation, 0.1);
}

TEST(Flow, CriticalCircleIsStationary) {
  const FlowTrace t = descend(make_circle(128, 1.0), centred(), plain(1.0));
  EXPECT_EQ(t.status, FlowStatus::Converged);
  EXPECT_EQ(t.accepted_steps, 0);
  EXPECT_LE(t.final_psi.cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Flow, EllipseConvergesToCriticalDiskWithoutRegularization) {
  FlowConfig cfg = plain(0.0);
  const FlowTrace t = descend(make_ellipse(128, 1.2, 0.8), centred(), cfg, 50);
  const ConvergenceSummary s = convergence_report(t);
  EXPECT_EQ(s.status, FlowStatus::Converged);
  EXPECT_GE(s.grad_reduction, 1e4);
  EXPECT_LE(s.max_abs_psi, 1e-3);
  EXPECT_TRUE(s.near_circular);
  EXPECT_NEAR(s.circle.radius, 1.0, 1e-3);
  EXPECT_LT(s.mean_decrease_ratio, 1.0);
  EXPECT_EQ(t.snapshots.size(), t.snapshot_iterations.size());
  EXPECT_EQ(t.snapshot_iterations.front(), 0);

  double prev = t.records.front().J;
  for (const auto& r : t.records) {
    EXPECT_LE(r.J, prev + 1e-12);
    prev = r.J;
  }
  EXPECT_NEAR(t.final_J, -kPi * std::log(10.0) + kPi / 4.0, 1e-4);
}

TEST(Flow, ResamplingLeavesFunctionalUnchanged) {
  const Curve c = flow_curve(make_ellipse(128, 1.2, 0.8), mode_field(make_ellipse(128, 1.2, 0.8), "cos3"), 0.03);
  const Curve r = resample_by_arclength(c);
  const double jc = solve_state(c, centred(), 1.0).J();
  const double jr = solve_state(r, centred(), 1.0).J();
  EXPECT_LE(std::abs(jc - jr), 1e-8 * std::abs(jc));
}

TEST(Flow, InvalidConfiguration) {
  FlowConfig cfg = plain(1.0);
  cfg.tau0 = 0.0;
  EXPECT_THROW(descend(make_circle(64, 1.0), centred(), cfg), ValidationError);
  cfg = plain(-1.0);
  EXPECT_THROW(descend(make_circle(64, 1.0), centred(), cfg), ValidationError);
  cfg = plain(1.0);
  cfg.grad_tol = cfg.grad_rtol = 0.0;
  EXPECT_THROW(descend(make_circle(64, 1.0), centred(), cfg), ValidationError);
  EXPECT_THROW(descend(make_circle(64, 1.0), SourceTerm({Disk{Point(0.9, 0), 0.1, 1.0}}), plain(1.0)),
               ValidationError);
}

TEST(Flow, SourceExitIsReported) {
  // a light source barely inside: the area term shrinks the disk onto it
  FlowConfig cfg = plain(0.0);
  cfg.tau0 = 0.1;
  cfg.max_backtracks = 1;
  const SourceTerm s({Disk{Point(0.7, 0), 0.1, 0.01}});
  EXPECT_THROW(descend(make_circle(64, 1.0), s, cfg), NumericalError);
}

TEST(Flow, TraceCsvHeader) {
  FlowConfig cfg = plain(0.0);
  cfg.max_iterations = 2;
  const FlowTrace t = descend(make_ellipse(64, 1.2, 0.8), centred(), cfg, 1);
  EXPECT_EQ(t.status, FlowStatus::MaxIterations);
  EXPECT_EQ(t.records.size(), 3u);
  std::ostringstream os;
  write_trace_csv(os, t);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "iter,J,gradnorm,step,minK,maxK,circdev");
  EXPECT_NE(flow_svg(t).find("<polygon"), std::string::npos);
}
