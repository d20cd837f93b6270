#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cornerimpact/bifurcation_scan.hpp"
#include "cornerimpact/corner_map.hpp"
#include "cornerimpact/scenario.hpp"
#include "reference.hpp"

using namespace cornerimpact;

namespace {
constexpr double kPi = std::numbers::pi;

// 40-digit mpmath values: corner orbit of the reference scenario and the
// one-sided Jacobians of its full map (numerical differentiation of the map
// built from matrix exponentials and the segment formulas).
constexpr double kTStar = 0.08340061131504870760;
constexpr double kXStar[2] = {0.26509537777196641, -0.042018833737132054};
constexpr double kAMinus[4] = {0.8273659520267533647, 0.00784445940579807592, 8.023073848158819094,
                               0.8242281682644341344};
constexpr double kBMinus[2] = {-1.914841333287462942, -286.2078016841692014};
constexpr double kAPlus[4] = {0.2712189557852566123, -0.09961218215262845976, 5.367167224632931797,
                              0.3110638286463079962};
constexpr double kBPlus[2] = {14.76040145824780926, -206.5743808831160502};

Eigen::Matrix2d mat(const double (&a)[4]) {
  Eigen::Matrix2d m;
  m << a[0], a[1], a[2], a[3];
  return m;
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

Scenario reference() { return load_scenario(reftest::data_path("reference_scenario.yaml")); }

const CornerContext& reference_ctx() {
  static const CornerContext ctx = [] {
    const Scenario s = reference();
    return solve_fixed_point(s.model, 1, rpm_to_rad_s(719.0), rpm_to_rad_s(720.0));
  }();
  return ctx;
}

// Event-driven stroboscopic map in shifted coordinates, optionally with one
// side's cam formula continued across the corner.
Vec2 simulated_map(const CornerContext& ctx, const Vec2& x, double T, std::optional<Side> side = std::nullopt) {
  std::optional<BranchOverride> ov;
  if (side) ov = BranchOverride{ctx.boundary, *side, 0.05};
  const auto r = strobe_map(ctx.model, 2 * kPi / T, from_shifted(ctx.model.params, x), ov);
  EXPECT_EQ(r.impacts.size(), 1u);
  return to_shifted(ctx.model.params, r.end);
}

double simulated_impact_time(const CornerContext& ctx, const Vec2& x, double T) {
  const auto r = strobe_map(ctx.model, 2 * kPi / T, from_shifted(ctx.model.params, x));
  return r.impacts.at(0).t;
}
}  // namespace

TEST(SolveFixedPoint, ReferenceCornerOrbit) {
  const auto& ctx = reference_ctx();
  EXPECT_NEAR(ctx.T_star, kTStar, 1e-14);
  EXPECT_NEAR(ctx.x_star(0), kXStar[0], 1e-12);
  EXPECT_NEAR(ctx.x_star(1), kXStar[1], 1e-12);
  EXPECT_LE(ctx.fixed_point_residual, 1e-9);
  EXPECT_LE(ctx.gap_residual, 1e-12);
  EXPECT_TRUE(ctx.warnings.empty());
  EXPECT_NE(ctx.c0pp_left, ctx.c0pp_right);
  // simulated impact sits on the corner phase to omega * tol_event
  EXPECT_LE(std::abs(ctx.omega_star * ctx.simulated_impact_offset), ctx.omega_star * ctx.model.sim.tol_event);
}

TEST(SolveFixedPoint, InsideScanBracket) {
  const Scenario s = reference();
  const auto d = scan(s.scan, s.model);
  const auto xs = locate_corner_crossing(d, s.model);
  ASSERT_EQ(xs.size(), 1u);
  const double w = rad_s_to_rpm(reference_ctx().omega_star);
  EXPECT_GT(w, xs[0].bracket_lo_rpm);
  EXPECT_LT(w, xs[0].bracket_hi_rpm);
  const auto ctx = solve_fixed_point(s.model, 1, rpm_to_rad_s(xs[0].bracket_lo_rpm), rpm_to_rad_s(xs[0].bracket_hi_rpm));
  EXPECT_NEAR(ctx.T_star, kTStar, 1e-14);
}

TEST(SolveFixedPoint, Errors) {
  const Scenario s = reference();
  EXPECT_THROW(solve_fixed_point(s.model, 7, 70.0, 80.0), std::invalid_argument);
  EXPECT_THROW(solve_fixed_point(s.model, 1, -70.0, 80.0), std::invalid_argument);
  EXPECT_THROW(solve_fixed_point(s.model, 1, rpm_to_rad_s(5000.0), rpm_to_rad_s(5001.0)), std::runtime_error);
}

TEST(Zdm, OnConstraintAtCorner) {
  const auto& ctx = reference_ctx();
  const Vec2 x(ctx.y0(0), ctx.y0(1) - 0.7);
  const ZdmResult z = zdm(x, ctx.T_star, ctx);
  ASSERT_TRUE(z.impact);
  EXPECT_EQ(z.t_impact, 0.0);
  const double r = ctx.model.params.restitution;
  const Vec2 expect = (Eigen::Matrix2d::Identity() + ctx.R) * x - ctx.R * ctx.y0;
  EXPECT_NEAR(z.x_plus(0), x(0), 1e-15);
  EXPECT_NEAR(z.x_plus(1), (1 + r) * ctx.y0(1) - r * x(1), 1e-14);
  EXPECT_LE((z.x_plus - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Zdm, PlasticLimitMovesWithCam) {
  CornerContext ctx = reference_ctx();
  ctx.model.params.restitution = 0.0;
  ctx.R = restitution_matrix(0.0);
  const auto& p = ctx.model.params;
  for (double dq : {-2e-5, 3e-5}) {
    const Vec2 x = ctx.x_d + Vec2(dq, 0.0);
    const ZdmResult z = zdm(x, ctx.T_star, ctx);
    ASSERT_TRUE(z.impact);
    // forward to the impact instant: follower rides at the cam's velocity
    const Vec2 at = flow_operator(p, z.t_impact) * z.x_plus;
    const double w = 2 * kPi / ctx.T_star;
    const CamState c = eval_state(ctx.model.geometry, z.t_impact, w, ctx.corner_phase);
    EXPECT_NEAR(at(1), c.velocity, 1e-12);
    EXPECT_NEAR(at(0), c.position + p.shift(), 1e-14);
  }
}

TEST(Zdm, MatchesCompositionalOracle) {
  const auto& ctx = reference_ctx();
  const auto& p = ctx.model.params;
  const auto& g = ctx.model.geometry;
  const double T = ctx.T_star, w = 2 * kPi / T;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int before = 0, after = 0;
  for (int i = 0; i < 20; ++i) {
    const Vec2 xd = ctx.x_d + Vec2(2e-4 * u(rng), 2e-2 * u(rng));
    const ZdmResult z = zdm(xd, T, ctx);
    ASSERT_TRUE(z.impact);
    // independent impact time: bisection of the gap along free flight
    const FollowerState s0 = from_shifted(p, xd);
    auto gap = [&](double t) { return free_flight(p, s0, t).q - eval_state(g, t, w, ctx.corner_phase).position; };
    double lo = -0.01 * T, hi = 0.01 * T;
    if (gap(lo) < 0) std::swap(lo, hi);  // keep gap(lo) > 0
    ASSERT_GT(gap(lo), 0.0);
    ASSERT_LE(gap(hi), 0.0);
    for (int k = 0; k < 200; ++k) {
      const double m = 0.5 * (lo + hi);
      (gap(m) > 0 ? lo : hi) = m;
    }
    const double ti = 0.5 * (lo + hi);
    EXPECT_NEAR(z.t_impact, ti, 1e-14);
    (ti < 0 ? before : after)++;
    // flow to the impact, restitute against the cam there, flow back to t = 0
    const FollowerState pre = free_flight(p, s0, ti);
    const CamState c = eval_state(g, ti, w, ctx.corner_phase);
    const FollowerState post = apply_impact(p, {c.position, pre.qdot}, {c.position, c.velocity}, 1.0);
    const Vec2 oracle = to_shifted(p, free_flight(p, post, -ti));
    EXPECT_LE((z.x_plus - oracle).cwiseAbs().maxCoeff(), 1e-10 * oracle.cwiseAbs().maxCoeff());
  }
  EXPECT_GT(before, 0);
  EXPECT_GT(after, 0);
}

TEST(Zdm, NoImpactWhenMovingAway) {
  const auto& ctx = reference_ctx();
  // above the cam and rising faster than it
  const Vec2 xd(ctx.x_d(0) + 0.01, std::abs(ctx.x_d(1)) + 5.0);
  EXPECT_FALSE(zdm(xd, ctx.T_star, ctx).impact);
  const Vec2 xn = flow_operator(ctx.model.params, -0.5 * ctx.T_star) * xd;
  const Vec2 flown = flow_operator(ctx.model.params, ctx.T_star) * xn;
  EXPECT_LE((full_map(xn, ctx.T_star, ctx) - flown).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FullMap, FixedPoint) {
  const auto& ctx = reference_ctx();
  const Vec2 x = full_map(ctx.x_star, ctx.T_star, ctx);
  EXPECT_LE((x - ctx.x_star).cwiseAbs().maxCoeff(), 1e-9 * ctx.x_star.cwiseAbs().maxCoeff());
}

TEST(FullMap, MatchesEventDrivenSimulation) {
  const auto& ctx = reference_ctx();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const Vec2 x = ctx.x_star + Vec2(1e-4 * u(rng), 1e-2 * u(rng));
    const double T = ctx.T_star * (1 + 1e-4 * u(rng));
    const Vec2 a = full_map(x, T, ctx), b = simulated_map(ctx, x, T);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8 * b.cwiseAbs().maxCoeff()) << i;
  }
}

TEST(Jacobians, MatchHighPrecisionOracle) {
  const auto m = build_local_map(reference_ctx());
  EXPECT_LE(max_rel(m.A_minus, mat(kAMinus)), 1e-9);
  EXPECT_LE(max_rel(m.A_plus, mat(kAPlus)), 1e-9);
  EXPECT_LE(max_rel(m.B_minus, Vec2(kBMinus[0], kBMinus[1])), 1e-9);
  EXPECT_LE(max_rel(m.B_plus, Vec2(kBPlus[0], kBPlus[1])), 1e-9);
}

TEST(Jacobians, DeterminantIdentity) {
  const auto& ctx = reference_ctx();
  const auto& p = ctx.model.params;
  const double expect = p.restitution * p.restitution * std::exp(-2 * p.zeta() * ctx.T_star);
  for (Side s : {Side::Left, Side::Right}) {
    EXPECT_NEAR(jacobian_x(ctx, s).determinant(), expect, 1e-9 * expect);
    EXPECT_NEAR(jacobian_x_composed(ctx, s).determinant(), expect, 1e-9 * expect);
  }
}

TEST(Jacobians, ClosedFormEqualsComposition) {
  const auto& ctx = reference_ctx();
  for (Side s : {Side::Left, Side::Right}) {
    EXPECT_LE(max_rel(jacobian_x_composed(ctx, s), jacobian_x(ctx, s)), 1e-9);
    EXPECT_LE(max_rel(jacobian_T_composed(ctx, s), jacobian_T(ctx, s)), 1e-9);
  }
}

// One-sided second-order differences of the event-driven map, stepping in
// the direction that puts the impact on the requested side of the corner.
TEST(Jacobians, MatchOneSidedDifferencesOfSimulatedMap) {
  const auto& ctx = reference_ctx();
  const auto m = build_local_map(ctx);
  const Vec2 x0 = ctx.x_star;
  const double T0 = ctx.T_star;
  for (Side side : {Side::Left, Side::Right}) {
    const bool want_before = side == Side::Left;
    auto stepped = [&](const Vec2& dx, double dT) {
      const double t = simulated_impact_time(ctx, x0 + dx, T0 + dT);
      return (t < 0) == want_before ? 1.0 : -1.0;
    };
    auto column = [&](const Vec2& dir, double dT_dir, double eps) {
      const double s = stepped(eps * dir, eps * dT_dir);
      const Vec2 f0 = simulated_map(ctx, x0, T0);
      const Vec2 f1 = simulated_map(ctx, x0 + s * eps * dir, T0 + s * eps * dT_dir);
      const Vec2 f2 = simulated_map(ctx, x0 + 2 * s * eps * dir, T0 + 2 * s * eps * dT_dir);
      // both steps must land on the same side
      EXPECT_EQ((simulated_impact_time(ctx, x0 + 2 * s * eps * dir, T0 + 2 * s * eps * dT_dir) < 0), want_before);
      return Vec2((-3 * f0 + 4 * f1 - f2) / (2 * s * eps));
    };
    Eigen::Matrix2d A;
    A.col(0) = column(Vec2(1, 0), 0.0, 1e-6 * std::abs(x0(0)));
    A.col(1) = column(Vec2(0, 1), 0.0, 1e-6 * std::abs(x0(0)));
    const Vec2 B = column(Vec2::Zero(), 1.0, 1e-6 * T0);
    const Eigen::Matrix2d Aa = side == Side::Left ? m.A_minus : m.A_plus;
    const Vec2 Ba = side == Side::Left ? m.B_minus : m.B_plus;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) EXPECT_LE(reftest::rel(A(i, j), Aa(i, j)), 1e-5) << int(side) << i << j;
      EXPECT_LE(reftest::rel(B(i), Ba(i)), 1e-5) << int(side) << i;
    }
  }
}

TEST(Jacobians, SidesDifferByRankOne) {
  const auto& ctx = reference_ctx();
  const Eigen::Matrix2d dA = jacobian_x(ctx, Side::Right) - jacobian_x(ctx, Side::Left);
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(dA);
  EXPECT_GT(svd.singularValues()(0), 1.0);
  EXPECT_LE(svd.singularValues()(1), 1e-12 * svd.singularValues()(0));
  // rows are multiples of h phi_{T/2}
  const Eigen::RowVector2d hp = flow_operator(ctx.model.params, 0.5 * ctx.T_star).row(0);
  for (int i = 0; i < 2; ++i) {
    const double cross = dA(i, 0) * hp(1) - dA(i, 1) * hp(0);
    EXPECT_LE(std::abs(cross), 1e-12 * dA.row(i).norm() * hp.norm());
  }
}

TEST(Jacobians, GrazingIsSingular) {
  CornerContext ctx = reference_ctx();
  ctx.x_d(1) = ctx.y0(1);
  EXPECT_THROW(jacobian_x(ctx, Side::Left), GrazingSingularity);
  EXPECT_THROW(jacobian_T(ctx, Side::Right), GrazingSingularity);
}

TEST(Jacobians, FlatCamLeavesOnlyFlowTerms) {
  // With c' = c'' = 0 the impact map does not depend on T, so
  // dP/dT = 1/2 phi' Z(x_d) + 1/2 phi J_Z phi' x*, where A = phi J_Z phi.
  CornerContext ctx = reference_ctx();
  ctx.y0(1) = 0.0;
  ctx.c0pp_left = ctx.c0pp_right = 0.0;
  const auto& p = ctx.model.params;
  const Eigen::Matrix2d ph = flow_operator(p, 0.5 * ctx.T_star);
  const Eigen::Matrix2d dph = flow_operator_time_derivative(p, 0.5 * ctx.T_star);
  const Eigen::Matrix2d JZ = ph.inverse() * jacobian_x(ctx, Side::Left) * ph.inverse();
  const Vec2 Z = (Eigen::Matrix2d::Identity() + ctx.R) * ctx.x_d - ctx.R * ctx.y0;
  const Vec2 oracle = 0.5 * dph * Z + 0.5 * ph * JZ * dph * ph.inverse() * ctx.x_d;
  EXPECT_LE(max_rel(jacobian_T(ctx, Side::Left), oracle), 1e-10);
}

TEST(LocalMap, ContinuityIdentitiesAndDirectD) {
  const auto& ctx = reference_ctx();
  const auto m = build_local_map(ctx);
  EXPECT_LE(m.continuity_residual(), 1e-10);
  EXPECT_LE(reftest::rel(boundary_T_derivative(ctx), m.D), 1e-9);
  EXPECT_EQ(m.T_star, ctx.T_star);
  EXPECT_EQ(m.x_star, ctx.x_star);
}

TEST(LocalMap, ContinuousOnSwitchingLine) {
  const auto m = build_local_map(reference_ctx());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Vec2 dx(1e-3 * u(rng), 1e-1 * u(rng));
    const double dT = -(m.C * dx).value() / m.D;
    const Vec2 a = m.A_minus * dx + m.B_minus * dT, b = m.A_plus * dx + m.B_plus * dT;
    const double scale = std::max((m.A_minus * dx).cwiseAbs().maxCoeff(), std::abs(dT) * m.B_minus.cwiseAbs().maxCoeff());
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-9 * scale);
  }
}

TEST(LocalMap, BranchMatchesImpactSide) {
  const auto& ctx = reference_ctx();
  const auto m = build_local_map(ctx);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int minus = 0;
  for (int i = 0; i < 200; ++i) {
    const Vec2 dx(1e-6 * ctx.x_star(0) * u(rng), 1e-6 * ctx.x_star(0) * u(rng));
    const double dT = 1e-6 * ctx.T_star * u(rng);
    const double T = ctx.T_star + dT;
    const double t_imp = zdm(flow_operator(ctx.model.params, 0.5 * T) * (ctx.x_star + dx), T, ctx).t_impact;
    const double sw = (m.C * dx).value() + m.D * dT;
    if (std::abs(sw) < 1e-9 * (m.C.norm() * dx.norm() + std::abs(m.D * dT))) continue;
    EXPECT_EQ(m.minus_branch(dx, dT), t_imp < 0);
    // the reference corner has kappa < 0, so C dx + D dT carries the sign of t_i = -t_impact
    EXPECT_EQ(sw > 0, -t_imp > 0);
    minus += m.minus_branch(dx, dT);
  }
  EXPECT_EQ(m.orientation, -1);
  EXPECT_GT(minus, 20);
  EXPECT_LT(minus, 180);
}

TEST(LocalMap, SmoothedCornerCollapses) {
  CornerContext ctx = reference_ctx();
  ctx.c0pp_right = ctx.c0pp_left;
  const auto m = build_local_map(ctx);
  EXPECT_EQ(m.A_minus, m.A_plus);
  EXPECT_EQ(m.B_minus, m.B_plus);
  EXPECT_EQ(m.C, Eigen::RowVector2d::Zero());
  EXPECT_EQ(m.D, 0.0);
}

TEST(LocalMap, FileRoundTrip) {
  const auto m = build_local_map(reference_ctx());
  std::stringstream ss;
  write_local_map(ss, m);
  const auto r = read_local_map(ss);
  EXPECT_EQ(r.A_minus, m.A_minus);
  EXPECT_EQ(r.A_plus, m.A_plus);
  EXPECT_EQ(r.B_minus, m.B_minus);
  EXPECT_EQ(r.B_plus, m.B_plus);
  EXPECT_EQ(r.C, m.C);
  EXPECT_EQ(r.D, m.D);
  EXPECT_EQ(r.T_star, m.T_star);
  EXPECT_EQ(r.x_star, m.x_star);
  EXPECT_EQ(r.orientation, m.orientation);
}

TEST(LocalMap, ReaderReportsLines) {
  auto fails_at = [](const std::string& text, const std::string& needle) {
    std::istringstream is(text);
    try {
      read_local_map(is);
    } catch (const std::runtime_error& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  const std::string good = "A_minus 1 0 0 1\nA_plus 1 0 0 1\nB_minus 1 1\nB_plus 1 1\n";
  EXPECT_TRUE(fails_at("# c\nA_minus 1 0 0 1\nbogus 3\n", "line 3: unknown key"));
  EXPECT_TRUE(fails_at("A_minus 1 0 0\n", "line 1: 'A_minus' expects 4 values"));
  EXPECT_TRUE(fails_at("A_minus 1 0 x 1\n", "line 1: 'x' is not a finite number"));
  EXPECT_TRUE(fails_at("A_minus 1 0 0 1\nA_minus 1 0 0 1\n", "line 2: duplicate key"));
  EXPECT_TRUE(fails_at("A_minus 1 0 0 1\nB_minus 1 1\nB_plus 1 1\n", "missing required key 'A_plus'"));
  EXPECT_TRUE(fails_at(good + "orientation 0\n", "orientation"));
  std::istringstream is(good);
  const auto m = read_local_map(is);
  EXPECT_EQ(m.C, Eigen::RowVector2d::Zero());  // derived from the continuity identity
  EXPECT_EQ(m.orientation, 1);
}

TEST(Estimate, ExactLinearDataRecovered) {
  Eigen::Matrix2d A;
  A << 0.3, -1.2, 7.5, 0.9;
  const Vec2 B(12.0, -340.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixX3d X(25, 3);
  Eigen::MatrixX2d Y(25, 2);
  for (int k = 0; k < 25; ++k) {
    X.row(k) << 1e-4 * n(rng), 1e-3 * n(rng), 1e-6 * n(rng);
    Y.row(k) = (A * X.row(k).head<2>().transpose() + B * X(k, 2)).transpose();
  }
  const AffineFit f = fit_affine_jacobians(X, Y);
  EXPECT_LE(max_rel(f.A, A), 1e-12);
  EXPECT_LE(max_rel(f.B, B), 1e-12);
  EXPECT_LE(f.residual, 1e-12);
  Eigen::MatrixX3d flat = X;
  flat.col(2) = 3.0 * flat.col(0);  // rank 2
  EXPECT_THROW(fit_affine_jacobians(flat, Y), RankDeficientDesign);
}

TEST(Estimate, ReferenceScenarioAgreesWithAnalytic) {
  const auto& ctx = reference_ctx();
  const auto m = build_local_map(ctx);
  const auto t0 = std::chrono::steady_clock::now();
  const auto est = estimate_map_numerically(ctx, 60, 1e-6, 12345);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto d = compare_estimate(m, est);
  EXPECT_EQ(d.size(), 12u);
  EXPECT_LE(max_relative_discrepancy(d), 1e-5);
  EXPECT_LT(secs, 30.0);
  EXPECT_EQ(est.samples, 60);
}

TEST(Estimate, SmallerPerturbationsReduceDiscrepancy) {
  const auto& ctx = reference_ctx();
  const auto m = build_local_map(ctx);
  const double big = max_relative_discrepancy(compare_estimate(m, estimate_map_numerically(ctx, 30, 2e-3, 7)));
  const double half = max_relative_discrepancy(compare_estimate(m, estimate_map_numerically(ctx, 30, 1e-3, 7)));
  EXPECT_LT(half, big);
}

TEST(Estimate, TooFewSamples) {
  EXPECT_THROW(estimate_map_numerically(reference_ctx(), 2, 1e-6, 1), RankDeficientDesign);
  EXPECT_THROW(estimate_map_numerically(reference_ctx(), 10, 0.0, 1), std::invalid_argument);
}

// Randomized scenarios: corner orbits found by scanning the corner condition
// in speed, kept only when the simulated orbit is admissible.
TEST(CornerMapProperty, IdentitiesHoldOnRandomScenarios) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int accepted = 0, drawn = 0;
  while (accepted < 20 && drawn < 400) {
    ++drawn;
    Model model = reftest::reference_model();
    try {
      model.geometry = CamGeometry::from_tangent_arcs(0.02 * (0.9 + 0.2 * u(rng)), 0.00745 * (0.9 + 0.2 * u(rng)),
                                                      0.030716 * (0.95 + 0.1 * u(rng)), (15 + 10 * u(rng)) * reftest::kDeg,
                                                      (-75 + 10 * u(rng)) * reftest::kDeg);
    } catch (const std::invalid_argument&) {
      continue;
    }
    model.params.damping = 0.1 + 1.5 * u(rng);
    model.params.stiffness = 700 + 1000 * u(rng);
    model.params.restitution = 0.5 + 0.45 * u(rng);
    model.phase_offset = model.geometry.boundaries()[1];
    auto G = [&](double rpm) {
      const double T = 60.0 / rpm;
      const Vec2 y0 = corner_cam_state(model, 1, T);
      return (flow_operator(model.params, 0.5 * T) * corner_fixed_point(model.params, T, y0))(0) - y0(0);
    };
    std::optional<CornerContext> ctx;
    double prev = G(300.0);
    for (double rpm = 305.0; rpm <= 1500.0 && !ctx; rpm += 5.0) {
      const double g = G(rpm);
      if ((g > 0) != (prev > 0)) {
        try {
          ctx = solve_fixed_point(model, 1, rpm_to_rad_s(rpm - 5.0), rpm_to_rad_s(rpm));
        } catch (const std::runtime_error&) {
        }
      }
      prev = g;
    }
    if (!ctx) continue;
    ++accepted;
    const auto& p = ctx->model.params;
    const double det = p.restitution * p.restitution * std::exp(-2 * p.zeta() * ctx->T_star);
    const auto m = build_local_map(*ctx);
    EXPECT_NEAR(m.A_minus.determinant(), det, 1e-9 * det);
    EXPECT_NEAR(m.A_plus.determinant(), det, 1e-9 * det);
    EXPECT_NEAR(jacobian_x_composed(*ctx, Side::Left).determinant(), det, 1e-9 * det);
    EXPECT_LE(m.continuity_residual(), 1e-10);
    EXPECT_LE(reftest::rel(boundary_T_derivative(*ctx), m.D), 1e-9);
    for (Side s : {Side::Left, Side::Right}) {
      EXPECT_LE(max_rel(jacobian_x_composed(*ctx, s), jacobian_x(*ctx, s)), 1e-9);
      EXPECT_LE(max_rel(jacobian_T_composed(*ctx, s), jacobian_T(*ctx, s)), 1e-9);
    }
    for (int i = 0; i < 10; ++i) {
      const Vec2 dx(1e-3 * (u(rng) - 0.5), 1e-1 * (u(rng) - 0.5));
      const double dT = -(m.C * dx).value() / m.D;
      const Vec2 a = m.A_minus * dx + m.B_minus * dT, b = m.A_plus * dx + m.B_plus * dT;
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-9 * std::max(a.cwiseAbs().maxCoeff(), 1e-300));
    }
  }
  EXPECT_EQ(accepted, 20) << "drawn " << drawn;
}
