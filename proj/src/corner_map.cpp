#include "cornerimpact/corner_map.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "cornerimpact/bifurcation_scan.hpp"
#include "cornerimpact/parallel.hpp"
#include "detail/roots.hpp"

namespace cornerimpact {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int segment_for(int boundary, Side side) { return side == Side::Left ? boundary : boundary + 1; }

// Time jet of one side's closed form, for a cam of period T with the corner at t = 0.
LiftJet corner_jet(const CamGeometry& g, int boundary, Side side, double T, double t) {
  const double w = kTwoPi / T;
  const double beta = g.boundaries()[static_cast<std::size_t>(boundary)];
  LiftJet j = g.segment_jet(segment_for(boundary, side), beta + w * t);
  j.dc *= w;
  j.ddc *= w * w;
  return j;
}

Vec2 shifted_cam(const PhysicalParams& p, const LiftJet& j) { return {j.c + p.shift(), j.dc}; }

double denominator(const CornerContext& ctx) {
  const double d = ctx.x_d(1) - ctx.y0(1);
  if (d == 0.0) throw GrazingSingularity("relative impact velocity at the corner is zero (grazing)");
  return d;
}

}  // namespace

Eigen::Matrix2d restitution_matrix(double r) {
  Eigen::Matrix2d R;
  R << 0.0, 0.0, 0.0, -(1.0 + r);
  return R;
}

Vec2 corner_fixed_point(const PhysicalParams& p, double T, const Vec2& y0) {
  const Eigen::Matrix2d R = restitution_matrix(p.restitution);
  const Eigen::Matrix2d ph = flow_operator(p, 0.5 * T);
  const Eigen::Matrix2d M = Eigen::Matrix2d::Identity() - flow_operator(p, T) - ph * R * ph;
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(M);
  if (!lu.isInvertible()) throw std::runtime_error("fixed-point matrix is singular");
  return -lu.solve(ph * R * y0);
}

Vec2 corner_cam_state(const Model& model, int boundary, double T) {
  return shifted_cam(model.params, corner_jet(model.geometry, boundary, Side::Left, T, 0.0));
}

ZdmResult zdm(const Vec2& xd, double T, const CornerContext& ctx, std::optional<Side> force_side,
              double window_fraction) {
  const PhysicalParams& p = ctx.model.params;
  const CamGeometry& g = ctx.model.geometry;
  auto side_of = [&](double t) { return force_side ? *force_side : (t < 0.0 ? Side::Left : Side::Right); };
  auto H = [&](double t, Side side) {
    const Vec2 x = flow_operator(p, t) * xd;
    const LiftJet c = corner_jet(g, ctx.boundary, side, T, t);
    return std::pair{x(0) - (c.c + p.shift()), x(1) - c.dc};
  };
  const double window = window_fraction * T;
  double t_imp = 0.0;
  const double h0 = H(0.0, side_of(0.0)).first;
  if (h0 != 0.0) {
    // Before impact the gap is positive; walk outward to bracket the crossing.
    const double dir = h0 > 0 ? 1.0 : -1.0;
    const Side side = force_side ? *force_side : (dir > 0 ? Side::Right : Side::Left);
    double inner = 0.0, h_inner = h0, outer = 0.0;
    bool found = false;
    for (double d = 1e-9 * T; d <= window * (1 + 1e-12); d *= 2.0) {
      outer = dir * std::min(d, window);
      const double ho = H(outer, side).first;
      if ((ho > 0) != (h0 > 0) || ho == 0.0) {
        found = true;
        break;
      }
      inner = outer;
      h_inner = ho;
    }
    if (!found) {
      if (h0 > 0) return {xd, 0.0, false};
      throw std::runtime_error(fmt::format("no impact root within {} s of the corner", window));
    }
    t_imp = detail::safeguarded_newton([&](double t) { return H(t, side); }, inner, outer, h_inner, 1e-15 * T,
                                       "corner impact time");
  }
  const Side side = side_of(t_imp);
  const Eigen::Matrix2d R = restitution_matrix(p.restitution);
  const Vec2 y = shifted_cam(p, corner_jet(g, ctx.boundary, side, T, t_imp));
  const Eigen::Matrix2d fm = flow_operator(p, -t_imp), fp = flow_operator(p, t_imp);
  ZdmResult out;
  out.t_impact = t_imp;
  out.x_plus = (Eigen::Matrix2d::Identity() + fm * R * fp) * xd - fm * R * y;
  return out;
}

Vec2 full_map(const Vec2& x_n, double T, const CornerContext& ctx, std::optional<Side> force_side) {
  const Eigen::Matrix2d ph = flow_operator(ctx.model.params, 0.5 * T);
  return ph * zdm(ph * x_n, T, ctx, force_side).x_plus;
}

CornerContext solve_fixed_point(const Model& model, int boundary, double omega_lo, double omega_hi) {
  if (boundary < 0 || boundary > 6) throw std::invalid_argument("corner boundary index out of range");
  if (!(omega_lo > 0 && omega_hi > 0)) throw std::invalid_argument("corner seed speeds must be positive");
  CornerContext ctx(model);
  ctx.boundary = boundary;
  ctx.corner_phase = model.geometry.boundaries()[static_cast<std::size_t>(boundary)];
  ctx.model.phase_offset = ctx.corner_phase;
  const PhysicalParams& p = ctx.model.params;

  auto G = [&](double T) {
    const Vec2 y0 = corner_cam_state(ctx.model, boundary, T);
    const Vec2 xs = corner_fixed_point(p, T, y0);
    return (flow_operator(p, 0.5 * T) * xs)(0) - y0(0);
  };
  double Ta = kTwoPi / std::max(omega_lo, omega_hi), Tb = kTwoPi / std::min(omega_lo, omega_hi);
  double Ga = G(Ta), Gb = G(Tb);
  for (int k = 0; k < 8 && (Ga > 0) == (Gb > 0); ++k) {
    const double w = Tb - Ta;
    Ta = std::max(0.5 * Ta, Ta - w);
    Tb = Tb + w;
    Ga = G(Ta);
    Gb = G(Tb);
  }
  if ((Ga > 0) == (Gb > 0)) {
    throw std::runtime_error(fmt::format("no corner-impact period between {} and {} s", Ta, Tb));
  }
  std::uintmax_t iters = 200;
  const auto br = boost::math::tools::toms748_solve(
      G, Ta, Tb, Ga, Gb, [](double lo, double hi) { return std::abs(hi - lo) <= 4e-16 * std::abs(lo); }, iters);
  const double T = std::abs(G(br.first)) <= std::abs(G(br.second)) ? br.first : br.second;

  ctx.T_star = T;
  ctx.omega_star = kTwoPi / T;
  ctx.y0 = corner_cam_state(ctx.model, boundary, T);
  ctx.x_star = corner_fixed_point(p, T, ctx.y0);
  const Eigen::Matrix2d ph = flow_operator(p, 0.5 * T);
  ctx.x_d = ph * ctx.x_star;
  ctx.c0pp_left = corner_jet(ctx.model.geometry, boundary, Side::Left, T, 0.0).ddc;
  ctx.c0pp_right = corner_jet(ctx.model.geometry, boundary, Side::Right, T, 0.0).ddc;
  ctx.R = restitution_matrix(p.restitution);

  const Eigen::Matrix2d M = Eigen::Matrix2d::Identity() - flow_operator(p, T) - ph * ctx.R * ph;
  const Vec2 rhs = ph * ctx.R * ctx.y0;
  ctx.fixed_point_residual =
      (M * ctx.x_star + rhs).cwiseAbs().maxCoeff() / std::max(ctx.x_star.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff());
  ctx.gap_residual = std::abs(ctx.x_d(0) - ctx.y0(0)) / std::abs(ctx.y0(0));

  const double rel = ctx.x_d(1) - ctx.y0(1);
  if (!(rel < 0.0)) {
    throw std::runtime_error("corner orbit is not an impact: the follower does not approach the cam at the corner");
  }
  const double cond = std::max(std::abs(ctx.x_d(1)), std::abs(ctx.y0(1))) / std::abs(rel);
  if (cond > 1e8) {
    ctx.warnings.push_back(fmt::format("near-grazing corner impact: relative velocity condition {}", cond));
  }

  // The orbit must be admissible: one impact per period, on the corner.
  const CamDrive drive = ctx.model.drive(ctx.omega_star);
  const FollowerState start = from_shifted(p, ctx.x_star);
  if (start.q < drive.state(-0.5 * T).position - ctx.model.sim.tol_pen) {
    throw std::runtime_error("corner orbit is not admissible: it passes through the cam between impacts");
  }
  const Trajectory tr = simulate(start, -0.5 * T, T, drive, p, ctx.model.sim);
  if (tr.impacts.size() != 1 || !tr.sticking.empty()) {
    throw std::runtime_error(fmt::format("corner orbit is not admissible: {} impacts and {} sticking intervals "
                                         "in one simulated period",
                                         tr.impacts.size(), tr.sticking.size()));
  }
  ctx.simulated_impact_offset = tr.impacts.front().t;
  return ctx;
}

Eigen::Matrix2d jacobian_x(const CornerContext& ctx, Side side) {
  const PhysicalParams& p = ctx.model.params;
  const double r = p.restitution, w0 = p.omega0(), z = p.zeta();
  const double den = denominator(ctx);
  Eigen::Matrix2d mid;
  mid << -r, 0.0, -(1.0 + r) * (2.0 * z * ctx.y0(1) + ctx.c0pp(side) + w0 * w0 * ctx.x_d(0)) / den, -r;
  const Eigen::Matrix2d ph = flow_operator(p, 0.5 * ctx.T_star);
  return ph * mid * ph;
}

Vec2 jacobian_T(const CornerContext& ctx, Side side) {
  const PhysicalParams& p = ctx.model.params;
  const double r = p.restitution, w0 = p.omega0(), z = p.zeta(), T = ctx.T_star;
  const double den = denominator(ctx);
  const double z1 = ctx.x_d(0), z2 = ctx.x_d(1), c1 = ctx.y0(1), c2 = ctx.c0pp(side);
  const double qdd = -w0 * w0 * z1 - 2.0 * z * z2;
  const Eigen::Matrix2d ph = flow_operator(p, 0.5 * T);
  const Eigen::Matrix2d dph = flow_operator_time_derivative(p, 0.5 * T);
  const Vec2 after(z1, -r * z2 + (1.0 + r) * c1);
  const Vec2 carried(z2, -r * qdd - 2.0 * (1.0 + r) * c1 / T);
  const Vec2 timing(den, 2.0 * z * c1 + c2 + w0 * w0 * z1);
  return 0.5 * dph * after + 0.5 * ph * carried - 0.5 * ph * ((1.0 + r) * z2 / den) * timing;
}

namespace {

struct ComposedParts {
  ComposedJacobians J;
  Eigen::RowVector2d dt_dx;  // total derivative of the impact time w.r.t. x_n
  double dt_dT = 0.0;        // total derivative w.r.t. T
};

ComposedParts compose(const CornerContext& ctx, const Vec2& x, double T, Side side) {
  const PhysicalParams& p = ctx.model.params;
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d R = restitution_matrix(p.restitution);
  const Eigen::Matrix2d ph = flow_operator(p, 0.5 * T);
  const Eigen::Matrix2d dph = flow_operator_time_derivative(p, 0.5 * T);
  const Vec2 xd = ph * x;
  const double t = zdm(xd, T, ctx, side).t_impact;

  const LiftJet c = corner_jet(ctx.model.geometry, ctx.boundary, side, T, t);
  const Vec2 y(c.c + p.shift(), c.dc);
  const Vec2 ydot(c.dc, c.ddc);
  const Vec2 y_T(-(t / T) * c.dc, -c.dc / T - (t / T) * c.ddc);

  const Eigen::Matrix2d fp = flow_operator(p, t), fm = flow_operator(p, -t);
  const Eigen::Matrix2d dfp = flow_operator_time_derivative(p, t), dfm = flow_operator_time_derivative(p, -t);
  const Eigen::RowVector2d h(1.0, 0.0);

  // Impact condition H(x_d, T, t) = h (phi_t x_d - y(t; T)) = 0.
  const Eigen::RowVector2d H_x = h * fp;
  const double H_t = (h * (dfp * xd - ydot)).value();
  if (H_t == 0.0) throw GrazingSingularity("impact condition is tangential (zero relative velocity)");
  const double H_T = -(h * y_T).value();
  const Eigen::RowVector2d t_xd = -H_x / H_t;
  const double t_T = -H_T / H_t;

  // ZDM(x_d, T) = M(t) x_d - phi_{-t} R y(t; T).
  const Eigen::Matrix2d M = I + fm * R * fp;
  const Eigen::Matrix2d M_t = -dfm * R * fp + fm * R * dfp;
  const Vec2 W_t = -dfm * R * y + fm * R * ydot;
  const Vec2 along_t = M_t * xd - W_t;
  const Eigen::Matrix2d J = M + along_t * t_xd;
  const Vec2 Z_T = -fm * R * y_T + along_t * t_T;
  const Vec2 xplus = M * xd - fm * R * y;

  const Vec2 xd_T = 0.5 * dph * x;
  ComposedParts out;
  out.J.A = ph * J * ph;
  out.J.B = 0.5 * dph * xplus + ph * (J * xd_T + Z_T);
  out.J.t_impact = t;
  out.dt_dx = t_xd * ph;
  out.dt_dT = (t_xd * xd_T).value() + t_T;
  return out;
}

}  // namespace

ComposedJacobians jacobians_composed(const CornerContext& ctx, const Vec2& x, double T, Side side) {
  return compose(ctx, x, T, side).J;
}

Eigen::Matrix2d jacobian_x_composed(const CornerContext& ctx, Side side) {
  return compose(ctx, ctx.x_star, ctx.T_star, side).J.A;
}

Vec2 jacobian_T_composed(const CornerContext& ctx, Side side) {
  return compose(ctx, ctx.x_star, ctx.T_star, side).J.B;
}

double boundary_T_derivative(const CornerContext& ctx) {
  // h (P+ - P-) = (1 + r) (c''+ - c''-) [phi_{T/2}]_12 * t_impact, to first order.
  const PhysicalParams& p = ctx.model.params;
  const double kappa =
      (1.0 + p.restitution) * (ctx.c0pp_right - ctx.c0pp_left) * flow_operator(p, 0.5 * ctx.T_star)(0, 1);
  return kappa * compose(ctx, ctx.x_star, ctx.T_star, Side::Left).dt_dT;
}

Vec2 LocalPWLMap::apply(const Vec2& dx, double dT) const {
  return minus_branch(dx, dT) ? Vec2(A_minus * dx + B_minus * dT) : Vec2(A_plus * dx + B_plus * dT);
}

double LocalPWLMap::continuity_residual() const {
  const Eigen::RowVector2d h(1.0, 0.0);
  const double sa = std::max({A_minus.cwiseAbs().maxCoeff(), A_plus.cwiseAbs().maxCoeff(), 1e-300});
  const double sb = std::max({B_minus.cwiseAbs().maxCoeff(), B_plus.cwiseAbs().maxCoeff(), 1e-300});
  const double rc = (h * (A_plus - A_minus) - C).cwiseAbs().maxCoeff() / sa;
  const double rd = std::abs((h * (B_plus - B_minus)).value() - D) / sb;
  return std::max(rc, rd);
}

LocalPWLMap build_local_map(const CornerContext& ctx) {
  LocalPWLMap m;
  m.A_minus = jacobian_x(ctx, Side::Left);
  m.A_plus = jacobian_x(ctx, Side::Right);
  m.B_minus = jacobian_T(ctx, Side::Left);
  m.B_plus = jacobian_T(ctx, Side::Right);
  const Eigen::RowVector2d h(1.0, 0.0);
  m.C = h * (m.A_plus - m.A_minus);
  m.D = (h * (m.B_plus - m.B_minus)).value();
  m.x_star = ctx.x_star;
  m.T_star = ctx.T_star;
  // To first order C dx + D dT = kappa * t_impact, so the minus branch
  // (impact before the corner) is where sign(kappa) * (C dx + D dT) < 0.
  const double kappa = (1.0 + ctx.model.params.restitution) * (ctx.c0pp_right - ctx.c0pp_left) *
                       flow_operator(ctx.model.params, 0.5 * ctx.T_star)(0, 1);
  m.orientation = kappa < 0 ? -1 : 1;
  return m;
}

void write_local_map(std::ostream& os, const LocalPWLMap& m) {
  os << "# local piecewise-linear map: dx' = A dx + B dT on each side of C dx + D dT = 0\n";
  os << "# matrices row-major; states shifted by the static deflection\n";
  os << fmt::format("T_star {}\n", m.T_star);
  os << fmt::format("x_star {} {}\n", m.x_star(0), m.x_star(1));
  auto mat = [&](const char* k, const Eigen::Matrix2d& a) {
    os << fmt::format("{} {} {} {} {}\n", k, a(0, 0), a(0, 1), a(1, 0), a(1, 1));
  };
  mat("A_minus", m.A_minus);
  mat("A_plus", m.A_plus);
  os << fmt::format("B_minus {} {}\n", m.B_minus(0), m.B_minus(1));
  os << fmt::format("B_plus {} {}\n", m.B_plus(0), m.B_plus(1));
  os << fmt::format("C {} {}\n", m.C(0), m.C(1));
  os << fmt::format("D {}\n", m.D);
  os << fmt::format("orientation {}\n", m.orientation);
}

LocalPWLMap read_local_map(std::istream& is) {
  const std::map<std::string, std::size_t> arity = {{"T_star", 1}, {"x_star", 2}, {"A_minus", 4}, {"A_plus", 4},
                                                    {"B_minus", 2}, {"B_plus", 2}, {"C", 2},      {"D", 1},
                                                    {"orientation", 1}};
  std::map<std::string, std::vector<double>> vals;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    const auto it = arity.find(key);
    if (it == arity.end()) throw std::runtime_error(fmt::format("line {}: unknown key '{}'", lineno, key));
    if (vals.count(key)) throw std::runtime_error(fmt::format("line {}: duplicate key '{}'", lineno, key));
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      double d = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(d)) {
        throw std::runtime_error(fmt::format("line {}: '{}' is not a finite number", lineno, tok));
      }
      v.push_back(d);
    }
    if (v.size() != it->second) {
      throw std::runtime_error(
          fmt::format("line {}: '{}' expects {} values, got {}", lineno, key, it->second, v.size()));
    }
    vals[key] = v;
  }
  for (const char* k : {"A_minus", "A_plus", "B_minus", "B_plus"}) {
    if (!vals.count(k)) throw std::runtime_error(fmt::format("missing required key '{}'", k));
  }
  LocalPWLMap m;
  auto mat = [&](const char* k) {
    const auto& v = vals[k];
    Eigen::Matrix2d a;
    a << v[0], v[1], v[2], v[3];
    return a;
  };
  m.A_minus = mat("A_minus");
  m.A_plus = mat("A_plus");
  m.B_minus = Vec2(vals["B_minus"][0], vals["B_minus"][1]);
  m.B_plus = Vec2(vals["B_plus"][0], vals["B_plus"][1]);
  const Eigen::RowVector2d h(1.0, 0.0);
  m.C = vals.count("C") ? Eigen::RowVector2d(vals["C"][0], vals["C"][1]) : Eigen::RowVector2d(h * (m.A_plus - m.A_minus));
  m.D = vals.count("D") ? vals["D"][0] : (h * (m.B_plus - m.B_minus)).value();
  if (vals.count("T_star")) m.T_star = vals["T_star"][0];
  if (vals.count("x_star")) m.x_star = Vec2(vals["x_star"][0], vals["x_star"][1]);
  if (vals.count("orientation")) {
    const double o = vals["orientation"][0];
    if (o != 1.0 && o != -1.0) throw std::runtime_error("orientation must be 1 or -1");
    m.orientation = static_cast<int>(o);
  }
  return m;
}

AffineFit fit_affine_jacobians(const Eigen::MatrixX3d& X, const Eigen::MatrixX2d& Y) {
  if (X.rows() != Y.rows()) throw std::invalid_argument("design and response row counts differ");
  const Eigen::ColPivHouseholderQR<Eigen::MatrixX3d> qr(X);
  if (X.rows() < 3 || qr.rank() < 3) {
    throw RankDeficientDesign(fmt::format(
        "least-squares design has rank {} < 3 with {} samples; use at least 3 well-spread perturbations",
        X.rows() < 3 ? std::min<long>(qr.rank(), X.rows()) : qr.rank(), X.rows()));
  }
  const Eigen::Matrix<double, 3, 2> theta = qr.solve(Y);
  AffineFit f;
  f.A = theta.topRows<2>().transpose();
  f.B = theta.row(2).transpose();
  const double ny = Y.norm();
  f.residual = ny > 0 ? (X * theta - Y).norm() / ny : 0.0;
  return f;
}

NumericalMapEstimate estimate_map_numerically(const CornerContext& ctx, int M, double scale, std::uint64_t seed,
                                              double half_window, unsigned threads) {
  if (M < 3) {
    throw RankDeficientDesign(fmt::format("{} samples cannot determine the 3 columns of [A | B]", M));
  }
  if (!(scale > 0)) throw std::invalid_argument("perturbation scale must be positive");
  const PhysicalParams& p = ctx.model.params;
  const double xs_max = ctx.x_star.cwiseAbs().maxCoeff();
  const Vec2 sx(std::max(std::abs(ctx.x_star(0)), 1e-3 * xs_max), std::max(std::abs(ctx.x_star(1)), 1e-3 * xs_max));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixX3d X(M, 3);
  // Antithetic pairs: each draw is followed by its negative, so quadratic
  // terms of the map drop out of the normal equations.
  for (int k = 0; k < M; ++k) {
    if (k % 2 == 1) {
      X.row(k) = -X.row(k - 1);
      continue;
    }
    X(k, 0) = scale * sx(0) * u(rng);
    X(k, 1) = scale * sx(1) * u(rng);
    X(k, 2) = scale * ctx.T_star * u(rng);
  }

  NumericalMapEstimate est;
  est.samples = M;
  est.perturbation_scale = scale;
  est.seed = seed;
  for (Side side : {Side::Left, Side::Right}) {
    const BranchOverride ov{ctx.boundary, side, half_window};
    Eigen::MatrixX2d Y(M, 2);
    parallel_for(
        static_cast<std::size_t>(M),
        [&](std::size_t k) {
          const Eigen::Index i = static_cast<Eigen::Index>(k);
          const double T = ctx.T_star + X(i, 2);
          const Vec2 x0 = ctx.x_star + Vec2(X(i, 0), X(i, 1));
          const StrobeMapResult r = strobe_map(ctx.model, kTwoPi / T, from_shifted(p, x0), ov);
          if (r.impacts.size() != 1 || r.sticking || r.overflow) {
            throw std::runtime_error(fmt::format("perturbed orbit {} left the single-impact regime", k));
          }
          const Vec2 dx1 = to_shifted(p, r.end) - ctx.x_star;
          Y(i, 0) = dx1(0);
          Y(i, 1) = dx1(1);
        },
        threads);
    (side == Side::Left ? est.minus : est.plus) = fit_affine_jacobians(X, Y);
  }
  return est;
}

std::vector<EntryDiscrepancy> compare_estimate(const LocalPWLMap& map, const NumericalMapEstimate& est) {
  std::vector<EntryDiscrepancy> out;
  auto add = [&](const char* name, const Eigen::MatrixXd& a, const Eigen::MatrixXd& e) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double d = std::abs(e(i, j) - a(i, j));
        out.push_back({name, int(i), int(j), a(i, j), e(i, j), a(i, j) != 0 ? d / std::abs(a(i, j)) : d});
      }
    }
  };
  add("A_minus", map.A_minus, est.minus.A);
  add("A_plus", map.A_plus, est.plus.A);
  add("B_minus", map.B_minus, est.minus.B);
  add("B_plus", map.B_plus, est.plus.B);
  return out;
}

double max_relative_discrepancy(const std::vector<EntryDiscrepancy>& d) {
  double m = 0.0;
  for (const auto& e : d) m = std::max(m, e.relative);
  return m;
}

}  // namespace cornerimpact
