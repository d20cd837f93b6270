#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cornerimpact/model.hpp"

namespace cornerimpact {

// Period-one orbit whose single impact lands exactly on a cam corner, in
// shifted coordinates. The corner sits at t = 0; strobes at t = -T/2 + nT.
struct CornerContext {
  explicit CornerContext(Model m) : model(std::move(m)) {}

  Model model;  // phase_offset places the corner at t = 0
  int boundary = 0;
  double corner_phase = 0.0;
  double T_star = 0.0;
  double omega_star = 0.0;
  Vec2 x_star = Vec2::Zero();  // strobe state
  Vec2 x_d = Vec2::Zero();     // state arriving at the corner, phi_{T/2} x_star
  Vec2 y0 = Vec2::Zero();      // cam (c, c') at the corner, shifted
  double c0pp_left = 0.0;      // one-sided cam accelerations at the corner
  double c0pp_right = 0.0;
  Eigen::Matrix2d R = Eigen::Matrix2d::Zero();
  Eigen::RowVector2d h = Eigen::RowVector2d(1.0, 0.0);

  // Diagnostics filled by solve_fixed_point.
  double fixed_point_residual = 0.0;  // relative residual of the fixed-point equation
  double gap_residual = 0.0;          // relative residual of the corner condition
  double simulated_impact_offset = 0.0;  // impact time of the simulated orbit minus 0
  std::vector<std::string> warnings;

  double c0pp(Side side) const { return side == Side::Left ? c0pp_left : c0pp_right; }
};

class GrazingSingularity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientDesign : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Restitution matrix [[0, 0], [0, -(1 + r)]].
Eigen::Matrix2d restitution_matrix(double r);

// Fixed point of the corner-impact stroboscopic map for a given period:
// x = -[I - phi_T - phi_{T/2} R phi_{T/2}]^{-1} phi_{T/2} R y0.
Vec2 corner_fixed_point(const PhysicalParams& p, double T, const Vec2& y0);

// Cam state at the corner, shifted, for a given period.
Vec2 corner_cam_state(const Model& model, int boundary, double T);

struct ZdmResult {
  Vec2 x_plus = Vec2::Zero();
  double t_impact = 0.0;  // impact time relative to the corner; t_i = -t_impact
  bool impact = true;     // false when the gap never closes in the window
};

// Zero-time discontinuity map at the corner section for period T.
// `force_side` evaluates the cam on one side's closed form on both sides of
// the corner; by default each side uses its own segment.
ZdmResult zdm(const Vec2& x_d_minus, double T, const CornerContext& ctx,
              std::optional<Side> force_side = std::nullopt, double window_fraction = 0.05);

// phi_{T/2} o ZDM o phi_{T/2}; pure flight phi_T when no impact occurs.
Vec2 full_map(const Vec2& x_n, double T, const CornerContext& ctx, std::optional<Side> force_side = std::nullopt);

// Solves the fixed-point equation together with the corner condition for the
// period, bracketed between two cam speeds. The boundary is the corner whose
// phase is placed at t = 0 by model.phase_offset.
CornerContext solve_fixed_point(const Model& model, int boundary, double omega_lo, double omega_hi);

// Closed-form Jacobians at (x_star, T_star).
Eigen::Matrix2d jacobian_x(const CornerContext& ctx, Side side);
Vec2 jacobian_T(const CornerContext& ctx, Side side);

// Same quantities by chain rule through the implicit impact time, valid at
// any (x, T) near the corner orbit. At the fixed point they must agree with
// the closed forms.
struct ComposedJacobians {
  Eigen::Matrix2d A;
  Vec2 B;
  double t_impact = 0.0;
};
ComposedJacobians jacobians_composed(const CornerContext& ctx, const Vec2& x, double T, Side side);
Eigen::Matrix2d jacobian_x_composed(const CornerContext& ctx, Side side);
Vec2 jacobian_T_composed(const CornerContext& ctx, Side side);

// Direct T-derivative of the corner condition h(phi_t x_d - y(t)) = 0 for
// the switching function S(x, T) = h(P+ - P-), from the chain rule.
double boundary_T_derivative(const CornerContext& ctx);

struct LocalPWLMap {
  Eigen::Matrix2d A_minus = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d A_plus = Eigen::Matrix2d::Zero();
  Vec2 B_minus = Vec2::Zero();
  Vec2 B_plus = Vec2::Zero();
  Eigen::RowVector2d C = Eigen::RowVector2d::Zero();
  double D = 0.0;
  Vec2 x_star = Vec2::Zero();
  double T_star = 0.0;
  // The minus branch applies where orientation * (C dx + D dT) < 0. For a
  // derived map it is the sign that makes the minus branch the one whose
  // impact lands before the corner; +1 for externally supplied matrices.
  int orientation = 1;

  bool minus_branch(const Vec2& dx, double dT) const { return orientation * ((C * dx).value() + D * dT) < 0.0; }
  Vec2 apply(const Vec2& dx, double dT) const;
  // Largest violation of the continuity identities, relative to the entries.
  double continuity_residual() const;
};

LocalPWLMap build_local_map(const CornerContext& ctx);

void write_local_map(std::ostream& os, const LocalPWLMap& m);
// Throws std::runtime_error with the offending line number on bad input.
LocalPWLMap read_local_map(std::istream& is);

// Least-squares fit of [A | B] from rows [dx1, dx2, dT] -> [dx1', dx2'].
struct AffineFit {
  Eigen::Matrix2d A;
  Vec2 B;
  double residual = 0.0;
};
AffineFit fit_affine_jacobians(const Eigen::MatrixX3d& design, const Eigen::MatrixX2d& response);

struct NumericalMapEstimate {
  AffineFit minus;
  AffineFit plus;
  int samples = 0;
  double perturbation_scale = 0.0;
  std::uint64_t seed = 0;
};

// Fits both branches from event-driven simulations of one period started at
// perturbed (x, T). Each branch is simulated with the cam replaced near the
// corner by that side's closed form, continued across the corner.
NumericalMapEstimate estimate_map_numerically(const CornerContext& ctx, int M, double perturbation_scale,
                                              std::uint64_t seed, double half_window = 0.05, unsigned threads = 0);

// Per-entry comparison of an estimate against the analytic map, |est - a| / |a|.
struct EntryDiscrepancy {
  std::string matrix;  // A_minus, A_plus, B_minus, B_plus
  int row = 0, col = 0;
  double analytic = 0.0, estimate = 0.0, relative = 0.0;
};
std::vector<EntryDiscrepancy> compare_estimate(const LocalPWLMap& map, const NumericalMapEstimate& est);
double max_relative_discrepancy(const std::vector<EntryDiscrepancy>& d);

}  // namespace cornerimpact
