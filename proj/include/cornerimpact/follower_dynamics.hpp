#pragma once

#include <Eigen/Dense>

#include "cornerimpact/cam_profile.hpp"

namespace cornerimpact {

struct PhysicalParams {
  double mass = 1.0;
  double damping = 0.0;
  double stiffness = 1.0;
  double gravity = 9.81;
  double restitution = 0.8;

  // Throws std::invalid_argument unless m, k, g > 0, b >= 0, 0 <= r <= 1
  // and the follower is underdamped.
  void validate() const;

  double zeta() const { return damping / (2.0 * mass); }
  double omega0() const;
  double omega_s() const;
  // Static deflection g / omega0^2; the shifted position is q + this.
  double shift() const { return gravity * mass / stiffness; }
};

struct FollowerState {
  double q = 0.0;
  double qdot = 0.0;
};

using Vec2 = Eigen::Vector2d;
using FlowMatrix = Eigen::Matrix2d;

Vec2 to_shifted(const PhysicalParams& p, const FollowerState& s);
FollowerState from_shifted(const PhysicalParams& p, const Vec2& x);
// Cam state in shifted coordinates, y = [c + g/omega0^2, c'].
Vec2 to_shifted(const PhysicalParams& p, const CamState& c);

// [[0, 1], [-omega0^2, -2 zeta]]
Eigen::Matrix2d system_matrix(const PhysicalParams& p);

FlowMatrix flow_operator(const PhysicalParams& p, double t);
FlowMatrix flow_operator_time_derivative(const PhysicalParams& p, double t);

FollowerState free_flight(const PhysicalParams& p, const FollowerState& s, double t);

// Restitution law. Throws std::logic_error if the follower is not within
// tol_pen of the cam.
FollowerState apply_impact(const PhysicalParams& p, const FollowerState& s, const CamState& cam,
                           double tol_pen = 1e-9);

// Normal force needed to keep the follower on the cam: m c'' + b c' + k c + m g.
double contact_force(const PhysicalParams& p, const LiftJet& cam_time_jet);
double contact_force(const PhysicalParams& p, const CamGeometry& geom, double t, double omega, Side side,
                     double phase_offset = 0.0);

}  // namespace cornerimpact
