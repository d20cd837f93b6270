#include "cornerimpact/follower_dynamics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cornerimpact {

void PhysicalParams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid physical parameters: " + what); };
  for (double v : {mass, damping, stiffness, gravity, restitution}) {
    if (!std::isfinite(v)) fail("non-finite value");
  }
  if (!(mass > 0)) fail("mass must be positive");
  if (!(stiffness > 0)) fail("stiffness must be positive");
  if (!(gravity > 0)) fail("gravity must be positive");
  if (!(damping >= 0)) fail("damping must be non-negative");
  if (!(restitution >= 0 && restitution <= 1)) fail("restitution must lie in [0, 1]");
  if (!(zeta() < std::sqrt(stiffness / mass))) fail("follower must be underdamped (zeta < omega0)");
}

double PhysicalParams::omega0() const { return std::sqrt(stiffness / mass); }

double PhysicalParams::omega_s() const {
  const double w0 = omega0(), z = zeta();
  return std::sqrt(w0 * w0 - z * z);
}

Vec2 to_shifted(const PhysicalParams& p, const FollowerState& s) { return {s.q + p.shift(), s.qdot}; }

FollowerState from_shifted(const PhysicalParams& p, const Vec2& x) { return {x(0) - p.shift(), x(1)}; }

Vec2 to_shifted(const PhysicalParams& p, const CamState& c) { return {c.position + p.shift(), c.velocity}; }

Eigen::Matrix2d system_matrix(const PhysicalParams& p) {
  const double w0 = p.omega0();
  Eigen::Matrix2d s;
  s << 0.0, 1.0, -w0 * w0, -2.0 * p.zeta();
  return s;
}

FlowMatrix flow_operator(const PhysicalParams& p, double t) {
  const double z = p.zeta(), w0 = p.omega0(), ws = p.omega_s();
  const double e = std::exp(-z * t) / ws;
  const double sn = std::sin(ws * t), cs = std::cos(ws * t);
  FlowMatrix m;
  m << e * (ws * cs + z * sn), e * sn, -e * w0 * w0 * sn, e * (ws * cs - z * sn);
  return m;
}

FlowMatrix flow_operator_time_derivative(const PhysicalParams& p, double t) {
  // d/dt of each entry of the closed form; equals S phi_t.
  const double z = p.zeta(), w0 = p.omega0(), ws = p.omega_s();
  const double e = std::exp(-z * t) / ws;
  const double sn = std::sin(ws * t), cs = std::cos(ws * t);
  const double w02 = w0 * w0;
  FlowMatrix m;
  m(0, 0) = e * (-z * (ws * cs + z * sn) + ws * (-ws * sn + z * cs));
  m(0, 1) = e * (-z * sn + ws * cs);
  m(1, 0) = -w02 * e * (-z * sn + ws * cs);
  m(1, 1) = e * (-z * (ws * cs - z * sn) + ws * (-ws * sn - z * cs));
  return m;
}

FollowerState free_flight(const PhysicalParams& p, const FollowerState& s, double t) {
  return from_shifted(p, flow_operator(p, t) * to_shifted(p, s));
}

FollowerState apply_impact(const PhysicalParams& p, const FollowerState& s, const CamState& cam, double tol_pen) {
  if (!(std::abs(s.q - cam.position) <= tol_pen)) {
    std::ostringstream os;
    os.precision(17);
    os << "apply_impact called without contact: q - c = " << s.q - cam.position;
    throw std::logic_error(os.str());
  }
  const double r = p.restitution;
  return {s.q, (1.0 + r) * cam.velocity - r * s.qdot};
}

double contact_force(const PhysicalParams& p, const LiftJet& j) {
  return p.mass * j.ddc + p.damping * j.dc + p.stiffness * j.c + p.mass * p.gravity;
}

double contact_force(const PhysicalParams& p, const CamGeometry& geom, double t, double omega, Side side,
                     double phase_offset) {
  return contact_force(p, CamDrive(geom, omega, phase_offset).time_jet(t, side));
}

}  // namespace cornerimpact
