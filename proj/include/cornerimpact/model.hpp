#pragma once

#include <optional>

#include "cornerimpact/cam_profile.hpp"
#include "cornerimpact/event_simulator.hpp"
#include "cornerimpact/follower_dynamics.hpp"

namespace cornerimpact {

// Everything a simulation needs apart from the cam speed.
struct Model {
  CamGeometry geometry;
  PhysicalParams params;
  double phase_offset = 0.0;  // cam phase at t = 0
  SimConfig sim;

  CamDrive drive(double omega, std::optional<BranchOverride> ov = std::nullopt) const {
    return CamDrive(geometry, omega, phase_offset, ov);
  }
};

double rpm_to_rad_s(double rpm);
double rad_s_to_rpm(double omega);

}  // namespace cornerimpact
