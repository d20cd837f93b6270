#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cornerimpact/cam_profile.hpp"
#include "cornerimpact/follower_dynamics.hpp"

namespace cornerimpact {

struct SimConfig {
  double tol_event = 1e-12;          // s
  double tol_pen = 1e-9;             // m
  double eps_stick_v = 1e-5;         // m/s
  int max_impacts_per_period = 2000;
  double strobe_phase = -3.141592653589793;  // cam phase (minus offset) at which to sample

  void validate() const;
};

enum class Mode { FreeFlight, Sticking };

struct ImpactEvent {
  double t = 0.0;
  double phase = 0.0;  // cam phase in [0, 2pi)
  double pre_velocity = 0.0;
  double post_velocity = 0.0;
  double cam_velocity = 0.0;
  int at_corner = -1;  // boundary index when the impact lands on a corner, else -1
};

struct StickingInterval {
  double t_start = 0.0;
  double t_end = 0.0;
};

struct StrobeSample {
  long n = 0;
  double t = 0.0;
  FollowerState state;
};

// One stretch of constant mode. For FreeFlight, `state` is the follower
// state at t_start; for Sticking the follower rides the cam.
struct ModeSegment {
  Mode mode = Mode::FreeFlight;
  double t_start = 0.0;
  double t_end = 0.0;
  FollowerState state;
};

struct Trajectory {
  double t0 = 0.0;
  double t_end = 0.0;
  std::vector<StrobeSample> strobes;
  std::vector<ImpactEvent> impacts;
  std::vector<StickingInterval> sticking;
  std::vector<ModeSegment> modes;
  bool chattering_overflow = false;  // truncated at t_end because of too many impacts
  FollowerState final_state;
  Mode final_mode = Mode::FreeFlight;
};

class ImpactPolishError : public std::runtime_error {
 public:
  ImpactPolishError(const std::string& what, double lo, double hi)
      : std::runtime_error(what), bracket_lo(lo), bracket_hi(hi) {}
  double bracket_lo, bracket_hi;
};

struct ImpactHit {
  double t = 0.0;
  FollowerState state;  // pre-impact
};

// Outcome of a flight search. `contact` means the follower cannot separate
// from the cam at t0 (no positive gap opens), so the caller should stick.
struct FlightOutcome {
  std::optional<ImpactHit> hit;
  bool contact = false;
};

// Smallest t in (t0, t0 + horizon] at which the follower lands on the cam.
FlightOutcome find_next_flight_end(const FollowerState& state, double t0, double horizon, const CamDrive& drive,
                                   const PhysicalParams& params, const SimConfig& config);

std::optional<ImpactHit> find_next_impact(const FollowerState& state, double t0, double horizon,
                                          const CamDrive& drive, const PhysicalParams& params,
                                          const SimConfig& config);

// Starts in free flight unless the follower sits on the cam with no
// separating velocity, in which case it starts stuck.
Trajectory simulate(const FollowerState& x0, double t0, double duration, const CamDrive& drive,
                    const PhysicalParams& params, const SimConfig& config);

std::vector<FollowerState> stroboscopic_sequence(const Trajectory& traj);

// Follower state at time t reconstructed from the mode history.
FollowerState sample_trajectory(const Trajectory& traj, double t, const CamDrive& drive,
                                const PhysicalParams& params);

// First strobe time strictly after t for a drive with the given config.
double next_strobe_time(double t, const CamDrive& drive, const SimConfig& config);

void write_strobe_csv(std::ostream& os, const Trajectory& traj);
void write_impact_csv(std::ostream& os, const Trajectory& traj);
void write_sticking_csv(std::ostream& os, const Trajectory& traj);

}  // namespace cornerimpact
