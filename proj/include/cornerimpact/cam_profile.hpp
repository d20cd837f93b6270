#pragma once

#include <array>
#include <optional>
#include <vector>

namespace cornerimpact {

// Which one-sided limit to take at a segment boundary. Left is the limit
// from smaller phase (earlier time for a forward-rotating cam).
enum class Side { Left, Right };

struct CamState {
  double position = 0.0;
  double velocity = 0.0;
};

// Lift and its first two phase derivatives at one phase.
struct LiftJet {
  double c = 0.0;
  double dc = 0.0;
  double ddc = 0.0;
};

struct Discontinuity {
  double phase = 0.0;   // in [0, 2pi)
  double jump = 0.0;    // d2c/dtheta2 right minus left
  int boundary = 0;     // index into CamGeometry::boundaries()
};

// Four-segment cam: base circle, flank arc, nose arc, top circle on (0, pi],
// mirrored onto (pi, 2pi).
class CamGeometry {
 public:
  struct Params {
    double kappa1 = 0.0, kappa2 = 0.0;
    double rho0 = 0.0, rho1 = 0.0, rho2 = 0.0, rho3 = 0.0;
    double theta1 = 0.0, theta2 = 0.0, theta3 = 0.0;
  };

  // Throws std::invalid_argument if the profile is not a valid C1 cam.
  explicit CamGeometry(const Params& p);

  // Builds the flank arc tangent to both circles, given the base circle,
  // nose arc and top circle. Returns a fully populated, validated geometry.
  static CamGeometry from_tangent_arcs(double rho0, double rho2, double rho3,
                                       double theta1, double theta3);

  const Params& params() const { return p_; }

  // Segment boundaries in [0, 2pi), ascending. Seven entries: the three
  // profile boundaries, pi, and the three mirrored boundaries.
  const std::array<double, 7>& boundaries() const { return bounds_; }

  // Segment 0..7 containing the reduced phase. Boundaries belong to the
  // segment on their left; phase 0 belongs to segment 0.
  int segment_of(double theta) const;

  // Lift jet of one segment's closed form, evaluated at any phase (the
  // formula is continued beyond the segment when asked to).
  LiftJet segment_jet(int segment, double theta) const;

  // One-sided jet at theta. Away from boundaries both sides agree.
  LiftJet jet(double theta, Side side = Side::Left) const;

  std::vector<Discontinuity> discontinuities() const;

 private:
  Params p_;
  std::array<double, 7> bounds_{};
  void validate() const;
};

double reduce_phase(double theta);

double eval_lift(const CamGeometry& geom, double theta);
std::vector<Discontinuity> discontinuity_phases(const CamGeometry& geom);

// Replace the profile in a phase window around one boundary by the closed
// form of the segment on the chosen side, continued analytically across the
// boundary. Used to simulate a single branch of the corner map.
struct BranchOverride {
  int boundary = 0;
  Side side = Side::Left;
  double half_window = 0.05;  // rad
};

// A cam turning at constant speed. Phase at time t is omega*t + phase_offset.
class CamDrive {
 public:
  CamDrive(const CamGeometry& geom, double omega, double phase_offset = 0.0,
           std::optional<BranchOverride> override = std::nullopt);

  const CamGeometry& geometry() const { return geom_; }
  double omega() const { return omega_; }
  double period() const;
  double phase_offset() const { return offset_; }
  double phase(double t) const { return omega_ * t + offset_; }

  CamState state(double t) const;
  double acceleration(double t, Side side = Side::Left) const;
  // c, dc/dt, d2c/dt2 at time t.
  LiftJet time_jet(double t, Side side = Side::Left) const;

  // Identifier of the closed form active at time t (a segment 0..7, or
  // kOverrideFormula inside the override window), and evaluation of a given
  // closed form at any time. Lets callers keep one smooth formula across a
  // search interval even where rounding puts an endpoint on a boundary.
  static constexpr int kOverrideFormula = 8;
  int formula_at(double t) const;
  LiftJet formula_jet(int formula, double t) const;

  // Times in the open interval (t0, t1) at which the active closed form
  // changes: segment boundaries and override window edges. Ascending.
  std::vector<double> breakpoints(double t0, double t1) const;

 private:
  CamGeometry geom_;
  double omega_;
  double offset_;
  std::optional<BranchOverride> override_;
  LiftJet phase_jet(double theta, Side side) const;
};

CamState eval_state(const CamGeometry& geom, double t, double omega, double phase_offset = 0.0);
double eval_acceleration(const CamGeometry& geom, double t, double omega, Side side,
                         double phase_offset = 0.0);

}  // namespace cornerimpact
