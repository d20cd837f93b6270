#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cornerimpact/model.hpp"

namespace cornerimpact {

struct ScanConfig {
  double omega_min_rpm = 0.0;
  double omega_max_rpm = 0.0;
  int n_points = 2;
  int transient_periods = 200;
  int record_periods = 40;
  bool continuation = true;
  bool descending = true;  // sweep direction when following the attractor
  FollowerState seed;      // initial state at the strobe time
  unsigned threads = 0;    // worker count when continuation is off; 0 = all cores

  void validate() const;
};

struct ScanPoint {
  double omega_rpm = 0.0;
  std::vector<double> impact_phases;   // recorded window, in time order
  std::vector<FollowerState> strobes;  // recorded window
  int period = -1;                     // smallest p <= 16, or -1 when aperiodic
  int sticking_intervals = 0;
  bool failed = false;
  std::string error;
  FollowerState end_state;  // state at the last strobe, for continuation

  // Period-1 orbit with one impact per period and no sticking.
  bool single_impact_period_one(int record_periods) const;
};

struct BifurcationDiagram {
  ScanConfig config;
  std::vector<ScanPoint> points;  // ascending omega
};

// Strobe samples are p-periodic within tol, smallest p <= max_period, else -1.
int detect_period(const std::vector<FollowerState>& strobes, int max_period = 16, double tol = 1e-6);

BifurcationDiagram scan(const ScanConfig& config, const Model& model);

// One period of the stroboscopic map, simulated event by event from strobe
// time to strobe time.
struct StrobeMapResult {
  FollowerState end;
  std::vector<ImpactEvent> impacts;
  bool sticking = false;
  bool overflow = false;
};
StrobeMapResult strobe_map(const Model& model, double omega, const FollowerState& x,
                           std::optional<BranchOverride> ov = std::nullopt);

// Period-1 orbit with exactly one impact per period, found by Newton on the
// simulated stroboscopic map with a finite-difference Jacobian.
struct PeriodOneOrbit {
  FollowerState strobe;
  double impact_phase = 0.0;
  double impact_time = 0.0;  // within the period starting at the strobe
  int iterations = 0;
};
std::optional<PeriodOneOrbit> solve_period_one(const Model& model, double omega, const FollowerState& seed,
                                               std::optional<BranchOverride> ov = std::nullopt);

struct CornerCrossing {
  double omega_rpm = 0.0;
  double corner_phase = 0.0;
  int boundary = 0;
  Side branch_side = Side::Left;  // side of the corner the located orbit impacts on
  double bracket_lo_rpm = 0.0;    // bracketing scan points
  double bracket_hi_rpm = 0.0;
  FollowerState strobe;           // period-1 orbit at omega_rpm
};

// Crossings of the period-1 single-impact branch through corner phases.
// Bisection on omega to relative precision `rel_tol`; the side of the corner
// at each trial speed comes from the period-1 orbit continued through the
// corner on the branch's own segment formula.
std::vector<CornerCrossing> locate_corner_crossing(const BifurcationDiagram& diagram, const Model& model,
                                                   double rel_tol = 1e-8, double half_window = 0.05);

void write_impact_diagram_csv(std::ostream& os, const BifurcationDiagram& d);
void write_strobe_diagram_csv(std::ostream& os, const BifurcationDiagram& d);
void write_summary_csv(std::ostream& os, const BifurcationDiagram& d);

}  // namespace cornerimpact
