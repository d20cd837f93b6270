#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "cornerimpact/bc_classifier.hpp"
#include "cornerimpact/bifurcation_scan.hpp"
#include "cornerimpact/model.hpp"

namespace cornerimpact {

// Input error carrying the 1-based line of the offending entry (0 if none).
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& msg, int line);
  int line() const { return line_; }

 private:
  int line_;
};

struct CornerSeed {
  int boundary = 1;
  double omega_lo_rpm = 0.0;  // bracket for the corner speed; 0 = not given
  double omega_hi_rpm = 0.0;
  bool has_bracket() const { return omega_lo_rpm > 0 && omega_hi_rpm > 0; }
};

struct EstimateConfig {
  int samples = 60;
  double perturbation_scale = 1e-6;
  std::uint64_t seed = 12345;
  double half_window = 0.05;
};

// Speeds in rpm, everything else SI, angles in radians.
struct Scenario {
  Model model;
  std::optional<FollowerState> initial;  // at the first strobe time; default rides the cam
  ScanConfig scan;
  CornerSeed corner;
  EstimateConfig estimate;
  LocalIterationConfig local;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text);

// Initial state for a simulation at `omega`: the scenario's, or the cam state.
FollowerState initial_state(const Scenario& s, double omega);

}  // namespace cornerimpact
