#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cornerimpact/corner_map.hpp"

namespace cornerimpact {

class UnobservableBoundary : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Companion form of the local map. Coordinates: first the shift
// dx~1 = dx1 + (D / c1) dT removes dT from the switching surface, then
// x_bar = W x~ with W = T O, O = [C; C A-], T = [[1, 0], [d1, 1]].
struct CanonicalizedMap {
  Eigen::Matrix2d A_bar_minus = Eigen::Matrix2d::Zero();  // [[tr, 1], [-det, 0]]
  Eigen::Matrix2d A_bar_plus = Eigen::Matrix2d::Zero();
  Vec2 B_tilde = Vec2::Zero();       // from the minus branch
  Vec2 B_tilde_plus = Vec2::Zero();  // same formula from the plus branch
  Vec2 B_bar = Vec2::Zero();         // W B_tilde, informational
  Eigen::RowVector2d C_bar = Eigen::RowVector2d(1.0, 0.0);
  Eigen::Matrix2d W = Eigen::Matrix2d::Identity();
  double shift = 0.0;  // D / c1

  // Relative disagreement between the two B_tilde formulas.
  double b_tilde_mismatch() const;
};

CanonicalizedMap canonicalize(const LocalPWLMap& map);

enum class Verdict { NonsmoothFold, Persistence, Undetermined };
std::string to_string(Verdict v);

struct ClassificationResult {
  std::array<std::complex<double>, 2> eig_minus;
  std::array<std::complex<double>, 2> eig_plus;
  int above_one_minus = 0;  // real eigenvalues > 1
  int above_one_plus = 0;
  int below_minus_one_minus = 0;  // real eigenvalues < -1
  int below_minus_one_plus = 0;
  Verdict verdict = Verdict::Undetermined;
};

ClassificationResult classify(const LocalPWLMap& map);

struct BranchFixedPoint {
  int branch = -1;  // -1 or +1
  Vec2 x = Vec2::Zero();
  double sigma = 0.0;  // orientation * (C x + D dT)
  bool admissible = false;
  bool stable = false;
};

// Fixed points of the two affine pieces at a given dT.
std::array<BranchFixedPoint, 2> branch_fixed_points(const LocalPWLMap& map, double delta_T);

struct LocalDiagramPoint {
  double delta_T = 0.0;
  std::array<BranchFixedPoint, 2> fixed_points;
  std::vector<double> orbit;  // dx1 of recorded iterates, all seeds
  int escaped = 0;            // seeds that left the escape radius
};

struct LocalDiagram {
  std::vector<LocalDiagramPoint> points;
  int seeds_per_point = 0;
};

struct LocalIterationConfig {
  double delta_T_min = -1e-4;
  double delta_T_max = 1e-4;
  int n_points = 101;
  int iterations = 2000;  // the fold side drifts out slowly when an eigenvalue is barely above one
  int transient = 1900;
  int seeds = 8;
  std::uint64_t seed = 1;
};

LocalDiagram iterate_local_map(const LocalPWLMap& map, const LocalIterationConfig& cfg);

// delta_T,branch,value,stability
void write_local_diagram_csv(std::ostream& os, const LocalDiagram& d);
void write_classification_text(std::ostream& os, const ClassificationResult& c, const CanonicalizedMap* canon);

}  // namespace cornerimpact
