#include "cornerimpact/cam_profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cornerimpact {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Piece { Base, Flank, Nose, Top };

constexpr std::array<Piece, 8> kPieceOfSegment = {Piece::Base, Piece::Flank, Piece::Nose, Piece::Top,
                                                  Piece::Top,  Piece::Nose,  Piece::Flank, Piece::Base};

// Arc of radius rho whose centre sits at distance kappa from the cam axis.
// s = +1 for the nose form  kappa sin u + sqrt(rho^2 - kappa^2 cos^2 u),
// s = -1 for the flank form -kappa sin u + sqrt(...).
LiftJet arc_jet(double s, double kappa, double rho, double u) {
  const double su = std::sin(u), cu = std::cos(u);
  const double q = rho * rho - kappa * kappa * cu * cu;
  if (!(q > 0.0)) {
    throw std::domain_error("cam arc evaluated outside its real domain");
  }
  const double sq = std::sqrt(q);
  const double k2 = kappa * kappa;
  LiftJet j;
  j.c = s * kappa * su + sq;
  j.dc = s * kappa * cu + k2 * su * cu / sq;
  j.ddc = -s * kappa * su + k2 * std::cos(2.0 * u) / sq - k2 * k2 * su * su * cu * cu / (q * sq);
  return j;
}

}  // namespace

double reduce_phase(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

CamGeometry::CamGeometry(const Params& p) : p_(p) {
  const double a = kPi / 2 - p.theta1, b = kPi / 2 - p.theta2, c = kPi / 2 - p.theta3;
  bounds_ = {a, b, c, kPi, kTwoPi - c, kTwoPi - b, kTwoPi - a};
  validate();
}

void CamGeometry::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid cam geometry: " + what); };
  const auto& p = p_;
  for (double v : {p.kappa1, p.kappa2, p.rho0, p.rho1, p.rho2, p.rho3, p.theta1, p.theta2, p.theta3}) {
    if (!std::isfinite(v)) fail("non-finite parameter");
  }
  if (!(p.rho0 > 0 && p.rho1 > 0 && p.rho2 > 0 && p.rho3 > 0)) fail("radii must be positive");
  if (!(p.kappa1 >= 0 && p.kappa2 >= 0)) fail("centre offsets must be non-negative");
  if (!(p.rho0 < p.rho3)) fail("rho0 must be smaller than rho3");
  if (!(-kPi / 2 < p.theta3 && p.theta3 < p.theta2 && p.theta2 < p.theta1 && p.theta1 < kPi / 2)) {
    fail("angles must satisfy -pi/2 < theta3 < theta2 < theta1 < pi/2");
  }
  // The arcs must be real over their own segments.
  for (int seg : {1, 2}) {
    for (int k = 0; k <= 16; ++k) {
      const double th = bounds_[seg - 1] + (bounds_[seg] - bounds_[seg - 1]) * k / 16.0;
      try {
        segment_jet(seg, th);
      } catch (const std::domain_error&) {
        fail("arc segment " + std::to_string(seg) + " is not real over its phase interval");
      }
    }
  }
  // C1 at every boundary, and at least one acceleration jump.
  const double tol_c = 1e-12 * p.rho0, tol_dc = 1e-9 * p.rho0;
  bool any_jump = false;
  for (int i = 0; i < 7; ++i) {
    const LiftJet l = segment_jet(i, bounds_[i]);
    const LiftJet r = segment_jet(i + 1, bounds_[i]);
    if (std::abs(l.c - r.c) > tol_c) {
      std::ostringstream os;
      os.precision(17);
      os << "lift discontinuous at boundary " << i << " (jump " << r.c - l.c << ")";
      fail(os.str());
    }
    if (std::abs(l.dc - r.dc) > tol_dc) {
      std::ostringstream os;
      os.precision(17);
      os << "slope discontinuous at boundary " << i << " (jump " << r.dc - l.dc << ")";
      fail(os.str());
    }
    if (std::abs(l.ddc - r.ddc) > 0.0) any_jump = true;
  }
  if (!any_jump) fail("profile has no acceleration discontinuity");
}

CamGeometry CamGeometry::from_tangent_arcs(double rho0, double rho2, double rho3, double theta1,
                                           double theta3) {
  // Centres along unit vectors from the axis, in the (x, y) frame where the
  // follower ray at phase theta points along (sin theta, cos theta).
  const double kappa2 = rho3 - rho2;
  const double v1x = -std::cos(theta1), v1y = -std::sin(theta1);
  const double o2x = kappa2 * std::cos(theta3), o2y = kappa2 * std::sin(theta3);
  const double p = v1x * o2x + v1y * o2y;
  // |O2 - O1| = rho1 - rho2 with |O1| = rho1 - rho0 along v1.
  const double rho1 = (rho2 * rho2 - rho0 * rho0 - kappa2 * kappa2 - 2.0 * rho0 * p) / (2.0 * (rho2 - rho0 - p));
  const double kappa1 = rho1 - rho0;
  const double o1x = kappa1 * v1x, o1y = kappa1 * v1y;
  const double dx = o2x - o1x, dy = o2y - o1y;
  const double d = std::hypot(dx, dy);
  const double px = o1x + rho1 * dx / d, py = o1y + rho1 * dy / d;
  const double theta2 = kPi / 2 - std::atan2(px, py);
  Params prm;
  prm.kappa1 = kappa1;
  prm.kappa2 = kappa2;
  prm.rho0 = rho0;
  prm.rho1 = rho1;
  prm.rho2 = rho2;
  prm.rho3 = rho3;
  prm.theta1 = theta1;
  prm.theta2 = theta2;
  prm.theta3 = theta3;
  return CamGeometry(prm);
}

int CamGeometry::segment_of(double theta) const {
  const double r = reduce_phase(theta);
  // First boundary >= r; boundaries close the segment on their left.
  const auto it = std::lower_bound(bounds_.begin(), bounds_.end(), r);
  return static_cast<int>(it - bounds_.begin());
}

LiftJet CamGeometry::segment_jet(int segment, double theta) const {
  const Piece piece = kPieceOfSegment.at(static_cast<std::size_t>(segment));
  const bool mirrored = segment >= 4;
  const double th = mirrored ? kTwoPi - theta : theta;
  LiftJet j;
  switch (piece) {
    case Piece::Base: j.c = p_.rho0; break;
    case Piece::Top: j.c = p_.rho3; break;
    case Piece::Flank: j = arc_jet(-1.0, p_.kappa1, p_.rho1, th + p_.theta1); break;
    case Piece::Nose: j = arc_jet(+1.0, p_.kappa2, p_.rho2, th + p_.theta3); break;
  }
  if (mirrored) j.dc = -j.dc;
  return j;
}

LiftJet CamGeometry::jet(double theta, Side side) const {
  const double r = reduce_phase(theta);
  int seg = segment_of(r);
  if (side == Side::Right && seg < 7 && r == bounds_[static_cast<std::size_t>(seg)]) ++seg;
  return segment_jet(seg, r);
}

std::vector<Discontinuity> CamGeometry::discontinuities() const {
  std::vector<Discontinuity> out;
  for (int i = 0; i < 7; ++i) {
    const double jump = segment_jet(i + 1, bounds_[i]).ddc - segment_jet(i, bounds_[i]).ddc;
    if (std::abs(jump) > 1e-12 * p_.rho3) out.push_back({bounds_[i], jump, i});
  }
  return out;
}

double eval_lift(const CamGeometry& geom, double theta) { return geom.jet(theta).c; }

std::vector<Discontinuity> discontinuity_phases(const CamGeometry& geom) { return geom.discontinuities(); }

CamDrive::CamDrive(const CamGeometry& geom, double omega, double phase_offset,
                   std::optional<BranchOverride> override)
    : geom_(geom), omega_(omega), offset_(phase_offset), override_(override) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("cam speed must be positive");
  if (override_ && (override_->boundary < 0 || override_->boundary > 6 || !(override_->half_window > 0.0))) {
    throw std::invalid_argument("bad branch override");
  }
}

double CamDrive::period() const { return kTwoPi / omega_; }

LiftJet CamDrive::phase_jet(double theta, Side side) const {
  if (override_) {
    const double beta = geom_.boundaries()[static_cast<std::size_t>(override_->boundary)];
    const double d = std::remainder(theta - beta, kTwoPi);
    if (std::abs(d) < override_->half_window) {
      const int seg = override_->boundary + (override_->side == Side::Right ? 1 : 0);
      return geom_.segment_jet(seg, beta + d);
    }
  }
  return geom_.jet(theta, side);
}

int CamDrive::formula_at(double t) const {
  const double theta = phase(t);
  if (override_) {
    const double beta = geom_.boundaries()[static_cast<std::size_t>(override_->boundary)];
    if (std::abs(std::remainder(theta - beta, kTwoPi)) < override_->half_window) return kOverrideFormula;
  }
  return geom_.segment_of(theta);
}

LiftJet CamDrive::formula_jet(int formula, double t) const {
  const double theta = phase(t);
  LiftJet j;
  if (formula == kOverrideFormula) {
    const double beta = geom_.boundaries()[static_cast<std::size_t>(override_->boundary)];
    const int seg = override_->boundary + (override_->side == Side::Right ? 1 : 0);
    j = geom_.segment_jet(seg, beta + std::remainder(theta - beta, kTwoPi));
  } else {
    // Keep the argument near the segment's own interval so mirrored
    // segments see 2pi - theta in (pi, 2pi) and not a wrapped value.
    const double mid = formula == 0 ? 0.5 * geom_.boundaries()[0]
                       : formula == 7 ? 0.5 * (geom_.boundaries()[6] + kTwoPi)
                                      : 0.5 * (geom_.boundaries()[static_cast<std::size_t>(formula - 1)] +
                                               geom_.boundaries()[static_cast<std::size_t>(formula)]);
    j = geom_.segment_jet(formula, mid + std::remainder(theta - mid, kTwoPi));
  }
  j.dc *= omega_;
  j.ddc *= omega_ * omega_;
  return j;
}

LiftJet CamDrive::time_jet(double t, Side side) const {
  LiftJet j = phase_jet(phase(t), side);
  j.dc *= omega_;
  j.ddc *= omega_ * omega_;
  return j;
}

CamState CamDrive::state(double t) const {
  const LiftJet j = time_jet(t);
  return {j.c, j.dc};
}

double CamDrive::acceleration(double t, Side side) const { return time_jet(t, side).ddc; }

std::vector<double> CamDrive::breakpoints(double t0, double t1) const {
  std::vector<double> phases(geom_.boundaries().begin(), geom_.boundaries().end());
  if (override_) {
    const double beta = geom_.boundaries()[static_cast<std::size_t>(override_->boundary)];
    phases.push_back(beta - override_->half_window);
    phases.push_back(beta + override_->half_window);
  }
  std::vector<double> out;
  const double th0 = phase(t0), th1 = phase(t1);
  for (double b : phases) {
    // Phases b + 2 pi k inside (th0, th1).
    for (double k = std::floor((th0 - b) / kTwoPi); b + k * kTwoPi < th1; k += 1.0) {
      const double t = (b + k * kTwoPi - offset_) / omega_;
      if (t > t0 && t < t1) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

CamState eval_state(const CamGeometry& geom, double t, double omega, double phase_offset) {
  return CamDrive(geom, omega, phase_offset).state(t);
}

double eval_acceleration(const CamGeometry& geom, double t, double omega, Side side, double phase_offset) {
  return CamDrive(geom, omega, phase_offset).acceleration(t, side);
}

}  // namespace cornerimpact
