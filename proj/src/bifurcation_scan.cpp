#include "cornerimpact/bifurcation_scan.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "cornerimpact/parallel.hpp"

namespace cornerimpact {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_abs(const FollowerState& s) { return std::max(std::abs(s.q), std::abs(s.qdot)); }
}  // namespace

double rpm_to_rad_s(double rpm) { return rpm * kTwoPi / 60.0; }
double rad_s_to_rpm(double omega) { return omega * 60.0 / kTwoPi; }

void ScanConfig::validate() const {
  if (!(omega_min_rpm > 0 && omega_min_rpm < omega_max_rpm)) {
    throw std::invalid_argument("scan range must satisfy 0 < omega_min < omega_max");
  }
  if (n_points < 2) throw std::invalid_argument("scan needs at least two points");
  if (record_periods < 1) throw std::invalid_argument("record_periods must be at least 1");
  if (transient_periods < 0) throw std::invalid_argument("transient_periods must be non-negative");
}

bool ScanPoint::single_impact_period_one(int record_periods) const {
  return !failed && period == 1 && sticking_intervals == 0 &&
         impact_phases.size() == static_cast<std::size_t>(record_periods);
}

int detect_period(const std::vector<FollowerState>& strobes, int max_period, double tol) {
  const int n = static_cast<int>(strobes.size());
  for (int p = 1; p <= max_period && p < n; ++p) {
    bool ok = true;
    for (int i = 0; ok && i + p < n; ++i) {
      const auto& a = strobes[static_cast<std::size_t>(i)];
      const auto& b = strobes[static_cast<std::size_t>(i + p)];
      const double scale = std::max(1.0, max_abs(a));
      ok = std::abs(a.q - b.q) <= tol * scale && std::abs(a.qdot - b.qdot) <= tol * scale;
    }
    if (ok) return p;
  }
  return -1;
}

namespace {

ScanPoint run_point(const ScanConfig& cfg, const Model& model, double omega_rpm, const FollowerState& x0) {
  ScanPoint pt;
  pt.omega_rpm = omega_rpm;
  pt.end_state = x0;
  try {
    const double omega = rpm_to_rad_s(omega_rpm);
    const CamDrive drive = model.drive(omega);
    const double T = drive.period();
    const double ts = model.sim.strobe_phase / omega;
    // Iterate the stroboscopic map one period at a time, always from the
    // same local time origin. One long run would carry rounding from the
    // growing absolute time, which chattering amplifies enough to blur
    // orbits that sticking makes exactly periodic.
    FollowerState x = x0;
    bool was_sticking = false;
    const int total = cfg.transient_periods + cfg.record_periods;
    for (int k = 0; k < total; ++k) {
      const Trajectory tr = simulate(x, ts, T, drive, model.params, model.sim);
      if (tr.chattering_overflow) {
        throw std::runtime_error(fmt::format("chattering overflow in period {} at t = {}", k, tr.t_end));
      }
      if (tr.strobes.size() != 1) throw std::runtime_error("period did not produce exactly one strobe sample");
      x = tr.strobes.back().state;
      if (k >= cfg.transient_periods) {
        for (const auto& e : tr.impacts) pt.impact_phases.push_back(e.phase);
        pt.strobes.push_back(x);
        for (const auto& st : tr.sticking) {
          // an interval carried over from the previous recorded period is not new
          if (k == cfg.transient_periods || !(was_sticking && st.t_start == ts)) ++pt.sticking_intervals;
        }
      }
      was_sticking = tr.final_mode == Mode::Sticking;
    }
    pt.period = detect_period(pt.strobes);
    pt.end_state = pt.strobes.back();
  } catch (const std::exception& e) {
    pt.failed = true;
    pt.error = e.what();
    pt.impact_phases.clear();
    pt.strobes.clear();
    pt.period = -1;
  }
  return pt;
}

}  // namespace

BifurcationDiagram scan(const ScanConfig& config, const Model& model) {
  config.validate();
  BifurcationDiagram d;
  d.config = config;
  const auto n = static_cast<std::size_t>(config.n_points);
  d.points.resize(n);
  auto rpm_at = [&](std::size_t i) {
    return config.omega_min_rpm + (config.omega_max_rpm - config.omega_min_rpm) * double(i) / double(n - 1);
  };
  if (config.continuation) {
    FollowerState x = config.seed;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = config.descending ? n - 1 - k : k;
      d.points[i] = run_point(config, model, rpm_at(i), x);
      if (!d.points[i].failed) x = d.points[i].end_state;
    }
  } else {
    parallel_for(
        n, [&](std::size_t i) { d.points[i] = run_point(config, model, rpm_at(i), config.seed); }, config.threads);
  }
  return d;
}

StrobeMapResult strobe_map(const Model& model, double omega, const FollowerState& x,
                           std::optional<BranchOverride> ov) {
  const CamDrive drive = model.drive(omega, ov);
  const double T = drive.period();
  const double ts = model.sim.strobe_phase / omega;
  const Trajectory tr = simulate(x, ts, T, drive, model.params, model.sim);
  StrobeMapResult r;
  r.impacts = tr.impacts;
  r.sticking = !tr.sticking.empty();
  r.overflow = tr.chattering_overflow;
  if (tr.strobes.size() != 1) throw std::runtime_error("strobe map did not produce exactly one sample");
  r.end = tr.strobes.back().state;
  return r;
}

std::optional<PeriodOneOrbit> solve_period_one(const Model& model, double omega, const FollowerState& seed,
                                               std::optional<BranchOverride> ov) {
  auto eval = [&](const Eigen::Vector2d& v) -> std::optional<StrobeMapResult> {
    try {
      StrobeMapResult r = strobe_map(model, omega, {v(0), v(1)}, ov);
      if (r.impacts.size() != 1 || r.sticking || r.overflow) return std::nullopt;
      return r;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  Eigen::Vector2d x(seed.q, seed.qdot);
  for (int it = 0; it < 40; ++it) {
    const auto r = eval(x);
    if (!r) return std::nullopt;
    const Eigen::Vector2d fx(r->end.q - x(0), r->end.qdot - x(1));
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    if (fx.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
      const double ts = model.sim.strobe_phase / omega;
      return PeriodOneOrbit{{x(0), x(1)}, r->impacts.front().phase, r->impacts.front().t - ts, it};
    }
    Eigen::Matrix2d J;
    for (int j = 0; j < 2; ++j) {
      const double h = 1e-7 * std::max(std::abs(x(j)), 1e-3 * x.cwiseAbs().maxCoeff());
      Eigen::Vector2d xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const auto rp = eval(xp), rm = eval(xm);
      if (!rp || !rm) return std::nullopt;
      J(0, j) = (rp->end.q - rm->end.q) / (2 * h);
      J(1, j) = (rp->end.qdot - rm->end.qdot) / (2 * h);
    }
    const Eigen::Vector2d step = (J - Eigen::Matrix2d::Identity()).partialPivLu().solve(-fx);
    if (!step.allFinite()) return std::nullopt;
    x += step;
  }
  return std::nullopt;
}

std::vector<CornerCrossing> locate_corner_crossing(const BifurcationDiagram& diagram, const Model& model,
                                                   double rel_tol, double half_window) {
  std::vector<CornerCrossing> out;
  const auto corners = model.geometry.discontinuities();
  const int R = diagram.config.record_periods;
  const auto& pts = diagram.points;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const ScanPoint& a = pts[i];
    const ScanPoint& b = pts[i + 1];
    const bool pa = a.single_impact_period_one(R), pb = b.single_impact_period_one(R);
    if (!pa && !pb) continue;

    struct Candidate {
      const Discontinuity* corner;
      double window;
    };
    std::vector<Candidate> cands;
    if (pa && pb) {
      for (const auto& c : corners) {
        const double da = std::remainder(a.impact_phases.back() - c.phase, kTwoPi);
        const double db = std::remainder(b.impact_phases.back() - c.phase, kTwoPi);
        if ((da > 0) != (db > 0) && std::abs(da) < 0.5 && std::abs(db) < 0.5) {
          cands.push_back({&c, std::max(half_window, 1.2 * std::max(std::abs(da), std::abs(db)))});
        }
      }
    } else {
      // The branch ends between the two points; a crossing if it ends on a corner.
      const ScanPoint& g = pa ? a : b;
      const Discontinuity* best = nullptr;
      double bd = 0.5;
      for (const auto& c : corners) {
        const double dg = std::abs(std::remainder(g.impact_phases.back() - c.phase, kTwoPi));
        if (dg < bd) {
          bd = dg;
          best = &c;
        }
      }
      if (best) cands.push_back({best, std::max(half_window, 1.2 * bd)});
    }

    for (const auto& cand : cands) {
      // good: the endpoint whose orbit is followed; other: the one across.
      const bool a_good = pa;
      const ScanPoint& good = a_good ? a : b;
      const ScanPoint& other = a_good ? b : a;
      const double beta = cand.corner->phase;
      const double d_good = std::remainder(good.impact_phases.back() - beta, kTwoPi);
      const Side side = d_good > 0 ? Side::Right : Side::Left;
      const BranchOverride ov{cand.corner->boundary, side, cand.window};

      double lo = rpm_to_rad_s(good.omega_rpm), hi = rpm_to_rad_s(other.omega_rpm);
      auto orbit = solve_period_one(model, lo, good.end_state, ov);
      if (!orbit) continue;
      auto on_good_side = [&](const PeriodOneOrbit& o) {
        return (std::remainder(o.impact_phase - beta, kTwoPi) > 0) == (d_good > 0);
      };
      if (!on_good_side(*orbit)) continue;
      PeriodOneOrbit last = *orbit;
      while (std::abs(hi - lo) > rel_tol * std::abs(lo)) {
        const double mid = 0.5 * (lo + hi);
        const auto o = solve_period_one(model, mid, last.strobe, ov);
        if (o && on_good_side(*o)) {
          lo = mid;
          last = *o;
        } else {
          hi = mid;
        }
      }
      // A branch that ends for another reason stays away from the corner.
      if (std::abs(std::remainder(last.impact_phase - beta, kTwoPi)) > 1e-4) continue;
      CornerCrossing cc;
      cc.omega_rpm = rad_s_to_rpm(0.5 * (lo + hi));
      cc.corner_phase = beta;
      cc.boundary = cand.corner->boundary;
      cc.branch_side = side;
      cc.bracket_lo_rpm = a.omega_rpm;
      cc.bracket_hi_rpm = b.omega_rpm;
      cc.strobe = last.strobe;
      out.push_back(cc);
    }
  }
  return out;
}

void write_impact_diagram_csv(std::ostream& os, const BifurcationDiagram& d) {
  os << "omega_rpm,phase_rad\n";
  for (const auto& p : d.points) {
    for (double ph : p.impact_phases) os << fmt::format("{},{}\n", p.omega_rpm, ph);
  }
}

void write_strobe_diagram_csv(std::ostream& os, const BifurcationDiagram& d) {
  os << "omega_rpm,q,qdot\n";
  for (const auto& p : d.points) {
    for (const auto& s : p.strobes) os << fmt::format("{},{},{}\n", p.omega_rpm, s.q, s.qdot);
  }
}

void write_summary_csv(std::ostream& os, const BifurcationDiagram& d) {
  // Failed points keep their row with period 0 so gaps stay visible.
  os << "omega_rpm,period_or_minus1\n";
  for (const auto& p : d.points) os << fmt::format("{},{}\n", p.omega_rpm, p.failed ? 0 : p.period);
}

}  // namespace cornerimpact
