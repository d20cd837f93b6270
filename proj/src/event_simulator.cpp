#include "cornerimpact/event_simulator.hpp"

#include "detail/roots.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

namespace cornerimpact {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sub-step length used to bracket events inside a smooth stretch. Small
// enough that the gap has at most one extremum per step.
double substep(const CamDrive& drive, const PhysicalParams& params) {
  return std::min(drive.period(), kTwoPi / params.omega0()) / 64.0;
}

// A smooth stretch [a, b] on which one cam closed form is active.
struct Piece {
  double a, b;
  int formula;
};

// Splits [t0, t1] at cam breakpoints and then into sub-steps of at most h.
// Generated lazily so long horizons cost nothing when an event comes early.
class PieceWalker {
 public:
  PieceWalker(const CamDrive& drive, double t0, double t1, double h)
      : drive_(drive), t1_(t1), h_(h), cursor_(t0) {}

  bool next(Piece& out) {
    if (!(cursor_ < t1_)) return false;
    if (sub_left_ == 0) start_stretch();
    const double a = cursor_;
    const double b = sub_left_ == 1 ? stretch_end_ : stretch_start_ + (stretch_end_ - stretch_start_) *
                                                                           double(sub_total_ - sub_left_ + 1) /
                                                                           double(sub_total_);
    --sub_left_;
    cursor_ = b;
    out = {a, b, formula_};
    return true;
  }

 private:
  void start_stretch() {
    stretch_start_ = cursor_;
    // Breakpoints within one period ahead are enough to find the next one.
    const double look = std::min(t1_, cursor_ + drive_.period());
    const auto bps = drive_.breakpoints(cursor_, look);
    stretch_end_ = bps.empty() ? look : bps.front();
    formula_ = drive_.formula_at(0.5 * (stretch_start_ + stretch_end_));
    sub_total_ = std::max<long>(1, static_cast<long>(std::ceil((stretch_end_ - stretch_start_) / h_)));
    sub_left_ = sub_total_;
  }

  const CamDrive& drive_;
  double t1_, h_, cursor_;
  double stretch_start_ = 0, stretch_end_ = 0;
  int formula_ = 0;
  long sub_total_ = 0, sub_left_ = 0;
};

// Gap q - c along one free flight and one cam formula.
struct GapFn {
  const PhysicalParams& params;
  const CamDrive& drive;
  Vec2 x0;  // shifted follower state at t0
  double t0;
  int formula;

  struct Val {
    double g, dg, ddg;
  };

  Val operator()(double t) const {
    const Vec2 x = flow_operator(params, t - t0) * x0;
    const double w0 = params.omega0();
    const double q = x(0) - params.shift();
    const double qdd = -w0 * w0 * x(0) - 2.0 * params.zeta() * x(1);
    const LiftJet c = drive.formula_jet(formula, t);
    return {q - c.c, x(1) - c.dc, qdd - c.ddc};
  }
};

// Zero of the gap derivative inside [a, b], where dg changes sign.
double gap_extremum(const GapFn& gap, double a, double b, double dga, double tol) {
  return detail::safeguarded_newton(
      [&](double t) {
        const auto v = gap(t);
        return std::pair{v.dg, v.ddg};
      },
      a, b, dga, tol, "gap extremum search");
}

double gap_root(const GapFn& gap, double lo, double hi, double glo, double tol) {
  return detail::safeguarded_newton(
      [&](double t) {
        const auto v = gap(t);
        return std::pair{v.g, v.dg};
      },
      lo, hi, glo, tol, "impact time polish");
}

ImpactHit make_hit(const GapFn& gap, const PhysicalParams& params, double t) {
  const Vec2 x = flow_operator(params, t - gap.t0) * gap.x0;
  return {t, from_shifted(params, x)};
}

double strobe_tolerance(const CamDrive& drive) { return 1e-9 * drive.period(); }

// Closed form active just after t, consistent with how PieceWalker labels
// the stretch starting at t.
int formula_after(const CamDrive& drive, double t) {
  const double look = t + drive.period();
  const auto bps = drive.breakpoints(t, look);
  const double end = bps.empty() ? look : bps.front();
  return drive.formula_at(0.5 * (t + end));
}

}  // namespace

void SimConfig::validate() const {
  if (!(tol_event > 0 && tol_pen > 0 && eps_stick_v > 0)) throw std::invalid_argument("tolerances must be positive");
  if (max_impacts_per_period < 1) throw std::invalid_argument("max_impacts_per_period must be at least 1");
  if (!std::isfinite(strobe_phase)) throw std::invalid_argument("strobe_phase must be finite");
}

FlightOutcome find_next_flight_end(const FollowerState& state, double t0, double horizon, const CamDrive& drive,
                                   const PhysicalParams& params, const SimConfig& config) {
  FlightOutcome out;
  if (!(horizon > 0)) return out;
  const double t1 = t0 + horizon;
  PieceWalker walker(drive, t0, t1, substep(drive, params));
  const Vec2 x0 = to_shifted(params, state);
  const double tol = config.tol_event;
  bool near_contact = true;  // until the gap has clearly opened
  Piece pc;
  while (walker.next(pc)) {
    const GapFn gap{params, drive, x0, t0, pc.formula};
    const auto va = gap(pc.a);
    const auto vb = gap(pc.b);
    if (near_contact && va.g > config.tol_pen) near_contact = false;

    if (near_contact) {
      // The follower starts on (or within tolerance of) the cam. It must
      // separate before any landing counts, so bracket from the gap maximum.
      if (pc.a == t0 && (va.dg < 0.0 || (va.dg == 0.0 && va.ddg <= 0.0))) {
        out.contact = true;
        return out;
      }
      if (vb.dg >= 0.0) {
        if (vb.g < 0.0) {
          out.contact = true;
          return out;
        }
        continue;
      }
      double tm = pc.a;
      if (va.dg > 0.0 || (va.dg == 0.0 && va.ddg > 0.0)) tm = gap_extremum(gap, pc.a, pc.b, va.dg == 0.0 ? va.ddg : va.dg, tol);
      const auto vm = gap(tm);
      if (!(vm.g > 0.0)) {
        out.contact = true;
        return out;
      }
      if (vb.g <= 0.0) {
        out.hit = make_hit(gap, params, gap_root(gap, tm, pc.b, vm.g, tol));
        return out;
      }
      near_contact = vb.g <= config.tol_pen;
      continue;
    }

    if (vb.g <= 0.0) {
      out.hit = make_hit(gap, params, gap_root(gap, pc.a, pc.b, va.g, tol));
      return out;
    }
    if (va.dg < 0.0 && vb.dg > 0.0) {
      // Local minimum inside: a landing if the gap dips below zero there.
      // A touch with zero gap is tangential and separates again.
      const double tm = gap_extremum(gap, pc.a, pc.b, va.dg, tol);
      const auto vm = gap(tm);
      if (vm.g < 0.0) {
        out.hit = make_hit(gap, params, gap_root(gap, pc.a, tm, va.g, tol));
        return out;
      }
    }
  }
  return out;
}

std::optional<ImpactHit> find_next_impact(const FollowerState& state, double t0, double horizon,
                                          const CamDrive& drive, const PhysicalParams& params,
                                          const SimConfig& config) {
  return find_next_flight_end(state, t0, horizon, drive, params, config).hit;
}

double next_strobe_time(double t, const CamDrive& drive, const SimConfig& config) {
  const double T = drive.period();
  const double base = config.strobe_phase / drive.omega();
  double k = std::floor((t - base) / T) + 1.0;
  double ts = base + k * T;
  if (ts <= t + strobe_tolerance(drive)) ts = base + (k + 1.0) * T;
  return ts;
}

namespace {

// Time of detachment after sticking from ts: first time the contact force
// goes negative, or t1 if it never does. Returns a time at which N < 0.
double find_detachment(double ts, double t1, const CamDrive& drive, const PhysicalParams& params,
                       const SimConfig& config) {
  PieceWalker walker(drive, ts, t1, substep(drive, params));
  Piece pc;
  while (walker.next(pc)) {
    auto N = [&](double t) { return contact_force(params, drive.formula_jet(pc.formula, t)); };
    const double na = N(pc.a);
    if (na < 0.0) return pc.a;
    const double nb = N(pc.b);
    if (nb < 0.0) {
      std::uintmax_t iters = 200;
      const auto br = boost::math::tools::toms748_solve(
          N, pc.a, pc.b, na, nb,
          [&](double lo, double hi) { return std::abs(hi - lo) <= config.tol_event; }, iters);
      // Step to the far side so the follower leaves with N < 0.
      double td = br.second;
      while (N(td) >= 0.0 && td < pc.b) td = std::nextafter(td, pc.b);
      return td;
    }
  }
  return t1;
}

class Builder {
 public:
  Builder(Trajectory& traj, const CamDrive& drive, const PhysicalParams& params, const SimConfig& config)
      : traj_(traj), drive_(drive), params_(params), config_(config) {
    next_strobe_ = next_strobe_time(traj.t0, drive, config);
  }

  // Record strobe samples in (seg.t_start, seg.t_end] and the segment itself.
  void add_segment(const ModeSegment& seg) {
    while (next_strobe_ <= seg.t_end + strobe_tolerance(drive_) && next_strobe_ <= traj_.t_end + strobe_tolerance(drive_)) {
      FollowerState s;
      if (seg.mode == Mode::FreeFlight) {
        s = free_flight(params_, seg.state, next_strobe_ - seg.t_start);
      } else {
        const CamState c = drive_.state(next_strobe_);
        s = {c.position, c.velocity};
      }
      const long n = std::lround((next_strobe_ * drive_.omega() - config_.strobe_phase) / kTwoPi);
      traj_.strobes.push_back({n, next_strobe_, s});
      next_strobe_ = next_strobe_time(next_strobe_, drive_, config_);
    }
    if (seg.t_end > seg.t_start || traj_.modes.empty()) {
      if (!traj_.modes.empty() && traj_.modes.back().mode == seg.mode && seg.mode == Mode::Sticking &&
          traj_.modes.back().t_end == seg.t_start) {
        traj_.modes.back().t_end = seg.t_end;
      } else {
        traj_.modes.push_back(seg);
      }
    }
    if (seg.mode == Mode::Sticking && seg.t_end > seg.t_start) {
      if (!traj_.sticking.empty() && traj_.sticking.back().t_end == seg.t_start) {
        traj_.sticking.back().t_end = seg.t_end;
      } else {
        traj_.sticking.push_back({seg.t_start, seg.t_end});
      }
    }
  }

 private:
  Trajectory& traj_;
  const CamDrive& drive_;
  const PhysicalParams& params_;
  const SimConfig& config_;
  double next_strobe_;
};

int corner_index(const CamGeometry& geom, double phase, double tol) {
  for (const auto& d : geom.discontinuities()) {
    if (std::abs(std::remainder(phase - d.phase, kTwoPi)) < tol) return d.boundary;
  }
  return -1;
}

}  // namespace

Trajectory simulate(const FollowerState& x0, double t0, double duration, const CamDrive& drive,
                    const PhysicalParams& params, const SimConfig& config) {
  params.validate();
  config.validate();
  if (!(duration > 0)) throw std::invalid_argument("duration must be positive");
  Trajectory traj;
  traj.t0 = t0;
  double t_end = t0 + duration;
  {
    // Snap the end onto a strobe time when it is one up to rounding.
    const double T = drive.period();
    const double base = config.strobe_phase / drive.omega();
    const double k = std::round((t_end - base) / T);
    if (std::abs(base + k * T - t_end) < strobe_tolerance(drive)) t_end = base + k * T;
  }
  traj.t_end = t_end;
  Builder builder(traj, drive, params, config);

  const double T = drive.period();
  const double corner_tol = drive.omega() * config.tol_event;
  long window = -1;
  int window_count = 0;

  FollowerState s = x0;
  double t = t0;
  Mode mode = Mode::FreeFlight;

  auto cam_right = [&](double tt) { return drive.formula_jet(formula_after(drive, tt), tt); };

  // Decide the mode after contact at time t with the follower at s.
  auto settle = [&]() {
    const LiftJet c = cam_right(t);
    const double rel = s.qdot - c.dc;
    if (rel < config.eps_stick_v) {
      if (contact_force(params, c) >= 0.0) {
        mode = Mode::Sticking;
        s = {c.c, c.dc};
      } else if (rel <= 0.0) {
        // Cam pulls away: leave with the cam's velocity.
        s = {c.c, c.dc};
      }
    }
  };

  {
    const LiftJet c = cam_right(t);
    const double g = s.q - c.c;
    if (g < -config.tol_pen) throw std::invalid_argument("initial state penetrates the cam");
    if (g <= config.tol_pen) {
      if (s.qdot - c.dc < 0.0) {
        s.q = c.c;
        const FollowerState post = apply_impact(params, s, {c.c, c.dc}, config.tol_pen);
        traj.impacts.push_back({t, reduce_phase(drive.phase(t)), s.qdot, post.qdot, c.dc,
                                corner_index(drive.geometry(), drive.phase(t), corner_tol)});
        s = post;
      }
      settle();
    }
  }

  int stalls = 0;
  while (t < t_end) {
    if (mode == Mode::FreeFlight) {
      const FlightOutcome fo = find_next_flight_end(s, t, t_end - t, drive, params, config);
      if (fo.contact) {
        // No gap opens from here. Either stick or leave with the cam velocity.
        const LiftJet c = cam_right(t);
        s = {c.c, c.dc};
        if (contact_force(params, c) >= 0.0) mode = Mode::Sticking;
        if (++stalls > 8) throw std::runtime_error(fmt::format("simulation stalled in contact at t = {}", t));
        continue;
      }
      stalls = 0;
      if (!fo.hit) {
        builder.add_segment({Mode::FreeFlight, t, t_end, s});
        s = free_flight(params, s, t_end - t);
        t = t_end;
        break;
      }
      const ImpactHit& hit = *fo.hit;
      builder.add_segment({Mode::FreeFlight, t, hit.t, s});
      const LiftJet c = drive.time_jet(hit.t, Side::Left);
      FollowerState pre = hit.state;
      const FollowerState post = apply_impact(params, pre, {c.c, c.dc}, config.tol_pen);
      const double phase = drive.phase(hit.t);
      traj.impacts.push_back(
          {hit.t, reduce_phase(phase), pre.qdot, post.qdot, c.dc, corner_index(drive.geometry(), phase, corner_tol)});
      t = hit.t;
      s = post;
      const long w = static_cast<long>(std::floor((t - t0) / T));
      if (w != window) {
        window = w;
        window_count = 0;
      }
      if (++window_count > config.max_impacts_per_period) {
        traj.chattering_overflow = true;
        traj.t_end = t;
        break;
      }
      settle();
    } else {
      const double td = find_detachment(t, t_end, drive, params, config);
      builder.add_segment({Mode::Sticking, t, td, s});
      t = td;
      const LiftJet c = cam_right(td);
      s = {c.c, c.dc};
      if (td < t_end) mode = Mode::FreeFlight;
    }
  }
  traj.final_state = s;
  traj.final_mode = mode;
  return traj;
}

std::vector<FollowerState> stroboscopic_sequence(const Trajectory& traj) {
  std::vector<FollowerState> out;
  out.reserve(traj.strobes.size());
  for (const auto& s : traj.strobes) out.push_back(s.state);
  return out;
}

FollowerState sample_trajectory(const Trajectory& traj, double t, const CamDrive& drive,
                                const PhysicalParams& params) {
  auto it = std::upper_bound(traj.modes.begin(), traj.modes.end(), t,
                             [](double v, const ModeSegment& m) { return v < m.t_start; });
  if (it == traj.modes.begin()) throw std::out_of_range("time before trajectory start");
  const ModeSegment& m = *std::prev(it);
  if (m.mode == Mode::FreeFlight) return free_flight(params, m.state, t - m.t_start);
  const CamState c = drive.state(t);
  return {c.position, c.velocity};
}

void write_strobe_csv(std::ostream& os, const Trajectory& traj) {
  os << "n,t,q,qdot\n";
  for (const auto& s : traj.strobes) os << fmt::format("{},{},{},{}\n", s.n, s.t, s.state.q, s.state.qdot);
}

void write_impact_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,phase,pre,post,cam_velocity,at_corner\n";
  for (const auto& e : traj.impacts) {
    os << fmt::format("{},{},{},{},{},{}\n", e.t, e.phase, e.pre_velocity, e.post_velocity, e.cam_velocity,
                      e.at_corner);
  }
}

void write_sticking_csv(std::ostream& os, const Trajectory& traj) {
  os << "t_start,t_end\n";
  for (const auto& s : traj.sticking) os << fmt::format("{},{}\n", s.t_start, s.t_end);
}

}  // namespace cornerimpact
