#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "cornerimpact/event_simulator.hpp"
#include "cornerimpact/model.hpp"
#include "cornerimpact/scenario.hpp"
#include "reference.hpp"

using namespace cornerimpact;

namespace {
constexpr double kPi = std::numbers::pi;

// Drop from rho0 + 0.01 at rest onto a dwell that does not move: first root
// of the explicit damped-oscillator solution, 40-digit bisection (mpmath).
constexpr double kDropTime = 0.02162257172995231662;
constexpr double kDropVelocity = -0.8811121658343115571;

struct RefRun {
  Model model;
  CamDrive drive;
  FollowerState x0;
  double t0;
  Trajectory traj;
};

RefRun run_reference(double rpm, int periods, SimConfig cfg = {}, std::optional<FollowerState> start = {}) {
  const Scenario s = load_scenario(reftest::data_path("reference_scenario.yaml"));
  Model m = s.model;
  m.sim = cfg;
  const double w = rpm_to_rad_s(rpm);
  CamDrive d = m.drive(w);
  const FollowerState x0 = start ? *start : initial_state(s, w);
  const double t0 = m.sim.strobe_phase / w;
  Trajectory tr = simulate(x0, t0, periods * d.period(), d, m.params, m.sim);
  return {m, d, x0, t0, std::move(tr)};
}

double gap(const RefRun& r, const FollowerState& start, double ts, double t) {
  return free_flight(r.model.params, start, t - ts).q - r.drive.state(t).position;
}

// First sign change of the gap after ts found by sampling every h, then
// bisected. Independent of the simulator's root machinery.
std::optional<double> dense_first_landing(const RefRun& r, const FollowerState& start, double ts, double t1, double h) {
  double a = ts + h;
  double ga = gap(r, start, ts, a);
  for (double b = a + h; b <= t1 + h; a = b, b += h) {
    const double gb = gap(r, start, ts, b);
    if (ga > 0 && gb <= 0) {
      double lo = a, hi = b;
      while (hi - lo > 1e-15) {
        const double mid = 0.5 * (lo + hi);
        (gap(r, start, ts, mid) > 0 ? lo : hi) = mid;
        if (mid == lo && mid == hi) break;
      }
      return 0.5 * (lo + hi);
    }
    ga = gb;
  }
  return std::nullopt;
}

bool sticking_starts_at(const Trajectory& tr, double t) {
  for (const auto& s : tr.sticking)
    if (std::abs(s.t_start - t) < 1e-12) return true;
  return false;
}
}  // namespace

TEST(FindNextImpact, RestingOnDwellHasNoRoot) {
  const auto g = reftest::reference_geometry();
  const auto p = reftest::reference_params();
  const CamDrive d(g, 50.0);
  const FlightOutcome fo = find_next_flight_end({g.params().rho0, 0.0}, 0.0, 0.02, d, p, SimConfig{});
  EXPECT_FALSE(fo.hit.has_value());
  EXPECT_TRUE(fo.contact);
  EXPECT_FALSE(find_next_impact({g.params().rho0, 0.0}, 0.0, 0.02, d, p, SimConfig{}).has_value());
}

TEST(FindNextImpact, DropOntoFrozenDwell) {
  const auto g = reftest::reference_geometry();
  const auto p = reftest::reference_params();
  const CamDrive d(g, 0.1);  // phase moves by 1e-2 rad over the horizon, still on the base circle
  SimConfig cfg;
  const auto hit = find_next_impact({g.params().rho0 + 0.01, 0.0}, 0.0, 0.1, d, p, cfg);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->t, kDropTime, cfg.tol_event);
  EXPECT_NEAR(hit->state.qdot, kDropVelocity, 1e-10);
  EXPECT_NEAR(hit->state.q, g.params().rho0, 1e-12);
}

TEST(FindNextImpact, HorizonExhausted) {
  const auto g = reftest::reference_geometry();
  const auto p = reftest::reference_params();
  const CamDrive d(g, 0.1);
  EXPECT_FALSE(find_next_impact({g.params().rho0 + 0.01, 0.0}, 0.0, 0.02, d, p, SimConfig{}).has_value());
}

TEST(Simulate, MatchesDenseSamplingAt670) {
  const RefRun r = run_reference(670.0, 10);
  const auto& tr = r.traj;
  ASSERT_GT(tr.impacts.size(), 10u);
  ASSERT_FALSE(tr.chattering_overflow);
  const double h = 1e-6 * r.drive.period();
  const double tol = 10 * r.model.sim.tol_event;
  int compared = 0;
  for (std::size_t k = 0; k < tr.impacts.size(); ++k) {
    const auto& e = tr.impacts[k];
    if (sticking_starts_at(tr, e.t)) continue;
    const FollowerState post{r.drive.state(e.t).position, e.post_velocity};
    const double t_next = k + 1 < tr.impacts.size() ? tr.impacts[k + 1].t : tr.t_end;
    const auto land = dense_first_landing(r, post, e.t, t_next, h);
    if (k + 1 < tr.impacts.size()) {
      ASSERT_TRUE(land.has_value()) << k;
      EXPECT_NEAR(*land, tr.impacts[k + 1].t, tol) << k;
      ++compared;
    } else {
      EXPECT_FALSE(land.has_value() && *land < tr.t_end - h);
    }
  }
  EXPECT_GT(compared, 10);
}

TEST(Simulate, SticksBelowDetachment) {
  const RefRun r = run_reference(100.0, 5);
  EXPECT_TRUE(r.traj.impacts.empty());
  ASSERT_EQ(r.traj.sticking.size(), 1u);
  EXPECT_DOUBLE_EQ(r.traj.sticking[0].t_start, r.t0);
  EXPECT_NEAR(r.traj.sticking[0].t_end, r.traj.t_end, 1e-12);
  EXPECT_EQ(r.traj.strobes.size(), 5u);
}

TEST(Simulate, ChatteringAccumulatesWithRatioNearR) {
  const RefRun r = run_reference(200.0, 6);
  const auto& tr = r.traj;
  ASSERT_FALSE(tr.sticking.empty());
  // impacts between consecutive strobes
  std::size_t most = 0;
  for (std::size_t i = 1; i < tr.strobes.size(); ++i) {
    std::size_t n = 0;
    for (const auto& e : tr.impacts) n += e.t > tr.strobes[i - 1].t && e.t <= tr.strobes[i].t;
    most = std::max(most, n);
  }
  EXPECT_GT(most, 10u);
  // each chattering burst ends where sticking begins; last gaps shrink by ~r
  const double rr = r.model.params.restitution;
  int bursts = 0;
  for (const auto& st : tr.sticking) {
    std::vector<double> ts;
    for (const auto& e : tr.impacts)
      if (e.t <= st.t_start + 1e-12) ts.push_back(e.t);
    if (ts.size() < 7 || std::abs(ts.back() - st.t_start) > 1e-12) continue;
    ++bursts;
    const std::size_t n = ts.size();
    for (std::size_t j = n - 5; j < n - 1; ++j) {
      const double ratio = (ts[j + 1] - ts[j]) / (ts[j] - ts[j - 1]);
      EXPECT_NEAR(ratio, rr, 0.2 * rr) << j;
    }
  }
  EXPECT_GT(bursts, 0);
}

TEST(Simulate, RestitutionAndApproachOnEveryImpact) {
  const RefRun r = run_reference(670.0, 20);
  const double rr = r.model.params.restitution;
  for (const auto& e : r.traj.impacts) {
    const double expect = (1 + rr) * e.cam_velocity - rr * e.pre_velocity;
    const double scale = std::max({std::abs(e.pre_velocity), std::abs(e.cam_velocity), 1.0});
    EXPECT_LE(std::abs(e.post_velocity - expect), 1e-10 * scale);
    EXPECT_LE(e.pre_velocity - e.cam_velocity, 0.0);
    EXPECT_GE(e.phase, 0.0);
    EXPECT_LT(e.phase, 2 * kPi);
  }
}

TEST(Simulate, NoPenetrationAndSticksOnCam) {
  for (double rpm : {200.0, 670.0}) {
    const RefRun r = run_reference(rpm, 4);
    const auto& tr = r.traj;
    const double tol = r.model.sim.tol_pen;
    const int n = 200000;
    for (int i = 0; i <= n; ++i) {
      const double t = tr.t0 + (tr.t_end - tr.t0) * i / n;
      const FollowerState s = sample_trajectory(tr, t, r.drive, r.model.params);
      ASSERT_GE(s.q - r.drive.state(t).position, -tol) << rpm << " " << t;
    }
    for (const auto& st : tr.sticking) {
      for (int i = 0; i <= 20; ++i) {
        const double t = st.t_start + (st.t_end - st.t_start) * i / 20;
        EXPECT_NEAR(sample_trajectory(tr, t, r.drive, r.model.params).q, r.drive.state(t).position, tol);
      }
    }
  }
}

TEST(Simulate, EventsOrderedAndDisjoint) {
  const RefRun r = run_reference(200.0, 6);
  const auto& tr = r.traj;
  for (std::size_t i = 1; i < tr.impacts.size(); ++i) EXPECT_LT(tr.impacts[i - 1].t, tr.impacts[i].t);
  for (std::size_t i = 0; i < tr.sticking.size(); ++i) {
    EXPECT_LT(tr.sticking[i].t_start, tr.sticking[i].t_end);
    if (i) EXPECT_LT(tr.sticking[i - 1].t_end, tr.sticking[i].t_start);
    for (const auto& e : tr.impacts) EXPECT_FALSE(e.t > tr.sticking[i].t_start && e.t < tr.sticking[i].t_end);
  }
  for (std::size_t i = 1; i < tr.modes.size(); ++i) EXPECT_EQ(tr.modes[i - 1].t_end, tr.modes[i].t_start);
}

TEST(Simulate, Deterministic) {
  const RefRun a = run_reference(670.0, 10), b = run_reference(670.0, 10);
  ASSERT_EQ(a.traj.impacts.size(), b.traj.impacts.size());
  for (std::size_t i = 0; i < a.traj.impacts.size(); ++i) {
    EXPECT_EQ(a.traj.impacts[i].t, b.traj.impacts[i].t);
    EXPECT_EQ(a.traj.impacts[i].post_velocity, b.traj.impacts[i].post_velocity);
  }
  ASSERT_EQ(a.traj.strobes.size(), b.traj.strobes.size());
  for (std::size_t i = 0; i < a.traj.strobes.size(); ++i) EXPECT_EQ(a.traj.strobes[i].state.q, b.traj.strobes[i].state.q);
}

TEST(Simulate, HalvingEventToleranceBarelyMovesImpacts) {
  SimConfig fine;
  fine.tol_event *= 0.5;
  const RefRun a = run_reference(670.0, 3), b = run_reference(670.0, 3, fine);
  ASSERT_EQ(a.traj.impacts.size(), b.traj.impacts.size());
  ASSERT_FALSE(a.traj.impacts.empty());
  for (std::size_t i = 0; i < a.traj.impacts.size(); ++i)
    EXPECT_NEAR(a.traj.impacts[i].t, b.traj.impacts[i].t, 2 * a.model.sim.tol_event) << i;
}

TEST(Simulate, ChatteringOverflowIsMarked) {
  SimConfig cfg;
  cfg.max_impacts_per_period = 3;
  const RefRun r = run_reference(200.0, 6, cfg);
  EXPECT_TRUE(r.traj.chattering_overflow);
  EXPECT_LT(r.traj.t_end, r.t0 + 6 * r.drive.period());
  EXPECT_EQ(r.traj.t_end, r.traj.impacts.back().t);
}

TEST(Simulate, RejectsPenetratingStart) {
  const auto m = reftest::reference_model();
  const CamDrive d = m.drive(50.0);
  const double c = d.state(0.0).position;
  EXPECT_THROW(simulate({c - 1e-6, 0.0}, 0.0, 0.1, d, m.params, m.sim), std::invalid_argument);
  EXPECT_THROW(simulate({c, 0.0}, 0.0, -1.0, d, m.params, m.sim), std::invalid_argument);
}

TEST(Stroboscopic, CountIsWholePeriods) {
  const auto m = reftest::reference_model();
  const double w = rpm_to_rad_s(400.0);
  const CamDrive d = m.drive(w);
  const double T = d.period(), t0 = m.sim.strobe_phase / w;
  const FollowerState x0{d.state(t0).position, d.state(t0).velocity};
  for (double periods : {1.0, 3.0, 7.5, 12.25}) {
    const Trajectory tr = simulate(x0, t0, periods * T, d, m.params, m.sim);
    if (tr.chattering_overflow) continue;
    EXPECT_EQ(stroboscopic_sequence(tr).size(), static_cast<std::size_t>(std::floor(periods))) << periods;
    for (std::size_t i = 0; i < tr.strobes.size(); ++i) {
      EXPECT_NEAR(tr.strobes[i].t, t0 + (i + 1) * T, 1e-12);
      EXPECT_NEAR(std::remainder(d.phase(tr.strobes[i].t) - m.phase_offset - m.sim.strobe_phase, 2 * kPi), 0.0, 1e-9);
    }
  }
  EXPECT_NEAR(next_strobe_time(t0, d, m.sim), t0 + T, 1e-12);
}

TEST(Stroboscopic, PeriodOneSteadyState) {
  // from the shipped period-1 seed
  const FollowerState seed = load_scenario(reftest::data_path("reference_scenario.yaml")).scan.seed;
  const RefRun r = run_reference(740.0, 300, SimConfig{}, seed);
  const auto seq = stroboscopic_sequence(r.traj);
  ASSERT_EQ(seq.size(), 300u);
  for (std::size_t i = 280; i < seq.size(); ++i) {
    EXPECT_NEAR(seq[i].q, seq[i - 1].q, 1e-6);
    EXPECT_NEAR(seq[i].qdot, seq[i - 1].qdot, 1e-6);
  }
  // one impact per period once settled
  int late = 0;
  for (const auto& e : r.traj.impacts) late += e.t > r.traj.strobes[279].t;
  EXPECT_EQ(late, 20);
}

TEST(Export, CsvColumns) {
  const RefRun r = run_reference(200.0, 2);
  std::ostringstream a, b, c;
  write_strobe_csv(a, r.traj);
  write_impact_csv(b, r.traj);
  write_sticking_csv(c, r.traj);
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "n,t,q,qdot");
  EXPECT_EQ(b.str().substr(0, b.str().find('\n')), "t,phase,pre,post,cam_velocity,at_corner");
  EXPECT_EQ(c.str().substr(0, c.str().find('\n')), "t_start,t_end");
  auto lines = [](const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); };
  EXPECT_EQ(lines(a.str()), r.traj.strobes.size() + 1);
  EXPECT_EQ(lines(b.str()), r.traj.impacts.size() + 1);
  EXPECT_EQ(lines(c.str()), r.traj.sticking.size() + 1);
}
