// cornerimpact command-line front end.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "cornerimpact/bc_classifier.hpp"
#include "cornerimpact/bifurcation_scan.hpp"
#include "cornerimpact/corner_map.hpp"
#include "cornerimpact/scenario.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cornerimpact;

#ifndef CORNERIMPACT_VERSION
#define CORNERIMPACT_VERSION "unknown"
#endif

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Bad flags or files; exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Collects outputs in memory and writes them once the command has succeeded,
// so a failing run leaves nothing behind.
class Outputs {
 public:
  void add(const std::string& name, const std::function<void(std::ostream&)>& fn) {
    std::ostringstream os;
    fn(os);
    files_.emplace_back(name, os.str());
  }
  void flush(const std::string& dir, json manifest) {
    fs::create_directories(dir);
    json names = json::array();
    for (const auto& [n, _] : files_) names.push_back(n);
    manifest["outputs"] = names;
    files_.emplace_back("manifest.json", manifest.dump(2) + "\n");
    for (const auto& [n, text] : files_) {
      std::ofstream f(fs::path(dir) / n, std::ios::binary);
      if (!f) throw InputError(fmt::format("cannot write '{}'", (fs::path(dir) / n).string()));
      f << text;
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

json base_manifest(const std::string& command, const std::vector<std::string>& argv) {
  json m;
  m["tool"] = "cornerimpact";
  m["version"] = CORNERIMPACT_VERSION;
  m["command"] = command;
  m["argv"] = argv;
  return m;
}

void echo_scenario(json& m, const std::string& path) {
  m["scenario_path"] = path;
  m["scenario_text"] = read_text(path);
}

json vec_json(const Vec2& v) { return json::array({v(0), v(1)}); }
json mat_json(const Eigen::Matrix2d& a) {
  return json::array({json::array({a(0, 0), a(0, 1)}), json::array({a(1, 0), a(1, 1)})});
}
json complex_json(const std::complex<double>& z) { return json::array({z.real(), z.imag()}); }

std::vector<double> corner_phases(const Model& m) {
  std::vector<double> out;
  for (const auto& d : m.geometry.discontinuities()) out.push_back(d.phase);
  return out;
}

ScatterPlot impact_plot(const BifurcationDiagram& d, const Model& m) {
  ScatterPlot p;
  p.title = "Impact phases";
  p.xlabel = "cam speed [rpm]";
  p.ylabel = "impact phase [rad]";
  p.fixed_y = true;
  p.ymin = 0.0;
  p.ymax = kTwoPi;
  p.rules = corner_phases(m);
  for (const auto& pt : d.points) {
    for (double ph : pt.impact_phases) {
      p.x.push_back(pt.omega_rpm);
      p.y.push_back(ph);
    }
  }
  return p;
}

ScatterPlot strobe_plot(const BifurcationDiagram& d) {
  ScatterPlot p;
  p.title = "Stroboscopic samples";
  p.xlabel = "cam speed [rpm]";
  p.ylabel = "q [m]";
  for (const auto& pt : d.points) {
    for (const auto& s : pt.strobes) {
      p.x.push_back(pt.omega_rpm);
      p.y.push_back(s.q);
    }
  }
  return p;
}

// Corner bracket from flags, a previous scan, or the scenario.
struct Bracket {
  int boundary;
  double lo_rpm, hi_rpm;
};

Bracket corner_bracket(const Scenario& s, double lo, double hi, const std::string& scan_dir, int boundary) {
  const int b = boundary >= 0 ? boundary : s.corner.boundary;
  if (lo > 0 || hi > 0) {
    if (!(lo > 0 && hi > lo)) throw InputError("need 0 < --omega-lo-rpm < --omega-hi-rpm");
    return {b, lo, hi};
  }
  if (!scan_dir.empty()) {
    std::istringstream in(read_text((fs::path(scan_dir) / "crossings.csv").string()));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::stringstream ls(line);
      for (std::string tok; std::getline(ls, tok, ',');) f.push_back(tok);
      if (f.size() < 3) continue;
      const double w = std::stod(f[0]);
      const int cb = std::stoi(f[2]);
      if (boundary >= 0 && cb != boundary) continue;
      return {cb, w * (1 - 1e-3), w * (1 + 1e-3)};
    }
    throw InputError(fmt::format("no corner crossing recorded in '{}'", scan_dir));
  }
  if (!s.corner.has_bracket()) throw InputError("no corner seed: give --omega-lo-rpm/--omega-hi-rpm or --from-scan");
  return {b, s.corner.omega_lo_rpm, s.corner.omega_hi_rpm};
}

void write_derive_report(std::ostream& os, const CornerContext& c, const LocalPWLMap& m) {
  const double ds = std::pow(c.model.params.restitution, 2) * std::exp(-2 * c.model.params.zeta() * c.T_star);
  os << fmt::format("corner boundary: {}\ncorner phase [rad]: {}\n", c.boundary, c.corner_phase);
  os << fmt::format("omega* [rpm]: {}\nT* [s]: {}\n", rad_s_to_rpm(c.omega_star), c.T_star);
  os << fmt::format("x* (shifted): {} {}\n", c.x_star(0), c.x_star(1));
  os << fmt::format("state at corner: {} {}\ncam at corner: {} {}\n", c.x_d(0), c.x_d(1), c.y0(0), c.y0(1));
  os << fmt::format("cam acceleration left/right of corner: {} {}\n", c.c0pp_left, c.c0pp_right);
  os << fmt::format("fixed-point residual: {}\ncorner residual: {}\n", c.fixed_point_residual, c.gap_residual);
  os << fmt::format("simulated impact offset [s]: {}\n", c.simulated_impact_offset);
  os << fmt::format("continuity residual: {}\n", m.continuity_residual());
  os << fmt::format("det A-: {}\ndet A+: {}\nr^2 exp(-2 zeta T*): {}\n", m.A_minus.determinant(),
                    m.A_plus.determinant(), ds);
  os << fmt::format("orientation: {}\n", m.orientation);
  for (const auto& w : c.warnings) os << "warning: " << w << "\n";
}

int cmd_simulate(const std::string& path, double rpm, int periods, const std::string& out_dir,
                 const std::vector<std::string>& argv) {
  const Scenario s = load_scenario(path);
  if (!(rpm > 0)) throw InputError("--omega-rpm must be positive");
  if (periods < 1) throw InputError("--duration-periods must be at least 1");
  const double w = rpm_to_rad_s(rpm);
  const CamDrive drive = s.model.drive(w);
  const FollowerState x0 = initial_state(s, w);
  const Trajectory tr = simulate(x0, s.model.sim.strobe_phase / w, periods * drive.period(), drive, s.model.params,
                                 s.model.sim);
  Outputs out;
  out.add("strobes.csv", [&](std::ostream& os) { write_strobe_csv(os, tr); });
  out.add("impacts.csv", [&](std::ostream& os) { write_impact_csv(os, tr); });
  out.add("sticking.csv", [&](std::ostream& os) { write_sticking_csv(os, tr); });
  json m = base_manifest("simulate", argv);
  echo_scenario(m, path);
  m["omega_rpm"] = rpm;
  m["duration_periods"] = periods;
  m["initial_state"] = {x0.q, x0.qdot};
  m["impacts"] = tr.impacts.size();
  m["sticking_intervals"] = tr.sticking.size();
  m["chattering_overflow"] = tr.chattering_overflow;
  out.flush(out_dir, m);
  std::cout << fmt::format("{} impacts, {} sticking intervals over {} periods\n", tr.impacts.size(),
                           tr.sticking.size(), periods);
  if (tr.chattering_overflow) {
    std::cerr << fmt::format("error: impact count per period exceeded {} at t = {}\n",
                             s.model.sim.max_impacts_per_period, tr.t_end);
    return 1;
  }
  return 0;
}

struct ScanFlags {
  double lo = 0, hi = 0;
  int points = 0, transient = -1, record = -1;
  bool no_continuation = false, ascending = false, svg = false;
  unsigned threads = 0;
};

int cmd_scan(const std::string& path, const ScanFlags& f, const std::string& out_dir,
             const std::vector<std::string>& argv) {
  const Scenario s = load_scenario(path);
  ScanConfig c = s.scan;
  const bool range_given = f.lo > 0 || f.hi > 0;
  if (range_given) {
    c.omega_min_rpm = f.lo;
    c.omega_max_rpm = f.hi;
  } else if (c.omega_max_rpm <= 0) {
    throw InputError("no scan range: give --omega-min-rpm/--omega-max-rpm or a scan section");
  }
  if (f.points > 0) c.n_points = f.points;
  if (f.transient >= 0) c.transient_periods = f.transient;
  if (f.record >= 0) c.record_periods = f.record;
  if (f.no_continuation) c.continuation = false;
  if (f.ascending) c.descending = false;
  if (f.threads > 0) c.threads = f.threads;
  if (range_given || f.ascending) {
    // the stored seed belongs to the scenario's own starting speed
    c.seed = initial_state(s, rpm_to_rad_s(c.descending ? c.omega_max_rpm : c.omega_min_rpm));
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }

  const BifurcationDiagram d = scan(c, s.model);
  const auto crossings = locate_corner_crossing(d, s.model);
  Outputs out;
  out.add("impact_diagram.csv", [&](std::ostream& os) { write_impact_diagram_csv(os, d); });
  out.add("strobe_diagram.csv", [&](std::ostream& os) { write_strobe_diagram_csv(os, d); });
  out.add("summary.csv", [&](std::ostream& os) { write_summary_csv(os, d); });
  out.add("crossings.csv", [&](std::ostream& os) {
    os << "omega_rpm,corner_phase,boundary,side,bracket_lo_rpm,bracket_hi_rpm,strobe_q,strobe_qdot\n";
    for (const auto& x : crossings) {
      os << fmt::format("{},{},{},{},{},{},{},{}\n", x.omega_rpm, x.corner_phase, x.boundary,
                        x.branch_side == Side::Left ? "left" : "right", x.bracket_lo_rpm, x.bracket_hi_rpm,
                        x.strobe.q, x.strobe.qdot);
    }
  });
  if (f.svg) {
    out.add("impact_diagram.svg", [&](std::ostream& os) { write_svg(os, impact_plot(d, s.model)); });
    out.add("strobe_diagram.svg", [&](std::ostream& os) { write_svg(os, strobe_plot(d)); });
  }
  json m = base_manifest("scan", argv);
  echo_scenario(m, path);
  m["scan"] = {{"omega_min_rpm", c.omega_min_rpm}, {"omega_max_rpm", c.omega_max_rpm}, {"points", c.n_points},
               {"transient_periods", c.transient_periods}, {"record_periods", c.record_periods},
               {"continuation", c.continuation}, {"descending", c.descending},
               {"seed", {c.seed.q, c.seed.qdot}}};
  int failed = 0;
  for (const auto& p : d.points) failed += p.failed ? 1 : 0;
  m["failed_points"] = failed;
  out.flush(out_dir, m);
  std::cout << fmt::format("{} points, {} failed, {} corner crossing(s)\n", d.points.size(), failed,
                           crossings.size());
  for (const auto& x : crossings) {
    std::cout << fmt::format("corner {} crossed at {} rpm\n", x.boundary, x.omega_rpm);
  }
  for (const auto& p : d.points) {
    if (p.failed) std::cerr << fmt::format("warning: {} rpm failed: {}\n", p.omega_rpm, p.error);
  }
  return 0;
}

struct CornerFlags {
  double lo = 0, hi = 0;
  std::string scan_dir;
  int boundary = -1;
};

int cmd_derive(const std::string& path, const CornerFlags& cf, const std::string& out_dir,
               const std::vector<std::string>& argv) {
  const Scenario s = load_scenario(path);
  const Bracket b = corner_bracket(s, cf.lo, cf.hi, cf.scan_dir, cf.boundary);
  const CornerContext ctx = solve_fixed_point(s.model, b.boundary, rpm_to_rad_s(b.lo_rpm), rpm_to_rad_s(b.hi_rpm));
  const LocalPWLMap m = build_local_map(ctx);
  Outputs out;
  out.add("local_map.txt", [&](std::ostream& os) { write_local_map(os, m); });
  out.add("derive_report.txt", [&](std::ostream& os) { write_derive_report(os, ctx, m); });
  json j = base_manifest("derive-map", argv);
  echo_scenario(j, path);
  j["corner"] = {{"boundary", b.boundary}, {"omega_lo_rpm", b.lo_rpm}, {"omega_hi_rpm", b.hi_rpm}};
  j["omega_star_rpm"] = rad_s_to_rpm(ctx.omega_star);
  j["T_star"] = ctx.T_star;
  out.flush(out_dir, j);
  write_derive_report(std::cout, ctx, m);
  return 0;
}

struct EstimateFlags {
  int samples = -1;
  double scale = -1;
  long long seed = -1;
  unsigned threads = 0;
};

int cmd_estimate(const std::string& path, const CornerFlags& cf, const EstimateFlags& ef, const std::string& out_dir,
                 const std::vector<std::string>& argv) {
  const Scenario s = load_scenario(path);
  EstimateConfig e = s.estimate;
  if (ef.samples >= 0) e.samples = ef.samples;
  if (ef.scale >= 0) e.perturbation_scale = ef.scale;
  if (ef.seed >= 0) e.seed = static_cast<std::uint64_t>(ef.seed);
  if (!(e.perturbation_scale > 0)) throw InputError("--scale must be positive");
  const Bracket b = corner_bracket(s, cf.lo, cf.hi, cf.scan_dir, cf.boundary);
  const CornerContext ctx = solve_fixed_point(s.model, b.boundary, rpm_to_rad_s(b.lo_rpm), rpm_to_rad_s(b.hi_rpm));
  const LocalPWLMap m = build_local_map(ctx);
  const NumericalMapEstimate est =
      estimate_map_numerically(ctx, e.samples, e.perturbation_scale, e.seed, e.half_window, ef.threads);
  const auto cmp = compare_estimate(m, est);
  const double worst = max_relative_discrepancy(cmp);
  auto report = [&](std::ostream& os) {
    os << fmt::format("samples: {}\nperturbation scale: {}\nseed: {}\n", est.samples, est.perturbation_scale,
                      est.seed);
    os << fmt::format("fit residual minus/plus: {} {}\n", est.minus.residual, est.plus.residual);
    for (const auto& d : cmp) {
      os << fmt::format("{}({},{}): analytic {} estimate {} relative {}\n", d.matrix, d.row, d.col, d.analytic,
                        d.estimate, d.relative);
    }
    os << fmt::format("max relative discrepancy: {}\n", worst);
  };
  Outputs out;
  out.add("estimate.csv", [&](std::ostream& os) {
    os << "matrix,row,col,analytic,estimate,rel_discrepancy\n";
    for (const auto& d : cmp) {
      os << fmt::format("{},{},{},{},{},{}\n", d.matrix, d.row, d.col, d.analytic, d.estimate, d.relative);
    }
  });
  out.add("estimate_report.txt", report);
  out.add("local_map.txt", [&](std::ostream& os) { write_local_map(os, m); });
  json j = base_manifest("estimate-map", argv);
  echo_scenario(j, path);
  j["corner"] = {{"boundary", b.boundary}, {"omega_lo_rpm", b.lo_rpm}, {"omega_hi_rpm", b.hi_rpm}};
  j["samples"] = e.samples;
  j["perturbation_scale"] = e.perturbation_scale;
  j["seed"] = e.seed;
  j["half_window"] = e.half_window;
  j["max_relative_discrepancy"] = worst;
  out.flush(out_dir, j);
  report(std::cout);
  return 0;
}

struct ClassifyFlags {
  std::string map_file, scenario;
  std::vector<double> a_minus, a_plus, b_minus, b_plus, c;
  std::vector<double> d;
  double dt_min = 0, dt_max = 0;
  int points = 0;
};

LocalPWLMap map_from_flags(const ClassifyFlags& f) {
  const bool explicit_mats = !f.a_minus.empty() || !f.a_plus.empty() || !f.b_minus.empty() || !f.b_plus.empty();
  if (!f.map_file.empty() && explicit_mats) throw InputError("give either --map or explicit matrices, not both");
  if (!f.map_file.empty()) {
    std::istringstream in(read_text(f.map_file));
    try {
      return read_local_map(in);
    } catch (const std::runtime_error& e) {
      throw InputError(fmt::format("{}: {}", f.map_file, e.what()));
    }
  }
  if (f.a_minus.size() != 4 || f.a_plus.size() != 4 || f.b_minus.size() != 2 || f.b_plus.size() != 2) {
    throw InputError("need --map, or --a-minus/--a-plus (4 values) and --b-minus/--b-plus (2 values)");
  }
  LocalPWLMap m;
  m.A_minus << f.a_minus[0], f.a_minus[1], f.a_minus[2], f.a_minus[3];
  m.A_plus << f.a_plus[0], f.a_plus[1], f.a_plus[2], f.a_plus[3];
  m.B_minus = Vec2(f.b_minus[0], f.b_minus[1]);
  m.B_plus = Vec2(f.b_plus[0], f.b_plus[1]);
  m.C = f.c.size() == 2 ? Eigen::RowVector2d(f.c[0], f.c[1]) : Eigen::RowVector2d(m.A_plus.row(0) - m.A_minus.row(0));
  m.D = f.d.size() == 1 ? f.d[0] : m.B_plus(0) - m.B_minus(0);
  return m;
}

int cmd_classify(const ClassifyFlags& f, const std::string& out_dir, const std::vector<std::string>& argv) {
  LocalIterationConfig lc;
  json j = base_manifest("classify", argv);
  if (!f.scenario.empty()) {
    lc = load_scenario(f.scenario).local;
    echo_scenario(j, f.scenario);
  }
  const LocalPWLMap m = map_from_flags(f);
  if (f.dt_min != 0 || f.dt_max != 0) {
    if (!(f.dt_min < f.dt_max)) throw InputError("need --delta-T-min < --delta-T-max");
    lc.delta_T_min = f.dt_min;
    lc.delta_T_max = f.dt_max;
  }
  if (f.points > 0) lc.n_points = f.points;
  if (!m.A_minus.allFinite() || !m.A_plus.allFinite() || !m.B_minus.allFinite() || !m.B_plus.allFinite()) {
    throw InputError("map entries must be finite");
  }

  const ClassificationResult r = classify(m);
  std::optional<CanonicalizedMap> canon;
  std::string canon_error;
  try {
    canon = canonicalize(m);
  } catch (const UnobservableBoundary& e) {
    canon_error = e.what();
  }
  const LocalDiagram d = iterate_local_map(m, lc);
  if (!f.map_file.empty()) j["map_file_text"] = read_text(f.map_file);
  j["local_map"] = {{"delta_T_min", lc.delta_T_min}, {"delta_T_max", lc.delta_T_max}, {"points", lc.n_points},
                    {"iterations", lc.iterations}, {"transient", lc.transient}, {"seeds", lc.seeds},
                    {"seed", lc.seed}};

  json s;
  s["verdict"] = to_string(r.verdict);
  s["eigenvalues_minus"] = {complex_json(r.eig_minus[0]), complex_json(r.eig_minus[1])};
  s["eigenvalues_plus"] = {complex_json(r.eig_plus[0]), complex_json(r.eig_plus[1])};
  s["real_above_one"] = {{"minus", r.above_one_minus}, {"plus", r.above_one_plus}};
  s["real_below_minus_one"] = {{"minus", r.below_minus_one_minus}, {"plus", r.below_minus_one_plus}};
  if (canon) {
    s["A_bar_minus"] = mat_json(canon->A_bar_minus);
    s["A_bar_plus"] = mat_json(canon->A_bar_plus);
    s["B_tilde"] = vec_json(canon->B_tilde);
    s["B_tilde_plus"] = vec_json(canon->B_tilde_plus);
    s["B_bar"] = vec_json(canon->B_bar);
  } else {
    s["canonical_form_error"] = canon_error;
  }
  s["orientation"] = m.orientation;
  // admissible fixed points on each side of the border
  auto count_side = [&](bool positive) {
    int best = 0;
    for (const auto& p : d.points) {
      if (p.delta_T == 0 || (p.delta_T > 0) != positive) continue;
      int n = 0;
      for (const auto& fp : p.fixed_points) n += fp.admissible ? 1 : 0;
      best = std::max(best, n);
    }
    return best;
  };
  s["admissible_fixed_points"] = {{"delta_T_negative", count_side(false)}, {"delta_T_positive", count_side(true)}};

  Outputs out;
  const CanonicalizedMap* cp = canon ? &*canon : nullptr;
  out.add("classification.txt", [&](std::ostream& os) {
    write_classification_text(os, r, cp);
    if (!canon) os << "canonical form unavailable: " << canon_error << "\n";
  });
  out.add("classification.json", [&](std::ostream& os) { os << s.dump(2) << "\n"; });
  out.add("local_diagram.csv", [&](std::ostream& os) { write_local_diagram_csv(os, d); });
  out.flush(out_dir, j);
  write_classification_text(std::cout, r, cp);
  if (!canon) {
    std::cerr << "numeric failure: " << canon_error << "\n";
    return 1;
  }
  return 0;
}

int cmd_plot(const std::string& csv, const std::string& scenario, const std::string& out_file, bool phases) {
  std::istringstream in(read_text(csv));
  std::string line;
  if (!std::getline(in, line)) throw InputError(fmt::format("'{}' is empty", csv));
  ScatterPlot p;
  const auto comma = line.find(',');
  p.xlabel = line.substr(0, comma);
  p.ylabel = comma == std::string::npos ? "" : line.substr(comma + 1, line.find(',', comma + 1) - comma - 1);
  p.title = fs::path(csv).stem().string();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double x = 0, y = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) != 2) {
      throw InputError(fmt::format("{}:{}: expected two numeric columns", csv, lineno));
    }
    p.x.push_back(x);
    p.y.push_back(y);
  }
  if (phases) {
    p.fixed_y = true;
    p.ymin = 0;
    p.ymax = kTwoPi;
  }
  if (!scenario.empty()) p.rules = corner_phases(load_scenario(scenario).model);
  std::ostringstream os;
  write_svg(os, p);
  const fs::path outp(out_file);
  if (outp.has_parent_path()) fs::create_directories(outp.parent_path());
  std::ofstream f(outp, std::ios::binary);
  if (!f) throw InputError(fmt::format("cannot write '{}'", out_file));
  f << os.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cam-follower corner-impact toolkit"};
  app.set_version_flag("--version", std::string(CORNERIMPACT_VERSION));
  app.require_subcommand(1);
  const std::vector<std::string> args(argv + 1, argv + argc);

  std::string scenario, out_dir;
  double rpm = 0;
  int periods = 50;
  auto* sim = app.add_subcommand("simulate", "Simulate at one cam speed");
  sim->add_option("scenario", scenario, "scenario file")->required();
  sim->add_option("--omega-rpm", rpm, "cam speed [rpm]")->required();
  sim->add_option("--duration-periods", periods, "cam revolutions to simulate");
  sim->add_option("--out-dir", out_dir, "output directory")->required();

  ScanFlags sf;
  auto* sc = app.add_subcommand("scan", "Bifurcation diagram over cam speed");
  sc->add_option("scenario", scenario, "scenario file")->required();
  sc->add_option("--omega-min-rpm", sf.lo);
  sc->add_option("--omega-max-rpm", sf.hi);
  sc->add_option("--points", sf.points);
  sc->add_option("--transient-periods", sf.transient);
  sc->add_option("--record-periods", sf.record);
  sc->add_flag("--no-continuation", sf.no_continuation, "restart every speed from the seed");
  sc->add_flag("--ascending", sf.ascending, "sweep upwards when following the attractor");
  sc->add_option("--threads", sf.threads);
  sc->add_flag("--svg", sf.svg, "also render SVG scatter plots");
  sc->add_option("--out-dir", out_dir)->required();

  CornerFlags cf;
  auto add_corner = [&](CLI::App* a) {
    a->add_option("scenario", scenario, "scenario file")->required();
    a->add_option("--omega-lo-rpm", cf.lo, "corner speed bracket, low end");
    a->add_option("--omega-hi-rpm", cf.hi, "corner speed bracket, high end");
    a->add_option("--from-scan", cf.scan_dir, "scan output directory with crossings.csv");
    a->add_option("--boundary", cf.boundary, "cam boundary index of the corner");
    a->add_option("--out-dir", out_dir)->required();
  };
  auto* der = app.add_subcommand("derive-map", "Analytic local map at a corner-impact orbit");
  add_corner(der);

  EstimateFlags ef;
  auto* est = app.add_subcommand("estimate-map", "Least-squares local map from perturbed simulations");
  add_corner(est);
  est->add_option("--samples", ef.samples);
  est->add_option("--scale", ef.scale, "relative perturbation size");
  est->add_option("--seed", ef.seed);
  est->add_option("--threads", ef.threads);

  ClassifyFlags kf;
  auto* cl = app.add_subcommand("classify", "Border-collision classification of a local map");
  cl->add_option("--map", kf.map_file, "local map file");
  cl->add_option("--scenario", kf.scenario, "scenario providing local_map settings");
  cl->add_option("--a-minus", kf.a_minus)->expected(4);
  cl->add_option("--a-plus", kf.a_plus)->expected(4);
  cl->add_option("--b-minus", kf.b_minus)->expected(2);
  cl->add_option("--b-plus", kf.b_plus)->expected(2);
  cl->add_option("--c", kf.c)->expected(2);
  cl->add_option("--d", kf.d)->expected(1);
  cl->add_option("--delta-T-min", kf.dt_min);
  cl->add_option("--delta-T-max", kf.dt_max);
  cl->add_option("--points", kf.points);
  cl->add_option("--out-dir", out_dir)->required();

  std::string csv, out_file;
  bool phases = false;
  auto* pl = app.add_subcommand("plot", "Render a two-column CSV as an SVG scatter plot");
  pl->add_option("csv", csv)->required();
  pl->add_option("--scenario", scenario, "draw the cam corner phases as dotted lines");
  pl->add_option("--out", out_file)->required();
  pl->add_flag("--phases", phases, "fix the y axis to [0, 2pi)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(scenario, rpm, periods, out_dir, args);
    if (*sc) return cmd_scan(scenario, sf, out_dir, args);
    if (*der) return cmd_derive(scenario, cf, out_dir, args);
    if (*est) return cmd_estimate(scenario, cf, ef, out_dir, args);
    if (*cl) return cmd_classify(kf, out_dir, args);
    if (*pl) return cmd_plot(csv, scenario, out_file, phases);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
