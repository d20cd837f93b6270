#include "cornerimpact/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace cornerimpact {

ScenarioError::ScenarioError(const std::string& msg, int line)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, msg) : msg), line_(line) {}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

const std::map<std::string, std::set<std::string>> kKeys = {
    {"physical", {"mass", "damping", "stiffness", "gravity", "restitution"}},
    {"cam",
     {"kappa1", "kappa2", "rho0", "rho1", "rho2", "rho3", "theta1", "theta2", "theta3", "phase_offset"}},
    {"simulation", {"tol_event", "tol_pen", "eps_stick_v", "max_impacts_per_period", "strobe_phase"}},
    {"initial", {"q", "qdot"}},
    {"scan",
     {"omega_min_rpm", "omega_max_rpm", "points", "transient_periods", "record_periods", "continuation",
      "descending", "seed_q", "seed_qdot", "threads"}},
    {"corner", {"boundary", "omega_lo_rpm", "omega_hi_rpm"}},
    {"estimate", {"samples", "perturbation_scale", "seed", "half_window"}},
    {"local_map", {"delta_T_min", "delta_T_max", "points", "iterations", "transient", "seeds", "seed"}},
};

class Section {
 public:
  Section(const YAML::Node& root, const std::string& name) : name_(name), node_(root[name]) {
    if (!node_) return;
    if (!node_.IsMap()) throw ScenarioError(fmt::format("section '{}' must be a mapping", name), line_of(node_));
    const auto& allowed = kKeys.at(name);
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        throw ScenarioError(fmt::format("unknown key '{}' in section '{}'", key, name), line_of(kv.first));
      }
    }
  }

  bool present() const { return static_cast<bool>(node_); }
  int line() const { return present() ? line_of(node_) : 0; }
  bool has(const std::string& key) const { return present() && node_[key]; }
  int line(const std::string& key) const { return has(key) ? line_of(node_[key]) : line(); }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    const YAML::Node v = node_[key];
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ScenarioError(fmt::format("'{}.{}' has the wrong type", name_, key), line_of(v));
    }
  }

  template <class T>
  T require(const std::string& key) const {
    if (!has(key)) throw ScenarioError(fmt::format("missing required key '{}.{}'", name_, key), line());
    T out{};
    get(key, out);
    return out;
  }

 private:
  std::string name_;
  YAML::Node node_;
};

template <class F>
void checked(int line, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what(), line);
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(e.msg, e.mark.line + 1);
  }
  if (!root.IsMap()) throw ScenarioError("scenario must be a mapping of sections", line_of(root));
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!kKeys.count(key)) throw ScenarioError(fmt::format("unknown section '{}'", key), line_of(kv.first));
  }

  const Section phys(root, "physical"), cam(root, "cam"), sim(root, "simulation"), init(root, "initial"),
      scan_s(root, "scan"), corner(root, "corner"), est(root, "estimate"), local(root, "local_map");
  if (!phys.present()) throw ScenarioError("missing section 'physical'", 0);
  if (!cam.present()) throw ScenarioError("missing section 'cam'", 0);

  PhysicalParams p;
  p.mass = phys.require<double>("mass");
  p.damping = phys.require<double>("damping");
  p.stiffness = phys.require<double>("stiffness");
  phys.get("gravity", p.gravity);
  p.restitution = phys.require<double>("restitution");
  checked(phys.line(), [&] { p.validate(); });

  CamGeometry::Params gp;
  gp.kappa1 = cam.require<double>("kappa1");
  gp.kappa2 = cam.require<double>("kappa2");
  gp.rho0 = cam.require<double>("rho0");
  gp.rho1 = cam.require<double>("rho1");
  gp.rho2 = cam.require<double>("rho2");
  gp.rho3 = cam.require<double>("rho3");
  gp.theta1 = cam.require<double>("theta1");
  gp.theta2 = cam.require<double>("theta2");
  gp.theta3 = cam.require<double>("theta3");
  std::optional<CamGeometry> geom;
  checked(cam.line(), [&] { geom.emplace(gp); });
  double offset = 0.0;
  cam.get("phase_offset", offset);
  if (!std::isfinite(offset)) throw ScenarioError("cam.phase_offset must be finite", cam.line("phase_offset"));

  SimConfig sc;
  sim.get("tol_event", sc.tol_event);
  sim.get("tol_pen", sc.tol_pen);
  sim.get("eps_stick_v", sc.eps_stick_v);
  sim.get("max_impacts_per_period", sc.max_impacts_per_period);
  sim.get("strobe_phase", sc.strobe_phase);
  checked(sim.line(), [&] { sc.validate(); });

  Scenario s{Model{*geom, p, offset, sc}, std::nullopt, {}, {}, {}, {}};

  if (init.present()) s.initial = FollowerState{init.require<double>("q"), init.require<double>("qdot")};

  if (scan_s.present()) {
    auto& c = s.scan;
    c.omega_min_rpm = scan_s.require<double>("omega_min_rpm");
    c.omega_max_rpm = scan_s.require<double>("omega_max_rpm");
    c.n_points = scan_s.require<int>("points");
    scan_s.get("transient_periods", c.transient_periods);
    scan_s.get("record_periods", c.record_periods);
    scan_s.get("continuation", c.continuation);
    scan_s.get("descending", c.descending);
    scan_s.get("threads", c.threads);
    if (scan_s.has("seed_q") != scan_s.has("seed_qdot")) {
      throw ScenarioError("scan.seed_q and scan.seed_qdot go together", scan_s.line());
    }
    if (scan_s.has("seed_q")) {
      c.seed = {scan_s.require<double>("seed_q"), scan_s.require<double>("seed_qdot")};
    } else {
      const double w = rpm_to_rad_s(c.descending ? c.omega_max_rpm : c.omega_min_rpm);
      c.seed = initial_state(s, w);
    }
    checked(scan_s.line(), [&] { c.validate(); });
  }

  corner.get("boundary", s.corner.boundary);
  corner.get("omega_lo_rpm", s.corner.omega_lo_rpm);
  corner.get("omega_hi_rpm", s.corner.omega_hi_rpm);
  if (s.corner.boundary < 0 || s.corner.boundary >= static_cast<int>(s.model.geometry.boundaries().size())) {
    throw ScenarioError("corner.boundary out of range", corner.line("boundary"));
  }
  if (corner.has("omega_lo_rpm") &&
      !(s.corner.omega_lo_rpm > 0 && s.corner.omega_hi_rpm > s.corner.omega_lo_rpm)) {
    throw ScenarioError("corner bracket must satisfy 0 < omega_lo_rpm < omega_hi_rpm", corner.line());
  }

  est.get("samples", s.estimate.samples);
  est.get("perturbation_scale", s.estimate.perturbation_scale);
  est.get("seed", s.estimate.seed);
  est.get("half_window", s.estimate.half_window);
  if (s.estimate.samples < 1) throw ScenarioError("estimate.samples must be positive", est.line("samples"));
  if (!(s.estimate.perturbation_scale > 0)) {
    throw ScenarioError("estimate.perturbation_scale must be positive", est.line("perturbation_scale"));
  }
  if (!(s.estimate.half_window > 0 && s.estimate.half_window < 1)) {
    throw ScenarioError("estimate.half_window must be in (0, 1)", est.line("half_window"));
  }

  local.get("delta_T_min", s.local.delta_T_min);
  local.get("delta_T_max", s.local.delta_T_max);
  local.get("points", s.local.n_points);
  local.get("iterations", s.local.iterations);
  local.get("transient", s.local.transient);
  local.get("seeds", s.local.seeds);
  local.get("seed", s.local.seed);
  if (!(s.local.delta_T_min < s.local.delta_T_max) || s.local.n_points < 1 || s.local.iterations < 1 ||
      s.local.transient < 0 || s.local.seeds < 0) {
    throw ScenarioError("invalid local_map settings", local.line());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(fmt::format("cannot read scenario '{}'", path), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

FollowerState initial_state(const Scenario& s, double omega) {
  if (s.initial) return *s.initial;
  const CamDrive drive = s.model.drive(omega);
  const CamState c = drive.state(s.model.sim.strobe_phase / omega);
  return {c.position, c.velocity};
}

}  // namespace cornerimpact
