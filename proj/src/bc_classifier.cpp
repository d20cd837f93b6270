#include "cornerimpact/bc_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <fmt/format.h>

namespace cornerimpact {

namespace {

std::array<std::complex<double>, 2> eig2(const Eigen::Matrix2d& A) {
  const double tr = A.trace(), det = A.determinant();
  const double disc = 0.25 * tr * tr - det;
  if (disc >= 0) {
    // larger root first; the smaller from the product avoids cancellation
    const double l1 = 0.5 * tr + std::copysign(std::sqrt(disc), tr == 0 ? 1.0 : tr);
    const double l2 = l1 != 0 ? det / l1 : 0.5 * tr - std::sqrt(disc);
    std::array<std::complex<double>, 2> e{std::complex<double>(l1), std::complex<double>(l2)};
    if (e[0].real() < e[1].real()) std::swap(e[0], e[1]);
    return e;
  }
  const double im = std::sqrt(-disc);
  return {std::complex<double>(0.5 * tr, im), std::complex<double>(0.5 * tr, -im)};
}

double spectral_radius(const Eigen::Matrix2d& A) {
  const auto e = eig2(A);
  return std::max(std::abs(e[0]), std::abs(e[1]));
}

Vec2 b_tilde(const Eigen::Matrix2d& A, const Vec2& B, double c1, double d) { return B - A.col(0) * (d / c1); }

double escape_scale(const LocalPWLMap& m) {
  if (m.C(0) != 0.0) return b_tilde(m.A_minus, m.B_minus, m.C(0), m.D).norm();
  return std::max(m.B_minus.norm(), m.B_plus.norm());
}

}  // namespace

double CanonicalizedMap::b_tilde_mismatch() const {
  const double s = std::max({B_tilde.cwiseAbs().maxCoeff(), B_tilde_plus.cwiseAbs().maxCoeff(), 1e-300});
  return (B_tilde - B_tilde_plus).cwiseAbs().maxCoeff() / s;
}

CanonicalizedMap canonicalize(const LocalPWLMap& map) {
  const double c1 = map.C(0);
  if (c1 == 0.0 || !std::isfinite(c1)) throw UnobservableBoundary("first component of C is zero; dT cannot be removed");
  Eigen::Matrix2d O;
  O.row(0) = map.C;
  O.row(1) = map.C * map.A_minus;
  const double scale = O.cwiseAbs().maxCoeff();
  if (!(std::abs(O.determinant()) > 1e-14 * scale * scale)) {
    throw UnobservableBoundary("observability matrix [C; C A-] is singular");
  }
  // characteristic polynomial l^2 + d1 l + d2
  const double d1 = -map.A_minus.trace();
  Eigen::Matrix2d Tm;
  Tm << 1.0, 0.0, d1, 1.0;

  CanonicalizedMap c;
  c.W = Tm * O;
  const Eigen::Matrix2d Wi = c.W.inverse();
  c.A_bar_minus = c.W * map.A_minus * Wi;
  c.A_bar_plus = c.W * map.A_plus * Wi;
  c.shift = map.D / c1;
  c.B_tilde = b_tilde(map.A_minus, map.B_minus, c1, map.D);
  c.B_tilde_plus = b_tilde(map.A_plus, map.B_plus, c1, map.D);
  c.B_bar = c.W * c.B_tilde;
  c.C_bar = map.C * Wi;
  return c;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::NonsmoothFold:
      return "nonsmooth-fold";
    case Verdict::Persistence:
      return "persistence";
    case Verdict::Undetermined:
      break;
  }
  return "undetermined-by-eigenvalue-test";
}

ClassificationResult classify(const LocalPWLMap& map) {
  ClassificationResult r;
  r.eig_minus = eig2(map.A_minus);
  r.eig_plus = eig2(map.A_plus);
  bool marginal = false;
  auto count = [&](const std::array<std::complex<double>, 2>& e, int& above, int& below) {
    for (const auto& l : e) {
      if (std::abs(l - 1.0) <= 1e-8) marginal = true;
      if (l.imag() != 0.0) continue;
      if (l.real() > 1.0) ++above;
      if (l.real() < -1.0) ++below;
    }
  };
  count(r.eig_minus, r.above_one_minus, r.below_minus_one_minus);
  count(r.eig_plus, r.above_one_plus, r.below_minus_one_plus);
  if (marginal || !map.A_minus.allFinite() || !map.A_plus.allFinite()) {
    r.verdict = Verdict::Undetermined;
  } else {
    r.verdict = (r.above_one_minus + r.above_one_plus) % 2 == 1 ? Verdict::NonsmoothFold : Verdict::Persistence;
  }
  return r;
}

std::array<BranchFixedPoint, 2> branch_fixed_points(const LocalPWLMap& map, double delta_T) {
  std::array<BranchFixedPoint, 2> out;
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  for (int k = 0; k < 2; ++k) {
    const bool minus = k == 0;
    const Eigen::Matrix2d& A = minus ? map.A_minus : map.A_plus;
    const Vec2& B = minus ? map.B_minus : map.B_plus;
    BranchFixedPoint& f = out[static_cast<std::size_t>(k)];
    f.branch = minus ? -1 : 1;
    f.x = (I - A).partialPivLu().solve(B * delta_T);
    f.sigma = map.orientation * ((map.C * f.x).value() + map.D * delta_T);
    f.stable = spectral_radius(A) < 1.0;
    if (delta_T == 0.0) {
      f.admissible = true;  // both at the origin, on the border
    } else {
      f.admissible = f.x.allFinite() && (minus ? f.sigma < 0 : f.sigma > 0);
    }
  }
  return out;
}

LocalDiagram iterate_local_map(const LocalPWLMap& map, const LocalIterationConfig& cfg) {
  LocalDiagram d;
  d.seeds_per_point = cfg.seeds;
  const double bscale = escape_scale(map);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = std::max(cfg.n_points, 1);
  for (int i = 0; i < n; ++i) {
    LocalDiagramPoint p;
    p.delta_T = n == 1 ? cfg.delta_T_min
                       : cfg.delta_T_min + (cfg.delta_T_max - cfg.delta_T_min) * double(i) / double(n - 1);
    p.fixed_points = branch_fixed_points(map, p.delta_T);
    const double radius = 1e4 * bscale * std::abs(p.delta_T);
    const double seed_scale = bscale * std::abs(p.delta_T);
    for (int s = 0; s < cfg.seeds; ++s) {
      Vec2 x(seed_scale * u(rng), seed_scale * u(rng));
      bool esc = false;
      for (int it = 0; it < cfg.iterations; ++it) {
        x = map.apply(x, p.delta_T);
        if (!x.allFinite() || (radius > 0 && x.norm() > radius)) {
          esc = true;
          break;
        }
        if (it >= cfg.transient) p.orbit.push_back(x(0));
      }
      if (esc) ++p.escaped;
    }
    d.points.push_back(std::move(p));
  }
  return d;
}

void write_local_diagram_csv(std::ostream& os, const LocalDiagram& d) {
  os << "delta_T,branch,value,stability\n";
  for (const auto& p : d.points) {
    for (const auto& f : p.fixed_points) {
      if (!f.admissible) continue;
      os << fmt::format("{},{},{},{}\n", p.delta_T, f.branch < 0 ? "minus" : "plus", f.x(0),
                        f.stable ? "stable" : "unstable");
    }
    for (double v : p.orbit) os << fmt::format("{},iterate,{},orbit\n", p.delta_T, v);
    if (p.escaped > 0) os << fmt::format("{},iterate,{},escaped\n", p.delta_T, p.escaped);
  }
}

void write_classification_text(std::ostream& os, const ClassificationResult& c, const CanonicalizedMap* canon) {
  auto ev = [](const std::complex<double>& l) {
    if (l.imag() == 0.0) return fmt::format("{}", l.real());
    return fmt::format("{} {} {}j", l.real(), l.imag() < 0 ? "-" : "+", std::abs(l.imag()));
  };
  os << "eigenvalues A-: " << ev(c.eig_minus[0]) << ", " << ev(c.eig_minus[1]) << "\n";
  os << "eigenvalues A+: " << ev(c.eig_plus[0]) << ", " << ev(c.eig_plus[1]) << "\n";
  os << fmt::format("real eigenvalues > 1: minus {}, plus {}\n", c.above_one_minus, c.above_one_plus);
  os << fmt::format("real eigenvalues < -1: minus {}, plus {}\n", c.below_minus_one_minus, c.below_minus_one_plus);
  os << "verdict: " << to_string(c.verdict) << "\n";
  if (canon) {
    const auto& a = canon->A_bar_minus;
    const auto& b = canon->A_bar_plus;
    os << fmt::format("A_bar-: [[{}, {}], [{}, {}]]\n", a(0, 0), a(0, 1), a(1, 0), a(1, 1));
    os << fmt::format("A_bar+: [[{}, {}], [{}, {}]]\n", b(0, 0), b(0, 1), b(1, 0), b(1, 1));
    os << fmt::format("B_tilde: [{}, {}] (plus branch [{}, {}])\n", canon->B_tilde(0), canon->B_tilde(1),
                      canon->B_tilde_plus(0), canon->B_tilde_plus(1));
    os << fmt::format("B_bar: [{}, {}]\n", canon->B_bar(0), canon->B_bar(1));
  }
}

}  // namespace cornerimpact
