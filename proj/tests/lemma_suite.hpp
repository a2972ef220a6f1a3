#pragma once

// Nested-ball inequalities between the fits of a small ball B(x,r) and a large ball
// B(y,s) with B(x,2r) inside B(y,s). Shared by the acceptance run and the calibration
// tool that freezes the implied constants.

#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "flatness/coefficients.hpp"
#include "flatness/measure_io.hpp"

namespace lemmas {

using namespace flatness;

struct Constants {
  double density_factor = 8.0;  // Theta(x,r/2)/K <= c <= K Theta(x,r)
  double angle_factor = 0.0;    // angle + local distance <= C (f1+f2)/(r mu(B(x,r/2)))
  double density_gap = 0.0;     // |c1-c2| <= C (f1+f2)/r^(d+1) (1+Theta(y,s)/Theta(x,r/2)) s/r
  double monotone_slack = 0.1;  // relative slack on the monotonicity bound
};

inline Constants load_constants(const std::string& path) {
  const io::json j = io::read_json(path);
  Constants c;
  c.density_factor = j.at("density_factor").get<double>();
  c.angle_factor = j.at("angle_factor").get<double>();
  c.density_gap = j.at("density_gap").get<double>();
  c.monotone_slack = j.at("monotone_slack").get<double>();
  return c;
}

struct Instance {
  DiscreteMeasure mu;
  VectorXd x, y;
  double r = 0.0, s = 1.0;
};

// A gently bent line of near-regular atoms through the unit ball with a little noise
// and rare outliers, so that small balls are well resolved. The small ball sits inside with room for B(x,2r).
inline Instance make_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int k = 600;
  const double ang = std::numbers::pi * u(rng), noise = 0.003 * u(rng);
  const double bend = 0.2 * (u(rng) - 0.5), knee = u(rng) - 0.5;
  const double step = 2.4 / k;
  const VectorXd e0 = (VectorXd(2) << std::cos(ang), std::sin(ang)).finished();
  const VectorXd e1 = (VectorXd(2) << -std::sin(ang), std::cos(ang)).finished();
  MatrixXd p(2, k);
  VectorXd w(k);
  for (int i = 0; i < k; ++i) {
    if (u(rng) < 0.01) {
      const double t = 2.0 * std::numbers::pi * u(rng), rho = 1.2 * std::sqrt(u(rng));
      p(0, i) = rho * std::cos(t);
      p(1, i) = rho * std::sin(t);
    } else {
      // near-regular spacing keeps the small-scale discrepancy low
      const double a = -1.2 + step * (i + 0.5 + 0.2 * (u(rng) - 0.5)), e = noise * (2.0 * u(rng) - 1.0);
      const double lift = a > knee ? std::tan(bend) * (a - knee) : 0.0;
      p.col(i) = a * e0 + (lift + e) * e1;
    }
    w[i] = 0.9 + 0.2 * u(rng);
  }
  Instance in;
  in.mu = DiscreteMeasure(p, w);
  in.y = VectorXd::Zero(2);
  in.s = 1.0;
  // centre near the curve so the small ball is not empty
  const double along = 0.25 * (2.0 * u(rng) - 1.0);
  in.x = along * e0 + (along > knee ? std::tan(bend) * (along - knee) : 0.0) * e1;
  in.r = 0.15 + (0.5 * (1.0 - in.x.norm()) - 0.16) * u(rng);
  return in;
}

// Hausdorff distance of two lines seen from B(x, rho), by dense sampling.
inline double line_distance(const AffinePlane& a, const AffinePlane& b, const VectorXd& x, double rho) {
  auto sample = [&](const AffinePlane& l) {
    const VectorXd foot = l.project(x);
    const int m = 2001;
    MatrixXd pts(2, m);
    for (int i = 0; i < m; ++i) pts.col(i) = foot + (4.0 * rho * (i - m / 2) / (m / 2)) * l.basis().col(0);
    return pts;
  };
  return local_hausdorff<double>(sample(a), sample(b), x, rho);
}

struct Stats {
  // statistics whose constants are calibrated; negative when the lemma does not apply
  double density_ratio = -1.0;  // worst of c/Theta(x,r) and Theta(x,r/2)/c over both balls
  double angle = -1.0;
  double gap = -1.0;
  bool monotone_ok = true;
  bool intersects_ok = true;
  bool intersects_applies = false;
};

inline Stats evaluate(const Instance& in, const FitConfig& cfg, double monotone_slack) {
  Stats st;
  const Ball small(in.x, in.r), large(in.y, in.s);
  const AlphaResult a1 = alpha(in.mu, small, 1, cfg);
  const AlphaResult a2 = alpha(in.mu, large, 1, cfg);
  auto mass = [&](const VectorXd& c, double rad) { return ball_mass(in.mu, Ball(c, rad)); };
  auto theta = [&](const VectorXd& c, double rad) { return mass(c, rad) / rad; };

  // monotonicity under inclusion
  const double bound = in.s * mass(in.y, in.s) / (in.r * mass(in.x, in.r)) * a2.alpha;
  st.monotone_ok = a1.alpha * (1.0 - monotone_slack) <= bound;

  // the large-ball plane meets B(x, r) whenever F < (r/2) mu(B(x, r/2))
  if (a2.f_value < 0.5 * in.r * mass(in.x, 0.5 * in.r)) {
    st.intersects_applies = true;
    st.intersects_ok = a2.plane_best.distance(in.x) < in.r;
  }

  // density comparable to Theta
  auto density = [&](const AlphaResult& a, const VectorXd& c, double rad) {
    if (!(a.alpha < mass(c, rad / 8.0) / (8.0 * mass(c, rad)))) return -1.0;
    const double lo = theta(c, rad / 2.0), hi = theta(c, rad);
    if (a.c_best <= 0.0) return std::numeric_limits<double>::infinity();
    return std::max(a.c_best / hi, lo / a.c_best);
  };
  st.density_ratio = std::max(density(a1, in.x, in.r), density(a2, in.y, in.s));

  const bool small_good = a1.f_value < in.r / 8.0 * mass(in.x, in.r / 8.0);
  const bool large_good = a2.f_value < in.s / 8.0 * mass(in.y, in.s / 8.0);
  const double f = a1.f_value + a2.f_value;
  if (small_good && f > 0.0) {
    const double lhs = plane_angle(a1.plane_best, a2.plane_best) + line_distance(a1.plane_best, a2.plane_best, in.x, in.r / 2.0);
    st.angle = lhs / (f / (in.r * mass(in.x, in.r / 2.0)));
  }
  if (small_good && large_good && f > 0.0) {
    const double scale = f / (in.r * in.r) * (1.0 + theta(in.y, in.s) / theta(in.x, in.r / 2.0)) * in.s / in.r;
    st.gap = std::abs(a1.c_best - a2.c_best) / scale;
  }
  return st;
}

struct Report {
  std::array<int, 5> violations{};
  std::array<int, 5> checked{};
  std::array<double, 5> worst{};  // largest density, angle and gap statistics (slots 2..4)
};

inline Report run(int count, std::uint64_t seed, const Constants& k) {
  FitConfig cfg;
  cfg.quad = 32;
  std::mt19937_64 rng(seed);
  Report rep;
  for (int i = 0; i < count; ++i) {
    const Instance in = make_instance(rng);
    const Stats st = evaluate(in, cfg, k.monotone_slack);
    ++rep.checked[0];
    rep.violations[0] += !st.monotone_ok;
    if (st.intersects_applies) {
      ++rep.checked[1];
      rep.violations[1] += !st.intersects_ok;
    }
    auto tally = [&](int slot, double stat, double limit) {
      if (stat < 0.0) return;
      ++rep.checked[slot];
      rep.worst[slot] = std::max(rep.worst[slot], stat);
      rep.violations[slot] += stat > limit;
    };
    tally(2, st.density_ratio, k.density_factor);
    tally(3, st.angle, k.angle_factor);
    tally(4, st.gap, k.density_gap);
  }
  return rep;
}

}  // namespace lemmas
