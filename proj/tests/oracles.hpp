#pragma once

// Brute-force reference computations. Each one avoids the code path it is used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "flatness/flat_distance.hpp"

namespace oracle {

using flatness::Ball;
using flatness::DiscreteMeasure;
using flatness::Index;
using flatness::MatrixXd;
using flatness::VectorXd;

// F_B by enumerating every vertex of the potential polytope
//   |v_i - v_j| <= |p_i - p_j|,  |v_i| <= r - |p_i - x_B|
// on the union support inside the ball. Exponential; meant for a handful of atoms.
inline double fb_vertices(const DiscreteMeasure& sigma, const DiscreteMeasure& nu, const Ball& b) {
  std::vector<VectorXd> pts;
  std::vector<double> net;
  auto take = [&](const DiscreteMeasure& m, double sign) {
    for (Index i = 0; i < m.size(); ++i) {
      if (!b.contains(m.point(i))) continue;
      pts.emplace_back(m.point(i));
      net.push_back(sign * m.weight(i));
    }
  };
  take(sigma, 1.0);
  take(nu, -1.0);
  const int k = static_cast<int>(pts.size());
  if (k == 0) return 0.0;

  // rows of G v <= h
  std::vector<VectorXd> rows;
  std::vector<double> rhs;
  for (int i = 0; i < k; ++i) {
    const double cap = b.radius - (pts[i] - b.center).norm();
    for (double s : {1.0, -1.0}) {
      VectorXd g = VectorXd::Zero(k);
      g[i] = s;
      rows.push_back(g);
      rhs.push_back(cap);
    }
    for (int j = i + 1; j < k; ++j) {
      const double dij = (pts[i] - pts[j]).norm();
      for (double s : {1.0, -1.0}) {
        VectorXd g = VectorXd::Zero(k);
        g[i] = s;
        g[j] = -s;
        rows.push_back(g);
        rhs.push_back(dij);
      }
    }
  }
  const int m = static_cast<int>(rows.size());
  const Eigen::Map<const VectorXd> w(net.data(), k);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(k));
  std::iota(pick.begin(), pick.end(), 0);
  // iterate over all k-subsets of the m constraints
  while (true) {
    MatrixXd A(k, k);
    VectorXd h(k);
    for (int r = 0; r < k; ++r) {
      A.row(r) = rows[pick[r]].transpose();
      h[r] = rhs[pick[r]];
    }
    Eigen::FullPivLU<MatrixXd> lu(A);
    if (lu.rank() == k) {
      const VectorXd v = lu.solve(h);
      bool feasible = true;
      for (int r = 0; r < m && feasible; ++r) feasible = rows[r].dot(v) <= rhs[r] + 1e-11;
      if (feasible) best = std::max(best, w.dot(v));
    }
    int i = k - 1;
    while (i >= 0 && pick[i] == m - k + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

// W1 between two uniform measures with the same atom count: an optimal plan sits at a
// permutation matrix, so the minimum over permutations is exact.
inline double w1_uniform_assignment(const MatrixXd& p, const MatrixXd& q) {
  const int k = static_cast<int>(p.cols());
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < k; ++i) c += (p.col(i) - q.col(perm[i])).norm();
    best = std::min(best, c / k);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Convex 1-D minimization on [lo, hi] by golden sections.
template <typename F>
double golden_min(F&& f, double lo, double hi, int iters, double* arg = nullptr) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  double best = std::min(f1, f2), at = f1 <= f2 ? x1 : x2;
  for (double e : {lo, hi}) {
    const double fe = f(e);
    if (fe < best) {
      best = fe;
      at = e;
    }
  }
  if (arg) *arg = at;
  return best;
}

// alpha for n = 2, d = 1 by exhaustive search over lines (angle x offset grid, refined
// around the best coarse cells down to a pi/fine x 2r/fine resolution) with a golden
// section over the density for every line. The flat measure is rebuilt here from its
// definition: nodes at spacing r/quad from the foot of the perpendicular.
struct AlphaGrid {
  double alpha = 0.0;
  double angle = 0.0;
  double offset = 0.0;
  double c = 0.0;
};

inline AlphaGrid alpha_grid_2d(const DiscreteMeasure& mu, const Ball& b, int quad, int coarse = 32, int fine = 200,
                               int keep = 4) {
  const double r = b.radius;
  const DiscreteMeasure inside = flatness::restrict(mu, b);
  const double mass = inside.total_mass();
  const double theta = mass / r;
  const double spacing = r / quad;
  flatness::detail::BallTransport transport(inside.points(), inside.weights(), b);

  auto line_value = [&](double ang, double t, double* c_out) {
    const VectorXd u = (VectorXd(2) << std::cos(ang), std::sin(ang)).finished();
    const VectorXd nrm = (VectorXd(2) << -std::sin(ang), std::cos(ang)).finished();
    const VectorXd foot = b.center + t * nrm;
    std::vector<VectorXd> nodes;
    for (long k = -4 * quad; k <= 4 * quad; ++k) {
      const VectorXd p = foot + (static_cast<double>(k) * spacing) * u;
      if ((p - b.center).squaredNorm() < r * r) nodes.push_back(p);
    }
    MatrixXd nm(2, static_cast<Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) nm.col(static_cast<Index>(i)) = nodes[i];
    auto f = [&](double c) {
      if (nodes.empty() || c <= 0.0) return transport.evaluate_empty(nm).value;
      return transport.evaluate(nm, c * spacing).value;
    };
    double hi = 16.0 * theta, c = 0.0;
    double v = golden_min(f, 0.0, hi, 30, &c);
    while (c >= hi * (1.0 - 1e-9)) {
      hi *= 4.0;
      v = golden_min(f, 0.0, hi, 30, &c);
    }
    if (c_out) *c_out = c;
    return v;
  };

  struct Cell {
    double v, ang, t;
  };
  std::vector<Cell> cells;
  const double da = std::numbers::pi / coarse, dt = 2.0 * r / coarse;
  for (int i = 0; i < coarse; ++i)
    for (int j = 0; j < coarse; ++j) {
      const double ang = (i + 0.5) * da, t = -r + (j + 0.5) * dt;
      cells.push_back({line_value(ang, t, nullptr), ang, t});
    }
  std::sort(cells.begin(), cells.end(), [](const Cell& x, const Cell& y) { return x.v < y.v; });
  AlphaGrid best;
  double best_v = std::numeric_limits<double>::infinity();
  const double fa = std::numbers::pi / fine, ft = 2.0 * r / fine;
  const int span_a = static_cast<int>(std::ceil(da / fa)), span_t = static_cast<int>(std::ceil(dt / ft));
  for (int q = 0; q < std::min<int>(keep, static_cast<int>(cells.size())); ++q) {
    for (int i = -span_a; i <= span_a; ++i)
      for (int j = -span_t; j <= span_t; ++j) {
        const double ang = cells[q].ang + i * fa, t = cells[q].t + j * ft;
        if (std::abs(t) >= r) continue;
        double c = 0.0;
        const double v = line_value(ang, t, &c);
        if (v < best_v) {
          best_v = v;
          best = {0.0, ang, t, c};
        }
      }
  }
  best.alpha = best_v / (r * mass);
  return best;
}

// beta_2 for n = 2, d = 1 without eigenvectors: scan the angle, minimize the convex
// quadratic in the offset by golden sections, then refine the angle locally.
inline double beta2_grid_2d(const DiscreteMeasure& mu, const Ball& b, int angles = 3600) {
  const DiscreteMeasure in = flatness::restrict(mu, b);
  if (in.empty()) return 0.0;
  const double r = b.radius;
  auto at_angle = [&](double ang) {
    const double nx = -std::sin(ang), ny = std::cos(ang);
    auto cost = [&](double t) {
      double s = 0.0;
      for (Index i = 0; i < in.size(); ++i) {
        const double dist = nx * in.point(i)[0] + ny * in.point(i)[1] - t;
        s += in.weight(i) * dist * dist;
      }
      return s;
    };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Index i = 0; i < in.size(); ++i) {
      const double proj = nx * in.point(i)[0] + ny * in.point(i)[1];
      lo = std::min(lo, proj);
      hi = std::max(hi, proj);
    }
    return golden_min(cost, lo - 1e-9, hi + 1e-9, 80);
  };
  double best = std::numeric_limits<double>::infinity(), best_ang = 0.0;
  const double step = std::numbers::pi / angles;
  for (int i = 0; i < angles; ++i) {
    const double v = at_angle(i * step);
    if (v < best) {
      best = v;
      best_ang = i * step;
    }
  }
  best = std::min(best, golden_min(at_angle, best_ang - step, best_ang + step, 80));
  return std::sqrt(std::max(0.0, best) / (r * r * r));
}

}  // namespace oracle
