#include "flatness/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "flatness/network_simplex.hpp"

namespace flatness {

void FitConfig::validate() const {
  if (quad < 2) throw ValidationError("quad must be at least 2");
  if (restarts < 1) throw ValidationError("restarts must be at least 1");
  if (!(agreement_tol > 0.0)) throw ValidationError("agreement_tol must be positive");
  if (!(c_tol > 0.0) || !(c_tol < 1.0)) throw ValidationError("c_tol must lie in (0,1)");
  if (plane_iters < 1) throw ValidationError("plane_iters must be positive");
}

std::string_view to_string(AlphaStatus s) {
  return s == AlphaStatus::converged ? "converged" : "multistart-disagreement";
}

namespace {

struct Moments {
  double mass = 0.0;
  VectorXd centroid;
  MatrixXd scatter;
};

Moments moments(const MatrixXd& pts, const VectorXd& w) {
  Moments m;
  m.mass = w.sum();
  m.centroid = pts * w / m.mass;
  const MatrixXd centered = pts.colwise() - m.centroid;
  m.scatter = centered * w.asDiagonal() * centered.transpose();
  return m;
}

// Plane through the centroid spanned by the top-d eigenvectors.
AffinePlane pca(const MatrixXd& pts, const VectorXd& w, int d) {
  const Moments m = moments(pts, w);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m.scatter);
  return AffinePlane(m.centroid, eig.eigenvectors().rightCols(d));
}

// Coordinates around a reference plane: orientation A ((n-d) x d) tilts the basis
// along the normals, offset o moves the plane by r*W*o from the foot of the center.
class PlaneChart {
 public:
  PlaneChart(const AffinePlane& ref, const Ball& b)
      : u_(ref.basis()), w_(ref.normal_basis()), foot_(ref.project(b.center)), r_(b.radius) {}

  int size() const {
    const int k = static_cast<int>(w_.cols());
    return k * static_cast<int>(u_.cols()) + k;
  }

  AffinePlane plane(const VectorXd& x) const {
    const Index k = w_.cols(), d = u_.cols();
    const Eigen::Map<const MatrixXd> a(x.data(), k, d);
    const VectorXd point = foot_ + r_ * w_ * x.tail(k);
    return AffinePlane(point, u_ + w_ * a);
  }

 private:
  MatrixXd u_, w_;
  VectorXd foot_;
  double r_;
};

struct Vertex {
  VectorXd x;
  double f;
};

// Nelder-Mead with the standard coefficients. Stops when the simplex has collapsed
// below xtol or its values agree within ftol, or after max_evals evaluations.
template <typename F>
Vertex nelder_mead(F&& f, const VectorXd& x0, const VectorXd& step, int max_evals, double ftol,
                   double xtol) {
  const Index k = x0.size();
  std::vector<Vertex> s;
  s.push_back({x0, f(x0)});
  int evals = 1;
  for (Index i = 0; i < k; ++i) {
    VectorXd x = x0;
    x[i] += step[i];
    s.push_back({x, f(x)});
    ++evals;
  }
  auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
  while (evals < max_evals) {
    std::stable_sort(s.begin(), s.end(), by_value);
    double diam = 0.0;
    for (Index i = 1; i <= k; ++i) diam = std::max(diam, (s[i].x - s[0].x).lpNorm<Eigen::Infinity>());
    if (diam <= xtol || (s[k].f - s[0].f <= ftol && diam <= 100 * xtol)) break;

    VectorXd centroid = VectorXd::Zero(k);
    for (Index i = 0; i < k; ++i) centroid += s[i].x;
    centroid /= static_cast<double>(k);
    const VectorXd xr = centroid + (centroid - s[k].x);
    const double fr = f(xr);
    ++evals;
    if (fr < s[0].f) {
      const VectorXd xe = centroid + 2.0 * (centroid - s[k].x);
      const double fe = f(xe);
      ++evals;
      s[k] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
    } else if (fr < s[k - 1].f) {
      s[k] = {xr, fr};
    } else {
      const bool outside = fr < s[k].f;
      const VectorXd xc = outside ? VectorXd(centroid + 0.5 * (xr - centroid))
                                  : VectorXd(centroid + 0.5 * (s[k].x - centroid));
      const double fc = f(xc);
      ++evals;
      if (fc < (outside ? fr : s[k].f)) {
        s[k] = {xc, fc};
      } else {
        for (Index i = 1; i <= k; ++i) {
          s[i].x = s[0].x + 0.5 * (s[i].x - s[0].x);
          s[i].f = f(s[i].x);
          ++evals;
        }
      }
    }
  }
  return *std::min_element(s.begin(), s.end(), by_value);
}

// A plane missing the ball carries no flat mass; move it to the center's foot so
// the reported plane meets B (the value at c = 0 does not depend on the plane).
AffinePlane through_ball(const AffinePlane& plane, const Ball& b) {
  if (plane.distance(b.center) < b.radius) return plane;
  return AffinePlane(b.center, plane.basis());
}

std::vector<AffinePlane> seeds(const DiscreteMeasure& inside, const Ball& b, int d, int restarts,
                               const std::optional<AffinePlane>& warm) {
  std::vector<AffinePlane> out;
  out.push_back(pca(inside.points(), inside.weights(), d));
  const DiscreteMeasure half = restrict(inside, b.scaled(0.5));
  out.push_back(half.total_mass() > 0.0 ? pca(half.points(), half.weights(), d) : out[0]);
  if (warm) out.push_back(through_ball(*warm, b));
  else out.push_back(AffinePlane(b.center, out[0].basis()));
  // Further restarts rotate the first seed within its first normal direction.
  const int n = inside.ambient_dim();
  if (restarts > 3 && d < n) {
    const MatrixXd normal = out[0].normal_basis();
    for (int j = 3; j < restarts; ++j) {
      const double t = std::numbers::pi * (j - 2) / (restarts - 1);
      MatrixXd span = out[0].basis();
      span.col(0) = std::cos(t) * span.col(0) + std::sin(t) * normal.col(0);
      out.emplace_back(out[0].base_point(), span);
    }
  }
  out.resize(static_cast<std::size_t>(std::min<int>(restarts, static_cast<int>(out.size()))));
  return out;
}

// Ball coordinates y -> (y - x_B) / r_B with masses divided by mu(B). Solver tolerances
// are absolute, so fits always run in the unit ball with unit mass.
struct UnitFrame {
  VectorXd center;
  double radius = 1.0;
  double mass = 1.0;

  AffinePlane to_unit(const AffinePlane& p) const {
    return AffinePlane((p.base_point() - center) / radius, p.basis());
  }
  AffinePlane from_unit(const AffinePlane& p) const {
    return AffinePlane(center + radius * p.base_point(), p.basis());
  }
  std::optional<AffinePlane> to_unit(const std::optional<AffinePlane>& p) const {
    if (!p) return std::nullopt;
    return to_unit(*p);
  }
};

// Minimizes F_B(mu, c H^d|_L) over c for planes of one ball. F is convex and piecewise
// linear in c and each transport solve also yields a subgradient, so tangent cuts
// bracket the minimum and certify the gap.
class DensityFitter {
 public:
  // Neighbouring planes have nearly equal optimal densities: probe close to the hint first.
  static constexpr double kNear = 1.02;

  DensityFitter(const DiscreteMeasure& inside, const Ball& b, const FitConfig& cfg, int d)
      : transport_(inside.points(), inside.weights(), b),
        ball_(b),
        cfg_(cfg),
        theta_(inside.total_mass() / std::pow(b.radius, d)),
        floor_(1e-12 * b.radius * inside.total_mass()) {}

  PlaneFit fit(const AffinePlane& plane) {
    const SliceLattice lat = slice_lattice(plane, ball_, cfg_.quad);
    if (lat.nodes.cols() == 0) return {transport_.boundary_value(), 0.0};
    const double nw = lat.node_weight;

    struct Probe {
      double w, f, g;
    };
    auto probe = [&](double w) {
      ++evaluations_;
      const auto e = transport_.evaluate(lat.nodes, w);
      return Probe{w, e.value, -e.sink_potential_sum};
    };
    const auto e0 = transport_.evaluate_empty(lat.nodes);
    Probe left{0.0, e0.value, -e0.sink_potential_sum};
    if (left.g >= 0.0) return {left.f, 0.0};

    Probe best = left;
    const double bracket = 16.0 * theta_ * nw;
    double w = hint_ > 0.0 ? hint_ * nw : transport_.source_mass() / static_cast<double>(lat.nodes.cols());
    Probe right{0.0, 0.0, 0.0};
    bool have_right = false;
    for (int expand = 0; expand < 60; ++expand) {
      const Probe p = probe(w);
      if (p.f < best.f) best = p;
      if (p.g >= 0.0) {
        right = p;
        have_right = true;
        break;
      }
      left = p;
      w = expand == 0 ? (hint_ > 0.0 ? kNear * w : std::max(kNear * w, std::min(bracket, 4.0 * w)))
                      : 4.0 * w;
    }
    if (!have_right) return {best.f, best.w / nw};
    if (right.g == 0.0) return {right.f, right.w / nw};
    // Tighten from below when the first probe already overshot.
    if (left.w == 0.0 && hint_ > 0.0) {
      const Probe p = probe(right.w / kNear);
      if (p.f < best.f) best = p;
      if (p.g < 0.0) left = p;
      else if (p.g == 0.0) return {p.f, p.w / nw};
      else right = p;
    }

    for (int it = 0; it < 100; ++it) {
      const double denom = right.g - left.g;
      if (!(denom > 0.0)) break;
      double wc = (left.f - right.f + right.g * right.w - left.g * left.w) / denom;
      wc = std::clamp(wc, left.w, right.w);
      const double lower = left.f + left.g * (wc - left.w);
      const double tol = std::max(cfg_.c_tol * best.f, floor_);
      if (best.f - lower <= tol) break;
      const Probe p = probe(wc);
      if (p.f < best.f) best = p;
      if (p.f - lower <= tol || p.g == 0.0) break;
      if (p.g < 0.0) left = p;
      else right = p;
    }
    return {best.f, best.w / nw};
  }

  void set_hint(double c) { hint_ = c; }
  long evaluations() const { return evaluations_; }

 private:
  detail::BallTransport transport_;
  Ball ball_;
  FitConfig cfg_;
  double theta_;
  double floor_;
  double hint_ = 0.0;
  long evaluations_ = 0;
};

struct SearchOutcome {
  AffinePlane plane;
  double value = 0.0;
  double aux = 0.0;
  double spread = 0.0;
  bool disagree = false;
};

// Multistart plane search shared by alpha and alpha_tilde. `objective(plane, aux&)`
// returns the value to minimize and may report an auxiliary quantity (the density).
template <typename Objective>
SearchOutcome search_planes(const std::vector<AffinePlane>& starts, const Ball& b, const FitConfig& cfg,
                            double scale, double floor_value, Objective&& objective) {
  struct Local {
    AffinePlane plane;
    double value;
    double aux;
  };
  std::vector<Local> results;
  // A seed that already fits exactly cannot be improved.
  for (const AffinePlane& seed : starts) {
    double aux = 0.0;
    const double v = objective(seed, aux);
    if (v <= 1e-12 * scale) return SearchOutcome{through_ball(seed, b), v, aux, 0.0, false};
  }
  for (const AffinePlane& seed : starts) {
    const PlaneChart chart(seed, b);
    const int k = chart.size();
    VectorXd step = VectorXd::Constant(k, 0.1);
    step.head(k - (b.center.size() - seed.dim())).setConstant(0.2);
    double aux_best = 0.0;
    double value_best = std::numeric_limits<double>::infinity();
    auto f = [&](const VectorXd& x) {
      double aux = 0.0;
      const double v = objective(chart.plane(x), aux);
      if (v < value_best) {
        value_best = v;
        aux_best = aux;
      }
      return v;
    };
    const Vertex v = nelder_mead(f, VectorXd::Zero(k), step, cfg.plane_iters,
                                 cfg.c_tol * scale, 1e-5);
    double aux = 0.0;
    const AffinePlane plane = chart.plane(v.x);
    if (v.f == value_best) aux = aux_best;
    else objective(plane, aux);
    results.push_back({plane, v.f, aux});
  }

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const Local& r : results) {
    lo = std::min(lo, r.value);
    hi = std::max(hi, r.value);
  }
  // Among near-ties prefer the plane closest in angle to the first seed.
  const double tie = cfg.c_tol * std::max(lo, floor_value);
  std::size_t pick = 0;
  double pick_angle = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].value > lo + tie) continue;
    const double angle = plane_angle(results[i].plane, starts.front());
    if (angle < pick_angle) {
      pick_angle = angle;
      pick = i;
    }
  }
  SearchOutcome out{through_ball(results[pick].plane, b), results[pick].value, results[pick].aux,
                    hi - lo, false};
  out.disagree = (hi - lo) > cfg.agreement_tol * std::max(lo, floor_value);
  return out;
}

double network_w1(const MatrixXd& p, const VectorXd& pw, const MatrixXd& q, const VectorXd& qw,
                  lp::NetworkSimplex& solver) {
  lp::GroundedTransport t;
  t.supply = pw;
  t.demand = qw;
  t.cost.resize(p.cols(), q.cols());
  double diam = 0.0;
  for (Index j = 0; j < q.cols(); ++j)
    for (Index i = 0; i < p.cols(); ++i) {
      t.cost(i, j) = (p.col(i) - q.col(j)).norm();
      diam = std::max(diam, t.cost(i, j));
    }
  // Ground routes cost more than any direct route, so balanced data never uses them.
  t.source_ground_cost = VectorXd::Constant(p.cols(), diam + 1.0);
  t.sink_ground_cost = VectorXd::Constant(q.cols(), diam + 1.0);
  return solver.solve(t).cost;
}

}  // namespace

AffinePlane principal_plane(const DiscreteMeasure& mu, int d) {
  if (d <= 0 || d > mu.ambient_dim()) throw ValidationError("principal_plane: need 0 < d <= n");
  if (!(mu.total_mass() > 0.0)) throw ZeroMassBall("principal_plane: measure has zero mass");
  return pca(mu.points(), mu.weights(), d);
}

PlaneFit fit_density(const DiscreteMeasure& mu, const Ball& b, const AffinePlane& plane, const FitConfig& cfg) {
  cfg.validate();
  if (plane.ambient_dim() != mu.ambient_dim() || b.center.size() != mu.ambient_dim())
    throw ValidationError("fit_density: dimension mismatch");
  const DiscreteMeasure inside = restrict(mu, b);
  const double mass = inside.total_mass();
  if (!(mass > 0.0)) throw ZeroMassBall("fit_density: mu(B) = 0");
  const UnitFrame frame{b.center, b.radius, mass};
  const DiscreteMeasure unit = rescale(inside, VectorXd(b.center), b.radius, mass);
  DensityFitter fitter(unit, Ball(VectorXd::Zero(mu.ambient_dim()), 1.0), cfg, plane.dim());
  PlaneFit fit = fitter.fit(frame.to_unit(plane));
  fit.f_value *= b.radius * mass;
  fit.c *= mass / std::pow(b.radius, plane.dim());
  return fit;
}

AlphaResult alpha(const DiscreteMeasure& mu, const Ball& b, int d, const FitConfig& cfg,
                  const std::optional<AffinePlane>& warm_start) {
  cfg.validate();
  const int n = mu.ambient_dim();
  if (d <= 0 || d > n) throw ValidationError("alpha: need 0 < d <= n");
  if (b.center.size() != n) throw ValidationError("alpha: ball dimension differs from measure");
  DiscreteMeasure inside = restrict(mu, b);
  if (inside.size() > kMaxSupport) inside = detail::aggregate(inside, b);
  const double mass = inside.total_mass();
  if (!(mass > 0.0)) throw ZeroMassBall("alpha: mu(B) = 0");

  const UnitFrame frame{b.center, b.radius, mass};
  const DiscreteMeasure unit = rescale(inside, VectorXd(b.center), b.radius, mass);
  const Ball ub(VectorXd::Zero(n), 1.0);
  const std::optional<AffinePlane> warm = frame.to_unit(warm_start);
  const double scale = 1.0;
  DensityFitter fitter(unit, ub, cfg, d);
  const std::vector<AffinePlane> starts = seeds(unit, ub, d, cfg.restarts, warm);

  AlphaResult out;
  out.mass = mass;
  if (d == n) {
    // The only d-plane is R^n itself.
    const AffinePlane whole(ub.center, MatrixXd::Identity(n, n));
    const PlaneFit fit = fitter.fit(whole);
    out.plane_best = whole;
    out.f_value = fit.f_value;
    out.c_best = fit.c;
  } else {
    const SearchOutcome s =
        search_planes(starts, ub, cfg, scale, 1.0 / (2.0 * cfg.quad) * scale,
                      [&](const AffinePlane& plane, double& c) {
                        const PlaneFit fit = fitter.fit(plane);
                        if (fit.c > 0.0) fitter.set_hint(fit.c);
                        c = fit.c;
                        return fit.f_value;
                      });
    out.plane_best = s.plane;
    out.f_value = s.value;
    out.c_best = s.aux;
    out.spread = s.spread / scale;
    if (s.disagree) out.status = AlphaStatus::multistart_disagreement;
  }
  out.alpha = out.f_value / scale;
  out.plane_best = frame.from_unit(out.plane_best);
  out.f_value *= b.radius * mass;
  out.c_best *= mass / std::pow(b.radius, d);
  out.evaluations = fitter.evaluations();
  return out;
}

AlphaResult alpha_tilde(const DiscreteMeasure& mu, const Ball& b, int d, const FitConfig& cfg,
                        const std::optional<AffinePlane>& warm_start) {
  cfg.validate();
  const int n = mu.ambient_dim();
  if (d <= 0 || d > n) throw ValidationError("alpha_tilde: need 0 < d <= n");
  if (b.center.size() != n) throw ValidationError("alpha_tilde: ball dimension differs from measure");
  DiscreteMeasure inside = restrict(mu, b);
  if (inside.size() > kMaxSupport) inside = detail::aggregate(inside, b);
  const double mass = inside.total_mass();
  if (!(mass > 0.0)) throw ZeroMassBall("alpha_tilde: mu(B) = 0");

  const UnitFrame frame{b.center, b.radius, mass};
  const DiscreteMeasure unit = rescale(inside, VectorXd(b.center), b.radius, mass);
  const Ball ub(VectorXd::Zero(n), 1.0);
  const std::optional<AffinePlane> warm = frame.to_unit(warm_start);
  lp::NetworkSimplex solver;
  long evaluations = 0;
  // Quadrature on the original ball then blown up, so it matches the alpha lattice.
  auto objective = [&](const AffinePlane& plane, double& c) {
    const SliceLattice lat = slice_lattice(plane, ub, cfg.quad);
    const Index T = lat.nodes.cols();
    if (T == 0) {
      c = 0.0;
      return std::numeric_limits<double>::infinity();
    }
    const VectorXd qw = VectorXd::Constant(T, 1.0 / static_cast<double>(T));
    ++evaluations;
    c = 1.0 / (static_cast<double>(T) * lat.node_weight);
    return network_w1(unit.points(), unit.weights(), lat.nodes, qw, solver);
  };

  AlphaResult out;
  out.mass = mass;
  if (d == n) {
    const AffinePlane whole(ub.center, MatrixXd::Identity(n, n));
    out.plane_best = whole;
    out.f_value = objective(whole, out.c_best);
  } else {
    const std::vector<AffinePlane> starts = seeds(unit, ub, d, cfg.restarts, warm);
    const SearchOutcome s = search_planes(starts, ub, cfg, 1.0, 1.0 / (2.0 * cfg.quad), objective);
    out.plane_best = s.plane;
    out.f_value = s.value;
    out.c_best = s.aux;
    out.spread = s.spread;
    if (s.disagree) out.status = AlphaStatus::multistart_disagreement;
  }
  out.alpha = out.f_value;
  out.plane_best = frame.from_unit(out.plane_best);
  out.c_best *= mass / std::pow(b.radius, d);
  out.evaluations = evaluations;
  return out;
}

double beta_for_plane(const DiscreteMeasure& mu, const Ball& b, const AffinePlane& plane, double p) {
  if (!(p >= 1.0)) throw ValidationError("beta: p must be at least 1");
  if (plane.ambient_dim() != mu.ambient_dim()) throw ValidationError("beta: dimension mismatch");
  double sum = 0.0;
  for (Index i = 0; i < mu.size(); ++i) {
    if (!b.contains(mu.point(i))) continue;
    sum += mu.weight(i) * std::pow(plane.distance(mu.point(i)) / b.radius, p);
  }
  return std::pow(sum / std::pow(b.radius, plane.dim()), 1.0 / p);
}

BetaResult beta(const DiscreteMeasure& mu, const Ball& b, int d, double p) {
  if (!(p >= 1.0)) throw ValidationError("beta: p must be at least 1");
  const int n = mu.ambient_dim();
  if (d <= 0 || d > n) throw ValidationError("beta: need 0 < d <= n");
  const DiscreteMeasure inside = restrict(mu, b);
  BetaResult out;
  out.p = p;
  if (!(inside.total_mass() > 0.0)) {
    MatrixXd span = MatrixXd::Identity(n, d);
    out.plane_best = AffinePlane(b.center, span);
    return out;
  }
  out.plane_best = pca(inside.points(), inside.weights(), d);
  // Summing distances rather than reading the trailing eigenvalues keeps exactly flat
  // data at rounding level (the eigenvalue route bottoms out near sqrt(eps)).
  auto objective = [&](const AffinePlane& L) { return beta_for_plane(inside, b, L, p); };
  double best = objective(out.plane_best);
  if (p == 2.0) {
    out.beta = best;
    return out;
  }

  // Iteratively reweighted fit: weights m_i * dist_i^(p-2), floored near the plane.
  const double eps = 1e-10 * b.radius;
  for (int it = 0; it < 500 && best > 0.0; ++it) {
    VectorXd w(inside.size());
    for (Index i = 0; i < inside.size(); ++i)
      w[i] = inside.weight(i) * std::pow(std::max(out.plane_best.distance(inside.point(i)), eps), p - 2.0);
    if (!(w.sum() > 0.0)) break;
    const AffinePlane next = pca(inside.points(), w, d);
    const double value = objective(next);
    if (!(value < best)) break;
    const bool done = best - value <= 1e-8 * best;
    out.plane_best = next;
    best = value;
    if (done) break;
  }
  out.beta = best;
  return out;
}

}  // namespace flatness
