#include "flatness/flat_distance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "flatness/dense_simplex.hpp"

namespace flatness {

namespace {

// Enumerates integer vectors k in [-kmax, kmax]^d, last coordinate fastest.
template <typename F>
void for_each_lattice_index(int d, long kmax, F&& f) {
  std::vector<long> k(static_cast<std::size_t>(d), -kmax);
  while (true) {
    f(k);
    int i = d - 1;
    while (i >= 0 && k[static_cast<std::size_t>(i)] == kmax) {
      k[static_cast<std::size_t>(i)] = -kmax;
      --i;
    }
    if (i < 0) return;
    ++k[static_cast<std::size_t>(i)];
  }
}

VectorXd caps_for(const MatrixXd& pts, const Ball& b) {
  VectorXd caps(pts.cols());
  for (Index i = 0; i < pts.cols(); ++i) caps[i] = b.radius - (pts.col(i) - b.center).norm();
  return caps;
}

MatrixXd pairwise_distances(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.cols(), b.cols());
  for (Index j = 0; j < b.cols(); ++j)
    for (Index i = 0; i < a.cols(); ++i) out(i, j) = (a.col(i) - b.col(j)).norm();
  return out;
}

// McShane extension of the sink potentials, clamped to the support-in-B caps. Keeps
// the optimal objective (sources can only rise, sinks only drop) and is 1-Lipschitz.
VectorXd clamp_extension(const MatrixXd& support, const VectorXd& caps, const MatrixXd& sinks,
                         const VectorXd& sink_potential) {
  VectorXd v(support.cols());
  for (Index i = 0; i < support.cols(); ++i) {
    double best = caps[i];
    for (Index t = 0; t < sinks.cols(); ++t)
      best = std::min(best, sink_potential[t] + (support.col(i) - sinks.col(t)).norm());
    v[i] = std::max(-caps[i], best);
  }
  return v;
}

DiscreteMeasure positive_part(const DiscreteMeasure& mu) {
  std::vector<Index> keep;
  for (Index i = 0; i < mu.size(); ++i)
    if (mu.weight(i) > 0.0) keep.push_back(i);
  MatrixXd pts(mu.ambient_dim(), static_cast<Index>(keep.size()));
  VectorXd w(static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    pts.col(static_cast<Index>(k)) = mu.point(keep[k]);
    w[static_cast<Index>(k)] = mu.weight(keep[k]);
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace

std::string_view to_string(BLStatus s) {
  switch (s) {
    case BLStatus::optimal: return "optimal";
    case BLStatus::capped_support: return "capped-support";
    case BLStatus::degenerate: return "degenerate";
  }
  return "unknown";
}

double slice_volume(const AffinePlane& plane, const Ball& ball) {
  const double h = plane.distance(ball.center);
  if (h >= ball.radius) return 0.0;
  const double rho = std::sqrt(ball.radius * ball.radius - h * h);
  return unit_ball_volume(plane.dim()) * std::pow(rho, plane.dim());
}

SliceLattice slice_lattice(const AffinePlane& plane, const Ball& ball, int quad) {
  if (quad <= 0) throw ValidationError("quadrature resolution must be positive");
  const int d = plane.dim();
  const double spacing = ball.radius / quad;
  SliceLattice out;
  out.node_weight = std::pow(spacing, d);
  const VectorXd foot = plane.project(ball.center);
  const double h2 = (ball.center - foot).squaredNorm();
  const double r2 = ball.radius * ball.radius;
  if (h2 >= r2) {
    out.nodes.resize(plane.ambient_dim(), 0);
    return out;
  }
  const double rho2 = r2 - h2;
  const long kmax = static_cast<long>(std::floor(std::sqrt(rho2) / spacing));
  std::vector<VectorXd> nodes;
  VectorXd t(d);
  for_each_lattice_index(d, kmax, [&](const std::vector<long>& k) {
    for (int i = 0; i < d; ++i) t[i] = spacing * static_cast<double>(k[static_cast<std::size_t>(i)]);
    if (t.squaredNorm() >= rho2) return;
    VectorXd p = foot + plane.basis() * t;
    if ((p - ball.center).squaredNorm() < r2) nodes.push_back(std::move(p));
  });
  out.nodes.resize(plane.ambient_dim(), static_cast<Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) out.nodes.col(static_cast<Index>(i)) = nodes[i];
  return out;
}

FlatMeasure flat_measure(const AffinePlane& plane, const Ball& ball, double density, int quad) {
  if (!(density >= 0.0)) throw ValidationError("flat measure density must be nonnegative");
  SliceLattice lat = slice_lattice(plane, ball, quad);
  VectorXd w = VectorXd::Constant(lat.nodes.cols(), lat.node_weight * density);
  return FlatMeasure{density, plane, DiscreteMeasure(std::move(lat.nodes), std::move(w))};
}

namespace detail {

DiscreteMeasure aggregate(const DiscreteMeasure& mu, const Ball& b) {
  const double cell = b.radius / kAggregationCells;
  const int n = mu.ambient_dim();
  struct Cell {
    double mass = 0.0;
    VectorXd moment;
  };
  std::map<std::vector<long>, Cell> cells;
  std::vector<long> key(static_cast<std::size_t>(n));
  for (Index i = 0; i < mu.size(); ++i) {
    const double w = mu.weight(i);
    if (!(w > 0.0)) continue;
    for (int k = 0; k < n; ++k)
      key[static_cast<std::size_t>(k)] =
          static_cast<long>(std::floor((mu.point(i)[k] - b.center[k]) / cell));
    Cell& c = cells[key];
    if (c.moment.size() == 0) c.moment = VectorXd::Zero(n);
    c.mass += w;
    c.moment += w * mu.point(i);
  }
  MatrixXd pts(n, static_cast<Index>(cells.size()));
  VectorXd w(static_cast<Index>(cells.size()));
  Index j = 0;
  for (const auto& [k, c] : cells) {
    pts.col(j) = c.moment / c.mass;
    w[j] = c.mass;
    ++j;
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

BallTransport::BallTransport(MatrixXd source_points, VectorXd source_weights, const Ball& ball)
    : sources_(std::move(source_points)),
      weights_(std::move(source_weights)),
      center_(ball.center),
      radius_(ball.radius) {
  caps_ = caps_for(sources_, ball);
  boundary_value_ = weights_.dot(caps_);
  problem_.supply = weights_;
  problem_.source_ground_cost = caps_;
}

BallTransport::Evaluation BallTransport::evaluate(const MatrixXd& sink_points, double sink_weight) {
  if (sink_points.cols() == 0 || !(sink_weight > 0.0)) return evaluate_empty(sink_points);
  if (sources_.cols() == 0) {
    Evaluation e;
    double sum = 0.0;
    for (Index t = 0; t < sink_points.cols(); ++t) sum += radius_ - (sink_points.col(t) - center_).norm();
    e.value = sink_weight * sum;
    e.sink_potential_sum = -sum;
    return e;
  }
  const Index T = sink_points.cols();
  problem_.demand = VectorXd::Constant(T, sink_weight);
  problem_.sink_ground_cost.resize(T);
  for (Index t = 0; t < T; ++t)
    problem_.sink_ground_cost[t] = radius_ - (sink_points.col(t) - center_).norm();
  problem_.cost = pairwise_distances(sources_, sink_points);
  const lp::TransportSolution sol = solver_.solve(problem_);
  return Evaluation{sol.cost, sol.sink_potential.sum()};
}

BallTransport::Evaluation BallTransport::evaluate_empty(const MatrixXd& sink_points) const {
  // At zero sink mass every source sits at its cap; the cheapest admissible sink
  // potentials give the right derivative.
  Evaluation e;
  e.value = boundary_value_;
  double sum = 0.0;
  for (Index t = 0; t < sink_points.cols(); ++t) {
    const double cap_t = radius_ - (sink_points.col(t) - center_).norm();
    double v = -cap_t;
    for (Index s = 0; s < sources_.cols(); ++s)
      v = std::max(v, caps_[s] - (sources_.col(s) - sink_points.col(t)).norm());
    sum += v;
  }
  e.sink_potential_sum = sum;
  return e;
}

}  // namespace detail

BLResult bl_distance(const DiscreteMeasure& sigma, const DiscreteMeasure& nu, const Ball& b) {
  if (sigma.ambient_dim() != nu.ambient_dim() || b.center.size() != sigma.ambient_dim())
    throw ValidationError("bl_distance: dimension mismatch");
  DiscreteMeasure s_in = restrict(sigma, b);
  DiscreteMeasure n_in = restrict(nu, b);
  BLResult out;
  if (s_in.empty() && n_in.empty()) {
    out.status = BLStatus::degenerate;
    out.support.resize(sigma.ambient_dim(), 0);
    return out;
  }
  if (s_in.size() + n_in.size() > kMaxSupport) {
    s_in = detail::aggregate(s_in, b);
    n_in = detail::aggregate(n_in, b);
    out.status = BLStatus::capped_support;
    out.aggregation_cell = b.radius / kAggregationCells;
  }

  const Index ns = s_in.size();
  const Index nn = n_in.size();
  out.support.resize(sigma.ambient_dim(), ns + nn);
  out.support.leftCols(ns) = s_in.points();
  out.support.rightCols(nn) = n_in.points();
  out.net_mass.resize(ns + nn);
  out.net_mass.head(ns) = s_in.weights();
  out.net_mass.tail(nn) = -n_in.weights();
  const VectorXd caps = caps_for(out.support, b);

  const DiscreteMeasure src = positive_part(s_in);
  const DiscreteMeasure snk = positive_part(n_in);
  VectorXd sink_potential;
  if (snk.empty()) {
    out.value = src.weights().dot(caps_for(src.points(), b));
  } else if (src.empty()) {
    sink_potential = -caps_for(snk.points(), b);
    out.value = -snk.weights().dot(sink_potential);
  } else {
    lp::GroundedTransport problem;
    problem.supply = src.weights();
    problem.demand = snk.weights();
    problem.cost = pairwise_distances(src.points(), snk.points());
    problem.source_ground_cost = caps_for(src.points(), b);
    problem.sink_ground_cost = caps_for(snk.points(), b);
    const lp::TransportSolution sol = lp::solve(problem);
    out.value = sol.cost;
    sink_potential = sol.sink_potential;
  }
  out.witness = snk.empty() ? VectorXd(caps)
                            : clamp_extension(out.support, caps, snk.points(), sink_potential);
  return out;
}

double witness_violation(const MatrixXd& support, const VectorXd& witness, const Ball& b) {
  double worst = 0.0;
  for (Index i = 0; i < support.cols(); ++i) {
    const double cap = b.radius - (support.col(i) - b.center).norm();
    worst = std::max(worst, std::abs(witness[i]) - cap);
    for (Index j = i + 1; j < support.cols(); ++j)
      worst = std::max(worst, std::abs(witness[i] - witness[j]) - (support.col(i) - support.col(j)).norm());
  }
  return worst;
}

double w1_distance(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  if (p.ambient_dim() != q.ambient_dim()) throw ValidationError("w1_distance: dimension mismatch");
  if (std::abs(p.total_mass() - 1.0) > 1e-9 || std::abs(q.total_mass() - 1.0) > 1e-9)
    throw ValidationError("w1_distance: both measures must have total mass 1");
  const DiscreteMeasure a = positive_part(p);
  const DiscreteMeasure b = positive_part(q);
  const Index S = a.size();
  const Index T = b.size();
  // Plan x_{st}, row sums a_s, column sums b_t (the last column constraint is implied).
  lp::LinearProgram lp;
  lp.A = MatrixXd::Zero(S + T - 1, S * T);
  lp.b.resize(S + T - 1);
  lp.c.resize(S * T);
  for (Index s = 0; s < S; ++s) {
    for (Index t = 0; t < T; ++t) {
      const Index var = s * T + t;
      lp.c[var] = (a.point(s) - b.point(t)).norm();
      lp.A(s, var) = 1.0;
      if (t < T - 1) lp.A(S + t, var) = 1.0;
    }
    lp.b[s] = a.weight(s);
  }
  // Rescale column targets so the system is exactly consistent despite 1e-9 slack.
  const double ratio = a.total_mass() / b.total_mass();
  for (Index t = 0; t + 1 < T; ++t) lp.b[S + t] = b.weight(t) * ratio;
  const lp::LpResult res = lp::solve_dense(lp, 1e-12);
  if (res.status != lp::LpStatus::optimal)
    throw std::runtime_error("w1_distance: transport LP not solved");
  return res.objective;
}

}  // namespace flatness
