#include "flatness/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "flatness/parallel.hpp"

namespace flatness {

void RadiusGrid::validate() const {
  if (!(r_min > 0.0)) throw ValidationError("radius grid: r_min must be positive");
  if (!(r_min < r_max) || !std::isfinite(r_max)) throw ValidationError("radius grid: need r_min < r_max");
  if (per_octave < 1) throw ValidationError("radius grid: per_octave must be at least 1");
}

std::vector<double> RadiusGrid::radii() const {
  validate();
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double r = r_max * std::exp2(-static_cast<double>(i) / per_octave);
    if (r < r_min * (1.0 - 1e-12)) break;
    out.push_back(r);
  }
  return out;
}

double RadiusGrid::weight() const { return std::numbers::ln2 / per_octave; }

double default_r_min(const DiscreteMeasure& mu) {
  const Index k = mu.size();
  if (k < 2) throw ValidationError("default_r_min: need at least two atoms");
  // Sweep along the first coordinate; a pair farther apart in x than the current best
  // cannot improve it.
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return mu.points()(0, a) < mu.points()(0, b); });
  std::vector<double> nn(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Index a = order[i];
    auto scan = [&](std::size_t j) {
      const Index b = order[j];
      const double dx = std::abs(mu.points()(0, b) - mu.points()(0, a));
      if (dx >= nn[i]) return false;
      nn[i] = std::min(nn[i], (mu.point(a) - mu.point(b)).norm());
      return true;
    };
    for (std::size_t j = i + 1; j < order.size() && scan(j); ++j) {}
    for (std::size_t j = i; j-- > 0 && scan(j);) {}
  }
  std::vector<double> finite;
  for (double v : nn)
    if (v > 0.0 && std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) throw ValidationError("default_r_min: all atoms coincide");
  std::nth_element(finite.begin(), finite.begin() + static_cast<long>(finite.size() / 2), finite.end());
  return 8.0 * finite[finite.size() / 2];
}

namespace {

template <typename MeasureAt>
MultiscaleProfile profile_impl(MeasureAt&& measure_at, const Point& x, const RadiusGrid& grid, int d,
                               const FitConfig& cfg, const ProfileOptions& opts) {
  cfg.validate();
  MultiscaleProfile out;
  out.point = x;
  out.grid = grid;
  out.radii = grid.radii();
  const std::size_t m = out.radii.size();
  out.alphas.assign(m, 0.0);
  out.betas.assign(m, 0.0);
  out.thetas.assign(m, 0.0);
  out.doubling.assign(m, 0.0);
  out.c_best.assign(m, 0.0);
  out.zero_mass.assign(m, 0);
  out.disagreement.assign(m, 0);
  out.planes.resize(m);
  std::optional<AffinePlane> previous;
  const double w = grid.weight();
  for (std::size_t i = 0; i < m; ++i) {
    const double r = out.radii[i];
    const DiscreteMeasure& mu = measure_at(r);
    const Ball b(x, r);
    const double inner = ball_mass(mu, b);
    const double outer = ball_mass(mu, Ball(x, 2.0 * r));
    out.thetas[i] = inner / std::pow(r, d);
    if (!(inner > 0.0)) {
      out.zero_mass[i] = 1;
      ++out.zero_mass_scales;
      continue;
    }
    out.doubling[i] = outer / inner;
    const AlphaResult a = alpha(mu, b, d, cfg, opts.warm_start ? previous : std::nullopt);
    out.alphas[i] = a.alpha;
    out.c_best[i] = a.c_best;
    out.planes[i] = a.plane_best;
    if (a.status == AlphaStatus::multistart_disagreement) {
      out.disagreement[i] = 1;
      out.any_disagreement = true;
    }
    previous = a.plane_best;
    out.betas[i] = beta(mu, b, d, 2.0).beta;
    out.jones_alpha += a.alpha * a.alpha * w;
    out.jones_beta += out.betas[i] * out.betas[i] * w;
  }
  return out;
}

}  // namespace

MultiscaleProfile profile(const DiscreteMeasure& mu, const Point& x, const RadiusGrid& grid, int d,
                          const FitConfig& cfg, const ProfileOptions& opts) {
  if (x.size() != mu.ambient_dim()) throw ValidationError("profile: point dimension differs from measure");
  MultiscaleProfile out = profile_impl([&](double) -> const DiscreteMeasure& { return mu; }, x, grid, d, cfg, opts);
  if (mu.size() > 0) {
    const VectorXd lo = mu.points().rowwise().minCoeff(), hi = mu.points().rowwise().maxCoeff();
    out.outside_hull = ((x - lo).array() < 0.0).any() || ((hi - x).array() < 0.0).any();
  } else {
    out.outside_hull = true;
  }
  return out;
}

MultiscaleProfile profile(const ScaleSampler& sampler, const Point& x, const RadiusGrid& grid, int d,
                          const FitConfig& cfg, const ProfileOptions& opts) {
  DiscreteMeasure current;
  return profile_impl(
      [&](double r) -> const DiscreteMeasure& {
        current = sampler(Ball(x, 2.0 * r), r / cfg.quad);
        if (current.ambient_dim() != x.size()) throw ValidationError("profile: sampler dimension differs from point");
        return current;
      },
      x, grid, d, cfg, opts);
}

ClassifySummary classify(const DiscreteMeasure& mu, const std::vector<Point>& sample, const RadiusGrid& grid, int d,
                         const ClassifyThresholds& thresholds, const FitConfig& cfg, int threads) {
  if (sample.empty()) throw ValidationError("classify: empty sample");
  grid.validate();
  ClassifySummary s;
  s.thresholds = thresholds;
  s.points.resize(sample.size());
  parallel_for(sample.size(), threads, [&](std::size_t i) {
    const MultiscaleProfile p = profile(mu, sample[i], grid, d, cfg);
    PointVerdict v;
    v.point = sample[i];
    v.jones_alpha = p.jones_alpha;
    v.max_doubling = p.doubling.empty() ? 0.0 : *std::max_element(p.doubling.begin(), p.doubling.end());
    v.theta_min_scale = p.thetas.empty() ? 0.0 : p.thetas.back();
    v.insufficient = p.zero_mass_scales == static_cast<int>(p.radii.size());
    v.jones_ok = v.jones_alpha <= thresholds.jones_max;
    v.doubling_ok = v.max_doubling <= thresholds.doubling_max;
    v.low_density = v.theta_min_scale <= thresholds.tau;
    v.pass = !v.insufficient && v.jones_ok && v.doubling_ok && !v.low_density;
    v.disagreement = p.any_disagreement;
    s.points[i] = std::move(v);
  });

  int passed = 0;
  for (const PointVerdict& v : s.points) {
    if (v.insufficient) {
      ++s.insufficient;
      continue;
    }
    passed += v.pass;
    s.jones_failures += !v.jones_ok;
    s.doubling_failures += !v.doubling_ok;
    s.low_density_failures += v.low_density;
  }
  s.pass_fraction = static_cast<double>(passed) / static_cast<double>(s.points.size());
  const int worst = std::max({s.jones_failures, s.doubling_failures, s.low_density_failures});
  if (worst == 0) s.dominant_failure = "none";
  else if (s.jones_failures == worst) s.dominant_failure = "jones";
  else if (s.doubling_failures == worst) s.dominant_failure = "doubling";
  else s.dominant_failure = "low-density";
  if (s.insufficient == static_cast<int>(s.points.size())) s.verdict = "insufficient data";
  else if (s.pass_fraction >= kConsistentFraction) s.verdict = "consistent-with-rectifiable";
  else s.verdict = "fails-criteria";
  return s;
}

void StopThresholds::validate() const {
  if (!(epsilon > 0.0) || !(tau > 0.0) || !(A > 0.0) || !(C1 > 0.0))
    throw ValidationError("stopping thresholds must be positive");
}

std::vector<StopDiagnosis> stopping_time(const DiscreteMeasure& mu, const std::vector<Point>& base,
                                         const RadiusGrid& grid, int d, const StopThresholds& thresholds,
                                         const AffinePlane& reference_plane, const std::vector<char>& good_mask,
                                         const FitConfig& cfg, int threads) {
  thresholds.validate();
  grid.validate();
  if (!(grid.r_max < thresholds.C1)) throw ValidationError("stopping_time: grid must lie inside (0, C1)");
  if (!good_mask.empty() && static_cast<Index>(good_mask.size()) != mu.size())
    throw ValidationError("stopping_time: good_mask length differs from the atom count");
  if (reference_plane.dim() != d || reference_plane.ambient_dim() != mu.ambient_dim())
    throw ValidationError("stopping_time: reference plane has the wrong dimensions");
  const std::vector<double> radii = grid.radii();
  const double nd_level = std::sqrt(thresholds.epsilon);
  const double ba_level = std::pow(thresholds.epsilon, 0.25);

  std::vector<StopDiagnosis> out(base.size());
  parallel_for(base.size(), threads, [&](std::size_t p) {
    const Point& x = base[p];
    if (x.size() != mu.ambient_dim()) throw ValidationError("stopping_time: point dimension differs from measure");
    StopDiagnosis diag;
    diag.point = x;
    diag.radii = radii;
    diag.resolution = std::exp2(1.0 / grid.per_octave);
    diag.thresholds = thresholds;
    diag.flags.resize(radii.size());
    std::optional<AffinePlane> previous;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const Ball b(x, radii[i]);
      double mass = 0.0, off = 0.0;
      for (Index a = 0; a < mu.size(); ++a) {
        if (!b.contains(mu.point(a))) continue;
        mass += mu.weight(a);
        if (!good_mask.empty() && !good_mask[static_cast<std::size_t>(a)]) off += mu.weight(a);
      }
      const double theta = mass / std::pow(radii[i], d);
      ScaleFlags& f = diag.flags[i];
      f.ld = theta <= thresholds.tau;
      f.hd = theta >= thresholds.A;
      f.nd = mass > 0.0 && off >= nd_level * mass;
      if (mass > 0.0) {
        const AlphaResult a = alpha(mu, b, d, cfg, previous);
        previous = a.plane_best;
        f.ba = plane_angle(a.plane_best, reference_plane) >= ba_level;
      }
      if (f.any()) diag.delta = std::max(diag.delta, radii[i]);
    }
    out[p] = std::move(diag);
  });
  for (StopDiagnosis& x : out) {
    double best = std::numeric_limits<double>::infinity();
    for (const StopDiagnosis& y : out) best = std::min(best, y.delta + (x.point - y.point).norm());
    x.d_reg = best;
  }
  return out;
}

}  // namespace flatness
