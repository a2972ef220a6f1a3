#include <doctest.h>

#include <random>

#include "flatness/generators.hpp"
#include "flatness/multiscale.hpp"

using namespace flatness;

namespace {

VectorXd v2(double x, double y) { return (VectorXd(2) << x, y).finished(); }

FitConfig quick() {
  FitConfig cfg;
  cfg.quad = 16;
  return cfg;
}

}  // namespace

TEST_CASE("radius grid") {
  RadiusGrid g{0.25, 1.0, 2};
  const std::vector<double> r = g.radii();
  REQUIRE(r.size() == 5);
  CHECK(r.front() == 1.0);
  CHECK(r.back() == doctest::Approx(0.25));
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] < r[i - 1]);
  CHECK(g.weight() == doctest::Approx(std::log(2.0) / 2.0));
  CHECK_THROWS_AS((RadiusGrid{1.0, 1.0, 2}.validate()), ValidationError);
  CHECK_THROWS_AS((RadiusGrid{0.1, 1.0, 0}.validate()), ValidationError);
  CHECK_THROWS_AS((RadiusGrid{0.0, 1.0, 1}.validate()), ValidationError);
}

TEST_CASE("default_r_min is eight nearest-neighbour spacings") {
  const DiscreteMeasure f = flat(2, 1, 100, 1.0);
  CHECK(default_r_min(f) == doctest::Approx(8.0 * 0.02));
  CHECK_THROWS_AS(default_r_min(DiscreteMeasure(v2(0, 0), VectorXd::Ones(1))), ValidationError);
}

TEST_CASE("profile of a flat measure") {
  const DiscreteMeasure f = flat(2, 1, 2000, 2.0);
  const RadiusGrid g{0.1, 1.0, 2};
  const MultiscaleProfile p = profile(f, v2(0.013, 0.0), g, 1, quick());
  REQUIRE(p.alphas.size() == g.radii().size());
  CHECK(p.betas.size() == p.alphas.size());
  CHECK(p.thetas.size() == p.alphas.size());
  double sum = 0.0;
  for (double a : p.alphas) {
    CHECK(a <= 1.0 / 16.0);
    sum += a * a;
  }
  // log-uniform quadrature identity
  CHECK(p.jones_alpha == doctest::Approx(sum * std::log(2.0) / g.per_octave).epsilon(1e-12));
  CHECK(p.jones_alpha <= static_cast<double>(p.alphas.size()) * std::pow(1.0 / 16.0, 2));
  CHECK(p.jones_beta < 1e-20);
  for (double t : p.thetas) CHECK(t == doctest::Approx(2.0).epsilon(0.01));
  CHECK_FALSE(p.outside_hull);
  CHECK(profile(f, v2(0.0, 5.0), RadiusGrid{0.1, 0.2, 1}, 1, quick()).outside_hull);
}

TEST_CASE("zero-mass scales are flagged and skipped") {
  // a lone atom seen from farther away than the largest radius
  const DiscreteMeasure one(v2(0, 0), VectorXd::Ones(1));
  const RadiusGrid g{0.1, 1.0, 1};
  const MultiscaleProfile p = profile(one, v2(3.0, 0.0), g, 1, quick());
  CHECK(p.zero_mass_scales == static_cast<int>(p.radii.size()));
  CHECK(p.jones_alpha == 0.0);
  const ClassifySummary s = classify(one, {v2(3.0, 0.0)}, g, 1);
  CHECK(s.verdict == "insufficient data");
  CHECK(s.insufficient == 1);
  CHECK(s.caveat == "finite-scale diagnostic");
  CHECK_THROWS_AS(classify(one, {}, g, 1), ValidationError);
}

TEST_CASE("warm start and per-octave refinement on a Lipschitz graph") {
  const DiscreteMeasure g = lipschitz_graph(0.3, 2, 1, 1200, 5);
  const FitConfig cfg = quick();
  const VectorXd x = g.point(600);
  const MultiscaleProfile warm = profile(g, x, RadiusGrid{0.1, 1.0, 2}, 1, cfg);
  const MultiscaleProfile cold = profile(g, x, RadiusGrid{0.1, 1.0, 2}, 1, cfg, ProfileOptions{false});
  for (std::size_t i = 0; i < warm.alphas.size(); ++i) {
    const double floor = 1.0 / (2.0 * cfg.quad);
    CHECK(std::abs(warm.alphas[i] - cold.alphas[i]) <= 2.0 * cfg.agreement_tol * std::max(warm.alphas[i], floor));
  }
  const MultiscaleProfile fine = profile(g, x, RadiusGrid{0.1, 1.0, 4}, 1, cfg);
  CHECK(std::abs(fine.jones_alpha - warm.jones_alpha) <= 0.1 * warm.jones_alpha);
}

TEST_CASE("classify") {
  const DiscreteMeasure g = lipschitz_graph(0.3, 2, 1, 800, 3);
  std::vector<Point> sample;
  for (Index i = 100; i < 800; i += 150) sample.emplace_back(g.point(i));
  const RadiusGrid grid{0.15, 1.0, 1};
  const ClassifySummary s = classify(g, sample, grid, 1, {}, quick());
  CHECK(s.pass_fraction >= 0.9);
  CHECK(s.verdict == "consistent-with-rectifiable");
  CHECK(s.dominant_failure == "none");

  // tightening can only fail points; loosening again restores them
  ClassifyThresholds tight;
  tight.jones_max = 1e-4;
  tight.doubling_max = 2.05;
  const ClassifySummary t = classify(g, sample, grid, 1, tight, quick());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (t.points[i].pass) CHECK(s.points[i].pass);
    CHECK(t.points[i].jones_alpha == s.points[i].jones_alpha);
  }
  CHECK(t.pass_fraction <= s.pass_fraction);

  // a collapsed density fails the low-density rule
  const DiscreteMeasure thin(g.points(), g.weights() * 0.01);
  const ClassifySummary lo = classify(thin, sample, grid, 1, {}, quick());
  CHECK(lo.low_density_failures == static_cast<int>(sample.size()));
  CHECK(lo.verdict == "fails-criteria");
  CHECK(lo.dominant_failure == "low-density");
}

TEST_CASE("stopping time") {
  const DiscreteMeasure f = flat(2, 1, 800, 2.0);
  const AffinePlane xaxis(v2(0, 0), v2(1, 0));
  const RadiusGrid grid{0.125, 1.0, 1};
  StopThresholds th;
  std::vector<Point> base{v2(-0.5, 0), v2(0, 0), v2(0.5, 0)};

  SUBCASE("flat measure has no stops") {
    const auto diag = stopping_time(f, base, grid, 1, th, xaxis, {}, quick());
    for (const StopDiagnosis& d : diag) {
      CHECK(d.delta == 0.0);
      CHECK(d.d_reg == 0.0);
      CHECK(d.resolution == doctest::Approx(2.0));
    }
  }
  SUBCASE("a heavy atom triggers high density") {
    const double r = 0.25;
    MatrixXd p(2, f.size() + 1);
    p << f.points(), v2(0.0, 0.0);
    VectorXd w(f.size() + 1);
    w << f.weights(), 2.0 * th.A * r;
    const DiscreteMeasure heavy(p, w);
    const auto diag = stopping_time(heavy, base, grid, 1, th, xaxis, {}, quick());
    CHECK(diag[1].delta >= r);
    bool hd_at_r = false;
    for (std::size_t i = 0; i < diag[1].radii.size(); ++i)
      if (std::abs(diag[1].radii[i] - r) < 1e-12) hd_at_r = diag[1].flags[i].hd;
    CHECK(hd_at_r);
  }
  SUBCASE("good mask drives the not-dense flag") {
    std::vector<char> mask(static_cast<std::size_t>(f.size()), 1);
    for (Index i = 0; i < f.size(); i += 2) mask[static_cast<std::size_t>(i)] = 0;
    const auto diag = stopping_time(f, base, grid, 1, th, xaxis, mask, quick());
    for (const StopDiagnosis& d : diag) {
      CHECK(d.flags.front().nd);
      CHECK(d.delta == 1.0);
    }
    CHECK_THROWS_AS(stopping_time(f, base, grid, 1, th, xaxis, std::vector<char>(3, 1)), ValidationError);
  }
  SUBCASE("a tilted reference plane gives big angles") {
    const AffinePlane tilted(v2(0, 0), v2(1, 1));
    const auto diag = stopping_time(f, base, grid, 1, th, tilted, {}, quick());
    for (const StopDiagnosis& d : diag) CHECK(d.flags.back().ba);
  }
  CHECK_THROWS_AS(stopping_time(f, base, RadiusGrid{0.1, 5.0, 1}, 1, th, xaxis), ValidationError);
}

TEST_CASE("d_reg is 1-Lipschitz and below delta") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const DiscreteMeasure g = lipschitz_graph(1.0, 2, 1, 300, 8);
  std::vector<Point> base;
  for (int i = 0; i < 8; ++i) base.emplace_back(g.point(static_cast<Index>(rng() % 300)));
  StopThresholds th;
  th.tau = 1.0;  // low enough to fire at some points, not all
  const RadiusGrid grid{0.1, 0.8, 1};
  const auto diag = stopping_time(g, base, grid, 1, th, AffinePlane(v2(0, 0), v2(1, 0)), {}, quick());
  for (const StopDiagnosis& a : diag) {
    CHECK(a.d_reg <= a.delta + 1e-15);
    for (const StopDiagnosis& b : diag) CHECK(std::abs(a.d_reg - b.d_reg) <= (a.point - b.point).norm() + 1e-12);
  }
}
