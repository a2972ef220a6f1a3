#include <doctest.h>

#include <numbers>
#include <random>

#include "flatness/coefficients.hpp"
#include "oracles.hpp"

using namespace flatness;

namespace {

VectorXd v2(double x, double y) { return (VectorXd(2) << x, y).finished(); }

DiscreteMeasure segment(double ang, double offset, double half, int k) {
  const VectorXd u = v2(std::cos(ang), std::sin(ang)), nrm = v2(-std::sin(ang), std::cos(ang));
  MatrixXd p(2, k);
  const double h = 2.0 * half / k;
  for (int i = 0; i < k; ++i) p.col(i) = offset * nrm + (-half + (i + 0.5) * h) * u;
  return DiscreteMeasure(p, VectorXd::Constant(k, h));
}

DiscreteMeasure cloud(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(-0.8, 0.8), w(0.2, 1.0);
  MatrixXd p(2, k);
  VectorXd m(k);
  for (int i = 0; i < k; ++i) {
    p.col(i) = v2(u(rng), 0.3 * u(rng));
    m[i] = w(rng);
  }
  return DiscreteMeasure(p, m);
}

void check_alpha_invariants(const AlphaResult& a, const Ball& b) {
  CHECK(a.alpha >= 0.0);
  CHECK(a.c_best >= 0.0);
  CHECK(a.alpha == doctest::Approx(a.f_value / (b.radius * a.mass)).epsilon(1e-12));
  CHECK(a.plane_best.distance(b.center) < b.radius);
}

}  // namespace

TEST_CASE("alpha of a sampled line is at quadrature level") {
  FitConfig cfg;
  cfg.quad = 32;
  const Ball b(v2(0.01, 0.0), 1.0);
  const DiscreteMeasure mu = segment(0.4, 0.0, 2.0, 4000);
  const AlphaResult a = alpha(mu, b, 1, cfg);
  check_alpha_invariants(a, b);
  CHECK(a.alpha <= 1.0 / cfg.quad);
  CHECK(a.c_best == doctest::Approx(1.0).epsilon(0.05));
  CHECK(plane_angle(a.plane_best, AffinePlane(v2(0, 0), v2(std::cos(0.4), std::sin(0.4)))) < 0.05);
}

TEST_CASE("alpha errors and config validation") {
  const DiscreteMeasure mu = segment(0.0, 0.0, 1.0, 10);
  CHECK_THROWS_AS(alpha(mu, Ball(v2(0, 5), 1.0), 1), ZeroMassBall);
  CHECK_THROWS_AS(alpha_tilde(mu, Ball(v2(0, 5), 1.0), 1), ZeroMassBall);
  FitConfig bad;
  bad.quad = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(alpha(mu, Ball(v2(0, 0), 1.0), 3), ValidationError);
}

TEST_CASE("alpha against the exhaustive grid") {
  FitConfig cfg;
  cfg.quad = 16;
  std::mt19937_64 rng(21);
  for (int t = 0; t < 3; ++t) {
    const DiscreteMeasure mu = cloud(rng, 12);
    const Ball b(v2(0, 0), 1.0);
    const AlphaResult a = alpha(mu, b, 1, cfg);
    check_alpha_invariants(a, b);
    const oracle::AlphaGrid g = oracle::alpha_grid_2d(mu, b, cfg.quad, 16, 64, 2);
    // the grid only bounds the infimum from above
    CHECK(a.alpha <= g.alpha * 1.05 + 1e-12);
  }
}

TEST_CASE("alpha is invariant under similarities") {
  FitConfig cfg;
  cfg.quad = 16;
  std::mt19937_64 rng(22);
  const DiscreteMeasure mu = cloud(rng, 15);
  const Ball b(v2(0.1, 0.0), 1.0);
  const double base = alpha(mu, b, 1, cfg).alpha;
  const VectorXd shift = v2(3.0, -2.0);
  const double rot = 0.7;
  Eigen::Matrix2d q;
  q << std::cos(rot), -std::sin(rot), std::sin(rot), std::cos(rot);
  const DiscreteMeasure moved((2.0 * q * mu.points()).colwise() + shift, 5.0 * mu.weights());
  const double other = alpha(moved, Ball(2.0 * q * b.center + shift, 2.0), 1, cfg).alpha;
  CHECK(other == doctest::Approx(base).epsilon(0.02));
}

TEST_CASE("alpha_tilde") {
  FitConfig cfg;
  cfg.quad = 16;
  SUBCASE("flat") {
    const Ball b(v2(0, 0), 1.0);
    const AlphaResult a = alpha_tilde(segment(1.0, 0.0, 2.0, 2000), b, 1, cfg);
    CHECK(a.alpha <= 1.0 / cfg.quad);
  }
  SUBCASE("dominates alpha") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 4; ++t) {
      const DiscreteMeasure mu = cloud(rng, 10);
      const Ball b(v2(0, 0), 1.0);
      const AlphaResult at = alpha_tilde(mu, b, 1, cfg);
      CHECK(at.plane_best.distance(b.center) < b.radius);
      CHECK(alpha(mu, b, 1, cfg).alpha <= at.alpha * (1.0 + cfg.agreement_tol) + 1e-9);
    }
  }
}

TEST_CASE("fit_density") {
  const DiscreteMeasure mu = segment(0.0, 0.0, 2.0, 2000);
  const Ball b(v2(0, 0), 1.0);
  FitConfig cfg;
  cfg.quad = 32;
  const PlaneFit on = fit_density(mu, b, AffinePlane(v2(0, 0), v2(1, 0)), cfg);
  CHECK(on.c == doctest::Approx(1.0).epsilon(0.05));
  CHECK(on.f_value <= 2.0 / cfg.quad);
  // a plane far from the support is fitted with nothing on it
  const PlaneFit off = fit_density(mu, b, AffinePlane(v2(0, 0.9), v2(1, 0)), cfg);
  CHECK(off.f_value >= on.f_value);
  CHECK_THROWS_AS(fit_density(mu, Ball(v2(0, 5), 1.0), AffinePlane(v2(0, 0), v2(1, 0)), cfg), ZeroMassBall);
}

TEST_CASE("beta examples") {
  const Ball b(v2(0, 0), 2.0);
  MatrixXd p(2, 2);
  p << 0, 0, 1, -1;
  const DiscreteMeasure two(p, VectorXd::Ones(2));
  // the two atoms are collinear, so the infimum is attained by the vertical line
  CHECK(beta(two, b, 1).beta == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(beta_for_plane(two, b, AffinePlane(v2(0, 0), v2(1, 0))) == doctest::Approx(0.5).epsilon(1e-14));
  for (double pp : {1.0, 2.0, 3.0}) CHECK(beta(segment(0.3, 0.2, 1.5, 50), b, 1, pp).beta < 1e-12);
  CHECK(beta(two, Ball(v2(0, 9), 1.0), 1).beta == 0.0);
  CHECK_THROWS_AS(beta(two, b, 1, 0.5), ValidationError);
}

TEST_CASE("beta properties") {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 20; ++t) {
    const Ball b(v2(0, 0), 1.0);
    DiscreteMeasure mu = cloud(rng, 25);
    // normalize so that mu restricted to B over r^d is a probability
    mu = DiscreteMeasure(mu.points(), mu.weights() / ball_mass(mu, b));
    const BetaResult b2 = beta(mu, b, 1, 2.0);
    CHECK(b2.beta == doctest::Approx(oracle::beta2_grid_2d(mu, b)).epsilon(1e-4));
    CHECK(beta_for_plane(mu, b, b2.plane_best) == doctest::Approx(b2.beta).epsilon(1e-12));
    CHECK(beta(mu, b, 1, 1.0).beta <= b2.beta + 1e-8);
    CHECK(b2.beta <= beta_for_plane(mu, b, principal_plane(restrict(mu, b), 1)) + 1e-12);
  }
}
