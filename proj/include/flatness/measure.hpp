#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "flatness/types.hpp"

namespace flatness {

/// Finite weighted point set in R^n, stored column-wise (one column per atom).
/// Immutable after construction.
template <typename Scalar>
class BasicDiscreteMeasure {
 public:
  using Points = MatrixX<Scalar>;
  using Weights = VectorX<Scalar>;

  explicit BasicDiscreteMeasure(int ambient_dim = 2) : points_(ambient_dim, 0), weights_(0) {
    if (ambient_dim <= 0) throw ValidationError("ambient_dim must be positive");
  }

  BasicDiscreteMeasure(Points points, Weights weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.rows() <= 0) throw ValidationError("ambient_dim must be positive");
    if (points_.cols() != weights_.size())
      throw ValidationError("points and weights differ in length");
    for (Index i = 0; i < weights_.size(); ++i) {
      if (!std::isfinite(static_cast<double>(weights_[i])) || weights_[i] < Scalar(0))
        throw ValidationError("weights must be finite and nonnegative");
    }
    if (!points_.allFinite()) throw ValidationError("coordinates must be finite");
  }

  int ambient_dim() const { return static_cast<int>(points_.rows()); }
  Index size() const { return points_.cols(); }
  bool empty() const { return points_.cols() == 0; }

  const Points& points() const { return points_; }
  const Weights& weights() const { return weights_; }
  auto point(Index i) const { return points_.col(i); }
  Scalar weight(Index i) const { return weights_[i]; }
  Scalar total_mass() const { return weights_.sum(); }

 private:
  Points points_;
  Weights weights_;
};

using DiscreteMeasure = BasicDiscreteMeasure<double>;

/// Open ball B(center, radius).
template <typename Scalar>
struct BasicBall {
  VectorX<Scalar> center;
  Scalar radius;

  BasicBall(VectorX<Scalar> c, Scalar r) : center(std::move(c)), radius(r) {
    if (!(radius > Scalar(0))) throw ValidationError("ball radius must be positive");
  }

  bool contains(ConstVectorRef<Scalar> p) const {
    return (p - center).norm() < radius;
  }
  BasicBall scaled(Scalar factor) const { return BasicBall(center, radius * factor); }
};

using Ball = BasicBall<double>;

struct DensityStats {
  double theta = 0.0;           // mu(B(x,r)) / r^d
  double doubling_ratio = 0.0;  // mu(B(x,2r)) / mu(B(x,r)); meaningful only if doubling_defined
  bool doubling_defined = false;
  double unit_density = 0.0;    // theta / omega_d: 1 for H^d on a d-plane through x
};

/// Volume of the unit ball of R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

template <typename Scalar>
Scalar ball_mass(const BasicDiscreteMeasure<Scalar>& mu, const BasicBall<Scalar>& b) {
  Scalar mass(0);
  const Scalar r2 = b.radius * b.radius;
  for (Index i = 0; i < mu.size(); ++i) {
    if ((mu.point(i) - b.center).squaredNorm() < r2) mass += mu.weight(i);
  }
  return mass;
}

template <typename Scalar>
DensityStats density_ratio(const BasicDiscreteMeasure<Scalar>& mu,
                           ConstVectorRef<Scalar> x, Scalar r, int d) {
  if (!(r > Scalar(0))) throw ValidationError("density_ratio: radius must be positive");
  if (d <= 0 || d > mu.ambient_dim()) throw ValidationError("density_ratio: need 0 < d <= n");
  const BasicBall<Scalar> b(x, r);
  const double inner = static_cast<double>(ball_mass(mu, b));
  DensityStats s;
  s.theta = inner / std::pow(static_cast<double>(r), d);
  s.unit_density = s.theta / unit_ball_volume(d);
  if (inner > 0.0) {
    s.doubling_ratio = static_cast<double>(ball_mass(mu, b.scaled(Scalar(2)))) / inner;
    s.doubling_defined = true;
  }
  return s;
}

/// Atoms strictly inside b, weights unchanged.
template <typename Scalar>
BasicDiscreteMeasure<Scalar> restrict(const BasicDiscreteMeasure<Scalar>& mu,
                                      const BasicBall<Scalar>& b) {
  const Scalar r2 = b.radius * b.radius;
  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(mu.size()));
  for (Index i = 0; i < mu.size(); ++i) {
    if ((mu.point(i) - b.center).squaredNorm() < r2) keep.push_back(i);
  }
  MatrixX<Scalar> pts(mu.ambient_dim(), static_cast<Index>(keep.size()));
  VectorX<Scalar> w(static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    pts.col(static_cast<Index>(k)) = mu.point(keep[k]);
    w[static_cast<Index>(k)] = mu.weight(keep[k]);
  }
  return BasicDiscreteMeasure<Scalar>(std::move(pts), std::move(w));
}

/// Blow-up p -> (p - x) / r with weights divided by mass_norm.
template <typename Scalar>
BasicDiscreteMeasure<Scalar> rescale(const BasicDiscreteMeasure<Scalar>& mu,
                                     ConstVectorRef<Scalar> x, Scalar r,
                                     Scalar mass_norm) {
  if (!(r > Scalar(0)) || !(mass_norm > Scalar(0)))
    throw ValidationError("rescale: r and mass_norm must be positive");
  MatrixX<Scalar> pts = (mu.points().colwise() - x) / r;
  VectorX<Scalar> w = mu.weights() / mass_norm;
  return BasicDiscreteMeasure<Scalar>(std::move(pts), std::move(w));
}

}  // namespace flatness
