#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "flatness/measure.hpp"

namespace flatness {

/// Affine d-plane in R^n: base point plus an orthonormal basis stored column-wise.
/// The stored base point is the projection of the origin onto the plane, so two
/// descriptions of the same plane compare equal up to basis rotation.
template <typename Scalar>
class BasicAffinePlane {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  BasicAffinePlane() = default;

  /// `span` need not be orthonormal; its columns must be linearly independent.
  BasicAffinePlane(const Vector& point, const Matrix& span) {
    if (span.cols() <= 0 || span.cols() > span.rows())
      throw ValidationError("AffinePlane: need 0 < d <= n");
    if (point.size() != span.rows())
      throw ValidationError("AffinePlane: base point and basis dimensions differ");
    basis_ = orthonormalize(span);
    base_ = point - basis_ * (basis_.transpose() * point);
  }

  int dim() const { return static_cast<int>(basis_.cols()); }
  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  const Vector& base_point() const { return base_; }
  const Matrix& basis() const { return basis_; }

  /// Orthonormal basis of the orthogonal complement of the direction space.
  Matrix normal_basis() const {
    Eigen::HouseholderQR<Matrix> qr(basis_);
    Matrix q = qr.householderQ() * Matrix::Identity(ambient_dim(), ambient_dim());
    return q.rightCols(ambient_dim() - dim());
  }

  Vector project(const Eigen::Ref<const Vector>& p) const {
    return base_ + basis_ * (basis_.transpose() * (p - base_));
  }
  Scalar distance(const Eigen::Ref<const Vector>& p) const { return (p - project(p)).norm(); }

  /// Coordinates of p's projection in the plane's basis, relative to `origin` (a point of L).
  Vector coordinates(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& origin) const {
    return basis_.transpose() * (p - origin);
  }

  /// Modified Gram-Schmidt, applied twice.
  static Matrix orthonormalize(const Matrix& span) {
    Matrix q = span;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index j = 0; j < q.cols(); ++j) {
        for (Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
        const Scalar norm = q.col(j).norm();
        if (!(norm > Scalar(1e-14) * std::max<Scalar>(Scalar(1), span.col(j).norm())))
          throw ValidationError("AffinePlane: spanning vectors are linearly dependent");
        q.col(j) /= norm;
      }
    }
    return q;
  }

 private:
  Vector base_;
  Matrix basis_;
};

using AffinePlane = BasicAffinePlane<double>;

template <typename Scalar>
VectorX<Scalar> project(ConstVectorRef<Scalar> p, const BasicAffinePlane<Scalar>& L) {
  return L.project(p);
}

/// Cosines of the principal angles between the direction spaces, descending.
template <typename Scalar>
VectorX<Scalar> principal_cosines(const BasicAffinePlane<Scalar>& a, const BasicAffinePlane<Scalar>& b) {
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(a.basis().transpose() * b.basis());
  return svd.singularValues().cwiseMin(Scalar(1));
}

/// Hausdorff distance between the unit-ball slices of the two planes translated to
/// the origin, i.e. the sine of the largest principal angle.
template <typename Scalar>
Scalar plane_angle(const BasicAffinePlane<Scalar>& a, const BasicAffinePlane<Scalar>& b) {
  if (a.dim() != b.dim() || a.ambient_dim() != b.ambient_dim())
    throw ValidationError("plane_angle: planes differ in dimension");
  const Scalar cmin = principal_cosines(a, b).minCoeff();
  return std::sqrt(std::max(Scalar(0), Scalar(1) - cmin * cmin));
}

/// Scale-invariant Hausdorff distance of two finite point sets (columns) seen from B(x,r).
template <typename Scalar>
Scalar local_hausdorff(const MatrixX<Scalar>& e, const MatrixX<Scalar>& f,
                       ConstVectorRef<Scalar> x, Scalar r) {
  if (!(r > Scalar(0))) throw ValidationError("local_hausdorff: radius must be positive");
  auto one_sided = [&](const MatrixX<Scalar>& from, const MatrixX<Scalar>& to) {
    Scalar worst(0);
    for (Index i = 0; i < from.cols(); ++i) {
      if ((from.col(i) - x).norm() >= r) continue;
      Scalar best = std::numeric_limits<Scalar>::infinity();
      for (Index j = 0; j < to.cols(); ++j) best = std::min(best, (from.col(i) - to.col(j)).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_sided(e, f), one_sided(f, e)) / r;
}

struct NetResult {
  std::vector<Index> indices;
  double separation = 0.0;
};

/// Greedy maximal separated subset in input order: every kept pair is at least `sep`
/// apart and every input point lies within `sep` of a kept one.
template <typename Scalar>
NetResult separated_net(const MatrixX<Scalar>& points, Scalar sep) {
  if (!(sep > Scalar(0))) throw ValidationError("separated_net: separation must be positive");
  NetResult out;
  out.separation = static_cast<double>(sep);
  for (Index i = 0; i < points.cols(); ++i) {
    const bool far = std::all_of(out.indices.begin(), out.indices.end(), [&](Index k) {
      return (points.col(i) - points.col(k)).norm() >= sep;
    });
    if (far) out.indices.push_back(i);
  }
  return out;
}

struct SubcoverResult {
  std::vector<std::vector<Index>> families;  // indices into the input ball list
  int family_count() const { return static_cast<int>(families.size()); }
};

/// Besicovitch-style subcover: balls are scanned by decreasing radius (input order on
/// ties) and kept when their center is not yet covered; kept balls are then dealt
/// first-fit into families of pairwise disjoint balls.
template <typename Scalar>
SubcoverResult besicovitch_subcover(const std::vector<BasicBall<Scalar>>& balls) {
  std::vector<Index> order(balls.size());
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return balls[a].radius > balls[b].radius; });

  std::vector<Index> kept;
  for (Index i : order) {
    const bool covered = std::any_of(kept.begin(), kept.end(), [&](Index k) {
      return balls[k].contains(balls[i].center);
    });
    if (!covered) kept.push_back(i);
  }

  auto disjoint = [&](Index a, Index b) {
    return (balls[a].center - balls[b].center).norm() >= balls[a].radius + balls[b].radius;
  };
  SubcoverResult out;
  for (Index i : kept) {
    bool placed = false;
    for (auto& fam : out.families) {
      if (std::all_of(fam.begin(), fam.end(), [&](Index k) { return disjoint(i, k); })) {
        fam.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) out.families.push_back({i});
  }
  return out;
}

}  // namespace flatness
