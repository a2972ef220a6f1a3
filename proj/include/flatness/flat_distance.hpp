#pragma once

#include <string_view>

#include "flatness/geometry.hpp"
#include "flatness/measure.hpp"
#include "flatness/network_simplex.hpp"

namespace flatness {

/// c * H^d restricted to L, carried by a lattice quadrature of L inside a ball.
struct FlatMeasure {
  double density = 0.0;
  AffinePlane plane;
  DiscreteMeasure quadrature;
};

/// Lattice of spacing r/quad on the slice L ∩ B, anchored at the foot of the
/// perpendicular from the ball center; each node carries spacing^d * density.
FlatMeasure flat_measure(const AffinePlane& plane, const Ball& ball, double density, int quad);

/// Unit-density lattice nodes of L ∩ B (columns) and the common node weight.
struct SliceLattice {
  MatrixXd nodes;
  double node_weight = 0.0;
};
SliceLattice slice_lattice(const AffinePlane& plane, const Ball& ball, int quad);

/// d-volume of L ∩ B in closed form.
double slice_volume(const AffinePlane& plane, const Ball& ball);

enum class BLStatus { optimal, capped_support, degenerate };
std::string_view to_string(BLStatus s);

struct BLResult {
  double value = 0.0;
  /// Union support inside the ball (sigma atoms first, then nu atoms; aggregated
  /// when capped) with the net mass sigma - nu and a 1-Lipschitz witness potential.
  MatrixXd support;
  VectorXd net_mass;
  VectorXd witness;
  BLStatus status = BLStatus::optimal;
  double aggregation_cell = 0.0;  // nonzero when the support was aggregated
};

inline constexpr Index kMaxSupport = 2000;
inline constexpr double kAggregationCells = 64.0;

/// F_B(sigma, nu): sup of |∫φ dσ − ∫φ dν| over 1-Lipschitz φ supported in the open ball,
/// solved exactly for the discrete data through the potential LP's transport dual.
BLResult bl_distance(const DiscreteMeasure& sigma, const DiscreteMeasure& nu, const Ball& b);

/// Kantorovich transport-plan LP between two probability measures.
double w1_distance(const DiscreteMeasure& p, const DiscreteMeasure& q);

/// Largest violation of the potential LP constraints by `witness` on `support`.
double witness_violation(const MatrixXd& support, const VectorXd& witness, const Ball& b);

namespace detail {

/// Fixed source measure inside a ball, evaluated against varying sink measures.
/// Used by the alpha optimizer, which solves thousands of such problems per ball.
class BallTransport {
 public:
  BallTransport(MatrixXd source_points, VectorXd source_weights, const Ball& ball);

  struct Evaluation {
    double value = 0.0;
    double sink_potential_sum = 0.0;  // Σ_t y_t, weighted by sink weights / weight scale
  };

  /// Sinks with common weight `sink_weight` at columns of `sink_points` (all inside ball).
  /// sink_potential_sum is Σ_t y_t, so d value / d sink_weight ∋ -sink_potential_sum.
  Evaluation evaluate(const MatrixXd& sink_points, double sink_weight);

  /// Value and right derivative in sink_weight at zero sink mass, in closed form.
  Evaluation evaluate_empty(const MatrixXd& sink_points) const;

  double boundary_value() const { return boundary_value_; }
  const MatrixXd& source_points() const { return sources_; }
  const VectorXd& source_weights() const { return weights_; }
  double source_mass() const { return weights_.sum(); }

 private:
  MatrixXd sources_;
  VectorXd weights_;
  VectorXd caps_;
  VectorXd center_;
  double radius_;
  double boundary_value_ = 0.0;
  lp::GroundedTransport problem_;
  lp::NetworkSimplex solver_;
};

/// Grid aggregation used above the support cap: cell = radius / kAggregationCells.
DiscreteMeasure aggregate(const DiscreteMeasure& mu, const Ball& b);

}  // namespace detail

}  // namespace flatness
