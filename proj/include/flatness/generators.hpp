#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flatness/measure.hpp"

namespace flatness {

/// Parameters of the line-splitting construction in R^2: at level k every line of
/// level k-1 splits into itself with mass fraction (1 - a_k) and a copy raised by h_k
/// with fraction a_k.
struct CounterexampleSpec {
  int levels = 0;
  std::vector<double> a_seq;  // a_1..a_K
  std::vector<double> h_seq;  // h_1..h_K
  double window = 8.0;        // atoms live on [center_x - window, center_x + window]
  double samples_per_unit = 64.0;
  double center_x = 0.0;

  /// Throws ValidationError naming the first violated constraint.
  void validate() const;
};

/// Horizontal line of a level: `mask` bit k-1 is set when the line took the raised
/// branch at level k, so its height is the sum of the selected h_k.
struct CounterexampleLine {
  double height = 0.0;
  double coefficient = 0.0;
  std::uint64_t mask = 0;
};

struct LevelMeasure {
  int level = 0;
  std::vector<CounterexampleLine> lines;
  DiscreteMeasure measure;
  double min_gap = 1.0;  // d_k: minimal distance between distinct lines (1 at level 0)

  double max_coefficient() const;
};

/// Largest usable level count: heights below this are refused as underflow.
inline constexpr double kHeightFloor = 1e-300;

/// mu_0..mu_K discretized with uniform atoms of weight spacing * c_j at the midpoints
/// of a partition of the window.
std::vector<LevelMeasure> counterexample(const CounterexampleSpec& spec);

/// a_j = 1/(2j+2), h_{k+1} = half the smaller of the two admissible bounds, d_0 = 1.
CounterexampleSpec default_parameters(int levels);

/// Exact signed height difference between two lines: the sum of the h_k on which the
/// masks differ, accumulated from the smallest term up.
double line_offset(std::uint64_t from, std::uint64_t to, const std::vector<double>& h_seq);

/// Minimal distance d_k among the lines of a level.
double minimal_gap(const std::vector<CounterexampleLine>& lines, const std::vector<double>& h_seq);

/// mu_k in coordinates centered at the point (x0, height of `line`): atoms at
/// x = i * spacing for |x| < half_width on every line whose relative height is below
/// half_width. Keeps every scale resolvable regardless of absolute magnitude. Lines
/// within `merge_below` of each other are lumped into one (mass is preserved).
DiscreteMeasure local_sample(const LevelMeasure& level, const std::vector<double>& h_seq, std::size_t line,
                             double half_width, double spacing, double merge_below = 0.0);

struct KochStage {
  int stage = 0;
  MatrixXd vertices;  // 2 x (4^stage + 1)
  double length = 0.0;
  DiscreteMeasure measure;
};

/// Stages 1..K of the snowflake-type curve on [0,1]: each segment is replaced by four
/// equal segments whose middle two form a bump at angle 1/sqrt(k). Measures are
/// arclength normalized to total mass 1.
std::vector<KochStage> koch_variant(int stages, int samples_per_segment);

/// The stage's arclength measure near `region`: points at equal arclength steps of
/// about `spacing` along the whole curve (each of mass 1/count), keeping those inside
/// the region. Lets coarse scales of a deep stage stay cheap.
DiscreteMeasure koch_local_sample(const KochStage& stage, const Ball& region, double spacing);

/// Graph over [-2,2]^d of a separable piecewise-linear map R^d -> R^(n-d) with every
/// secant slope at most `slope`; atoms carry the area element of their cell.
DiscreteMeasure lipschitz_graph(double slope, int n, int d, int atoms, std::uint64_t seed);

/// Unit-density lattice on R^d x {0} over [-half_width, half_width]^d.
DiscreteMeasure flat(int n, int d, int atoms_per_side, double half_width = 2.0);

}  // namespace flatness
