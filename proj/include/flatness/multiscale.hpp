#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flatness/coefficients.hpp"

namespace flatness {

/// Radii r_max * 2^(-i/q) for i = 0, 1, ... while the radius stays >= r_min.
struct RadiusGrid {
  double r_min = 0.0;
  double r_max = 1.0;
  int per_octave = 2;

  void validate() const;
  std::vector<double> radii() const;
  /// Quadrature weight of one radius in the dr/r integral.
  double weight() const;
};

/// Default floor: 8 times the median nearest-neighbour spacing of the atoms.
double default_r_min(const DiscreteMeasure& mu);

struct MultiscaleProfile {
  Point point;
  RadiusGrid grid;
  std::vector<double> radii;
  std::vector<double> alphas;
  std::vector<double> betas;    // beta_2
  std::vector<double> thetas;   // mu(B(x,r)) / r^d
  std::vector<double> doubling; // mu(B(x,2r)) / mu(B(x,r)); 0 where undefined
  std::vector<double> c_best;
  std::vector<char> zero_mass;  // scale excluded from the Jones sums
  std::vector<char> disagreement;
  std::vector<AffinePlane> planes;
  double jones_alpha = 0.0;
  double jones_beta = 0.0;
  int zero_mass_scales = 0;
  bool any_disagreement = false;
  bool outside_hull = false;  // warning: point outside the bounding box of the support
};

struct ProfileOptions {
  bool warm_start = true;  // seed each scale with the plane of the previous (larger) one
};

/// Coefficients of mu at x over the grid, with Jones sums by the log-uniform rule.
MultiscaleProfile profile(const DiscreteMeasure& mu, const Point& x, const RadiusGrid& grid, int d,
                          const FitConfig& cfg = {}, const ProfileOptions& opts = {});

/// Per-scale discretization: returns the measure near `region` sampled at the given
/// spacing. Lets each scale use its own resolution.
using ScaleSampler = std::function<DiscreteMeasure(const Ball& region, double spacing)>;

/// Same as above with the measure supplied per scale: at radius r the sampler is asked
/// for B(x, 2r) at spacing r / cfg.quad.
MultiscaleProfile profile(const ScaleSampler& sampler, const Point& x, const RadiusGrid& grid, int d,
                          const FitConfig& cfg = {}, const ProfileOptions& opts = {});

struct ClassifyThresholds {
  double jones_max = 0.5;     // J_max
  double doubling_max = 8.0;  // M_max
  double tau = 0.05;          // low density: theta at the smallest radius <= tau
};

struct PointVerdict {
  Point point;
  double jones_alpha = 0.0;
  double max_doubling = 0.0;
  double theta_min_scale = 0.0;
  bool jones_ok = true;
  bool doubling_ok = true;
  bool low_density = false;
  bool insufficient = false;  // every scale has zero mass
  bool pass = false;
  bool disagreement = false;
};

struct ClassifySummary {
  std::vector<PointVerdict> points;
  double pass_fraction = 0.0;
  int jones_failures = 0;
  int doubling_failures = 0;
  int low_density_failures = 0;
  int insufficient = 0;
  std::string dominant_failure;  // "none", "jones", "doubling", "low-density"
  std::string verdict;           // consistent-with-rectifiable | fails-criteria | insufficient data
  std::string caveat = "finite-scale diagnostic";
  ClassifyThresholds thresholds;
};

/// Rectifiability criteria at finite scales: bounded alpha square function, bounded
/// doubling, and no collapse of density at the smallest radius.
ClassifySummary classify(const DiscreteMeasure& mu, const std::vector<Point>& sample, const RadiusGrid& grid, int d,
                         const ClassifyThresholds& thresholds = {}, const FitConfig& cfg = {}, int threads = 1);

/// Pass fraction at least 0.9 is reported as consistent.
inline constexpr double kConsistentFraction = 0.9;

struct StopThresholds {
  double epsilon = 1e-3;
  double tau = 0.05;
  double A = 20.0;
  double C1 = 4.0;
  void validate() const;
};

struct ScaleFlags {
  bool nd = false;  // not dense: mass off the good set >= eps^(1/2) mu(B)
  bool ld = false;  // low density: theta <= tau
  bool hd = false;  // high density: theta >= A
  bool ba = false;  // big angle to the reference plane: angle >= eps^(1/4)
  bool any() const { return nd || ld || hd || ba; }
};

struct StopDiagnosis {
  Point point;
  double delta = 0.0;       // largest grid radius with a flag, 0 if none
  double d_reg = 0.0;       // inf over base points y of delta(y) + |x - y|
  double resolution = 0.0;  // ratio between consecutive grid radii
  std::vector<double> radii;
  std::vector<ScaleFlags> flags;
  StopThresholds thresholds;
};

/// Stopping-time flags along the grid at every base point. `good_mask` marks the atoms
/// of the good set; empty means every atom is good.
std::vector<StopDiagnosis> stopping_time(const DiscreteMeasure& mu, const std::vector<Point>& base,
                                         const RadiusGrid& grid, int d, const StopThresholds& thresholds,
                                         const AffinePlane& reference_plane,
                                         const std::vector<char>& good_mask = {}, const FitConfig& cfg = {},
                                         int threads = 1);

}  // namespace flatness
