#pragma once

#include <optional>
#include <stdexcept>
#include <string_view>

#include "flatness/flat_distance.hpp"
#include "flatness/geometry.hpp"
#include "flatness/measure.hpp"

namespace flatness {

struct FitConfig {
  int quad = 64;               // lattice spacing r/quad on L ∩ B
  int restarts = 3;            // plane-search starting points
  double agreement_tol = 0.05; // relative spread between restarts before flagging
  double c_tol = 1e-6;         // relative certificate gap of the c minimization
  int plane_iters = 400;       // objective evaluations per restart

  void validate() const;
};

/// The normalization divides by mu(B); an empty ball has no alpha.
class ZeroMassBall : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class AlphaStatus { converged, multistart_disagreement };
std::string_view to_string(AlphaStatus s);

struct AlphaResult {
  double alpha = 0.0;
  double c_best = 0.0;  // density of the fitted flat measure
  AffinePlane plane_best;
  double f_value = 0.0;  // achieved F_B (alpha) or W1 in the blow-up (alpha_tilde)
  AlphaStatus status = AlphaStatus::converged;
  double mass = 0.0;     // mu(B)
  double spread = 0.0;   // worst minus best restart value, same units as alpha
  long evaluations = 0;  // transport solves
};

struct BetaResult {
  double beta = 0.0;
  AffinePlane plane_best;
  double p = 2.0;
};

/// Weighted principal d-plane: through the weighted centroid, spanned by the top-d
/// eigenvectors of the second-moment matrix. Requires positive total mass.
AffinePlane principal_plane(const DiscreteMeasure& mu, int d);

/// Best F_B(mu, c H^d|_L) over c >= 0 for a fixed plane, with the minimizing c.
struct PlaneFit {
  double f_value = 0.0;
  double c = 0.0;
};
PlaneFit fit_density(const DiscreteMeasure& mu, const Ball& b, const AffinePlane& plane,
                     const FitConfig& cfg = {});

/// alpha_mu^d(B) = inf over c >= 0 and d-planes L of F_B(mu, c H^d|_L) / (r mu(B)).
/// `warm_start` adds a starting plane, typically the fit at the neighbouring scale.
AlphaResult alpha(const DiscreteMeasure& mu, const Ball& b, int d, const FitConfig& cfg = {},
                  const std::optional<AffinePlane>& warm_start = std::nullopt);

/// Blow-up variant: inf over L of W1 between mu|B and H^d|L∩B, both normalized to
/// probability and mapped by y -> (y - x_B) / r_B.
AlphaResult alpha_tilde(const DiscreteMeasure& mu, const Ball& b, int d, const FitConfig& cfg = {},
                        const std::optional<AffinePlane>& warm_start = std::nullopt);

/// beta_p(x,r) = inf_L ((1/r^d) ∫_B (dist(y,L)/r)^p dmu)^(1/p). Zero on an empty ball.
BetaResult beta(const DiscreteMeasure& mu, const Ball& b, int d, double p = 2.0);

/// The same quantity evaluated at a given plane instead of the infimum.
double beta_for_plane(const DiscreteMeasure& mu, const Ball& b, const AffinePlane& plane,
                      double p = 2.0);

}  // namespace flatness
