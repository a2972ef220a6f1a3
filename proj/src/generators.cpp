#include "flatness/generators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/LU>

namespace flatness {

namespace {

[[noreturn]] void reject(const std::string& what, int level) {
  std::ostringstream os;
  os << what << " violated at level " << level;
  throw ValidationError(os.str());
}

std::vector<CounterexampleLine> split(const std::vector<CounterexampleLine>& lines, int level, double a, double h) {
  std::vector<CounterexampleLine> out;
  out.reserve(lines.size() * 2);
  for (const auto& l : lines) out.push_back({l.height, (1.0 - a) * l.coefficient, l.mask});
  for (const auto& l : lines)
    out.push_back({l.height + h, a * l.coefficient, l.mask | (std::uint64_t{1} << (level - 1))});
  return out;
}

DiscreteMeasure discretize(const std::vector<CounterexampleLine>& lines, const CounterexampleSpec& spec) {
  const double spacing = 1.0 / spec.samples_per_unit;
  const long per_line = std::lround(2.0 * spec.window / spacing);
  const Index m = static_cast<Index>(per_line);
  MatrixXd pts(2, m * static_cast<Index>(lines.size()));
  VectorXd w(pts.cols());
  Index col = 0;
  for (const auto& l : lines) {
    for (Index i = 0; i < m; ++i, ++col) {
      pts(0, col) = spec.center_x - spec.window + (static_cast<double>(i) + 0.5) * spacing;
      pts(1, col) = l.height;
      w[col] = spacing * l.coefficient;
    }
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace

double LevelMeasure::max_coefficient() const {
  double m = 0.0;
  for (const auto& l : lines) m = std::max(m, l.coefficient);
  return m;
}

double line_offset(std::uint64_t from, std::uint64_t to, const std::vector<double>& h_seq) {
  // h_k decreases with k, so the sum runs from the last level back.
  double sum = 0.0;
  for (std::size_t k = h_seq.size(); k-- > 0;) {
    const std::uint64_t bit = std::uint64_t{1} << k;
    const bool a = from & bit, b = to & bit;
    if (a != b) sum += b ? h_seq[k] : -h_seq[k];
  }
  return sum;
}

double minimal_gap(const std::vector<CounterexampleLine>& lines, const std::vector<double>& h_seq) {
  double gap = 1.0;
  bool any = false;
  for (std::size_t i = 0; i < lines.size(); ++i)
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const double d = std::abs(line_offset(lines[i].mask, lines[j].mask, h_seq));
      gap = any ? std::min(gap, d) : d;
      any = true;
    }
  return gap;
}

void CounterexampleSpec::validate() const {
  if (levels < 0) throw ValidationError("levels must be nonnegative");
  if (levels > 62) throw ValidationError("levels above 62 are not representable");
  if (static_cast<int>(a_seq.size()) != levels || static_cast<int>(h_seq.size()) != levels)
    throw ValidationError("a_seq and h_seq must have exactly `levels` entries");
  if (!(window > 0.0)) throw ValidationError("window must be positive");
  if (!(samples_per_unit > 0.0)) throw ValidationError("samples_per_unit must be positive");
  if (!std::isfinite(center_x)) throw ValidationError("center_x must be finite");
  std::vector<CounterexampleLine> lines{{0.0, 1.0, 0}};
  double gap = 1.0;
  for (int k = 1; k <= levels; ++k) {
    const double a = a_seq[static_cast<std::size_t>(k - 1)];
    const double h = h_seq[static_cast<std::size_t>(k - 1)];
    if (!(a > 0.0 && a < 0.5)) reject("constraint 0 < a_k < 1/2", k);
    if (!(h > 0.0 && h < 0.5)) reject("constraint 0 < h_k < 1/2", k);
    if (h < kHeightFloor) reject("height underflow (h_k below 1e-300)", k);
    if (h > std::pow(a, 4.0 * k) * gap) reject("height bound h_k <= a_k^(4k) d_(k-1)", k);
    if (std::pow(h / gap, 0.25) > std::pow(2.0, -(k - 1))) reject("ratio bound (h_k/d_(k-1))^(1/4) <= 2^-(k-1)", k);
    lines = split(lines, k, a, h);
    const std::vector<double> hs(h_seq.begin(), h_seq.begin() + k);
    gap = minimal_gap(lines, hs);
  }
}

std::vector<LevelMeasure> counterexample(const CounterexampleSpec& spec) {
  spec.validate();
  std::vector<LevelMeasure> out;
  std::vector<CounterexampleLine> lines{{0.0, 1.0, 0}};
  double gap = 1.0;
  for (int k = 0; k <= spec.levels; ++k) {
    if (k > 0) {
      lines = split(lines, k, spec.a_seq[static_cast<std::size_t>(k - 1)], spec.h_seq[static_cast<std::size_t>(k - 1)]);
      gap = minimal_gap(lines, std::vector<double>(spec.h_seq.begin(), spec.h_seq.begin() + k));
    }
    out.push_back(LevelMeasure{k, lines, discretize(lines, spec), gap});
  }
  return out;
}

CounterexampleSpec default_parameters(int levels) {
  if (levels < 1) throw ValidationError("default_parameters: levels must be at least 1");
  CounterexampleSpec spec;
  spec.levels = levels;
  std::vector<CounterexampleLine> lines{{0.0, 1.0, 0}};
  double gap = 1.0;
  for (int k = 1; k <= levels; ++k) {
    const double a = 1.0 / (2.0 * k + 2.0);
    const double h = 0.5 * std::min(std::pow(a, 4.0 * k) * gap, std::pow(2.0, -4.0 * (k - 1)) * gap);
    if (h < kHeightFloor) reject("height underflow (h_k below 1e-300)", k);
    spec.a_seq.push_back(a);
    spec.h_seq.push_back(h);
    lines = split(lines, k, a, h);
    gap = minimal_gap(lines, spec.h_seq);
  }
  return spec;
}

DiscreteMeasure local_sample(const LevelMeasure& level, const std::vector<double>& h_seq, std::size_t line,
                             double half_width, double spacing, double merge_below) {
  if (!(merge_below >= 0.0)) throw ValidationError("local_sample: merge distance must be nonnegative");
  if (line >= level.lines.size()) throw ValidationError("local_sample: line index out of range");
  if (!(half_width > 0.0) || !(spacing > 0.0)) throw ValidationError("local_sample: sizes must be positive");
  const std::uint64_t origin = level.lines[line].mask;
  struct Row {
    double offset, coefficient;
  };
  std::vector<Row> rows;
  for (const auto& l : level.lines) {
    const double off = line_offset(origin, l.mask, h_seq);
    if (std::abs(off) < half_width) rows.push_back({off, l.coefficient});
  }
  // Runs of lines spanning less than merge_below (or equal after rounding) become one
  // row: at offset 0 if the run holds the center line, else at its mass-weighted mean.
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.offset < b.offset; });
  std::vector<Row> merged;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    double mass = 0.0, moment = 0.0;
    bool centre = false;
    while (j < rows.size() && (j == i || rows[j].offset == rows[i].offset || rows[j].offset - rows[i].offset < merge_below)) {
      mass += rows[j].coefficient;
      moment += rows[j].coefficient * rows[j].offset;
      centre = centre || rows[j].offset == 0.0;
      ++j;
    }
    merged.push_back({centre ? 0.0 : moment / mass, mass});
    i = j;
  }
  const long kmax = static_cast<long>(std::ceil(half_width / spacing));
  std::vector<double> xs;
  for (long i = -kmax; i <= kmax; ++i) {
    const double x = static_cast<double>(i) * spacing;
    if (std::abs(x) < half_width) xs.push_back(x);
  }
  MatrixXd pts(2, static_cast<Index>(xs.size() * merged.size()));
  VectorXd w(pts.cols());
  Index col = 0;
  for (const Row& r : merged)
    for (double x : xs) {
      pts(0, col) = x;
      pts(1, col) = r.offset;
      w[col++] = spacing * r.coefficient;
    }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

std::vector<KochStage> koch_variant(int stages, int samples_per_segment) {
  if (stages < 1) throw ValidationError("koch_variant: stages must be at least 1");
  if (samples_per_segment < 1) throw ValidationError("koch_variant: samples_per_segment must be positive");
  if (stages > 10) throw ValidationError("koch_variant: more than 10 stages is not supported");
  std::vector<KochStage> out;
  MatrixXd v(2, 2);
  v << 0.0, 1.0, 0.0, 0.0;
  for (int k = 1; k <= stages; ++k) {
    const double theta = 1.0 / std::sqrt(static_cast<double>(k));
    const Index segs = v.cols() - 1;
    MatrixXd next(2, 4 * segs + 1);
    for (Index i = 0; i < segs; ++i) {
      const Eigen::Vector2d p = v.col(i), q = v.col(i + 1);
      const Eigen::Vector2d dir = q - p;
      const double ell = dir.norm();
      const double s = ell / (2.0 + 2.0 * std::cos(theta));
      const Eigen::Vector2d u = dir / ell;
      const Eigen::Vector2d nrm(-u.y(), u.x());
      const Eigen::Vector2d a = p + s * u;
      const Eigen::Vector2d apex = a + s * (std::cos(theta) * u + std::sin(theta) * nrm);
      const Eigen::Vector2d c = q - s * u;
      next.col(4 * i) = p;
      next.col(4 * i + 1) = a;
      next.col(4 * i + 2) = apex;
      next.col(4 * i + 3) = c;
    }
    next.col(4 * segs) = v.col(segs);
    v = std::move(next);

    KochStage st;
    st.stage = k;
    st.vertices = v;
    const Index n_seg = v.cols() - 1;
    for (Index i = 0; i < n_seg; ++i) st.length += (v.col(i + 1) - v.col(i)).norm();
    MatrixXd pts(2, n_seg * samples_per_segment);
    VectorXd w(pts.cols());
    Index col = 0;
    for (Index i = 0; i < n_seg; ++i) {
      const double seg = (v.col(i + 1) - v.col(i)).norm();
      for (int j = 0; j < samples_per_segment; ++j, ++col) {
        const double t = (j + 0.5) / samples_per_segment;
        pts.col(col) = (1.0 - t) * v.col(i) + t * v.col(i + 1);
        w[col] = seg / samples_per_segment / st.length;
      }
    }
    st.measure = DiscreteMeasure(std::move(pts), std::move(w));
    out.push_back(std::move(st));
  }
  return out;
}

DiscreteMeasure koch_local_sample(const KochStage& stage, const Ball& region, double spacing) {
  if (!(spacing > 0.0)) throw ValidationError("koch_local_sample: spacing must be positive");
  if (region.center.size() != 2) throw ValidationError("koch_local_sample: region must lie in the plane");
  const MatrixXd& v = stage.vertices;
  const Index segs = v.cols() - 1;
  const double count = std::max(1.0, std::ceil(stage.length / spacing));
  if (count > 1e12) throw ValidationError("koch_local_sample: spacing too small for the curve");
  const double step = stage.length / count;
  std::vector<Eigen::Vector2d> kept;
  double start = 0.0;  // arclength at the segment's first vertex
  for (Index i = 0; i < segs; ++i) {
    const Eigen::Vector2d p = v.col(i), q = v.col(i + 1);
    const double len = (q - p).norm();
    const double end = start + len;
    // skip segments that miss the region
    const Eigen::Vector2d c = region.center;
    const double t = len > 0.0 ? std::clamp((c - p).dot(q - p) / (len * len), 0.0, 1.0) : 0.0;
    if ((p + t * (q - p) - c).norm() < region.radius) {
      // sample indices j with (j + 1/2) step in [start, end)
      const double first = std::ceil(start / step - 0.5), last = std::ceil(end / step - 0.5);
      for (double j = std::max(first, 0.0); j < std::min(last, count); j += 1.0) {
        const double u = ((j + 0.5) * step - start) / len;
        const Eigen::Vector2d pt = p + u * (q - p);
        if ((pt - c).norm() < region.radius) kept.push_back(pt);
      }
    }
    start = end;
  }
  MatrixXd pts(2, static_cast<Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) pts.col(static_cast<Index>(i)) = kept[i];
  return DiscreteMeasure(std::move(pts), VectorXd::Constant(pts.cols(), 1.0 / count));
}

DiscreteMeasure lipschitz_graph(double slope, int n, int d, int atoms, std::uint64_t seed) {
  if (!(slope >= 0.0) || !std::isfinite(slope)) throw ValidationError("lipschitz_graph: slope must be finite and >= 0");
  if (d < 1 || d >= n) throw ValidationError("lipschitz_graph: need 0 < d < n");
  if (atoms < 1) throw ValidationError("lipschitz_graph: atoms must be positive");
  constexpr double half = 2.0;
  constexpr int pieces = 16;
  const int k = n - d;
  const double per_piece = slope / std::sqrt(static_cast<double>(d * k));
  // slopes(j, i, piece): derivative of output j along input i on that piece.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> slopes(static_cast<std::size_t>(k * d * pieces));
  for (double& s : slopes) s = per_piece * U(rng);
  auto slope_at = [&](int j, int i, int piece) { return slopes[static_cast<std::size_t>((j * d + i) * pieces + piece)]; };
  const double piece_width = 2.0 * half / pieces;
  // Value of the 1-D profile g_{j,i} at u, integrating from -half.
  auto profile = [&](int j, int i, double u, double* derivative) {
    double value = 0.0;
    double x = -half;
    for (int p = 0; p < pieces; ++p) {
      const double end = x + piece_width;
      if (u <= end || p == pieces - 1) {
        value += slope_at(j, i, p) * (u - x);
        if (derivative) *derivative = slope_at(j, i, p);
        return value;
      }
      value += slope_at(j, i, p) * piece_width;
      x = end;
    }
    return value;
  };

  const int m = std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(atoms), 1.0 / d))));
  const double cell = 2.0 * half / m;
  Index total = 1;
  for (int i = 0; i < d; ++i) total *= m;
  MatrixXd pts(n, total);
  VectorXd w(total);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (Index c = 0; c < total; ++c) {
    VectorXd u(d);
    for (int i = 0; i < d; ++i) u[i] = -half + (idx[static_cast<std::size_t>(i)] + 0.5) * cell;
    MatrixXd jac = MatrixXd::Zero(k, d);
    VectorXd f = VectorXd::Zero(k);
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < d; ++i) {
        double g = 0.0;
        f[j] += profile(j, i, u[i], &g);
        jac(j, i) = g;
      }
    pts.col(c).head(d) = u;
    pts.col(c).tail(k) = f;
    const MatrixXd gram = MatrixXd::Identity(d, d) + jac.transpose() * jac;
    w[c] = std::pow(cell, d) * std::sqrt(gram.determinant());
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < m) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

DiscreteMeasure flat(int n, int d, int atoms_per_side, double half_width) {
  if (d < 1 || d > n) throw ValidationError("flat: need 0 < d <= n");
  if (atoms_per_side < 1) throw ValidationError("flat: atoms_per_side must be positive");
  if (!(half_width > 0.0)) throw ValidationError("flat: half_width must be positive");
  const double cell = 2.0 * half_width / atoms_per_side;
  Index total = 1;
  for (int i = 0; i < d; ++i) total *= atoms_per_side;
  MatrixXd pts = MatrixXd::Zero(n, total);
  VectorXd w = VectorXd::Constant(total, std::pow(cell, d));
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (Index c = 0; c < total; ++c) {
    for (int i = 0; i < d; ++i) pts(i, c) = -half_width + (idx[static_cast<std::size_t>(i)] + 0.5) * cell;
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < atoms_per_side) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace flatness
