#include "flatness/measure_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace flatness::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ValidationError("not a number: '" + std::string(text) + "'");
  if (!std::isfinite(v)) throw ValidationError("non-finite value: '" + std::string(text) + "'");
  return v;
}

json measure_to_json(const DiscreteMeasure& mu) {
  json pts = json::array();
  for (Index i = 0; i < mu.size(); ++i) {
    json p = json::array();
    for (Index r = 0; r < mu.points().rows(); ++r) p.push_back(mu.points()(r, i));
    pts.push_back(std::move(p));
  }
  json w = json::array();
  for (Index i = 0; i < mu.size(); ++i) w.push_back(mu.weight(i));
  return json{{"ambient_dim", mu.ambient_dim()}, {"points", std::move(pts)}, {"weights", std::move(w)}};
}

namespace {

double number(const json& v, const char* what) {
  if (!v.is_number()) throw ValidationError(std::string(what) + " must be numeric");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(std::string(what) + " must be finite");
  return x;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

bool is_blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

DiscreteMeasure measure_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("measure JSON must be an object");
  for (const char* key : {"ambient_dim", "points", "weights"})
    if (!j.contains(key)) throw ValidationError(std::string("measure JSON lacks '") + key + "'");
  if (!j["ambient_dim"].is_number_integer()) throw ValidationError("ambient_dim must be an integer");
  const int n = j["ambient_dim"].get<int>();
  if (n <= 0) throw ValidationError("ambient_dim must be positive");
  const json& pts = j["points"];
  const json& w = j["weights"];
  if (!pts.is_array() || !w.is_array()) throw ValidationError("points and weights must be arrays");
  if (pts.size() != w.size()) throw ValidationError("points and weights differ in length");
  MatrixXd P(n, static_cast<Index>(pts.size()));
  VectorXd W(static_cast<Index>(w.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].is_array() || pts[i].size() != static_cast<std::size_t>(n))
      throw ValidationError("point " + std::to_string(i) + " does not have ambient_dim coordinates");
    for (int r = 0; r < n; ++r) P(r, static_cast<Index>(i)) = number(pts[i][static_cast<std::size_t>(r)], "coordinate");
    const double wi = number(w[i], "weight");
    if (wi < 0.0) throw ValidationError("weight " + std::to_string(i) + " is negative");
    W[static_cast<Index>(i)] = wi;
  }
  return DiscreteMeasure(std::move(P), std::move(W));
}

void write_measure_csv(std::ostream& os, const DiscreteMeasure& mu) {
  for (int r = 0; r < mu.ambient_dim(); ++r) os << 'x' << r << ',';
  os << "weight\n";
  for (Index i = 0; i < mu.size(); ++i) {
    for (int r = 0; r < mu.ambient_dim(); ++r) os << format_double(mu.points()(r, i)) << ',';
    os << format_double(mu.weight(i)) << '\n';
  }
}

DiscreteMeasure read_measure_csv(std::istream& is) {
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  std::size_t width = 0;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto cells = split_row(line);
    if (first) {
      first = false;
      try {
        parse_double(cells.front());
      } catch (const ValidationError&) {
        width = cells.size();
        continue;  // header
      }
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width || width < 2)
      throw ValidationError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " columns");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    if (row.back() < 0.0) throw ValidationError("CSV line " + std::to_string(line_no) + ": negative weight");
    rows.push_back(std::move(row));
  }
  if (width < 2) throw ValidationError("CSV measure needs coordinates and a weight column");
  const int n = static_cast<int>(width) - 1;
  MatrixXd P(n, static_cast<Index>(rows.size()));
  VectorXd W(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int r = 0; r < n; ++r) P(r, static_cast<Index>(i)) = rows[i][static_cast<std::size_t>(r)];
    W[static_cast<Index>(i)] = rows[i].back();
  }
  return DiscreteMeasure(std::move(P), std::move(W));
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

namespace {
bool has_csv_extension(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}
}  // namespace

DiscreteMeasure read_measure(const std::string& path) {
  if (has_csv_extension(path)) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_measure_csv(in);
  }
  return measure_from_json(read_json(path));
}

void write_measure(const std::string& path, const DiscreteMeasure& mu) {
  if (has_csv_extension(path)) {
    std::ostringstream os;
    write_measure_csv(os, mu);
    write_text(path, os.str());
  } else {
    write_text(path, measure_to_json(mu).dump() + "\n");
  }
}

json plane_to_json(const AffinePlane& plane) {
  json basis = json::array();
  for (Index c = 0; c < plane.basis().cols(); ++c) {
    json v = json::array();
    for (Index r = 0; r < plane.basis().rows(); ++r) v.push_back(plane.basis()(r, c));
    basis.push_back(std::move(v));
  }
  // Canonical base point: the projection of the origin.
  const VectorXd foot = plane.project(VectorXd::Zero(plane.ambient_dim()));
  json point = json::array();
  for (Index r = 0; r < foot.size(); ++r) point.push_back(foot[r]);
  return json{{"base_point", std::move(point)}, {"basis", std::move(basis)}};
}

AffinePlane plane_from_json(const json& j) {
  if (!j.is_object() || !j.contains("base_point") || !j.contains("basis"))
    throw ValidationError("plane JSON needs 'base_point' and 'basis'");
  const json& p = j["base_point"];
  const json& b = j["basis"];
  if (!p.is_array() || p.empty() || !b.is_array() || b.empty()) throw ValidationError("plane JSON: empty point or basis");
  const Index n = static_cast<Index>(p.size());
  VectorXd point(n);
  for (Index r = 0; r < n; ++r) point[r] = number(p[static_cast<std::size_t>(r)], "plane coordinate");
  MatrixXd span(n, static_cast<Index>(b.size()));
  for (std::size_t c = 0; c < b.size(); ++c) {
    if (!b[c].is_array() || b[c].size() != p.size()) throw ValidationError("plane JSON: basis vector length differs");
    for (Index r = 0; r < n; ++r) span(r, static_cast<Index>(c)) = number(b[c][static_cast<std::size_t>(r)], "basis entry");
  }
  return AffinePlane(point, span);
}

json witness_to_json(const BLResult& r) {
  json atoms = json::array();
  for (Index i = 0; i < r.support.cols(); ++i) {
    json p = json::array();
    for (Index k = 0; k < r.support.rows(); ++k) p.push_back(r.support(k, i));
    atoms.push_back(json{{"point", std::move(p)}, {"net_mass", r.net_mass[i]}, {"potential", r.witness[i]}});
  }
  return json{{"value", r.value},
              {"status", std::string(to_string(r.status))},
              {"aggregation_cell", r.aggregation_cell},
              {"atoms", std::move(atoms)}};
}

std::vector<Point> read_points(const std::string& path) {
  std::vector<Point> out;
  if (has_csv_extension(path)) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (is_blank(line)) continue;
      const auto cells = split_row(line);
      if (first) {
        first = false;
        try {
          parse_double(cells.front());
        } catch (const ValidationError&) {
          continue;
        }
      }
      Point p(static_cast<Index>(cells.size()));
      for (std::size_t i = 0; i < cells.size(); ++i) p[static_cast<Index>(i)] = parse_double(cells[i]);
      out.push_back(std::move(p));
    }
    return out;
  }
  const json j = read_json(path);
  const json& arr = j.is_object() ? j.at("points") : j;
  if (!arr.is_array()) throw ValidationError(path + ": points must be an array");
  for (const json& p : arr) {
    if (!p.is_array() || p.empty()) throw ValidationError(path + ": each point must be a nonempty array");
    Point x(static_cast<Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) x[static_cast<Index>(i)] = number(p[i], "point coordinate");
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace flatness::io
