#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "flatness/flat_distance.hpp"
#include "flatness/geometry.hpp"
#include "flatness/measure.hpp"

namespace flatness::io {

using nlohmann::json;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// {"ambient_dim": n, "points": [[..], ..], "weights": [..]}
json measure_to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const json& j);

/// One row per atom: n coordinates then the weight. A non-numeric first row is a header.
void write_measure_csv(std::ostream& os, const DiscreteMeasure& mu);
DiscreteMeasure read_measure_csv(std::istream& is);

/// Dispatch on extension: .csv is CSV, everything else JSON.
DiscreteMeasure read_measure(const std::string& path);
void write_measure(const std::string& path, const DiscreteMeasure& mu);

/// {"base_point": [..], "basis": [[..] per direction]}
json plane_to_json(const AffinePlane& plane);
AffinePlane plane_from_json(const json& j);

/// Support, net mass and potential of a bounded-Lipschitz solve, for debugging.
json witness_to_json(const BLResult& r);

/// Points as JSON {"points": [[..], ..]} or a bare array, or CSV rows of coordinates.
std::vector<Point> read_points(const std::string& path);

json read_json(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace flatness::io
