#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "flatness/measure_io.hpp"

using namespace flatness;
namespace fs = std::filesystem;

namespace {

DiscreteMeasure random_measure(std::uint64_t seed, int n, int k) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1e3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd p(n, k);
  VectorXd w(k);
  for (int i = 0; i < k; ++i) {
    for (int r = 0; r < n; ++r) p(r, i) = g(rng) * std::pow(10.0, -20.0 * u(rng));
    w[i] = u(rng) / 3.0;
  }
  return DiscreteMeasure(p, w);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "flatness_io_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, 4.9e-324, 1.7976931348623157e308, -2.5e-21})
    CHECK(io::parse_double(io::format_double(v)) == v);
  CHECK(io::parse_double(" +1.5\r") == 1.5);
  CHECK_THROWS_AS(io::parse_double("nan"), ValidationError);
  CHECK_THROWS_AS(io::parse_double("inf"), ValidationError);
  CHECK_THROWS_AS(io::parse_double("1.5x"), ValidationError);
}

TEST_CASE("measure JSON and CSV round trips are exact") {
  for (int n : {1, 2, 3}) {
    const DiscreteMeasure mu = random_measure(static_cast<std::uint64_t>(n), n, 25);
    const DiscreteMeasure back = io::measure_from_json(io::json::parse(io::measure_to_json(mu).dump()));
    CHECK(back.points() == mu.points());
    CHECK(back.weights() == mu.weights());

    std::stringstream ss;
    io::write_measure_csv(ss, mu);
    const DiscreteMeasure csv = io::read_measure_csv(ss);
    CHECK(csv.points() == mu.points());
    CHECK(csv.weights() == mu.weights());

    for (const char* ext : {".json", ".csv"}) {
      const fs::path path = scratch("m" + std::to_string(n) + ext);
      io::write_measure(path.string(), mu);
      const DiscreteMeasure file = io::read_measure(path.string());
      CHECK(file.points() == mu.points());
      CHECK(file.weights() == mu.weights());
    }
  }
  const DiscreteMeasure empty(3);
  CHECK(io::measure_from_json(io::measure_to_json(empty)).ambient_dim() == 3);
}

TEST_CASE("malformed measures are rejected") {
  using io::json;
  CHECK_THROWS_AS(io::measure_from_json(json::parse(R"({"ambient_dim":2,"points":[[0,0]]})")), ValidationError);
  CHECK_THROWS_AS(io::measure_from_json(json::parse(R"({"ambient_dim":2,"points":[[0,0]],"weights":[-1]})")),
                  ValidationError);
  CHECK_THROWS_AS(io::measure_from_json(json::parse(R"({"ambient_dim":2,"points":[[0,0]],"weights":[null]})")),
                  ValidationError);
  CHECK_THROWS_AS(io::measure_from_json(json::parse(R"({"ambient_dim":2,"points":[[0]],"weights":[1]})")),
                  ValidationError);
  CHECK_THROWS_AS(io::measure_from_json(json::parse(R"({"ambient_dim":0,"points":[],"weights":[]})")), ValidationError);
  CHECK_THROWS_AS(io::measure_from_json(json::parse(R"([1,2])")), ValidationError);

  std::stringstream nan_row("x,y,w\n0,0,1\n1,nan,1\n");
  CHECK_THROWS_AS(io::read_measure_csv(nan_row), ValidationError);
  std::stringstream neg("0,0,-1\n");
  CHECK_THROWS_AS(io::read_measure_csv(neg), ValidationError);
  std::stringstream ragged("0,0,1\n0,1\n");
  CHECK_THROWS_AS(io::read_measure_csv(ragged), ValidationError);
  CHECK_THROWS_AS(io::read_measure("/nonexistent/measure.json"), ValidationError);

  const fs::path bad = scratch("bad.json");
  io::write_text(bad.string(), "{not json");
  CHECK_THROWS_AS(io::read_json(bad.string()), ValidationError);
}

TEST_CASE("plane JSON") {
  MatrixXd span(3, 2);
  span << 1, 0, 1, 1, 0, 2;
  const AffinePlane pl((VectorXd(3) << 1, 2, 3).finished(), span);
  const io::json j = io::plane_to_json(pl);
  CHECK(j.contains("base_point"));
  const AffinePlane back = io::plane_from_json(io::json::parse(j.dump()));
  CHECK(back.base_point().isApprox(pl.base_point(), 1e-14));
  CHECK(plane_angle(back, pl) < 1e-7);
  CHECK_THROWS_AS(io::plane_from_json(io::json::parse(R"({"point":[0,0],"basis":[[1,0]]})")), ValidationError);
  CHECK_THROWS_AS(io::plane_from_json(io::json::parse(R"({"base_point":[0,0],"basis":[[1,0,0]]})")), ValidationError);
}

TEST_CASE("point lists") {
  const fs::path js = scratch("pts.json"), bare = scratch("bare.json"), csv = scratch("pts.csv");
  io::write_text(js.string(), R"({"points": [[0, 1], [2, 3]]})");
  io::write_text(bare.string(), "[[0, 1], [2, 3]]");
  io::write_text(csv.string(), "x,y\n0,1\n2,3\n");
  for (const fs::path& p : {js, bare, csv}) {
    const std::vector<Point> pts = io::read_points(p.string());
    REQUIRE(pts.size() == 2);
    CHECK(pts[1][0] == 2.0);
    CHECK(pts[1][1] == 3.0);
  }
}
