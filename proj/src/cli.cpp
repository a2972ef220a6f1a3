#include "flatness/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "flatness/generators.hpp"
#include "flatness/measure_io.hpp"
#include "flatness/multiscale.hpp"
#include "flatness/parallel.hpp"

namespace flatness::cli {

namespace {

using io::format_double;
using io::json;
namespace fs = std::filesystem;

struct GridOptions {
  double rmin = 0.0;  // 0 selects the default floor
  double rmax = 1.0;
  int per_octave = 2;
};

struct SampleOptions {
  std::string measure;
  std::string points;
  int support_sample = 0;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json config = json::object();
};

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
  return s;
}

void write_manifest(const std::string& path, const Manifest& m, double seconds) {
  json j{{"command", m.command},
         {"argv", m.argv},
         {"inputs", m.inputs},
         {"outputs", m.outputs},
         {"config", m.config},
         {"version", kVersion},
         {"wall_time_seconds", seconds}};
  io::write_text(path, j.dump(2) + "\n");
}

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string sibling(const std::string& path, const std::string& suffix) {
  const std::string ext = ".csv";
  if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
    return path.substr(0, path.size() - ext.size()) + suffix;
  return path + suffix;
}

StopThresholds parse_thresholds(const std::string& text) {
  StopThresholds t;
  if (text.empty()) return t;
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) v.push_back(io::parse_double(cell));
  if (v.size() != 4) throw ValidationError("--thresholds expects eps,tau,A,C1");
  t.epsilon = v[0];
  t.tau = v[1];
  t.A = v[2];
  t.C1 = v[3];
  t.validate();
  return t;
}

json thresholds_json(const StopThresholds& t) {
  return json{{"epsilon", t.epsilon}, {"tau", t.tau}, {"A", t.A}, {"C1", t.C1}};
}

std::vector<Point> select_points(const DiscreteMeasure& mu, const SampleOptions& s) {
  if (!s.points.empty()) {
    std::vector<Point> pts = io::read_points(s.points);
    for (const Point& p : pts)
      if (p.size() != mu.ambient_dim()) throw ValidationError("points file: dimension differs from measure");
    if (pts.empty()) throw ValidationError("points file is empty");
    return pts;
  }
  if (s.support_sample <= 0) throw ValidationError("give --points or --support-sample");
  std::vector<Index> idx;
  for (Index i = 0; i < mu.size(); ++i)
    if (mu.weight(i) > 0.0) idx.push_back(i);
  if (idx.empty()) throw ValidationError("measure has no atoms of positive weight");
  // Partial Fisher-Yates with a fixed engine; indices are reported in atom order.
  std::mt19937_64 rng(s.seed);
  const std::size_t m = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(s.support_sample));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  std::vector<Point> out;
  for (Index i : idx) out.emplace_back(mu.point(i));
  return out;
}

RadiusGrid make_grid(const DiscreteMeasure& mu, const GridOptions& g) {
  RadiusGrid grid;
  grid.r_max = g.rmax;
  grid.per_octave = g.per_octave;
  grid.r_min = g.rmin > 0.0 ? g.rmin : default_r_min(mu);
  if (!(grid.r_min < grid.r_max)) grid.r_min = grid.r_max / 2.0;
  grid.validate();
  return grid;
}

json grid_json(const RadiusGrid& g) {
  return json{{"r_min", g.r_min}, {"r_max", g.r_max}, {"per_octave", g.per_octave}};
}

json fit_json(const FitConfig& c) {
  return json{{"quad", c.quad},
              {"restarts", c.restarts},
              {"agreement_tol", c.agreement_tol},
              {"c_tol", c.c_tol},
              {"plane_iters", c.plane_iters}};
}

void add_sample_options(CLI::App* app, SampleOptions& s) {
  app->add_option("--measure", s.measure, "measure file (.json or .csv)")->required();
  app->add_option("--points", s.points, "evaluation points (.json or .csv)");
  app->add_option("--support-sample", s.support_sample, "sample this many support atoms instead");
  app->add_option("--seed", s.seed, "seed for support sampling");
}

void add_grid_options(CLI::App* app, GridOptions& g) {
  app->add_option("--rmin", g.rmin, "smallest radius (default: 8x median neighbour spacing)");
  app->add_option("--rmax", g.rmax, "largest radius");
  app->add_option("--per-octave", g.per_octave, "radii per halving");
}

void add_fit_options(CLI::App* app, FitConfig& c) {
  app->add_option("--quad", c.quad, "flat-measure lattice resolution r/quad");
  app->add_option("--restarts", c.restarts, "plane-search starting points");
  app->add_option("--agreement-tol", c.agreement_tol, "relative restart spread before flagging");
  app->add_option("--plane-iters", c.plane_iters, "evaluations per restart");
}

void append_point(std::string& row, const Point& p) {
  for (Index i = 0; i < p.size(); ++i) row += ',' + format_double(p[i]);
}

std::string coordinate_header(int n) {
  std::string h;
  for (int i = 0; i < n; ++i) h += ",x" + std::to_string(i);
  return h;
}

// ---- commands -------------------------------------------------------------------

int cmd_generate_counterexample(int levels, double window, double samples, double center_x,
                                const std::vector<double>& a, const std::vector<double>& h, const std::string& dir,
                                Manifest& m) {
  CounterexampleSpec spec;
  if (a.empty() && h.empty()) {
    spec = default_parameters(levels);
  } else {
    spec.levels = levels;
    spec.a_seq = a;
    spec.h_seq = h;
  }
  spec.window = window;
  spec.samples_per_unit = samples;
  spec.center_x = center_x;
  const std::vector<LevelMeasure> mus = counterexample(spec);
  fs::create_directories(dir);
  json levels_meta = json::array();
  for (const LevelMeasure& lv : mus) {
    const std::string path = (fs::path(dir) / ("mu_" + std::to_string(lv.level) + ".json")).string();
    io::write_measure(path, lv.measure);
    m.outputs.push_back(path);
    json lines = json::array();
    for (const auto& l : lv.lines)
      lines.push_back(json{{"height", l.height}, {"coefficient", l.coefficient}, {"mask", l.mask}});
    levels_meta.push_back(json{{"level", lv.level},
                               {"file", path},
                               {"min_gap", lv.min_gap},
                               {"max_coefficient", lv.max_coefficient()},
                               {"total_mass", lv.measure.total_mass()},
                               {"lines", std::move(lines)}});
  }
  json spec_json{{"levels", spec.levels},       {"a_seq", spec.a_seq},   {"h_seq", spec.h_seq},
                 {"window", spec.window},       {"samples_per_unit", spec.samples_per_unit},
                 {"center_x", spec.center_x}};
  const std::string meta = (fs::path(dir) / "counterexample_meta.json").string();
  io::write_text(meta, json{{"spec", spec_json}, {"levels", std::move(levels_meta)}}.dump(2) + "\n");
  m.outputs.push_back(meta);
  m.config = json{{"kind", "counterexample"}, {"spec", spec_json}};
  return kExitOk;
}

int cmd_generate_koch(int stages, int samples, const std::string& dir, Manifest& m) {
  const auto st = koch_variant(stages, samples);
  fs::create_directories(dir);
  json meta = json::array();
  for (const KochStage& s : st) {
    const std::string path = (fs::path(dir) / ("koch_" + std::to_string(s.stage) + ".json")).string();
    io::write_measure(path, s.measure);
    m.outputs.push_back(path);
    json verts = json::array();
    for (Index i = 0; i < s.vertices.cols(); ++i) verts.push_back({s.vertices(0, i), s.vertices(1, i)});
    meta.push_back(json{{"stage", s.stage}, {"file", path}, {"length", s.length}, {"vertices", std::move(verts)}});
  }
  const std::string meta_path = (fs::path(dir) / "koch_meta.json").string();
  io::write_text(meta_path, json{{"stages", std::move(meta)}}.dump(2) + "\n");
  m.outputs.push_back(meta_path);
  m.config = json{{"kind", "koch"}, {"stages", stages}, {"samples_per_segment", samples}};
  return kExitOk;
}

int cmd_generate_single(const std::string& kind, const DiscreteMeasure& mu, const json& params, const std::string& dir,
                        Manifest& m) {
  fs::create_directories(dir);
  const std::string path = (fs::path(dir) / (kind + ".json")).string();
  io::write_measure(path, mu);
  std::vector<int> mask(static_cast<std::size_t>(mu.size()), 1);
  const std::string meta = (fs::path(dir) / (kind + "_meta.json")).string();
  io::write_text(meta, json{{"kind", kind}, {"params", params}, {"atoms", mu.size()}, {"good_mask", mask}}.dump(2) + "\n");
  m.outputs.push_back(path);
  m.outputs.push_back(meta);
  m.config = json{{"kind", kind}, {"params", params}};
  return kExitOk;
}

int cmd_alpha_scan(const SampleOptions& s, const GridOptions& g, int dim, const FitConfig& cfg, int threads,
                   const std::string& out_path, Manifest& m) {
  const DiscreteMeasure mu = io::read_measure(s.measure);
  const std::vector<Point> pts = select_points(mu, s);
  const RadiusGrid grid = make_grid(mu, g);
  cfg.validate();
  std::vector<MultiscaleProfile> profiles(pts.size());
  parallel_for(pts.size(), resolve_threads(threads),
               [&](std::size_t i) { profiles[i] = profile(mu, pts[i], grid, dim, cfg); });

  const int n = mu.ambient_dim();
  std::string rows = "point" + coordinate_header(n) + ",radius,alpha,beta2,theta,doubling,c_best,zero_mass,disagreement\n";
  std::string jones = "point" + coordinate_header(n) + ",jones_alpha,jones_beta,zero_mass_scales,disagreement,outside_hull\n";
  bool degraded = false;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const MultiscaleProfile& p = profiles[i];
    for (std::size_t k = 0; k < p.radii.size(); ++k) {
      std::string row = std::to_string(i);
      append_point(row, p.point);
      row += ',' + format_double(p.radii[k]) + ',' + format_double(p.alphas[k]) + ',' + format_double(p.betas[k]) + ',' +
             format_double(p.thetas[k]) + ',' + format_double(p.doubling[k]) + ',' + format_double(p.c_best[k]) + ',' +
             std::to_string(int(p.zero_mass[k])) + ',' + std::to_string(int(p.disagreement[k]));
      rows += row + '\n';
    }
    std::string row = std::to_string(i);
    append_point(row, p.point);
    row += ',' + format_double(p.jones_alpha) + ',' + format_double(p.jones_beta) + ',' + std::to_string(p.zero_mass_scales) +
           ',' + std::to_string(int(p.any_disagreement)) + ',' + std::to_string(int(p.outside_hull));
    jones += row + '\n';
    degraded = degraded || p.any_disagreement;
  }
  const std::string jones_path = sibling(out_path, ".jones.csv");
  io::write_text(out_path, rows);
  io::write_text(jones_path, jones);
  m.inputs.push_back(s.measure);
  if (!s.points.empty()) m.inputs.push_back(s.points);
  m.outputs = {out_path, jones_path};
  m.config = json{{"dim", dim}, {"grid", grid_json(grid)}, {"fit", fit_json(cfg)}, {"seed", s.seed},
                  {"support_sample", s.support_sample}, {"threads", threads}};
  return degraded ? kExitDegraded : kExitOk;
}

int cmd_classify(const SampleOptions& s, const GridOptions& g, int dim, const FitConfig& cfg, int threads,
                 const std::string& thresholds_text, double jmax, double mmax, const std::string& out_path, Manifest& m) {
  const DiscreteMeasure mu = io::read_measure(s.measure);
  const std::vector<Point> pts = select_points(mu, s);
  const RadiusGrid grid = make_grid(mu, g);
  const StopThresholds st = parse_thresholds(thresholds_text);
  ClassifyThresholds ct;
  ct.jones_max = jmax;
  ct.doubling_max = mmax;
  ct.tau = st.tau;
  const ClassifySummary sum = classify(mu, pts, grid, dim, ct, cfg, resolve_threads(threads));
  json points = json::array();
  bool degraded = false;
  for (const PointVerdict& v : sum.points) {
    points.push_back(json{{"point", std::vector<double>(v.point.data(), v.point.data() + v.point.size())},
                          {"jones_alpha", v.jones_alpha},
                          {"max_doubling", v.max_doubling},
                          {"theta_min_scale", v.theta_min_scale},
                          {"jones_ok", v.jones_ok},
                          {"doubling_ok", v.doubling_ok},
                          {"low_density", v.low_density},
                          {"insufficient", v.insufficient},
                          {"pass", v.pass},
                          {"disagreement", v.disagreement}});
    degraded = degraded || v.disagreement;
  }
  json report{{"caveat", sum.caveat},
              {"verdict", sum.verdict},
              {"pass_fraction", sum.pass_fraction},
              {"failures", json{{"jones", sum.jones_failures},
                                {"doubling", sum.doubling_failures},
                                {"low_density", sum.low_density_failures},
                                {"insufficient", sum.insufficient}}},
              {"dominant_failure", sum.dominant_failure},
              {"thresholds", json{{"jones_max", ct.jones_max}, {"doubling_max", ct.doubling_max}, {"tau", ct.tau},
                                  {"stopping", thresholds_json(st)}}},
              {"grid", grid_json(grid)},
              {"points", std::move(points)}};
  io::write_text(out_path, report.dump(2) + "\n");
  m.inputs.push_back(s.measure);
  if (!s.points.empty()) m.inputs.push_back(s.points);
  m.outputs = {out_path};
  m.config = json{{"dim", dim}, {"grid", grid_json(grid)}, {"fit", fit_json(cfg)}, {"seed", s.seed},
                  {"support_sample", s.support_sample}, {"thresholds", report["thresholds"]}, {"threads", threads}};
  return degraded ? kExitDegraded : kExitOk;
}

int cmd_plotdata(const std::string& scan, const std::string& metric, const std::string& out_path, Manifest& m) {
  std::ifstream in(scan);
  if (!in) throw ValidationError("cannot open " + scan);
  std::string header;
  if (!std::getline(in, header)) throw ValidationError("scan file is empty");
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  auto find = [&](const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw ValidationError("scan schema mismatch: missing column '" + name + "'");
    return static_cast<std::size_t>(it - cols.begin());
  };
  const std::size_t point_col = find("point"), radius_col = find("radius"), value_col = find(metric);
  std::vector<std::size_t> coord_cols;
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (cols[i].size() > 1 && cols[i][0] == 'x' && std::all_of(cols[i].begin() + 1, cols[i].end(), ::isdigit))
      coord_cols.push_back(i);
  std::string out = "point";
  for (std::size_t c : coord_cols) out += ',' + cols[c];
  out += ",log_r," + metric + '\n';
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() != cols.size())
      throw ValidationError("scan schema mismatch at line " + std::to_string(line_no));
    std::string row = cells[point_col];
    for (std::size_t k : coord_cols) row += ',' + cells[k];
    row += ',' + format_double(std::log(io::parse_double(cells[radius_col]))) + ',' + cells[value_col];
    out += row + '\n';
  }
  io::write_text(out_path, out);
  m.inputs.push_back(scan);
  m.outputs = {out_path};
  m.config = json{{"metric", metric}};
  return kExitOk;
}

int cmd_stopping(const SampleOptions& s, const GridOptions& g, int dim, const FitConfig& cfg, int threads,
                 const std::string& thresholds_text, const std::string& plane_path, const std::string& mask_path,
                 const std::string& out_path, Manifest& m) {
  const DiscreteMeasure mu = io::read_measure(s.measure);
  const std::vector<Point> pts = select_points(mu, s);
  const RadiusGrid grid = make_grid(mu, g);
  const StopThresholds st = parse_thresholds(thresholds_text);
  const AffinePlane plane = io::plane_from_json(io::read_json(plane_path));
  std::vector<char> mask;
  if (!mask_path.empty()) {
    const json j = io::read_json(mask_path);
    const json& arr = j.is_object() ? j.at("good_mask") : j;
    if (!arr.is_array()) throw ValidationError("good mask must be an array");
    for (const json& v : arr) mask.push_back(v.is_boolean() ? char(v.get<bool>()) : char(v.get<int>() != 0));
    m.inputs.push_back(mask_path);
  }
  const auto diags = stopping_time(mu, pts, grid, dim, st, plane, mask, cfg, resolve_threads(threads));
  json arr = json::array();
  for (const StopDiagnosis& d : diags) {
    json flags = json::array();
    for (std::size_t i = 0; i < d.radii.size(); ++i) {
      const ScaleFlags& f = d.flags[i];
      flags.push_back(json{{"radius", d.radii[i]}, {"ND", f.nd}, {"LD", f.ld}, {"HD", f.hd}, {"BA", f.ba}});
    }
    arr.push_back(json{{"point", std::vector<double>(d.point.data(), d.point.data() + d.point.size())},
                       {"delta", d.delta},
                       {"d_reg", d.d_reg},
                       {"resolution", d.resolution},
                       {"flags", std::move(flags)}});
  }
  json report{{"thresholds", thresholds_json(st)}, {"grid", grid_json(grid)}, {"points", std::move(arr)}};
  io::write_text(out_path, report.dump(2) + "\n");
  m.inputs.push_back(s.measure);
  m.inputs.push_back(plane_path);
  if (!s.points.empty()) m.inputs.push_back(s.points);
  m.outputs = {out_path};
  m.config = json{{"dim", dim}, {"grid", grid_json(grid)}, {"fit", fit_json(cfg)}, {"seed", s.seed},
                  {"support_sample", s.support_sample}, {"thresholds", thresholds_json(st)}, {"threads", threads}};
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiscale flatness coefficients of discrete measures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // generate
  auto* gen = app.add_subcommand("generate", "construct example measures");
  gen->require_subcommand(1);
  std::string gen_out = "generated";
  int levels = 3;
  double window = 8.0, samples_per_unit = 64.0, center_x = 0.0;
  std::vector<double> a_seq, h_seq;
  auto* gen_ce = gen->add_subcommand("counterexample", "line-splitting measures mu_0..mu_K");
  gen_ce->add_option("--levels", levels, "number of splitting levels K");
  gen_ce->add_option("--window", window, "half-width of the line truncation");
  gen_ce->add_option("--samples-per-unit", samples_per_unit, "atoms per unit length");
  gen_ce->add_option("--center-x", center_x, "window center");
  gen_ce->add_option("--a-seq", a_seq, "custom a_1..a_K (default 1/(2j+2))")->delimiter(',');
  gen_ce->add_option("--h-seq", h_seq, "custom h_1..h_K")->delimiter(',');
  gen_ce->add_option("--out", gen_out, "output directory");
  int stages = 3, samples_per_segment = 4;
  auto* gen_koch = gen->add_subcommand("koch", "snowflake-type stages");
  gen_koch->add_option("--stages", stages, "number of stages");
  gen_koch->add_option("--samples-per-segment", samples_per_segment, "atoms per segment");
  gen_koch->add_option("--out", gen_out, "output directory");
  double slope = 0.5;
  int gn = 2, gd = 1, atoms = 512;
  std::uint64_t gseed = 0;
  auto* gen_graph = gen->add_subcommand("graph", "Lipschitz graph");
  gen_graph->add_option("--slope", slope, "Lipschitz constant");
  gen_graph->add_option("--n", gn, "ambient dimension");
  gen_graph->add_option("--d", gd, "graph dimension");
  gen_graph->add_option("--atoms", atoms, "atom count");
  gen_graph->add_option("--seed", gseed, "seed");
  gen_graph->add_option("--out", gen_out, "output directory");
  int per_side = 256;
  double half_width = 2.0;
  auto* gen_flat = gen->add_subcommand("flat", "flat reference measure");
  gen_flat->add_option("--n", gn, "ambient dimension");
  gen_flat->add_option("--d", gd, "plane dimension");
  gen_flat->add_option("--atoms-per-side", per_side, "atoms per side");
  gen_flat->add_option("--half-width", half_width, "half-width of the square");
  gen_flat->add_option("--out", gen_out, "output directory");

  // shared analysis options
  SampleOptions sample;
  GridOptions grid;
  FitConfig cfg;
  int dim = 1, threads = 1;
  std::string out_path, thresholds_text;
  double jmax = ClassifyThresholds{}.jones_max, mmax = ClassifyThresholds{}.doubling_max;

  auto* scan = app.add_subcommand("alpha-scan", "alpha, beta and density over a radius grid");
  auto* cls = app.add_subcommand("classify", "finite-scale rectifiability criteria report");
  auto* stop = app.add_subcommand("stopping-time", "ND/LD/HD/BA flags, delta and d");
  for (auto* sc : {scan, cls, stop}) {
    add_sample_options(sc, sample);
    add_grid_options(sc, grid);
    add_fit_options(sc, cfg);
    sc->add_option("--dim,-d", dim, "plane dimension d");
    sc->add_option("--threads", threads, "worker threads (0: all cores)");
    sc->add_option("--out", out_path, "output file")->required();
  }
  for (auto* sc : {cls, stop}) sc->add_option("--thresholds", thresholds_text, "eps,tau,A,C1");
  cls->add_option("--jmax", jmax, "largest admissible alpha square function");
  cls->add_option("--mmax", mmax, "largest admissible doubling ratio");
  std::string plane_path, mask_path;
  stop->add_option("--reference-plane", plane_path, "plane JSON")->required();
  stop->add_option("--good-mask", mask_path, "JSON array flagging the good atoms");

  std::string scan_path, metric = "alpha";
  auto* plot = app.add_subcommand("plotdata", "long-form (x, log r, value) rows from a scan");
  plot->add_option("--scan", scan_path, "alpha-scan CSV")->required();
  plot->add_option("--metric", metric, "alpha, beta2, theta, doubling or c_best");
  plot->add_option("--out", out_path, "output file")->required();

  std::string manifest_path;
  auto* rerun = app.add_subcommand("rerun", "repeat the command recorded in a manifest");
  rerun->add_option("--manifest", manifest_path, "manifest JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  Manifest m;
  m.argv = args;
  const auto start = std::chrono::steady_clock::now();
  int code = kExitOk;
  std::string manifest_file;
  try {
    if (rerun->parsed()) {
      const json j = io::read_json(manifest_path);
      if (!j.contains("argv") || !j["argv"].is_array()) throw ValidationError("manifest lacks argv");
      const auto argv = j["argv"].get<std::vector<std::string>>();
      if (!argv.empty() && argv.front() == "rerun") throw ValidationError("manifest records a rerun");
      return run(argv, out, err);
    }
    if (gen->parsed()) {
      m.command = "generate";
      if (gen_ce->parsed()) code = cmd_generate_counterexample(levels, window, samples_per_unit, center_x, a_seq, h_seq, gen_out, m);
      else if (gen_koch->parsed()) code = cmd_generate_koch(stages, samples_per_segment, gen_out, m);
      else if (gen_graph->parsed())
        code = cmd_generate_single("graph", lipschitz_graph(slope, gn, gd, atoms, gseed),
                                   json{{"slope", slope}, {"n", gn}, {"d", gd}, {"atoms", atoms}, {"seed", gseed}}, gen_out, m);
      else
        code = cmd_generate_single("flat", flat(gn, gd, per_side, half_width),
                                   json{{"n", gn}, {"d", gd}, {"atoms_per_side", per_side}, {"half_width", half_width}},
                                   gen_out, m);
      manifest_file = (fs::path(gen_out) / "manifest.json").string();
    } else if (scan->parsed()) {
      m.command = "alpha-scan";
      code = cmd_alpha_scan(sample, grid, dim, cfg, threads, out_path, m);
    } else if (cls->parsed()) {
      m.command = "classify";
      code = cmd_classify(sample, grid, dim, cfg, threads, thresholds_text, jmax, mmax, out_path, m);
    } else if (stop->parsed()) {
      m.command = "stopping-time";
      code = cmd_stopping(sample, grid, dim, cfg, threads, thresholds_text, plane_path, mask_path, out_path, m);
    } else if (plot->parsed()) {
      m.command = "plotdata";
      code = cmd_plotdata(scan_path, metric, out_path, m);
    }
    if (manifest_file.empty()) manifest_file = out_path + ".manifest.json";
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(manifest_file, m, seconds);
    out << m.command << ": wrote " << join(m.outputs) << '\n';
    if (code == kExitDegraded) err << "warning: multistart disagreement in at least one fit\n";
    return code;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace flatness::cli
