#pragma once

// Experiment configuration and subcommand dispatch for the gfou tool.
//
// Config files are INI: [domain] and [datum] describe the problem; numeric
// parameters (s, p, alpha, K, resolution, seed, ...) are looked up first in the
// section named after the subcommand, then in [params].

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gfou/comparison.hpp"
#include "gfou/extension.hpp"
#include "gfou/io.hpp"
#include "gfou/rearrangement.hpp"
#include "gfou/regularity.hpp"
#include "gfou/semigroup.hpp"
#include "gfou/spectral.hpp"

namespace gfou::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kViolated = 2,
  kInconclusive = 3,
  kNumericalFailure = 4,
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"solve", "extend", "rearrange", "compare", "regularity", "kernel"};
  return names;
}

struct DatumSpec {
  std::string family = "one";  ///< one | bump | psi | random | step | csv
  double center1 = 0.0, center2 = 0.0, width = 1.0;
  int k = 1;                   ///< psi: mode index
  int modes = 6;               ///< random: number of leading modes
  double threshold = 0.0;      ///< step: indicator of {x1 < threshold}
  std::string path;            ///< csv
};

struct ExperimentConfig {
  std::string subcommand;
  std::string domain_record = "interval,0,2";  ///< see parse_domain_record
  DatumSpec datum;
  double s = 0.5;
  double p = 2.0;
  double alpha = 0.0;
  int K = 20;  ///< 0 keeps the full discrete spectrum
  int resolution = 512;
  std::filesystem::path out = ".";
  std::uint64_t seed = 0;
  // extend
  std::vector<double> y_levels{0.1, 0.5, 1.0};
  // regularity
  int family_size = 30;
  // kernel
  std::string table = "green";  ///< green | mehler
  double x_min = 0.1, x_max = 5.8, t = 1.0;
  int points = 20;

  /// Canonical text of every resolved field; its hash tags emitted tables.
  std::string canonical() const {
    std::ostringstream os;
    os << "subcommand=" << subcommand << ";domain=" << domain_record << ";datum=" << datum.family << ","
       << io::fmt(datum.center1) << "," << io::fmt(datum.center2) << "," << io::fmt(datum.width) << "," << datum.k << ","
       << datum.modes << "," << io::fmt(datum.threshold) << "," << datum.path << ";s=" << io::fmt(s) << ";p=" << io::fmt(p)
       << ";alpha=" << io::fmt(alpha) << ";K=" << K << ";resolution=" << resolution << ";seed=" << seed << ";y=";
    for (double y : y_levels) os << io::fmt(y) << ",";
    os << ";family=" << family_size << ";table=" << table << ";x=" << io::fmt(x_min) << "," << io::fmt(x_max) << ","
       << points << ";t=" << io::fmt(t);
    return os.str();
  }
  std::string hash() const { return io::hex64(io::fnv1a(canonical())); }

  void validate() const {
    if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
      throw ConfigError("unknown subcommand '" + subcommand + "'");
    FractionalParams check(s);
    (void)check;
    if (resolution < 64) throw ConfigError("resolution must be at least 64");
    if (K < 0) throw ConfigError("K must be nonnegative");
    if (!(p >= 1.0)) throw ConfigError("p must be at least 1");
    if (family_size < 1) throw ConfigError("family_size must be positive");
    if (points < 1) throw ConfigError("points must be positive");
    for (double y : y_levels)
      if (!(y > 0.0)) throw ConfigError("y_levels must be positive");
    (void)parse_domain_record(domain_record);
  }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string cell; std::getline(ss, cell, ',');) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("not a number in list: '" + cell + "'");
    }
  }
  return out;
}

/// Staircase mask from rows of 0/1 separated by '/', row j = 0 first.
inline std::string mask_from_rows(const std::string& rows, int nx, int ny) {
  std::string mask;
  std::stringstream ss(rows);
  for (std::string r; std::getline(ss, r, '/');) {
    if (static_cast<int>(r.size()) != nx) throw ConfigError("domain mask row length must equal nx");
    mask += r;
  }
  if (static_cast<int>(mask.size()) != nx * ny) throw ConfigError("domain mask must have ny rows");
  return mask;
}

}  // namespace detail

/// Builds a config from an INI file; `subcommand` selects the parameter section.
inline ExperimentConfig parse_config(std::istream& in, const std::string& subcommand) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  c.subcommand = subcommand;
  auto param = [&](const std::string& key) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(subcommand + "." + key)) return *v;
    if (auto v = tree.get_optional<std::string>("params." + key)) return *v;
    return std::nullopt;
  };
  auto number = [&](const std::string& key, double& dst) {
    if (auto v = param(key)) try {
        dst = std::stod(*v);
      } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' is not a number");
      }
  };
  auto integer = [&](const std::string& key, auto& dst) {
    if (auto v = param(key)) try {
        std::size_t used = 0;
        const long long n = std::stoll(*v, &used);
        if (used != v->size()) throw std::invalid_argument(key);
        dst = static_cast<std::remove_reference_t<decltype(dst)>>(n);
      } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' is not an integer");
      }
  };
  number("s", c.s);
  number("p", c.p);
  number("alpha", c.alpha);
  integer("K", c.K);
  integer("resolution", c.resolution);
  integer("seed", c.seed);
  integer("family_size", c.family_size);
  integer("points", c.points);
  number("x_min", c.x_min);
  number("x_max", c.x_max);
  number("t", c.t);
  if (auto v = param("y_levels")) c.y_levels = detail::parse_list(*v);
  if (auto v = param("table")) c.table = *v;
  if (auto v = param("out")) c.out = *v;

  if (auto d = tree.get_child_optional("domain")) {
    const std::string kind = d->get<std::string>("kind", "interval");
    std::ostringstream rec;
    rec << std::setprecision(17);
    try {
      if (kind == "interval") {
        rec << "interval," << d->get<double>("a") << "," << d->get<double>("b");
      } else if (kind == "half-space") {
        rec << "half-space," << d->get<double>("lambda", 0.0) << "," << d->get<int>("dim", 1);
      } else if (kind == "grid2d") {
        const int nx = d->get<int>("nx"), ny = d->get<int>("ny");
        const std::string rows = d->get<std::string>("mask", "");
        rec << "grid2d," << d->get<double>("x0") << "," << d->get<double>("y0") << "," << d->get<double>("h") << "," << nx
            << "," << ny << "," << (rows.empty() ? std::string(static_cast<std::size_t>(nx) * ny, '1') : detail::mask_from_rows(rows, nx, ny));
      } else {
        throw ConfigError("config: unknown domain kind '" + kind + "'");
      }
    } catch (const pt::ptree_error& e) {
      throw ConfigError(std::string("config [domain]: ") + e.what());
    }
    c.domain_record = rec.str();
  }
  if (auto d = tree.get_child_optional("datum")) {
    try {
      c.datum.family = d->get<std::string>("family", "one");
      c.datum.center1 = d->get<double>("center", d->get<double>("center1", 0.0));
      c.datum.center2 = d->get<double>("center2", 0.0);
      c.datum.width = d->get<double>("width", 1.0);
      c.datum.k = d->get<int>("k", 1);
      c.datum.modes = d->get<int>("modes", 6);
      c.datum.threshold = d->get<double>("threshold", 0.0);
      c.datum.path = d->get<std::string>("path", "");
    } catch (const pt::ptree_error& e) {
      throw ConfigError(std::string("config [datum]: ") + e.what());
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const std::string& subcommand) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  ExperimentConfig c = parse_config(in, subcommand);
  // Relative field paths are relative to the config file.
  if (!c.datum.path.empty() && std::filesystem::path(c.datum.path).is_relative())
    c.datum.path = (path.parent_path() / c.datum.path).string();
  return c;
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

/// Modes needed by the datum family on top of the configured K.
inline int datum_modes(const DatumSpec& d) {
  if (d.family == "psi") return d.k;
  if (d.family == "random") return d.modes;
  return 1;
}

/// Seeded combination sum_k z_k / k psi_k of the first `modes` modes.
inline GridField random_field(const SpectralModel& m, int modes, std::mt19937_64& rng) {
  if (modes > m.size()) throw ConfigError("random datum needs more modes than the model keeps");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m.size());
  for (int k = 0; k < modes; ++k) c[k] = normal(rng) / (k + 1.0);
  return m.synthesize(c, "random");
}

inline GridField make_datum(const DatumSpec& d, const SpectralModel& m, std::uint64_t seed) {
  const auto& g = m.grid_ptr();
  if (d.family == "one") return GridField::sample(g, [](double) { return 1.0; }, "one");
  if (d.family == "bump") {
    if (!(d.width > 0.0)) throw ConfigError("bump width must be positive");
    return GridField::sample(g, [&](const Point& p) {
      const double r2 = (p.x1 - d.center1) * (p.x1 - d.center1) + (g->dim == 2 ? (p.x2 - d.center2) * (p.x2 - d.center2) : 0.0);
      return std::exp(-0.5 * r2 / (d.width * d.width));
    }, "bump");
  }
  if (d.family == "step") return GridField::sample(g, [&](double x) { return x < d.threshold ? 1.0 : 0.0; }, "step");
  if (d.family == "psi") {
    if (d.k < 1 || d.k > m.size()) throw ConfigError("psi datum: k outside the retained modes");
    return m.eigenfield(d.k);
  }
  if (d.family == "random") {
    std::mt19937_64 rng(seed);
    return random_field(m, d.modes, rng);
  }
  if (d.family == "csv") return io::load_field_csv(d.path, g);
  throw ConfigError("unknown datum family '" + d.family + "'");
}

inline SpectralModel model_for(const ExperimentConfig& c, int extra_modes = 0) {
  const GaussianDomain domain = parse_domain_record(c.domain_record);
  SpectralOptions so;
  so.full_spectrum = c.K == 0;
  const int K = c.K == 0 ? 1 : std::max({c.K, extra_modes, datum_modes(c.datum)});
  std::filesystem::path cache;
  if (const char* env = std::getenv("GFOU_CACHE_DIR")) cache = env;
  return cached_spectral_model(domain, K, c.resolution, so, cache);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

namespace detail {

inline io::Meta base_meta(const ExperimentConfig& c) {
  io::Meta m;
  m.add("config_hash", c.hash()).add("subcommand", c.subcommand).add("domain", c.domain_record);
  return m;
}

inline std::ofstream open_out(const ExperimentConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  std::ofstream os(c.out / name);
  if (!os) throw ConfigError("cannot write " + (c.out / name).string());
  return os;
}

inline std::vector<double> coords(const Point& p, int dim) {
  return dim == 2 ? std::vector<double>{p.x1, p.x2} : std::vector<double>{p.x1};
}

inline std::vector<std::string> coord_names(int dim) {
  return dim == 2 ? std::vector<std::string>{"x1", "x2"} : std::vector<std::string>{"x1"};
}

}  // namespace detail

inline int run_solve(const ExperimentConfig& c, std::ostream& log) {
  const SpectralModel m = model_for(c);
  const GridField f = make_datum(c.datum, m, c.seed);
  const SpectralResult u = solve_problem(m, f, c.s);
  io::Meta meta = detail::base_meta(c);
  meta.add("s", c.s).add("K", m.size()).add("tail_fraction", u.tail_fraction)
      .add("tail_tolerance", kTailWarningFraction).add("truncation_warning", u.truncation_warning);
  auto os = detail::open_out(c, "solve.csv");
  auto cols = detail::coord_names(m.grid().dim);
  cols.insert(cols.end(), {"f", "u"});
  io::CsvWriter w(os, meta, cols);
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto r = detail::coords(m.grid().nodes[i], m.grid().dim);
    r.push_back(f[i]);
    r.push_back(u.field[i]);
    w.row(r);
  }
  log << "solve: " << m.grid().size() << " nodes, tail fraction " << io::fmt(u.tail_fraction) << "\n";
  return u.truncation_warning ? kInconclusive : kOk;
}

inline int run_extend(const ExperimentConfig& c, std::ostream& log) {
  auto m = std::make_shared<const SpectralModel>(model_for(c));
  const GridField u = make_datum(c.datum, *m, c.seed);
  const ExtensionField e = make_extension(m, u, FractionalParams(c.s), c.y_levels);
  io::Meta meta = detail::base_meta(c);
  meta.add("s", c.s).add("c_s", e.params.c_s).add("K", m->size()).add("tail_fraction", e.tail_fraction)
      .add("tail_tolerance", kTailWarningFraction).add("truncation_warning", e.truncation_warning);
  auto os = detail::open_out(c, "extend.csv");
  std::vector<std::string> cols{"y"};
  for (const Point& p : m->grid().nodes) cols.push_back(m->grid().dim == 2 ? io::fmt(p.x1) + ":" + io::fmt(p.x2) : io::fmt(p.x1));
  io::CsvWriter w(os, meta, cols);
  auto emit = [&](double y, const GridField& g) {
    std::vector<double> r{y};
    r.insert(r.end(), g.values().begin(), g.values().end());
    w.row(r);
  };
  emit(0.0, e.trace);
  for (std::size_t i = 0; i < e.y_levels.size(); ++i) emit(e.y_levels[i], e.levels[i]);
  log << "extend: " << e.y_levels.size() + 1 << " levels\n";
  return e.truncation_warning ? kInconclusive : kOk;
}

inline int run_rearrange(const ExperimentConfig& c, std::ostream& log) {
  const SpectralModel m = model_for(c);
  const GridField f = make_datum(c.datum, m, c.seed);
  const RearrangedProfile p = decreasing_rearrangement(f);
  io::Meta meta = detail::base_meta(c);
  meta.add("measure", p.measure()).add("integral", p.integral()).add("support_measure", m.grid().support_measure);
  auto os = detail::open_out(c, "rearrange.csv");
  io::CsvWriter w(os, meta, {"r", "value", "cumulative"});
  const auto& br = p.breakpoints();
  for (std::size_t i = 0; i < br.size(); ++i) w.row({br[i], p.values()[i], p.cumulative_at(br[i])});
  log << "rearrange: " << br.size() << " steps\n";
  return kOk;
}

inline int run_compare(const ExperimentConfig& c, std::ostream& log) {
  ComparisonConfig cc;
  cc.resolution = c.resolution;
  cc.star_resolution = c.resolution;
  cc.K = c.K;
  const SpectralModel m = [&] {
    const GaussianDomain domain = parse_domain_record(c.domain_record);
    SpectralOptions so;
    so.full_spectrum = c.K == 0;
    return build_spectral_model(domain, c.K == 0 ? 1 : std::max(c.K, datum_modes(c.datum)), c.resolution, so);
  }();
  const GridField f = make_datum(c.datum, m, c.seed);
  const ComparisonReport rep = verify_comparison(m, f, c.s, cc, c.datum.family);
  io::Meta meta = detail::base_meta(c);
  meta.add("s", c.s).add("max_gap", rep.max_gap).add("control_gap", rep.control_gap)
      .add("tolerance_budget", rep.tolerance_budget).add("calibration", cc.calibration).add("floor", cc.floor)
      .add("tail_fraction", rep.tail_fraction).add("truncation_warning", rep.truncation_warning)
      .add("verdict", std::string(to_string(rep.verdict)));
  {
    auto os = detail::open_out(c, "compare.txt");
    os << "domain: " << rep.domain << "\n"
       << "datum: " << rep.datum << "\n"
       << "s: " << io::fmt(rep.s) << "\n"
       << "max_gap: " << io::fmt(rep.max_gap) << "\n"
       << "worst_r: " << io::fmt(rep.concentration.r) << "\n"
       << "control_gap: " << io::fmt(rep.control_gap) << "\n"
       << "tolerance_budget: " << io::fmt(rep.tolerance_budget) << "\n"
       << "tail_fraction: " << io::fmt(rep.tail_fraction) << "\n"
       << "truncation_warning: " << (rep.truncation_warning ? "true" : "false") << "\n"
       << "verdict: " << to_string(rep.verdict) << "\n"
       << "config_hash: " << c.hash() << "\n";
  }
  auto os = detail::open_out(c, "compare.csv");
  io::CsvWriter w(os, meta, {"r", "u_star", "psi_star", "u_cumulative", "psi_cumulative"});
  std::set<double> rs(rep.u_profile.breakpoints().begin(), rep.u_profile.breakpoints().end());
  rs.insert(rep.psi_profile.breakpoints().begin(), rep.psi_profile.breakpoints().end());
  for (double r : rs) {
    // value_at is right-continuous; sample just inside each step.
    w.row({r, rep.u_profile.value_at(r * (1.0 - 1e-12)), rep.psi_profile.value_at(r * (1.0 - 1e-12)),
           rep.u_profile.cumulative_at(r), rep.psi_profile.cumulative_at(r)});
  }
  log << "compare: " << to_string(rep.verdict) << " (gap " << io::fmt(rep.max_gap) << ", budget "
      << io::fmt(rep.tolerance_budget) << ")\n";
  return rep.verdict == Verdict::confirmed ? kOk : kViolated;
}

inline int run_regularity(const ExperimentConfig& c, std::ostream& log) {
  const SpectralModel m = model_for(c, c.datum.modes);
  check_regularity_hypotheses(m.domain().measure(), c.s, c.p, c.alpha);
  std::mt19937_64 rng(c.seed);
  io::Meta meta = detail::base_meta(c);
  std::vector<std::pair<std::string, RatioReport>> rows;
  double constant = 0.0, tail = 0.0;
  bool warn = false;
  for (int i = 0; i < c.family_size; ++i) {
    const GridField f = c.datum.family == "random" ? random_field(m, c.datum.modes, rng) : make_datum(c.datum, m, c.seed + i);
    RatioReport r = regularity_ratio(m, f, c.s, c.p, c.alpha);
    constant = std::max(constant, r.ratio);
    tail = std::max(tail, r.tail_fraction);
    warn = warn || r.truncation_warning;
    rows.emplace_back("datum-" + std::to_string(i + 1), r);
  }
  meta.add("s", c.s).add("p", c.p).add("alpha", c.alpha).add("empirical_constant", constant)
      .add("tail_fraction", tail).add("tail_tolerance", kTailWarningFraction).add("truncation_warning", warn);
  auto os = detail::open_out(c, "regularity.csv");
  io::CsvWriter w(os, meta, {"datum-id", "ratio"});
  for (const auto& [id, r] : rows) w.row(id, {r.ratio});
  log << "regularity: empirical constant " << io::fmt(constant) << "\n";
  return warn ? kInconclusive : kOk;
}

/// Tolerance of the G = G1 + G2 + G3 consistency check, relative to max(1, |G|).
inline constexpr double kSplitTolerance = 1e-9;

inline int run_kernel(const ExperimentConfig& c, std::ostream& log) {
  if (!(c.x_max > c.x_min && c.x_min > 0.0)) throw ConfigError("kernel: needs 0 < x_min < x_max");
  std::vector<double> xs;
  for (int i = 0; i < c.points; ++i) xs.push_back(c.points == 1 ? c.x_min : c.x_min + (c.x_max - c.x_min) * i / (c.points - 1));
  io::Meta meta = detail::base_meta(c);
  if (c.table == "mehler") {
    if (!(c.t > 0.0)) throw ConfigError("kernel: t must be positive");
    meta.add("t", c.t);
    auto os = detail::open_out(c, "kernel.csv");
    io::CsvWriter w(os, meta, {"x", "y", "M"});
    for (double x : xs)
      for (double y : xs) w.row({x, y, mehler_kernel(x, y, c.t)});
    log << "kernel: mehler table " << xs.size() << "x" << xs.size() << "\n";
    return kOk;
  }
  if (c.table != "green") throw ConfigError("kernel: table must be 'green' or 'mehler'");
  const GreensKernel k(c.s, c.p);
  const double g3_bound = g3_uniform_bound(k);
  struct Row { double x, y; GreensValue g; };
  std::vector<Row> rows;
  int skipped = 0, g2_fail = 0, g3_fail = 0;
  double split = 0.0;
  for (double x : xs)
    for (double y : xs) {
      if (std::abs(x - y) < kDiagonalExclusion) {
        ++skipped;
        continue;
      }
      const GreensValue g = greens_kernel_eval(k, x, y);
      split = std::max(split, std::abs(g.G - (g.G1 + g.G2 + g.G3)) / std::max(1.0, std::abs(g.G)));
      if (std::abs(g.G2) > g2_majorant(k, x, y)) ++g2_fail;
      if (std::abs(g.G3) > g3_bound) ++g3_fail;
      rows.push_back({x, y, g});
    }
  meta.add("s", c.s).add("p", c.p).add("c_p", k.c_p).add("split_defect", split).add("split_tolerance", kSplitTolerance)
      .add("g3_bound", g3_bound).add("g2_violations", g2_fail).add("g3_violations", g3_fail)
      .add("diagonal_skipped", skipped);
  auto os = detail::open_out(c, "kernel.csv");
  io::CsvWriter w(os, meta, {"x1", "y1", "G", "G1", "G2", "G3"});
  for (const Row& r : rows) w.row({r.x, r.y, r.g.G, r.g.G1, r.g.G2, r.g.G3});
  log << "kernel: " << rows.size() << " pairs, split defect " << io::fmt(split) << "\n";
  if (g2_fail || g3_fail) return kViolated;
  return split <= kSplitTolerance ? kOk : kNumericalFailure;
}

/// Dispatches a validated config; exceptions map to exit codes.
inline int run(const ExperimentConfig& c, std::ostream& log, std::ostream& err) {
  try {
    c.validate();
    if (c.subcommand == "solve") return run_solve(c, log);
    if (c.subcommand == "extend") return run_extend(c, log);
    if (c.subcommand == "rearrange") return run_rearrange(c, log);
    if (c.subcommand == "compare") return run_compare(c, log);
    if (c.subcommand == "regularity") return run_regularity(c, log);
    return run_kernel(c, log);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::domain_error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace gfou::cli
