#pragma once

// Experiment driver: one JSON config, one subcommand, CSV/JSON artifacts in an output directory.

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "microloc/microloc.hpp"

namespace microloc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kGuard = 3,
  kUsage = 64,
  kCannotWrite = 73,
};

/// Output directory or file could not be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::pair<std::string, std::string>>& subcommands() {
  static const std::vector<std::pair<std::string, std::string>> names = {
      {"dissipation-sweep", "epsilon_h over sweep.h_list with partition parts and limits -> convergence.csv"},
      {"bichar", "bicharacteristic fan -> trajectory_<k>.csv, bichar.json"},
      {"propagate", "evolve a coherent state and track it against its ray -> propagation.json, density_<k>.csv"},
      {"verify-symbol", "symbol class, principal type and dissipativity -> verify_symbol.json"},
      {"partition-report", "partition masses of one state -> partition.csv"},
      {"oracle", "FFT path versus brute-force kernel and partition sums -> oracle.json"}};
  return names;
}

// ---------------------------------------------------------------------------
// Config access by dotted path; every failure names the key.

class Config {
 public:
  explicit Config(json doc) : doc_(std::move(doc)) {
    static const std::vector<std::string> sections = {"grid",      "symbol",   "states", "sweep",
                                                      "partition", "bichar",   "propagate"};
    if (!doc_.is_object()) throw ValidationError("config: top level must be a JSON object");
    for (const auto& [key, value] : doc_.items())
      if (std::find(sections.begin(), sections.end(), key) == sections.end())
        throw ValidationError("config: unknown section '" + key + "'");
  }

  const json& doc() const { return doc_; }

  const json* find(std::string_view path) const {
    const json* node = &doc_;
    std::size_t start = 0;
    while (start <= path.size()) {
      const std::size_t dot = path.find('.', start);
      const std::string key(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
      if (!node->is_object()) return nullptr;
      auto it = node->find(key);
      if (it == node->end()) return nullptr;
      node = &*it;
      if (dot == std::string_view::npos) break;
      start = dot + 1;
    }
    return node;
  }

  bool has(std::string_view path) const { return find(path) != nullptr; }

  template <class T>
  T get(std::string_view path) const {
    const json* node = find(path);
    if (!node) throw ValidationError("config: missing required key '" + std::string(path) + "'");
    return convert<T>(*node, path);
  }

  template <class T>
  T get_or(std::string_view path, T fallback) const {
    const json* node = find(path);
    return node ? convert<T>(*node, path) : fallback;
  }

  Vec vec_or(std::string_view path, int dim, Vec fallback = {}) const {
    const json* node = find(path);
    if (!node) return fallback;
    auto values = convert<std::vector<double>>(*node, path);
    if (static_cast<int>(values.size()) != dim)
      throw ValidationError("config: key '" + std::string(path) + "' must have " + std::to_string(dim) + " entries");
    Vec v{};
    for (int i = 0; i < dim; ++i) v[i] = values[i];
    return v;
  }

 private:
  template <class T>
  static T convert(const json& node, std::string_view path) {
    try {
      return node.get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config: key '" + std::string(path) + "' has the wrong type (" +
                            std::string(node.type_name()) + ")");
    }
  }

  json doc_;
};

inline Config load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config: cannot read '" + path.string() + "'");
  try {
    return Config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: parse error: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Artifact writing

/// FNV-1a over the canonical config dump and the seed.
inline std::string config_digest(const Config& cfg, std::uint64_t seed) {
  const std::string text = cfg.doc().dump() + "|seed=" + std::to_string(seed);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << hash;
  return s.str();
}

class Artifacts {
 public:
  Artifacts(fs::path dir, std::string digest) : dir_(std::move(dir)), digest_(std::move(digest)) {}

  std::string csv_header() const {
    return "# microloc config_digest=" + digest_ + " convention=" + std::string(kConventionTag) + "\n";
  }

  json json_header() const { return json{{"config_digest", digest_}, {"convention", std::string(kConventionTag)}}; }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot open '" + (dir_ / name).string() + "' for writing");
    out << content;
    if (!out) throw OutputError("write to '" + (dir_ / name).string() + "' failed");
    written_.push_back(name);
  }

  void write_json(const std::string& name, json body) const {
    body["header"] = json_header();
    write(name, body.dump(2) + "\n");
  }

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& written() const { return written_; }

 private:
  fs::path dir_;
  std::string digest_;
  mutable std::vector<std::string> written_;
};

inline void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create output directory '" + dir.string() + "'");
  const fs::path probe = dir / ".microloc-write-probe";
  {
    std::ofstream out(probe, std::ios::binary);
    if (!out) throw OutputError("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

inline std::string row(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) line += ',';
    line += format_double(values[i]);
  }
  return line + "\n";
}

inline std::string axis_columns(const std::string& prefix, int dim) {
  std::string s;
  for (int i = 0; i < dim; ++i) s += (i > 0 ? "," : "") + prefix + std::to_string(i);
  return s;
}

// ---------------------------------------------------------------------------
// Config sections

inline Grid grid_from(const Config& cfg) {
  return Grid(cfg.get<int>("grid.dim"), cfg.get<int>("grid.N"), cfg.get<double>("grid.L"));
}

inline int dim_from(const Config& cfg) { return cfg.get_or<int>("grid.dim", 1); }

inline json symbol_params(const Config& cfg) {
  const json* p = cfg.find("symbol.params");
  return p ? *p : json::object();
}

inline Symbol symbol_from(const Config& cfg) { return builtin(cfg.get<std::string>("symbol.name"), symbol_params(cfg)); }

inline SplitSymbol split_from(const Config& cfg) {
  return builtin_split(cfg.get<std::string>("symbol.name"), symbol_params(cfg));
}

/// Unit-mass sum of random Fourier modes with |k| <= kmax per axis, fixed by the seed.
inline Field random_state(const Grid& g, std::uint64_t seed, int kmax, int modes) {
  if (kmax < 0 || 2 * kmax >= g.points_per_axis()) throw ValidationError("states.kmax must lie in [0, N/2)");
  if (modes < 1) throw ValidationError("states.modes must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> kd(-kmax, kmax);
  std::normal_distribution<double> nd;
  std::vector<std::pair<std::array<int, 2>, cplx>> terms;
  for (int t = 0; t < modes; ++t) {
    std::array<int, 2> k{kd(rng), g.dim() == 2 ? kd(rng) : 0};
    const double re = nd(rng), im = nd(rng);
    terms.push_back({k, cplx(re, im)});
  }
  Field u = Field::sample(g, [&](const Vec& x) {
    cplx s = 0.0;
    for (const auto& [k, c] : terms) s += c * std::polar(1.0, pi / g.half_length() * (k[0] * x[0] + k[1] * x[1]));
    return s;
  });
  const double mass = u.norm_squared();
  if (!(mass > 0.0)) throw ValidationError("states: random state has zero mass");
  for (auto& z : u.values()) z /= std::sqrt(mass);
  return u;
}

struct StateSpec {
  std::string kind = "coherent";
  Vec x0{}, xi0{};
  int kmax = 6, modes = 5;
};

inline StateSpec states_from(const Config& cfg) {
  const int dim = dim_from(cfg);
  StateSpec s;
  s.kind = cfg.get_or<std::string>("states.kind", "coherent");
  if (s.kind != "coherent" && s.kind != "random")
    throw ValidationError("config: states.kind must be 'coherent' or 'random'");
  s.x0 = cfg.vec_or("states.x0", dim);
  s.xi0 = cfg.vec_or("states.xi0", dim);
  s.kmax = cfg.get_or<int>("states.kmax", 6);
  s.modes = cfg.get_or<int>("states.modes", 5);
  return s;
}

inline StateFamily family_from(const StateSpec& s, const Grid& g, std::uint64_t seed) {
  if (s.kind == "random") {
    Field u = random_state(g, seed, s.kmax, s.modes);
    return [u](double) { return u; };
  }
  return [s, g](double h) { return coherent_state(g, s.x0, s.xi0, h); };
}

inline PartitionOfUnity partition_from(const Config& cfg, const Grid& g) {
  return build_uniform(g, cfg.get_or<int>("partition.patches", 4), cfg.get_or<double>("partition.overlap", 0.3));
}

inline std::vector<double> h_list_from(const Config& cfg) {
  auto hs = cfg.get<std::vector<double>>("sweep.h_list");
  if (hs.empty()) throw ValidationError("config: key 'sweep.h_list' must not be empty");
  for (double h : hs)
    if (!(h > 0.0)) throw ValidationError("config: key 'sweep.h_list' must hold positive values");
  return hs;
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns an exit code; exceptions propagate to run().

inline int dissipation_sweep(const Config& cfg, std::uint64_t seed, const Artifacts& out) {
  const Grid g = grid_from(cfg);
  const Symbol a = symbol_from(cfg);
  const StateSpec states = states_from(cfg);
  const auto pu = partition_from(cfg, g);
  SweepOptions opt;
  opt.xi0 = cfg.vec_or("sweep.xi0", g.dim(), states.xi0);
  opt.truncation_radius = cfg.get_or<double>("sweep.truncation_radius", 1024.0);
  const auto table = h_sweep(a, family_from(states, g, seed), h_list_from(cfg), pu, opt);

  std::string csv = out.csv_header();
  if (!table.paper_limit_note.empty()) csv += "# limit_paper unavailable: " + table.paper_limit_note + "\n";
  csv += "h,eps_h";
  for (std::size_t j = 1; j <= pu.size(); ++j) csv += ",part_" + std::to_string(j);
  csv += ",limit_paper,limit_frozen,gap_paper,gap_frozen\n";
  for (const auto& r : table.rows) {
    std::vector<double> values{r.h, r.eps};
    values.insert(values.end(), r.parts.begin(), r.parts.end());
    values.insert(values.end(), {r.limit_paper, r.limit_frozen, r.gap_paper, r.gap_frozen});
    csv += row(values);
  }
  out.write("convergence.csv", csv);
  return kOk;
}

inline std::vector<PhasePoint> bichar_starts(const Config& cfg, int dim) {
  std::vector<PhasePoint> starts;
  if (const json* list = cfg.find("bichar.starts")) {
    if (!list->is_array() || list->empty()) throw ValidationError("config: key 'bichar.starts' must be a non-empty array");
    for (std::size_t k = 0; k < list->size(); ++k) {
      const std::string base = "bichar.starts." + std::to_string(k);
      Config item(json{{"bichar", (*list)[k]}});
      PhasePoint p;
      p.x = item.vec_or("bichar.x", dim);
      p.xi = item.vec_or("bichar.xi", dim);
      if (!(*list)[k].contains("x") || !(*list)[k].contains("xi"))
        throw ValidationError("config: '" + base + "' needs both 'x' and 'xi'");
      starts.push_back(p);
    }
    return starts;
  }
  // Fan: count rays from one base point, frequencies spread over a circle (2D) or a segment (1D).
  const Vec x = cfg.vec_or("bichar.fan.x", dim);
  const double radius = cfg.get<double>("bichar.fan.xi_norm");
  const int count = cfg.get_or<int>("bichar.fan.count", 8);
  if (count < 1) throw ValidationError("config: key 'bichar.fan.count' must be >= 1");
  for (int k = 0; k < count; ++k) {
    PhasePoint p{x, {}};
    if (dim == 1) {
      p.xi[0] = count == 1 ? radius : radius * (-1.0 + 2.0 * k / (count - 1));
    } else {
      p.xi = Vec{radius * std::cos(2 * pi * k / count), radius * std::sin(2 * pi * k / count)};
    }
    starts.push_back(p);
  }
  return starts;
}

inline GradientMode gradient_mode(const std::string& s) {
  if (s == "automatic") return GradientMode::automatic;
  if (s == "analytic") return GradientMode::analytic;
  if (s == "finite_difference") return GradientMode::finite_difference;
  throw ValidationError("config: key 'bichar.gradient' must be automatic, analytic or finite_difference");
}

inline int bichar(const Config& cfg, const Artifacts& out) {
  const int dim = dim_from(cfg);
  const Symbol p0 = symbol_from(cfg);
  const double t_end = cfg.get<double>("bichar.t_end");
  const double tol = cfg.get_or<double>("bichar.tol", 1e-8);
  FlowOptions opt;
  opt.dim = dim;
  opt.gradient = gradient_mode(cfg.get_or<std::string>("bichar.gradient", "automatic"));
  opt.max_steps = cfg.get_or<std::size_t>("bichar.max_steps", opt.max_steps);
  opt.blow_up_radius = cfg.get_or<double>("bichar.blow_up_radius", opt.blow_up_radius);

  json summary = json::array();
  bool all_completed = true;
  const auto starts = bichar_starts(cfg, dim);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const Trajectory tr = flow(p0, starts[k], t_end, tol, opt);
    std::string csv = out.csv_header() + "t," + axis_columns("x", dim) + "," + axis_columns("xi", dim) + ",log_amp\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
      std::vector<double> values{tr.times[i]};
      for (int d = 0; d < dim; ++d) values.push_back(tr.points[i].x[d]);
      for (int d = 0; d < dim; ++d) values.push_back(tr.points[i].xi[d]);
      values.push_back(tr.log_amplitude[i]);
      csv += row(values);
    }
    const std::string name = "trajectory_" + std::to_string(k) + ".csv";
    out.write(name, csv);
    json s = trajectory_summary(tr);
    s["file"] = name;
    s["hamiltonian_drift"] = conserve_check(p0, tr);
    summary.push_back(s);
    all_completed = all_completed && tr.completed();
  }
  out.write_json("bichar.json", json{{"symbol", p0.name}, {"tol", tol}, {"t_end", t_end}, {"trajectories", summary}});
  return all_completed ? kOk : kGuard;
}

inline std::string density_csv(const Artifacts& out, const PhaseSpaceDensity& d) {
  std::string csv = out.csv_header() + axis_columns("x", d.dim) + "," + axis_columns("xi", d.dim) + ",value\n";
  std::vector<double> values(2 * d.dim + 1);
  for (std::size_t ix = 0; ix < d.x_points.size(); ++ix)
    for (std::size_t ik = 0; ik < d.xi_points.size(); ++ik) {
      for (int i = 0; i < d.dim; ++i) {
        values[i] = d.x_points[ix][i];
        values[d.dim + i] = d.xi_points[ik][i];
      }
      values[2 * d.dim] = d.at(ix, ik);
      csv += row(values);
    }
  return csv;
}

inline int propagate(const Config& cfg, const Artifacts& out) {
  const Grid g = grid_from(cfg);
  const SplitSymbol p0 = split_from(cfg);
  const StateSpec states = states_from(cfg);
  const double h = cfg.get<double>("propagate.h");
  const double t_end = cfg.get<double>("propagate.t_end");
  const Vec x0 = cfg.vec_or("propagate.x0", g.dim(), states.x0);
  const Vec xi0 = cfg.vec_or("propagate.xi0", g.dim(), states.xi0);
  PropagationOptions opt;
  opt.dt = cfg.get_or<double>("propagate.dt", 0.0);
  opt.sigma = cfg.get_or<double>("propagate.sigma", 0.0);
  opt.x_stride = cfg.get_or<int>("propagate.x_stride", opt.x_stride);
  opt.snapshot_every = cfg.get_or<std::size_t>("propagate.snapshot_every", opt.snapshot_every);
  opt.tol = cfg.get_or<double>("propagate.tol", opt.tol);
  const double delta = cfg.get_or<double>("propagate.delta", 0.1);
  const int density_snapshots = cfg.get_or<int>("propagate.density_snapshots", 3);
  if (density_snapshots < 0) throw ValidationError("config: key 'propagate.density_snapshots' must be >= 0");

  const PropagationReport report = propagation_check(p0, g, x0, xi0, h, t_end, opt);

  // Re-run the (deterministic) evolution for the density and field artifacts.
  const Evolution ev = evolve(p0, coherent_state(g, x0, xi0, h), h, t_end, report.dt);
  GaborOptions gopt;
  gopt.sigma = report.sigma;
  gopt.x_stride = opt.x_stride;
  if (cfg.has("propagate.xi_window")) {
    const auto w = cfg.get<std::vector<double>>("propagate.xi_window");
    if (w.size() != 2) throw ValidationError("config: key 'propagate.xi_window' must be [lo, hi]");
    gopt.window = FrequencyWindow{Vec{w[0], g.dim() == 2 ? w[0] : 0.0}, Vec{w[1], g.dim() == 2 ? w[1] : 0.0}};
  }
  json snapshots = json::array();
  const std::size_t last = ev.snapshots.size() - 1;
  for (int k = 0; k < density_snapshots; ++k) {
    const std::size_t s = density_snapshots == 1 ? last : last * k / (density_snapshots - 1);
    const PhaseSpaceDensity d = gabor_transform(ev.snapshots[s], h, gopt);
    const WavefrontEstimate est = estimate_wavefront(d, delta);
    const std::string name = "density_" + std::to_string(k) + ".csv";
    out.write(name, density_csv(out, d));
    snapshots.push_back({{"t", ev.times[s]},
                         {"file", name},
                         {"wavefront_points", est.points.size()},
                         {"wavefront_clusters", count_clusters(est, d)},
                         {"threshold_fraction", delta}});
  }
  std::ostringstream bin;
  write_field_binary(bin, ev.snapshots.back());
  out.write("field_final.bin", bin.str());

  json body = report;
  body["densities"] = snapshots;
  body["field_final"] = "field_final.bin";
  out.write_json("propagation.json", body);
  return kOk;
}

inline PhaseBox box_from(const Config& cfg, int dim) {
  auto range = [&](std::string_view key, double lo, double hi) {
    const auto r = cfg.get_or<std::vector<double>>(key, {lo, hi});
    if (r.size() != 2) throw ValidationError("config: key '" + std::string(key) + "' must be [lo, hi]");
    return r;
  };
  const auto x = range("symbol.verify.box.x", -2.0, 2.0);
  const auto xi = range("symbol.verify.box.xi", -2.0, 2.0);
  PhaseBox box{dim, {}, {}, {}, {}};
  for (int i = 0; i < dim; ++i) {
    box.x_lo[i] = x[0];
    box.x_hi[i] = x[1];
    box.xi_lo[i] = xi[0];
    box.xi_hi[i] = xi[1];
  }
  return box;
}

inline int verify_symbol(const Config& cfg, const Artifacts& out) {
  const int dim = dim_from(cfg);
  const Symbol a = symbol_from(cfg);
  const double order = cfg.get_or<double>("symbol.verify.order", a.order);
  const auto radii = cfg.get_or<std::vector<double>>("symbol.verify.radii", {1, 2, 4, 8, 16, 32, 64, 128, 256});
  const int directions = cfg.get_or<int>("symbol.verify.directions", 16);
  const auto samples = cfg.get_or<std::size_t>("symbol.verify.samples", 1000);
  SymbolClassOptions opt;
  opt.dim = dim;
  opt.fit_tolerance = cfg.get_or<double>("symbol.verify.fit_tolerance", opt.fit_tolerance);
  const PhaseBox box = box_from(cfg, dim);

  const SymbolClassReport cls = verify_symbol_class(a, order, radii, directions, opt);
  const PrincipalTypeReport principal = validate_principal_type(a, box, samples);
  const DissipativityReport diss = validate_dissipativity(a, box, samples);
  out.write_json("verify_symbol.json", json{{"symbol", a.name},
                                             {"params", symbol_params(cfg)},
                                             {"claimed_order", order},
                                             {"verdict", cls.pass ? "pass" : "fail"},
                                             {"symbol_class", cls},
                                             {"principal_type", principal},
                                             {"dissipativity", diss}});
  return kOk;
}

inline int partition_report(const Config& cfg, std::uint64_t seed, const Artifacts& out) {
  const Grid g = grid_from(cfg);
  const auto pu = partition_from(cfg, g);
  const double h = cfg.get_or<double>("partition.h", 0.1);
  const Field u = family_from(states_from(cfg), g, seed)(h);
  const auto masses = decompose(pu, energy_density(u));
  std::string csv = out.csv_header() + "patch_id," + axis_columns("center", g.dim()) + ",mass\n";
  for (std::size_t j = 0; j < pu.size(); ++j) {
    csv += std::to_string(j);
    for (int i = 0; i < g.dim(); ++i) csv += "," + format_double(pu.centers()[j][i]);
    csv += "," + format_double(masses[j]) + "\n";
  }
  out.write("partition.csv", csv);
  return kOk;
}

inline int oracle(const Config& cfg, std::uint64_t seed, const Artifacts& out) {
  const Grid g = grid_from(cfg);
  const Symbol a = symbol_from(cfg);
  const StateFamily states = family_from(states_from(cfg), g, seed);
  const double overlap = cfg.get_or<double>("partition.overlap", 0.3);
  json rows = json::array();
  double worst = 0.0;
  for (double h : h_list_from(cfg)) {
    const Field u = states(h);
    const KernelOracleResult brute = kernel_oracle(a, u, h);
    const double fast = dissipation_rate(a, u, h);
    const double rel = relative_gap(brute.value, fast);
    worst = std::max(worst, rel);
    json sums = json::array();
    for (int patches : {1, 4, 16}) {
      const auto parts = localized_dissipation(a, u, h, build_uniform(g, patches, overlap));
      double total = 0.0;
      for (double p : parts) total += p;
      sums.push_back({{"patches", patches}, {"sum", total}, {"relative_error", relative_gap(total, fast)}});
    }
    rows.push_back({{"h", h},
                    {"dissipation_rate", fast},
                    {"kernel_oracle", brute.value},
                    {"relative_difference", rel},
                    {"imaginary_residue", brute.imaginary_residue},
                    {"partition_sums", sums}});
  }
  out.write_json("oracle.json", json{{"symbol", a.name}, {"max_relative_difference", worst}, {"rows", rows}});
  return kOk;
}

// ---------------------------------------------------------------------------

inline unsigned threads_from_env() {
  const char* env = std::getenv("MICROLOC_THREADS");
  if (!env || !*env) return 0;
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), v);
  if (ec != std::errc() || *ptr != '\0') throw CLI::ValidationError("MICROLOC_THREADS", "must be a non-negative integer");
  return v;
}

/// Parses argv, runs one subcommand and maps failures to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"microloc: semiclassical dissipation and propagation experiments", "microloc-cli"};
  std::string config_path, out_dir;
  std::optional<unsigned> threads;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--threads", threads, "Worker threads (0 = hardware count; default $MICROLOC_THREADS or 0)");
  app.add_option("--seed", seed, "Seed for random states");
  app.require_subcommand(1, 1);
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, description] : subcommands()) subs[name] = app.add_subcommand(name, description);

  try {
    app.parse(argc, argv);
    set_worker_threads(threads ? *threads : threads_from_env());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  std::string selected;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) selected = name;

  try {
    const Config cfg = load_config(config_path);
    prepare_output_dir(out_dir);
    const Artifacts artifacts(out_dir, config_digest(cfg, seed));
    int code = kOk;
    if (selected == "dissipation-sweep") code = dissipation_sweep(cfg, seed, artifacts);
    else if (selected == "bichar") code = bichar(cfg, artifacts);
    else if (selected == "propagate") code = propagate(cfg, artifacts);
    else if (selected == "verify-symbol") code = verify_symbol(cfg, artifacts);
    else if (selected == "partition-report") code = partition_report(cfg, seed, artifacts);
    else if (selected == "oracle") code = oracle(cfg, seed, artifacts);
    for (const auto& name : artifacts.written()) out << (artifacts.dir() / name).string() << "\n";
    return code;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << "\n";
    return kCannotWrite;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const GuardError& e) {
    err << "guard: " << e.what() << "\n";
    return kGuard;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"microloc-cli"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace microloc::cli
