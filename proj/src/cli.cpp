#include "ddlqr/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "ddlqr/io.hpp"
#include "ddlqr/koopman.hpp"
#include "ddlqr/lti.hpp"
#include "ddlqr/random.hpp"
#include "ddlqr/synthesis.hpp"

namespace ddlqr {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Line of the first occurrence of "key" in the config text, 0 if unknown.
std::size_t line_of(const std::string& text, const std::string& key) {
  if (text.empty() || key.empty()) return 0;
  const std::size_t pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  std::size_t line = 1;
  for (std::size_t i = 0; i < pos; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

[[noreturn]] void config_error(const std::string& path, const std::string& key, const std::string& text,
                               const std::string& what) {
  std::string msg = path.empty() ? key : path;
  if (const std::size_t line = line_of(text, key)) msg += " (line " + std::to_string(line) + ")";
  throw Error(ErrorCode::ConfigInvalid, msg + ": " + what);
}

/// Typed access to one JSON object with key-path error messages.
class Section {
 public:
  Section(const json& j, std::string path, const std::string& text) : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) config_error(path_, path_, text_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) config_error(at(k), k, text_, "unknown key");
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) const { return j_.at(k); }
  std::string at(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  const std::string& text() const { return text_; }

  double number(const std::string& k, double fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_number()) config_error(at(k), k, text_, "expected a number");
    return v.get<double>();
  }
  std::uint64_t count(const std::string& k, std::uint64_t fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      config_error(at(k), k, text_, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }
  bool flag(const std::string& k, bool fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_boolean()) config_error(at(k), k, text_, "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_string()) config_error(at(k), k, text_, "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& k, std::vector<double> fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_array()) config_error(at(k), k, text_, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) config_error(at(k) + "[" + std::to_string(i) + "]", k, text_, "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  Matrix matrix(const std::string& k) const {
    try {
      return matrix_from_json(j_.at(k), at(k));
    } catch (const Error& e) {
      config_error(at(k), k, text_, e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
  const std::string& text_;
};

PlantConfig plant_from_json(const json& j, const std::string& path, const std::string& text,
                            const fs::path& base_dir) {
  PlantConfig p;
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "benchmark") return p;
    if (name == "random") {
      p.kind = PlantKind::Random;
      return p;
    }
    config_error(path, "plant", text, "unknown plant '" + name + "' (benchmark, random, or an object)");
  }
  Section s(j, path, text);
  s.allow({"kind", "n", "m", "entry_std", "A", "B", "file"});
  const std::string kind = s.string("kind", s.has("A") || s.has("file") ? "custom" : "benchmark");
  if (kind == "benchmark") return p;
  if (kind == "random") {
    p.kind = PlantKind::Random;
    p.n = s.count("n", 3);
    p.m = s.count("m", 1);
    p.entry_std = s.number("entry_std", 1.0);
    return p;
  }
  if (kind != "custom") config_error(s.at("kind"), "kind", text, "expected benchmark, random or custom");
  p.kind = PlantKind::Custom;
  if (s.has("file")) {
    const fs::path file = base_dir / s.string("file", "");
    const std::string body = read_file(file);
    const json pj = parse_config_text(body, file.string());
    Section ps(pj, file.string(), body);
    ps.allow({"A", "B"});
    p.custom = LtiSystem(ps.matrix("A"), ps.matrix("B"));
  } else {
    p.custom = LtiSystem(s.matrix("A"), s.matrix("B"));
  }
  return p;
}

json plant_to_json(const PlantConfig& p) {
  switch (p.kind) {
    case PlantKind::Benchmark:
      return {{"kind", "benchmark"}};
    case PlantKind::Random:
      return {{"kind", "random"}, {"n", p.n}, {"m", p.m}, {"entry_std", p.entry_std}};
    case PlantKind::Custom:
      return {{"kind", "custom"}, {"A", matrix_to_json(p.custom->a())}, {"B", matrix_to_json(p.custom->b())}};
  }
  return {};
}

json experiment_config_to_json(const ExperimentConfig& c) {
  return {{"plant", plant_to_json(c.plant)},
          {"horizons", c.horizons},
          {"sigma_w", c.sigma_w},
          {"lambda_grid", c.lambda_grid},
          {"gamma_grid", c.gamma_grid},
          {"trials", c.trials},
          {"master_seed", c.master_seed},
          {"q", c.q_scale},
          {"r", c.r_scale},
          {"sigma_x", c.sigma_x},
          {"input_std", c.input_std},
          {"mixed", c.mixed},
          {"systems", c.systems},
          {"coefficient_interval", {c.coefficient_lo, c.coefficient_hi}},
          {"sdp_tol", c.synthesis.sdp.tol},
          {"sdp_max_iter", c.synthesis.sdp.max_iter},
          {"omega_uses_psi", c.synthesis.omega_uses_psi}};
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes files then a manifest listing each with its SHA-256.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, const std::string& content) {
    write_file_atomic(dir_ / name, content);
    files_.push_back({{"name", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  }
  void add(const Table& t) { add(t.name, to_csv(t)); }

  void finish(json manifest) {
    manifest["files"] = files_;
    write_file_atomic(dir_ / "manifest.json", manifest.dump(2) + "\n");
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  json files_ = json::array();
};

json manifest_base(const std::string& command, const json& config, std::uint64_t seed, const std::string& started,
                   double wall) {
  return {{"tool", "ddlqr"},
          {"version", kVersion},
          {"command", command},
          {"config", config},
          {"master_seed", seed},
          {"started_at", started},
          {"finished_at", timestamp()},
          {"wall_seconds", wall}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json load_config(const std::string& path, std::string& text) {
  if (path.empty()) {
    text.clear();
    return json::object();
  }
  text = read_file(path);
  return parse_config_text(text, path);
}

fs::path config_dir(const std::string& path) {
  if (path.empty()) return fs::current_path();
  const fs::path p(path);
  return p.has_parent_path() ? p.parent_path() : fs::current_path();
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_flag, std::ostream& out) {
  std::string text;
  const json j = load_config(config_path, text);
  Section s(j, "", text);
  s.allow({"plant", "T", "sigma_x", "sigma_w", "input_std", "seed", "name"});
  const std::uint64_t seed = s.count("seed", 1);
  const PlantConfig pc =
      s.has("plant") ? plant_from_json(s.raw("plant"), "plant", text, config_dir(config_path)) : PlantConfig{};
  const LtiSystem sys = make_plant(pc, derive_seed(seed, 0xA11CE));
  const std::size_t horizon = s.count("T", 10);
  if (horizon == 0) config_error("T", "T", text, "must be >= 1");
  const NoiseSpec noise{s.number("sigma_x", 1.0), s.number("sigma_w", 0.1), seed};
  const double input_std = s.number("input_std", 1.0);
  const std::string name = s.string("name", "data");
  if (name.empty() || name.find('/') != std::string::npos) config_error("name", "name", text, "must be a plain file stem");

  const DataRecord rec = simulate_and_collect(sys, noise, input_std, horizon);
  const fs::path dir = output_directory(out_flag);
  const std::string csv = to_csv(data_record_table(rec, name + ".csv"));
  const DataSidecar side{sys.n(), sys.m(), horizon, sys, noise, input_std};
  const std::string meta = sidecar_to_json(side).dump(2) + "\n";
  write_file_atomic(dir / (name + ".csv"), csv);
  write_file_atomic(dir / (name + ".json"), meta);
  out << (dir / (name + ".csv")).string() << " sha256=" << sha256_hex(csv) << "\n";
  return kExitOk;
}

// ---- synthesize -----------------------------------------------------------

struct SynthesizeArgs {
  std::string data;
  std::string method;
  double lambda = 0.0;
  double gamma = 0.0;
  double q = 1.0;
  double r = 1.0;
  std::string weights;
  std::string truth;
  bool no_truth = false;
  std::string output;
  double tol = 0.0;
};

int cmd_synthesize(const SynthesizeArgs& a, std::ostream& out) {
  const Table t = parse_csv(read_file(a.data), a.data);
  const DataRecord rec = data_record_from_table(t);

  std::optional<LtiSystem> truth;
  if (!a.no_truth) {
    fs::path side = a.truth.empty() ? sidecar_path(a.data) : fs::path(a.truth);
    if (!a.truth.empty() || fs::exists(side)) {
      const std::string body = read_file(side);
      const DataSidecar sc = sidecar_from_json(parse_config_text(body, side.string()));
      truth = sc.system;
    }
  }
  if (truth && (truth->n() != rec.n() || truth->m() != rec.m())) {
    throw Error(ErrorCode::DimensionMismatch, "true system does not match the data dimensions");
  }

  SynthesisSpec spec;
  spec.method = resolve_method(a.method, a.gamma);
  spec.lambda = a.lambda;
  spec.gamma = a.gamma;
  if (!a.weights.empty()) {
    const std::string body = read_file(a.weights);
    const json wj = parse_config_text(body, a.weights);
    Section ws(wj, "", body);
    ws.allow({"Q", "R"});
    spec.weights = LqrWeights(ws.matrix("Q"), ws.matrix("R"));
  } else {
    spec.weights = LqrWeights::scaled_identity(rec.n(), rec.m(), a.q, a.r);
  }
  if (a.tol > 0.0) spec.options.sdp.tol = a.tol;

  const GainResult g = synthesize(rec, spec, truth);
  json j = gain_result_to_json(g);
  j["method"] = std::string(to_string(spec.method));
  j["lambda"] = a.lambda;
  j["gamma"] = a.gamma;
  const std::string body = j.dump(2) + "\n";
  if (!a.output.empty()) write_file_atomic(a.output, body);
  out << body;
  return kExitOk;
}

// ---- experiments ----------------------------------------------------------

struct ExperimentArgs {
  std::string name;
  std::string config;
  std::string out;
  bool quick = false;
  bool full = false;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> workers;
  std::optional<std::uint64_t> systems;
};

ExperimentConfig example_defaults(const std::string& name) {
  ExperimentConfig c;
  if (name == "example1") {
    c.horizons = {10, 20, 40, 80, 100, 200};
    c.sigma_w = {0.1, 0.2, 0.3, 0.4, 0.5};
    c.trials = 100;
  } else {
    c.plant.kind = PlantKind::Random;
    c.plant.n = 3;
    c.plant.m = 1;
    c.horizons = {10};
    c.sigma_w = {0.1, 1.0};
    c.trials = 50;
    c.systems = 200;
  }
  return c;
}

int cmd_koopman(const std::string& config_path, const std::string& out_flag, std::ostream& out);

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  if (a.name == "koopman-demo") return cmd_koopman(a.config, a.out, out);
  if (a.name != "example1" && a.name != "example2") {
    throw Error(ErrorCode::ConfigInvalid, "unknown experiment '" + a.name + "' (example1, example2, koopman-demo)");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = timestamp();
  std::string text;
  const json j = load_config(a.config, text);
  ExperimentConfig cfg = example_defaults(a.name);
  if (a.quick) {
    if (a.name == "example1") cfg.trials = 10;
    cfg.systems = 200;
  }
  if (a.full && a.name == "example2") cfg.systems = 1000;
  cfg = experiment_config_from_json(j, cfg, text);
  if (a.name == "example2" && j.contains("plant")) {
    // plant.kind for example2 must stay random
    if (cfg.plant.kind != PlantKind::Random) throw Error(ErrorCode::ConfigInvalid, "plant: example2 needs a random plant");
  }
  if (a.trials) cfg.trials = *a.trials;
  if (a.seed) cfg.master_seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;
  if (a.systems) cfg.systems = *a.systems;
  cfg.validate();

  OutputSet files(output_directory(a.out));
  json extra;
  if (a.name == "example1") {
    const Example1Result res = run_example1(cfg);
    for (const auto& t : res.tables()) files.add(t);
    extra = {{"optimal_cost", res.optimal_cost}, {"optimal_gain", matrix_to_json(res.optimal_gain)}};
  } else {
    const Example2Result res = run_example2(cfg);
    for (const auto& t : res.tables()) files.add(t);
  }
  json manifest = manifest_base("experiment " + a.name, experiment_config_to_json(cfg), cfg.master_seed, started,
                                seconds_since(t0));
  if (!extra.is_null()) manifest["results"] = extra;
  files.finish(std::move(manifest));
  out << (files.dir() / "manifest.json").string() << "\n";
  return kExitOk;
}

// ---- koopman-demo ---------------------------------------------------------

std::vector<unsigned> parse_monomial(const std::string& term, std::size_t n) {
  std::vector<unsigned> e(n, 0);
  std::size_t pos = 0;
  const auto fail = [&] {
    throw Error(ErrorCode::ConfigInvalid, "dictionary.terms: cannot parse '" + term + "' (expected e.g. x1^2*x2)");
  };
  while (pos < term.size()) {
    if (term[pos] != 'x') fail();
    ++pos;
    std::size_t used = 0;
    unsigned long idx = 0;
    try {
      idx = std::stoul(term.substr(pos), &used);
    } catch (const std::exception&) {
      fail();
    }
    pos += used;
    if (idx == 0 || idx > n) fail();
    unsigned long power = 1;
    if (pos < term.size() && term[pos] == '^') {
      ++pos;
      try {
        power = std::stoul(term.substr(pos), &used);
      } catch (const std::exception&) {
        fail();
      }
      pos += used;
    }
    e[idx - 1] += static_cast<unsigned>(power);
    if (pos < term.size()) {
      if (term[pos] != '*') fail();
      ++pos;
    }
  }
  return e;
}

LiftingDictionary dictionary_from_json(const json& j, std::size_t n, const std::string& text, const fs::path& base) {
  Section s(j, "dictionary", text);
  s.allow({"type", "terms", "degree", "centers", "centers_file", "width"});
  const std::string type = s.string("type", "monomials");
  if (type == "monomials") {
    if (s.has("degree")) return LiftingDictionary::monomials(n, static_cast<unsigned>(s.count("degree", 2)));
    const json& terms = s.has("terms") ? s.raw("terms") : json::array({"x1", "x2", "x1^2"});
    if (!terms.is_array()) config_error("dictionary.terms", "terms", text, "expected an array of strings");
    std::vector<Observable> obs;
    for (const auto& t : terms) {
      if (!t.is_string()) config_error("dictionary.terms", "terms", text, "expected an array of strings");
      obs.push_back(Observable::monomial(parse_monomial(t.get<std::string>(), n)));
    }
    return LiftingDictionary(n, std::move(obs));
  }
  if (type == "rbf") {
    Matrix centers;
    if (s.has("centers_file")) {
      const fs::path file = base / s.string("centers_file", "");
      const Table t = parse_csv(read_file(file), file.string());
      centers = Matrix(t.rows.size(), t.header.size());
      for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < t.header.size(); ++c) centers(r, c) = std::stod(t.rows[r][c]);
    } else {
      centers = s.matrix("centers");
    }
    return LiftingDictionary::rbf(n, centers, s.number("width", 1.0));
  }
  config_error("dictionary.type", "type", text, "expected monomials or rbf");
}

int cmd_koopman(const std::string& config_path, const std::string& out_flag, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = timestamp();
  std::string text;
  const json j = load_config(config_path, text);
  Section s(j, "", text);
  s.allow({"plant", "dictionary", "T", "gamma", "sigma_x", "sigma_w", "input_std", "seed", "x0", "steps", "q", "r",
           "epsilon", "sdp_tol"});
  const std::string plant_name = s.string("plant", "quadratic-demo");
  if (plant_name != "quadratic-demo") config_error("plant", "plant", text, "only quadratic-demo is available");
  const NonlinearPlant plant = quadratic_demo_plant();
  const LiftingDictionary dict = dictionary_from_json(s.has("dictionary") ? s.raw("dictionary") : json::object(),
                                                      plant.n, text, config_dir(config_path));
  const std::uint64_t seed = s.count("seed", 7);
  const NoiseSpec noise{s.number("sigma_x", 1.0), s.number("sigma_w", 0.0), seed};
  const std::size_t horizon = s.count("T", 30);
  const double gamma = s.number("gamma", 1e-6);
  const std::vector<double> x0v = s.numbers("x0", {1.0, 1.0});
  if (x0v.size() != plant.n) config_error("x0", "x0", text, "expected " + std::to_string(plant.n) + " numbers");
  const std::size_t steps = s.count("steps", 50);
  SynthesisOptions opt;
  opt.sdp.tol = s.number("sdp_tol", opt.sdp.tol);

  const DataRecord raw = collect_nonlinear(plant, noise, s.number("input_std", 1.0), horizon);
  const LiftedDataRecord lifted = lift(raw, dict, opt.tol);
  const LqrWeights w = lifted_weights(
      dict, LqrWeights::scaled_identity(plant.n, plant.m, s.number("q", 1.0), s.number("r", 1.0)),
      s.number("epsilon", 1e-6));
  const GainResult g = synth_koopman(lifted, w, gamma, opt);
  const Matrix traj = koopman_rollout(plant, dict, g.k, Matrix::column(x0v), steps);

  Table roll{"koopman_rollout.csv", {"step"}, {}};
  for (std::size_t i = 0; i < plant.n; ++i) roll.header.push_back("x" + std::to_string(i + 1));
  roll.header.push_back("norm");
  for (std::size_t i = 0; i < plant.m; ++i) roll.header.push_back("u" + std::to_string(i + 1));
  for (std::size_t k = 0; k <= steps; ++k) {
    const Matrix x = traj.col(k);
    std::vector<std::string> row{std::to_string(k)};
    for (std::size_t i = 0; i < plant.n; ++i) row.push_back(format_double(x(i, 0)));
    row.push_back(format_double(x.frobenius_norm()));
    const Matrix u = g.k * dict.lift(x);
    for (std::size_t i = 0; i < plant.m; ++i) row.push_back(format_double(u(i, 0)));
    roll.add_row(std::move(row));
  }
  json gj = gain_result_to_json(g);
  gj["observables"] = dict.names();
  gj["embedding_residual"] = embedding_residual(lifted, opt.tol);
  gj["gram_rank"] = lifted.gram_rank;
  gj["final_state_norm"] = traj.col(steps).frobenius_norm();

  OutputSet files(output_directory(out_flag));
  files.add(roll);
  files.add("koopman_gain.json", gj.dump(2) + "\n");
  files.finish(manifest_base("koopman-demo", j, seed, started, seconds_since(t0)));
  if (!lifted.observables_independent()) {
    out << "warning: lifted observables are linearly dependent on the sampled data (rank "
        << lifted.gram_rank << " < " << dict.n_z() << ")\n";
  }
  out << (files.dir() / "manifest.json").string() << " final_state_norm=" << format_double(traj.col(steps).frobenius_norm())
      << "\n";
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
      return kExitIo;
    case ErrorCode::SolverFailed:
    case ErrorCode::NoConvergence:
      return kExitSolver;
    default:
      return kExitConfig;
  }
}

nlohmann::json parse_config_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw Error(ErrorCode::ConfigInvalid, source + " line " + std::to_string(line) + ": malformed JSON");
  }
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig c, const std::string& text) {
  Section s(j, "", text);
  s.allow({"plant", "horizons", "T", "sigma_w", "lambda_grid", "gamma_grid", "trials", "master_seed", "q", "r",
           "sigma_x", "input_std", "mixed", "systems", "coefficient_interval", "workers", "sdp_tol", "sdp_max_iter",
           "omega_uses_psi"});
  if (s.has("plant")) c.plant = plant_from_json(s.raw("plant"), "plant", text, fs::current_path());
  if (s.has("horizons")) {
    c.horizons.clear();
    for (double t : s.numbers("horizons", {})) {
      if (!(t >= 1.0) || t != std::floor(t)) config_error("horizons", "horizons", text, "expected positive integers");
      c.horizons.push_back(static_cast<std::size_t>(t));
    }
  }
  if (s.has("T")) c.horizons = {static_cast<std::size_t>(s.count("T", 10))};
  if (s.has("sigma_w")) {
    c.sigma_w = s.raw("sigma_w").is_array() ? s.numbers("sigma_w", {}) : std::vector<double>{s.number("sigma_w", 0.1)};
  }
  c.lambda_grid = s.numbers("lambda_grid", c.lambda_grid);
  c.gamma_grid = s.numbers("gamma_grid", c.gamma_grid);
  c.trials = s.count("trials", c.trials);
  c.master_seed = s.count("master_seed", c.master_seed);
  c.q_scale = s.number("q", c.q_scale);
  c.r_scale = s.number("r", c.r_scale);
  c.sigma_x = s.number("sigma_x", c.sigma_x);
  c.input_std = s.number("input_std", c.input_std);
  c.mixed = s.flag("mixed", c.mixed);
  c.systems = s.count("systems", c.systems);
  if (s.has("coefficient_interval")) {
    const auto iv = s.numbers("coefficient_interval", {});
    if (iv.size() != 2) config_error("coefficient_interval", "coefficient_interval", text, "expected [lo, hi]");
    c.coefficient_lo = iv[0];
    c.coefficient_hi = iv[1];
  }
  c.workers = s.count("workers", c.workers);
  c.synthesis.sdp.tol = s.number("sdp_tol", c.synthesis.sdp.tol);
  c.synthesis.sdp.max_iter = static_cast<int>(s.count("sdp_max_iter", static_cast<std::uint64_t>(c.synthesis.sdp.max_iter)));
  c.synthesis.omega_uses_psi = s.flag("omega_uses_psi", c.synthesis.omega_uses_psi);
  c.validate();
  return c;
}

std::filesystem::path output_directory(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DDLQR_OUTPUT_DIR"); env && *env) return env;
  return "ddlqr-out";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data-driven LQR synthesis from trajectory data", "ddlqr"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config, out_dir;
  auto* sim = app.add_subcommand("simulate", "Simulate a plant and write a data CSV with a JSON sidecar");
  sim->add_option("--config,-c", config, "JSON config");
  sim->add_option("--out,-o", out_dir, "Output directory (default $DDLQR_OUTPUT_DIR or ddlqr-out)");

  SynthesizeArgs sa;
  auto* syn = app.add_subcommand("synthesize", "Synthesize a gain from a data CSV");
  syn->add_option("--data,-d", sa.data, "Data CSV")->required();
  syn->add_option("--method,-m", sa.method,
                  "model-based, indirect, indirect-ls, indirect-tikhonov, direct-cov, direct-cov-omega, "
                  "direct-ridge, direct-mixed")
      ->required();
  syn->add_option("--lambda", sa.lambda, "Omega penalty coefficient");
  syn->add_option("--gamma", sa.gamma, "Ridge coefficient");
  syn->add_option("--q", sa.q, "Q = q I (ignored with --weights)");
  syn->add_option("--r", sa.r, "R = r I (ignored with --weights)");
  syn->add_option("--weights", sa.weights, "JSON file with Q and R matrices");
  syn->add_option("--truth", sa.truth, "Sidecar JSON with the true system (default: next to the data)");
  syn->add_flag("--no-truth", sa.no_truth, "Do not evaluate on the true system");
  syn->add_option("--output", sa.output, "Also write the result JSON here");
  syn->add_option("--tol", sa.tol, "Conic solver tolerance");

  ExperimentArgs ea;
  auto* exp = app.add_subcommand("experiment", "Run example1, example2 or koopman-demo");
  exp->add_option("name", ea.name, "example1 | example2 | koopman-demo")->required();
  exp->add_option("--config,-c", ea.config, "JSON config");
  exp->add_option("--out,-o", ea.out, "Output directory");
  exp->add_flag("--quick", ea.quick, "example1: 10 trials; example2: 200 systems");
  exp->add_flag("--full", ea.full, "example2: 1000 systems");
  exp->add_option("--trials", ea.trials, "Override trials");
  exp->add_option("--seed", ea.seed, "Override master_seed");
  exp->add_option("--workers", ea.workers, "Worker threads (0 = all cores)");
  exp->add_option("--systems", ea.systems, "Override example2 system count");

  auto* koop = app.add_subcommand("koopman-demo", "Lifted-state synthesis on the quadratic demo plant");
  koop->add_option("--config,-c", config, "JSON config");
  koop->add_option("--out,-o", out_dir, "Output directory");

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config, out_dir, out);
    if (syn->parsed()) return cmd_synthesize(sa, out);
    if (exp->parsed()) return cmd_experiment(ea, out);
    if (koop->parsed()) return cmd_koopman(config, out_dir, out);
    out << "ddlqr " << kVersion << "\n";
    return kExitOk;
  } catch (const SolverFailure& e) {
    err << "error: " << e.what() << " (status " << e.status() << ")\n";
    return kExitSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace ddlqr
