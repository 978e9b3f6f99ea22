#include "occlab/cli/config.hpp"

#include "occlab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

namespace occlab::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const char* type_name(const json& j) { return j.type_name(); }

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, std::string("expected a number, got ") + type_name(j));
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

long long as_integer(const json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<long long>();
  if (j.is_number_float()) {
    const double x = j.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
  }
  throw ConfigError(path, std::string("expected an integer, got ") + type_name(j));
}

/// Walks one JSON object, copying each value read (or its default) into `out` and
/// rejecting keys that were never read.
class Reader {
 public:
  Reader(const json& in, json& out, std::string path) : in_(in), out_(out), path_(std::move(path)) {
    if (!in_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, std::string("expected an object, got ") + type_name(in_));
    if (!out_.is_object()) out_ = json::object();
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return join(path_, key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = in_.find(key);
    return it == in_.end() ? nullptr : &*it;
  }
  bool has(const std::string& key) const { return in_.contains(key); }

  double number(const std::string& key, double def, double lo = -kInf, double hi = kInf, bool open_lo = false) {
    const json* j = find(key);
    const double x = j ? as_number(*j, at(key)) : def;
    if (x < lo || x > hi || (open_lo && x == lo)) {
      std::string range = std::string(open_lo ? "(" : "[") + std::to_string(lo) + ", " + std::to_string(hi) + "]";
      throw ConfigError(at(key), "value " + std::to_string(x) + " outside " + range);
    }
    out_[key] = x;
    return x;
  }

  long long integer(const std::string& key, long long def, long long lo, long long hi) {
    const json* j = find(key);
    const long long x = j ? as_integer(*j, at(key)) : def;
    if (x < lo || x > hi)
      throw ConfigError(at(key), "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
    out_[key] = x;
    return x;
  }

  bool boolean(const std::string& key, bool def) {
    const json* j = find(key);
    if (j && !j->is_boolean()) throw ConfigError(at(key), std::string("expected a boolean, got ") + type_name(*j));
    const bool b = j ? j->get<bool>() : def;
    out_[key] = b;
    return b;
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* j = find(key);
    if (j && !j->is_string()) throw ConfigError(at(key), std::string("expected a string, got ") + type_name(*j));
    std::string s = j ? j->get<std::string>() : def;
    out_[key] = s;
    return s;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
    const json* j = find(key);
    std::vector<double> v;
    if (!j) {
      v = def;
    } else {
      if (!j->is_array()) throw ConfigError(at(key), std::string("expected an array, got ") + type_name(*j));
      for (std::size_t i = 0; i < j->size(); ++i) v.push_back(as_number((*j)[i], index(at(key), i)));
    }
    out_[key] = v;
    return v;
  }

  /// Child object; a missing key reads as {}.
  Reader object(const std::string& key) {
    static const json empty = json::object();
    const json* j = find(key);
    return Reader(j ? *j : empty, out_[key], at(key));
  }

  void finish() const {
    for (const auto& [key, value] : in_.items())
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown key");
  }

  json& out() { return out_; }

 private:
  const json& in_;
  json& out_;
  std::string path_;
  std::set<std::string> seen_;
};

/// A mode is {"k": [..], "a": x, "b": y} or [[..], a, b]; coefficients default to 0.
Mode parse_mode(const json& j, int dim, const std::string& path, json& out) {
  const json* k = nullptr;
  double a = 0.0, b = 0.0;
  if (j.is_array()) {
    if (j.size() < 1 || j.size() > 3) throw ConfigError(path, "a mode array is [k, a, b]");
    k = &j[0];
    if (j.size() > 1) a = as_number(j[1], index(path, 1));
    if (j.size() > 2) b = as_number(j[2], index(path, 2));
  } else if (j.is_object()) {
    for (const auto& [key, v] : j.items())
      if (key != "k" && key != "a" && key != "b") throw ConfigError(join(path, key), "unknown key");
    if (!j.contains("k")) throw ConfigError(join(path, "k"), "missing wavevector");
    k = &j.at("k");
    if (j.contains("a")) a = as_number(j.at("a"), join(path, "a"));
    if (j.contains("b")) b = as_number(j.at("b"), join(path, "b"));
  } else {
    throw ConfigError(path, std::string("expected a mode object or array, got ") + type_name(j));
  }
  const std::string kp = j.is_array() ? index(path, 0) : join(path, "k");
  if (!k->is_array() || int(k->size()) != dim)
    throw ConfigError(kp, "wavevector must be an array of " + std::to_string(dim) + " integers");
  Mode m;
  m.k = Wavevector(dim);
  std::vector<long long> kv;
  for (int i = 0; i < dim; ++i) {
    const long long ki = as_integer((*k)[i], index(kp, i));
    if (std::abs(ki) > 1 << 20) throw ConfigError(index(kp, i), "frequency out of range");
    m.k[i] = int(ki);
    kv.push_back(ki);
  }
  m.a = a;
  m.b = b;
  out = {{"k", kv}, {"a", a}, {"b", b}};
  return m;
}

PeriodicField parse_field(const json& j, const Grid& g, const std::string& path, json& out) {
  if (!j.is_array()) throw ConfigError(path, std::string("expected a list of modes, got ") + type_name(j));
  ModeList modes;
  out = json::array();
  for (std::size_t i = 0; i < j.size(); ++i) {
    json m;
    modes.push_back(parse_mode(j[i], g.dim, index(path, i), m));
    out.push_back(m);
  }
  try {
    return synthesize(modes, g);
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
}

std::vector<PeriodicField> parse_fields(const json& j, const Grid& g, const std::string& path, json& out,
                                        std::size_t count) {
  if (!j.is_array() || (count && j.size() != count))
    throw ConfigError(path, count ? "expected a list of " + std::to_string(count) + " fields"
                                  : std::string("expected a list of fields"));
  std::vector<PeriodicField> fs;
  out = json::array();
  for (std::size_t i = 0; i < j.size(); ++i) {
    json o;
    fs.push_back(parse_field(j[i], g, index(path, i), o));
    out.push_back(o);
  }
  return fs;
}

/// Strings are shorthand for {"preset": name}.
json expand_preset(const json* j, const char* def) {
  if (!j) return {{"preset", def}};
  if (j->is_string()) return {{"preset", j->get<std::string>()}};
  return *j;
}

template <class F>
auto model_call(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
}

DriftSpec parse_drift(Reader& model, const Grid& g) {
  const json spec = expand_preset(model.find("drift"), "zero-drift");
  Reader r(spec, model.out()["drift"], model.at("drift"));
  DriftSpec d;
  if (r.has("components")) {
    if (r.has("preset")) throw ConfigError(r.at("preset"), "give either a preset or components");
    const json* c = r.find("components");
    const auto fs = parse_fields(*c, g, r.at("components"), r.out()["components"], std::size_t(g.dim));
    const double beta = r.number("declared_smoothness", 1.0, 0.0, kInf, true);
    d = model_call(r.path(), [&] { return make_drift(fs, beta); });
  } else {
    const std::string preset = r.string("preset", "zero-drift");
    if (preset == "zero-drift") {
      d = zero_drift(g);
    } else if (preset == "shear") {
      if (g.dim < 2) throw ConfigError(r.at("preset"), "the shear preset needs dim >= 2");
      d = model_call(r.path(), [&] { return shear_drift(g); });
    } else if (preset == "gradient") {
      const json* p = r.find("potential");
      if (!p) throw ConfigError(r.at("potential"), "the gradient preset needs a potential mode list");
      const PeriodicField B = parse_field(*p, g, r.at("potential"), r.out()["potential"]);
      d = model_call(r.path(), [&] { return gradient_drift(B); });
    } else {
      throw ConfigError(r.at("preset"), "unknown drift preset '" + preset + "' (zero-drift, shear, gradient)");
    }
    if (r.has("declared_smoothness")) d.declared_smoothness = r.number("declared_smoothness", 1.0, 0.0, kInf, true);
  }
  r.finish();
  return d;
}

DiffusivitySpec parse_diffusivity(Reader& model, const Grid& g) {
  const json spec = expand_preset(model.find("diffusivity"), "identity");
  Reader r(spec, model.out()["diffusivity"], model.at("diffusivity"));
  DiffusivitySpec s;
  if (r.has("sigma")) {
    if (r.has("preset")) throw ConfigError(r.at("preset"), "give either a preset or sigma");
    const json* c = r.find("sigma");
    const auto fs = parse_fields(*c, g, r.at("sigma"), r.out()["sigma"], std::size_t(g.dim * g.dim));
    s = model_call(r.path(), [&] { return make_diffusivity(fs); });
  } else {
    const std::string preset = r.string("preset", "identity");
    if (preset == "identity") {
      const double scale = r.number("scale", 1.0, 0.0, kInf, true);
      s = model_call(r.path(), [&] { return scaled_identity_diffusivity(g, scale); });
    } else if (preset == "modulated") {
      const double amp = r.number("amplitude", 0.25, 0.0, 1.0);
      s = model_call(r.path(), [&] { return modulated_diffusivity(g, amp); });
    } else if (preset == "diagonal") {
      const std::vector<double> a = r.numbers("a", std::vector<double>(std::size_t(g.dim), 1.0));
      if (int(a.size()) != g.dim) throw ConfigError(r.at("a"), "expected " + std::to_string(g.dim) + " entries");
      for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i] > 0)) throw ConfigError(index(r.at("a"), i), "diagonal diffusivity must be positive");
      s = model_call(r.path(), [&] { return diagonal_diffusivity(g, a); });
    } else {
      throw ConfigError(r.at("preset"),
                        "unknown diffusivity preset '" + preset + "' (identity, modulated, diagonal)");
    }
  }
  r.finish();
  return s;
}

std::vector<double> geometric_T(double lo, double hi) {
  std::vector<double> T;
  for (double t = lo; t <= hi * (1 + 1e-12); t *= 2) T.push_back(t);
  return T;
}

int default_resolution(int dim) {
  switch (dim) {
    case 1: return 64;
    case 2: return 32;
    case 3: return 16;
    default: return 8;
  }
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError(what, "expected an unsigned 64-bit integer, got '" + s + "'");
  return v;
}

int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"invariant", "poisson",  "simulate", "clt",
                                                 "wasserstein-rate", "entropy", "all"};
  return names;
}

Overrides environment_overrides() {
  Overrides o;
  if (const char* s = std::getenv("OCCLAB_SEED"); s && *s) o.seed = parse_u64(s, "env.OCCLAB_SEED");
  if (const char* t = std::getenv("OCCLAB_THREADS"); t && *t) {
    const std::uint64_t n = parse_u64(t, "env.OCCLAB_THREADS");
    if (n < 1 || n > 1024) throw ConfigError("env.OCCLAB_THREADS", "thread count outside [1, 1024]");
    o.threads = int(n);
  }
  return o;
}

Overrides merge(const Overrides& primary, const Overrides& fallback) {
  Overrides o = fallback;
  if (primary.seed) o.seed = primary.seed;
  if (primary.threads) o.threads = primary.threads;
  if (primary.output) o.output = primary.output;
  return o;
}

Config load_config(const nlohmann::json& raw, const std::string& subcommand, const Overrides& overrides) {
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
    throw ConfigError("subcommand", "unknown subcommand '" + subcommand + "'");
  Config c;
  c.resolved = json::object();
  Reader root(raw, c.resolved, "");

  Reader grid = root.object("grid");
  const int dim = int(grid.integer("dim", 2, 1, kMaxDim));
  const int n = int(grid.integer("resolution", default_resolution(dim), 4, 1 << 12));
  if (n % 2) throw ConfigError(grid.at("resolution"), "resolution must be even");
  grid.finish();
  if (subcommand == "wasserstein-rate" && dim > 3)
    throw ConfigError(grid.at("dim"),
                      "wasserstein-rate is limited to dim <= 3: the root-T rate of W1 for the occupation "
                      "measure is only established for d <= 3 (clt accepts any dim)");
  c.grid = make_grid(dim, n);

  Reader model = root.object("model");
  c.drift = parse_drift(model, c.grid);
  c.diffusivity = parse_diffusivity(model, c.grid);
  model.finish();

  if (const json* f = root.find("functions")) {
    c.functions = parse_fields(*f, c.grid, "functions", c.resolved["functions"], 0);
  } else {
    std::vector<int> k(std::size_t(dim), 0);
    k[0] = 1;
    const json def = json::array({json::array({{{"k", k}, {"a", std::sqrt(2.0)}, {"b", 0.0}}})});
    c.functions = parse_fields(def, c.grid, "functions", c.resolved["functions"], 0);
  }

  Reader sde = root.object("sde");
  c.sde.T = sde.number("T", 200.0, 0.0, 1e9, true);
  c.sde.h = sde.number("h", 0.01, 0.0, 1.0, true);
  if (c.sde.T < c.sde.h) throw ConfigError(sde.at("T"), "T must be at least one step h");
  c.sde.replications = int(sde.integer("replications", 200, 1, 1000000));
  const std::vector<double> x0 = sde.numbers("x0", std::vector<double>(std::size_t(dim), 0.0));
  if (int(x0.size()) != dim) throw ConfigError(sde.at("x0"), "expected " + std::to_string(dim) + " coordinates");
  c.sde.x0 = Point(dim);
  for (int i = 0; i < dim; ++i) c.sde.x0[i] = x0[std::size_t(i)];
  c.sde.dump_path = sde.boolean("dump_path", false);
  c.sde.histogram_bins = int(sde.integer("histogram_bins", 0, 0, 4096));
  sde.finish();

  Reader ot = root.object("wasserstein");
  c.wasserstein.T_grid = ot.numbers("T_grid", geometric_T(32, 2048));
  if (c.wasserstein.T_grid.size() < 2) throw ConfigError(ot.at("T_grid"), "need at least two horizons");
  for (std::size_t i = 0; i < c.wasserstein.T_grid.size(); ++i)
    if (!(c.wasserstein.T_grid[i] > 0) || (i && c.wasserstein.T_grid[i] <= c.wasserstein.T_grid[i - 1]))
      throw ConfigError(index(ot.at("T_grid"), i), "horizons must be positive and increasing");
  c.wasserstein.m = int(ot.integer("m", 16, 2, 1024));
  c.wasserstein.replications = int(ot.integer("replications", 50, 2, 100000));
  c.wasserstein.h = ot.number("h", 0.01, 0.0, 1.0, true);
  ot.finish();

  Reader en = root.object("entropy");
  {
    Reader ball = en.object("ball");
    c.entropy.ball.dim = int(ball.integer("dim", dim, 1, kMaxDim));
    c.entropy.ball.s = ball.number("s", 1.0);
    const json* p = ball.find("p");
    if (!p || (p->is_string() && p->get<std::string>() == "inf")) {
      c.entropy.ball.p = kInf;
      ball.out()["p"] = "inf";
    } else {
      const double pv = as_number(*p, ball.at("p"));
      if (pv != 2.0) throw ConfigError(ball.at("p"), "p must be 2 or \"inf\"");
      c.entropy.ball.p = 2.0;
      ball.out()["p"] = 2.0;
    }
    c.entropy.ball.M = ball.number("M", 1.0, 0.0, kInf, true);
    ball.finish();
  }
  const std::string norm = en.string("norm", c.entropy.ball.p == 2.0 ? "h_minus_1" : "besov_sup");
  try {
    c.entropy.norm = parse_entropy_norm(norm);
  } catch (const InvalidArgument& e) {
    throw ConfigError(en.at("norm"), e.what());
  }
  c.entropy.options.t = en.number("t", -0.5);
  c.entropy.options.gamma = en.number("gamma", 0.1, 0.0, 1.0, true);
  c.entropy.options.rho_constant = en.number("rho_constant", 1.0, 0.0, kInf, true);
  c.entropy.options.truncation = int(en.integer("truncation", 64, 1, 4096));
  c.entropy.options.budget = en.number("budget", 1e9, 1.0);
  c.entropy.decades = en.number("decades", 4.0, 0.0, 12.0, true);
  c.entropy.per_decade = int(en.integer("per_decade", 8, 2, 100));
  c.entropy.radii = en.numbers("radii", {});
  for (std::size_t i = 0; i < c.entropy.radii.size(); ++i)
    if (!(c.entropy.radii[i] > 0)) throw ConfigError(index(en.at("radii"), i), "radii must be positive");
  c.entropy.doubling_check = en.boolean("doubling_check", true);
  en.finish();

  Reader suite = root.object("suite");
  {
    std::vector<double> all;
    for (int i = 1; i <= 10; ++i) all.push_back(i);
    const std::vector<double> ids = suite.numbers("criteria", all);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != std::floor(ids[i]) || ids[i] < 1 || ids[i] > 10)
        throw ConfigError(index(suite.at("criteria"), i), "criteria are integers in [1, 10]");
      c.suite_criteria.push_back(int(ids[i]));
    }
    std::sort(c.suite_criteria.begin(), c.suite_criteria.end());
    c.suite_criteria.erase(std::unique(c.suite_criteria.begin(), c.suite_criteria.end()), c.suite_criteria.end());
    suite.out()["criteria"] = c.suite_criteria;
  }
  suite.finish();

  Reader seeds = root.object("seeds");
  if (const json* m = seeds.find("master")) {
    if (!m->is_number_unsigned() && !(m->is_number_integer() && m->get<long long>() >= 0))
      throw ConfigError(seeds.at("master"), "expected a non-negative integer");
    c.seed = m->get<std::uint64_t>();
  } else {
    c.seed = 20240601;
  }
  if (overrides.seed) c.seed = *overrides.seed;
  seeds.out()["master"] = c.seed;
  seeds.finish();

  c.threads = int(root.integer("threads", 0, 0, 1024));
  if (overrides.threads) c.threads = *overrides.threads;
  if (c.threads == 0) c.threads = default_threads();
  c.resolved["threads"] = c.threads;

  c.output = root.string("output", "occlab-out");
  if (overrides.output) c.output = *overrides.output;
  c.resolved["output"] = c.output;

  root.finish();
  c.resolved["subcommand"] = subcommand;
  return c;
}

Config load_config_file(const std::filesystem::path& file, const std::string& subcommand,
                        const Overrides& overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError("--config", "cannot open " + file.string());
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return load_config(raw, subcommand, overrides);
}

}  // namespace occlab::cli
