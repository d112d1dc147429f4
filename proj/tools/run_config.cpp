#include "run_config.hpp"

#include "checks.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace wiener::cli {

ConfigError::ConfigError(Kind kind, std::string field, const std::string& message)
    : std::invalid_argument(message), kind_(kind), field_(std::move(field)) {}

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

[[noreturn]] void range_error(const std::string& field, const std::string& what, const std::string& value) {
  throw ConfigError(ConfigError::Kind::kRange, field, "invalid value for " + field + ": " + what + ", got '" + value + "'");
}

double parse_double(const std::string& field, const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (text.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    range_error(field, "expected a finite number", text);
  return v;
}

long long parse_integer(const std::string& field, const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(begin, &end, 10);
  if (text.empty() || *end != '\0' || errno == ERANGE) range_error(field, "expected an integer", text);
  return v;
}

double in_range(const std::string& field, const std::string& text, double lo, double hi, bool open_lo = false,
                bool open_hi = false) {
  const double v = parse_double(field, text);
  if ((open_lo ? v <= lo : v < lo) || (open_hi ? v >= hi : v > hi)) {
    std::ostringstream os;
    os << "must lie in " << (open_lo ? "(" : "[") << lo << ", " << hi << (open_hi ? ")" : "]");
    range_error(field, os.str(), text);
  }
  return v;
}

long long int_in_range(const std::string& field, const std::string& text, long long lo, long long hi) {
  const long long v = parse_integer(field, text);
  if (v < lo || v > hi) range_error(field, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]", text);
  return v;
}

std::string choice(const std::string& field, const std::string& text, const std::vector<std::string>& allowed) {
  if (std::find(allowed.begin(), allowed.end(), text) != allowed.end()) return text;
  std::string list;
  for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
  range_error(field, "must be one of " + list, text);
}

struct Field {
  KeyInfo info;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<std::string> kScalarPresets = {"zero", "constant", "linear", "tanh", "sin"};

const std::vector<Field>& fields() {
  using C = RunConfig;
  using S = const std::string&;
  static const std::vector<Field> f = {
      {{"run", "command", "verify|smooth|spde|fbm|density"},
       [](C& c, S k, S v) { c.command = choice(k, v, {"verify", "smooth", "spde", "fbm", "density"}); },
       [](const C& c) { return c.command; }},
      {{"run", "suite", "verification suite: all|chaos|gsro|density|smoothing"},
       [](C& c, S k, S v) { c.suite = choice(k, v, checks::suite_names()); }, [](const C& c) { return c.suite; }},
      {{"run", "preset", "verification scale: minimal|full"},
       [](C& c, S k, S v) { c.preset = choice(k, v, {"minimal", "full"}); }, [](const C& c) { return c.preset; }},
      {{"run", "seed", "base seed, non-negative integer"},
       [](C& c, S k, S v) {
         c.seed = static_cast<std::uint64_t>(int_in_range(k, v, 0, std::numeric_limits<long long>::max()));
       },
       [](const C& c) { return std::to_string(c.seed); }},
      {{"run", "output", "output directory"}, [](C& c, S, S v) { c.output = v; }, [](const C& c) { return c.output; }},
      {{"run", "threads", "worker threads, 0 = available parallelism"},
       [](C& c, S k, S v) { c.threads = static_cast<int>(int_in_range(k, v, 0, 1024)); },
       [](const C& c) { return std::to_string(c.threads); }},
      {{"run", "time_limit", "runtime cap in seconds"},
       [](C& c, S k, S v) { c.time_limit = in_range(k, v, 0.0, 86400.0, true); },
       [](const C& c) { return format_double(c.time_limit); }},
      {{"grid", "T", "horizon"}, [](C& c, S k, S v) { c.T = in_range(k, v, 0.0, 100.0, true); },
       [](const C& c) { return format_double(c.T); }},
      {{"grid", "n", "number of grid cells"}, [](C& c, S k, S v) { c.n = static_cast<int>(int_in_range(k, v, 1, 4096)); },
       [](const C& c) { return std::to_string(c.n); }},
      {{"noise", "correlation", "cross-covariance kind: zero|scalar|volterra"},
       [](C& c, S k, S v) { c.correlation = choice(k, v, {"zero", "scalar", "volterra"}); },
       [](const C& c) { return c.correlation; }},
      {{"noise", "rho", "correlation strength, |rho| < 1"},
       [](C& c, S k, S v) { c.rho = in_range(k, v, -1.0, 1.0, true, true); },
       [](const C& c) { return format_double(c.rho); }},
      {{"noise", "lambda", "decay rate of the exponential Volterra kernel"},
       [](C& c, S k, S v) { c.lambda = in_range(k, v, 0.0, 1000.0, true); },
       [](const C& c) { return format_double(c.lambda); }},
      {{"drift", "a1", "state drift: zero|constant|linear|tanh|sin"},
       [](C& c, S k, S v) { c.a1 = choice(k, v, kScalarPresets); }, [](const C& c) { return c.a1; }},
      {{"drift", "eps1", "state drift strength"}, [](C& c, S k, S v) { c.eps1 = in_range(k, v, -10.0, 10.0); },
       [](const C& c) { return format_double(c.eps1); }},
      {{"drift", "a2", "observation drift: zero|constant|linear|tanh|sin"},
       [](C& c, S k, S v) { c.a2 = choice(k, v, kScalarPresets); }, [](const C& c) { return c.a2; }},
      {{"drift", "eps2", "observation drift strength"}, [](C& c, S k, S v) { c.eps2 = in_range(k, v, -10.0, 10.0); },
       [](const C& c) { return format_double(c.eps2); }},
      {{"chaos", "K", "chaos truncation degree"}, [](C& c, S k, S v) { c.K = static_cast<int>(int_in_range(k, v, 0, 12)); },
       [](const C& c) { return std::to_string(c.K); }},
      {{"mc", "m", "Monte-Carlo sample count"},
       [](C& c, S k, S v) { c.m = static_cast<std::uint64_t>(int_in_range(k, v, 1, 1000000000)); },
       [](const C& c) { return std::to_string(c.m); }},
      {{"smoothing", "f", "test function: gaussian|identity|one"},
       [](C& c, S k, S v) { c.f = choice(k, v, {"gaussian", "identity", "one"}); }, [](const C& c) { return c.f; }},
      {{"smoothing", "width", "width of the gaussian test function"},
       [](C& c, S k, S v) { c.width = in_range(k, v, 0.0, 1000.0, true); },
       [](const C& c) { return format_double(c.width); }},
      {{"smoothing", "r_min", "left end of the r-grid"}, [](C& c, S k, S v) { c.r_min = in_range(k, v, -1e4, 1e4); },
       [](const C& c) { return format_double(c.r_min); }},
      {{"smoothing", "r_max", "right end of the r-grid"}, [](C& c, S k, S v) { c.r_max = in_range(k, v, -1e4, 1e4); },
       [](const C& c) { return format_double(c.r_max); }},
      {{"smoothing", "r_points", "r-grid points"},
       [](C& c, S k, S v) { c.r_points = static_cast<int>(int_in_range(k, v, 3, 100001)); },
       [](const C& c) { return std::to_string(c.r_points); }},
      {{"smoothing", "t_index", "grid time index of the estimate, -1 = final time"},
       [](C& c, S k, S v) { c.t_index = static_cast<int>(int_in_range(k, v, -1, 4096)); },
       [](const C& c) { return std::to_string(c.t_index); }},
      {{"smoothing", "substeps", "explicit SPDE sub-steps per grid cell"},
       [](C& c, S k, S v) { c.substeps = static_cast<int>(int_in_range(k, v, 1, 100000)); },
       [](const C& c) { return std::to_string(c.substeps); }},
      {{"smoothing", "third", "drift term of the SPDE: shortcut|projected|none"},
       [](C& c, S k, S v) { c.third = choice(k, v, {"shortcut", "projected", "none"}); },
       [](const C& c) { return c.third; }},
      {{"smoothing", "increment", "noise increment form: wick|product"},
       [](C& c, S k, S v) { c.increment = choice(k, v, {"wick", "product"}); },
       [](const C& c) { return c.increment; }},
      {{"fbm", "hurst", "Hurst index in (1/2, 1)"}, [](C& c, S k, S v) { c.hurst = in_range(k, v, 0.5, 1.0, true, true); },
       [](const C& c) { return format_double(c.hurst); }},
  };
  return f;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const Field* find_field(const std::string& key) {
  const auto dot = key.find('.');
  for (const Field& f : fields()) {
    if (dot == std::string::npos ? f.info.key == key : f.info.section + "." + f.info.key == key) return &f;
  }
  return nullptr;
}

void set_tolerance(RunConfig& c, const std::string& id, const std::string& value) {
  const auto& ids = tolerance_ids();
  const std::string field = "tolerance." + id;
  if (std::find(ids.begin(), ids.end(), id) == ids.end())
    throw ConfigError(ConfigError::Kind::kUnknownKey, field, "unknown key '" + field + "'");
  c.tolerance[id] = in_range(field, value, 0.0, std::numeric_limits<double>::max(), true);
}

}  // namespace

const std::vector<KeyInfo>& schema() {
  static const std::vector<KeyInfo> s = [] {
    std::vector<KeyInfo> out;
    for (const Field& f : fields()) out.push_back(f.info);
    return out;
  }();
  return s;
}

const std::vector<std::string>& tolerance_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& c : checks::catalog()) out.push_back(c.id);
    for (const char* id : {"smoother_ess", "spde_truncation", "fbm_grid_covariance", "density_unit_mean",
                           "density_det2"})
      out.emplace_back(id);
    return out;
  }();
  return ids;
}

void set_value(RunConfig& config, const std::string& key, const std::string& value) {
  if (key.rfind("tolerance.", 0) == 0) return set_tolerance(config, key.substr(10), value);
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError(ConfigError::Kind::kUnknownKey, key, "unknown key '" + key + "'");
  f->set(config, f->info.section + "." + f->info.key, value);
}

std::string get_value(const RunConfig& config, const std::string& key) {
  if (key.rfind("tolerance.", 0) == 0) {
    const auto it = config.tolerance.find(key.substr(10));
    return it == config.tolerance.end() ? "" : format_double(it->second);
  }
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError(ConfigError::Kind::kUnknownKey, key, "unknown key '" + key + "'");
  return f->get(config);
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  const auto malformed = [&](const std::string& what) {
    throw ConfigError(ConfigError::Kind::kMalformed, "", "malformed config, line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') malformed("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) malformed("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) malformed("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) malformed("missing key");
    if (section.empty()) malformed("key '" + key + "' outside a section");
    if (key.find('.') != std::string::npos) malformed("key '" + key + "' contains '.'");
    set_value(base, section + "." + key, value);
  }
  return base;
}

RunConfig parse_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigError::Kind::kMalformed, "", "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

RunConfig apply_overrides(RunConfig config, const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [k, v] : overrides) set_value(config, k, v);
  validate(config);
  return config;
}

void validate(const RunConfig& c) {
  if (!(c.r_min < c.r_max))
    throw ConfigError(ConfigError::Kind::kRange, "smoothing.r_max", "invalid value for smoothing.r_max: must exceed r_min");
  if (c.t_index > c.n)
    throw ConfigError(ConfigError::Kind::kRange, "smoothing.t_index",
                      "invalid value for smoothing.t_index: must not exceed n = " + std::to_string(c.n));
  if (c.command == "spde" && c.third == "shortcut" && c.a2 != "zero")
    throw ConfigError(ConfigError::Kind::kRange, "smoothing.third",
                      "invalid value for smoothing.third: shortcut requires a2 = zero");
  if (c.command != "verify" && c.command != "fbm") {
    try {
      check_smallness(make_drift(c), make_covariance(c));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(ConfigError::Kind::kRange, "drift.eps1", std::string("invalid drift: ") + e.what());
    }
  }
}

std::string to_text(const RunConfig& config, bool include_host) {
  std::ostringstream os;
  std::string section;
  for (const Field& f : fields()) {
    if (!include_host && (f.info.key == "output" || f.info.key == "threads")) continue;
    if (f.info.section != section) {
      os << (section.empty() ? "" : "\n") << '[' << f.info.section << "]\n";
      section = f.info.section;
    }
    os << f.info.key << " = " << f.get(config) << '\n';
  }
  os << "\n[tolerance]\n";
  for (const auto& [id, v] : config.tolerance) os << id << " = " << format_double(v) << '\n';
  return os.str();
}

// ---- model construction ----------------------------------------------------------------

TimeGrid make_grid(const RunConfig& c) { return TimeGrid(c.T, c.n); }

CovModel make_covariance(const RunConfig& c) {
  const TimeGrid g = make_grid(c);
  if (c.correlation == "zero") return build_covariance(g, CrossCovarianceSpec::zero());
  if (c.correlation == "scalar") return build_covariance(g, CrossCovarianceSpec::scalar(c.rho));
  return build_covariance(g, CrossCovarianceSpec::exponential_volterra(g, c.rho, c.lambda));
}

namespace {

ScalarFunction scalar_preset(const std::string& name, double eps) {
  if (name == "zero") return ScalarFunction::zero();
  if (name == "constant") return ScalarFunction::constant(eps);
  if (name == "linear") return ScalarFunction::linear(eps);
  if (name == "tanh") return ScalarFunction::scaled_tanh(eps);
  return ScalarFunction::scaled_sin(eps);
}

}  // namespace

DriftSpec make_drift(const RunConfig& c) {
  if (c.a1 == "zero" && c.a2 == "zero") return DriftSpec::zero();
  return {c.a1 + "/" + c.a2, scalar_preset(c.a1, c.eps1), scalar_preset(c.a2, c.eps2)};
}

SmoothingModel make_model(const RunConfig& c) {
  return {make_covariance(c), make_drift(c), TestFunction::preset(c.f, c.width), RGrid{c.r_min, c.r_max, c.r_points}};
}

SpdeOptions make_spde_options(const RunConfig& c) {
  SpdeOptions o;
  o.max_degree = c.K;
  o.substeps = c.substeps;
  o.third = c.third == "shortcut" ? ThirdTerm::kShortcut : c.third == "projected" ? ThirdTerm::kProjected : ThirdTerm::kNone;
  o.increment = c.increment == "wick" ? IncrementMode::kWick : IncrementMode::kProductMinusTrace;
  o.projection_samples = static_cast<std::size_t>(c.m);
  o.seed = c.seed;
  return o;
}

int effective_t_index(const RunConfig& c) { return c.t_index < 0 ? c.n : c.t_index; }

}  // namespace wiener::cli
