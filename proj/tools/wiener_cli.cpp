// Command-line runner: verification suites and single experiments with CSV/JSON output.

#include "checks.hpp"
#include "run_config.hpp"

#include "wiener/chaos.hpp"
#include "wiener/girsanov.hpp"
#include "wiener/gsro.hpp"
#include "wiener/parallel.hpp"
#include "wiener/smoothing.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace wiener::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Record {
  std::string id;
  std::string title;
  std::string anchor;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string status;  // pass, fail, timeout, error
  std::string detail;
  double runtime = 0.0;
};

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows) {
    std::ofstream os(path(name));
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    char buf[32];
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", row[i]);
        os << (i ? "," : "") << buf;
      }
      os << '\n';
    }
  }

  std::ofstream stream(const std::string& name) { return std::ofstream(path(name)); }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path path(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    return dir_ / name;
  }

  fs::path dir_;
  std::vector<std::string> files_;
};

double tolerance_for(const RunConfig& c, const std::string& id, double fallback) {
  const auto it = c.tolerance.find(id);
  return it == c.tolerance.end() ? fallback : it->second;
}

Record make_record(const std::string& id, const std::string& title, const std::string& anchor, double measured,
                   double tol, bool passed, std::string detail) {
  return {id, title, anchor, measured, tol, passed, passed ? "pass" : "fail", std::move(detail), 0.0};
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// ---- commands -------------------------------------------------------------------------

std::vector<Record> run_verify(const RunConfig& c, Output& out) {
  checks::CheckConfig cc;
  cc.scale = c.preset == "minimal" ? checks::Scale::kMinimal : checks::Scale::kFull;
  cc.seed = c.seed;
  cc.tolerance = c.tolerance;
  std::vector<Record> records;
  const auto start = Clock::now();
  for (const auto& info : checks::catalog()) {
    if (c.suite != "all" && info.suite != c.suite) continue;
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "check_%02d_", info.number);
    if (seconds_since(start) > c.time_limit) {
      records.push_back({info.id, info.title, info.anchor, std::nan(""), std::nan(""), false, "timeout",
                         "not run: suite runtime cap of " + fmt(c.time_limit) + " s exceeded", 0.0});
      continue;
    }
    const checks::CheckRecord r = checks::run_check(info.number, cc);
    Record rec{r.id, r.title, r.anchor, r.measured, r.tolerance, r.passed, r.passed ? "pass" : "fail", r.detail,
               r.runtime_seconds};
    if (seconds_since(start) > c.time_limit) {
      rec.passed = false;
      rec.status = "timeout";
      rec.detail += "; suite runtime cap of " + fmt(c.time_limit) + " s exceeded";
    }
    out.csv(std::string(prefix) + info.id + ".csv", {"measured", "tolerance", "passed"},
            {{r.measured, r.tolerance, r.passed ? 1.0 : 0.0}});
    for (const auto& t : r.tables) out.csv(std::string(prefix) + t.name + ".csv", t.header, t.rows);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<Record> run_smooth(const RunConfig& c, Output& out) {
  const SmoothingModel model = make_model(c);
  validate(model);
  const int t = effective_t_index(c);
  const ModelPath obs = simulate_path(model, c.seed, 0);
  const SmootherOutput s = bayes_smoother(model, obs.x2, t, c.seed + 1, static_cast<std::size_t>(c.m));
  const TimeGrid& g = model.cov.grid;

  std::vector<std::vector<double>> rows;
  for (int k = 0; k <= c.n; ++k) rows.push_back({g.time(k), obs.x1(k), obs.x2(k)});
  out.csv("observation.csv", {"t", "x1", "x2"}, rows);
  rows.clear();
  for (int k = 0; k < s.pi.rows(); ++k)
    for (int i = 0; i < s.pi.cols(); ++i) rows.push_back({g.time(k), model.r_grid.r(i), s.pi(k, i)});
  out.csv("smoother_pi.csv", {"t", "r", "pi"}, rows);

  const double tol = tolerance_for(c, "smoother_ess", 100.0);
  return {make_record("smoother_ess", "Bayes smoother effective sample size", "bayes-smoother", s.ess, tol,
                      s.ess >= tol && !s.singular,
                      "psi " + fmt(s.psi) + " +- " + fmt(s.standard_error) + " at t = " + fmt(g.time(t)) +
                          ", f(x1(t)) on the simulated path " + fmt(model.f(obs.x1(t))) +
                          "; measured = effective sample size, must be at least the tolerance")};
}

std::vector<Record> run_spde(const RunConfig& c, Output& out) {
  const SmoothingModel model = make_model(c);
  validate(model);
  const SpdeField u = solve_spde(model, make_spde_options(c));
  const Matrix mean = u.mean();
  const ModelPath obs = simulate_path(model, c.seed, 0);
  const Vector xi2 = observation_coordinates(obs.x2, model.cov.grid.dt());
  std::vector<std::vector<double>> mean_rows, path_rows;
  for (int k = 0; k <= c.n; ++k)
    for (int i = 0; i < model.r_grid.points; ++i) {
      const double t = model.cov.grid.time(k), r = model.r_grid.r(i);
      mean_rows.push_back({t, r, mean(k, i)});
      path_rows.push_back({t, r, u.evaluate_at(k, i, xi2)});
    }
  out.csv("spde_mean.csv", {"t", "r", "mean"}, mean_rows);
  out.csv("spde_path.csv", {"t", "r", "u"}, path_rows);
  std::vector<std::vector<double>> obs_rows;
  for (int k = 0; k <= c.n; ++k) obs_rows.push_back({model.cov.grid.time(k), obs.x1(k), obs.x2(k)});
  out.csv("observation.csv", {"t", "x1", "x2"}, obs_rows);

  double total = 0.0;
  for (const auto& row : u.U)
    for (const ChaosVector& v : row) total += norm_sq(v);
  const double tol = tolerance_for(c, "spde_truncation", 1e-6);
  const double dropped = total > 0.0 ? u.truncation.dropped_norm_sq / total : 0.0;
  return {make_record("spde_truncation", "Chaos truncation of the SPDE field", "smoothing-spde", dropped, tol,
                      dropped <= tol,
                      "K = " + std::to_string(c.K) + ", highest dropped degree " +
                          std::to_string(u.truncation.highest_dropped_degree) +
                          "; measured = dropped squared norm relative to the squared norm of the field")};
}

std::vector<Record> run_fbm(const RunConfig& c, Output& out) {
  const TimeGrid g = make_grid(c);
  const FbmKernel k = fbm_kernel(c.hurst, g);
  {
    std::ofstream os = out.stream("fbm_kernel.csv");
    write_kernel_csv(os, k);
  }
  const Matrix cov = g.dt() * k.kernel * k.kernel.transpose();
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (int i = 1; i <= c.n; ++i)
    for (int j = 1; j <= i; ++j) {
      const double exact = k.covariance(g.time(j), g.time(i));
      worst = std::max(worst, std::abs(cov(i, j) - exact));
      rows.push_back({g.time(j), g.time(i), cov(i, j), exact});
    }
  out.csv("fbm_covariance.csv", {"s", "t", "grid", "exact"}, rows);
  const IntegratorProcess b = fbm_integrator(k, build_covariance(g, CrossCovarianceSpec::zero()));
  const double tol = tolerance_for(c, "fbm_grid_covariance", 0.03);
  return {make_record("fbm_grid_covariance", "Grid covariance of the fBm kernel", "fbm-covariance", worst, tol,
                      worst <= tol,
                      "Hurst " + fmt(c.hurst) + ", n = " + std::to_string(c.n) + ", integrator constant " +
                          fmt(b.bound_constant) + "; measured = max |grid - exact covariance|")};
}

std::vector<Record> run_density(const RunConfig& c, Output& out) {
  const CovModel cov = make_covariance(c);
  const DriftSpec drift = make_drift(c);
  check_smallness(drift, cov);
  const std::size_t m = static_cast<std::size_t>(c.m);
  std::vector<double> p(m);
  const ChunkPlan plan = plan_chunks(m, 1024);
  parallel_chunks(plan.chunks(), [&](std::size_t ch) {
    for (std::size_t i = plan.begin(ch); i < plan.end(ch); ++i) p[i] = density_p(drift, sample_pair(cov, c.seed, i), cov).value;
  });
  double s1 = 0.0, s2 = 0.0;
  for (double v : p) {
    s1 += v;
    s2 += v * v;
  }
  const double mean = s1 / static_cast<double>(m);
  const double se = m > 1 ? std::sqrt(std::max(0.0, s2 / m - mean * mean) / static_cast<double>(m - 1)) : 0.0;
  const double z = se > 0.0 ? std::abs(mean - 1.0) / se : (mean == 1.0 ? 0.0 : INFINITY);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < std::min<std::size_t>(m, 1000); ++i) rows.push_back({static_cast<double>(i), p[i]});
  out.csv("density_samples.csv", {"index", "p"}, rows);

  double det_err = 0.0;
  for (std::uint64_t i = 0; i < std::min<std::uint64_t>(m, 100); ++i) {
    const DriftJacobian dj = drift_jacobian(drift, sample_pair(cov, c.seed, i), cov);
    det_err = std::max(det_err, std::abs(det2(cov.S * dj.Dh).value - 1.0));
    if (i == 0) {
      const QuasiNilpotence q = quasinilpotence_certificate(cov, drift, dj.Dh, 2 * c.n);
      rows.clear();
      for (std::size_t k = 0; k < q.curve.size(); ++k)
        rows.push_back({static_cast<double>(k + 1), q.curve[k], k < q.bound.size() ? q.bound[k] : std::nan("")});
      out.csv("quasi_nilpotence.csv", {"k", "norm_root", "bound"}, rows);
    }
  }
  const double tol_mean = tolerance_for(c, "density_unit_mean", 4.0);
  const double tol_det = tolerance_for(c, "density_det2", 1e-8);
  return {make_record("density_unit_mean", "Density has unit mean", "girsanov-density", z, tol_mean, z <= tol_mean,
                      "E p = " + fmt(mean) + " +- " + fmt(se) + " over " + std::to_string(m) +
                          " samples; measured = |E p - 1| in standard errors"),
          make_record("density_det2", "Carleman-Fredholm determinant equals one", "carleman-fredholm", det_err, tol_det,
                      det_err <= tol_det, "measured = max |det2(S Dh) - 1| over the first samples")};
}

// ---- reporting --------------------------------------------------------------------------

json config_json(const RunConfig& c) {
  json j = json::object();
  for (const auto& k : schema()) {
    if (k.key == "output" || k.key == "threads") continue;
    j[k.section][k.key] = get_value(c, k.section + "." + k.key);
  }
  j["tolerance"] = json::object();
  for (const auto& [id, v] : c.tolerance) j["tolerance"][id] = v;
  return j;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

bool write_reports(const RunConfig& c, Output& out, const std::vector<Record>& records, double total) {
  bool passed = !records.empty();
  json recs = json::array(), timing = json::object();
  for (const Record& r : records) {
    passed = passed && r.passed;
    recs.push_back({{"name", r.id},
                    {"title", r.title},
                    {"anchor", r.anchor},
                    {"measured", number(r.measured)},
                    {"tolerance", number(r.tolerance)},
                    {"passed", r.passed},
                    {"status", r.status},
                    {"detail", r.detail}});
    timing[r.id] = r.runtime;
  }
  {
    std::ofstream os = out.stream("config.ini");
    os << to_text(c, false);
  }
  {
    std::ofstream os = out.stream("timing.json");
    os << json{{"total_seconds", total}, {"threads", worker_count()}, {"records", timing}}.dump(2) << '\n';
  }
  std::vector<std::string> files = out.files();
  files.push_back("report.json");
  std::sort(files.begin(), files.end());
  const json report{{"command", c.command},     {"config", config_json(c)}, {"records", recs},
                    {"passed", passed},         {"exit_status", passed ? 0 : 1}, {"files", files}};
  std::ofstream(out.dir() / "report.json") << report.dump(2) << '\n';
  return passed;
}

fs::path output_dir(const RunConfig& c) {
  if (!c.output.empty()) return c.output;
  if (const char* env = std::getenv("WIENER_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "wiener_out";
}

int run(const RunConfig& c) {
  if (c.threads > 0) set_worker_count(static_cast<std::size_t>(c.threads));
  Output out(output_dir(c));
  const auto start = Clock::now();
  std::vector<Record> records;
  try {
    if (c.command == "verify") {
      records = run_verify(c, out);
    } else {
      if (c.command == "smooth") records = run_smooth(c, out);
      if (c.command == "spde") records = run_spde(c, out);
      if (c.command == "fbm") records = run_fbm(c, out);
      if (c.command == "density") records = run_density(c, out);
      const double elapsed = seconds_since(start);
      for (Record& r : records) r.runtime = elapsed;
      if (elapsed > c.time_limit)
        records.push_back({"timeout", "Runtime cap", "", elapsed, c.time_limit, false, "timeout",
                           "runtime cap of " + fmt(c.time_limit) + " s exceeded", elapsed});
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    records.push_back({c.command, "Run", "", std::nan(""), std::nan(""), false, "error", e.what(), seconds_since(start)});
  }
  const bool passed = write_reports(c, out, records, seconds_since(start));
  for (const Record& r : records)
    std::printf("%-7s %-28s measured %-13s tolerance %-10s %s\n", r.status.c_str(), r.id.c_str(), fmt(r.measured).c_str(),
                fmt(r.tolerance).c_str(), r.anchor.c_str());
  std::printf("%s; report written to %s\n", passed ? "all checks passed" : "some checks failed",
              (out.dir() / "report.json").string().c_str());
  return passed ? 0 : 1;
}

}  // namespace
}  // namespace wiener::cli

int main(int argc, char** argv) {
  using namespace wiener::cli;
  CLI::App app{"Wiener-space chaos, density and smoothing experiments"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  bool print_config = false;
  std::vector<std::string> tolerances;
  app.add_option("-c,--config", config_path, "config file (key = value with [sections])");
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");
  app.add_option("--tolerance", tolerances, "tolerance override id=value, repeatable");

  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> flags;
  for (const auto& k : schema()) {
    if (k.key == "command") continue;
    const std::string dotted = k.section + "." + k.key;
    const std::string name = k.key == "output" ? "-o,--output" : "--" + k.key;
    flags.emplace_back(dotted, app.add_option(name, flag_values[dotted], k.description));
  }
  const std::map<std::string, std::string> commands = {
      {"verify", "run verification checks"},
      {"smooth", "Bayes smoother on a simulated observation"},
      {"spde", "solve the smoothing SPDE on the r-grid"},
      {"fbm", "fractional Brownian kernel and covariance"},
      {"density", "Girsanov density statistics"}};
  for (const auto& [name, desc] : commands) app.add_subcommand(name, desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = parse_config_file(config_path);
    std::vector<std::pair<std::string, std::string>> overrides;
    overrides.emplace_back("run.command", app.get_subcommands().front()->get_name());
    for (const auto& [key, opt] : flags)
      if (opt->count() > 0) overrides.emplace_back(key, flag_values[key]);
    for (const std::string& t : tolerances) {
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(ConfigError::Kind::kMalformed, "tolerance", "malformed --tolerance '" + t + "', expected id=value");
      overrides.emplace_back("tolerance." + t.substr(0, eq), t.substr(eq + 1));
    }
    config = apply_overrides(config, overrides);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  if (print_config) {
    std::cout << to_text(config);
    return 0;
  }
  return run(config);
}
