#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "unidecon/censor.hpp"
#include "unidecon/dist.hpp"
#include "unidecon/errors.hpp"
#include "unidecon/io.hpp"
#include "unidecon/mc.hpp"
#include "unidecon/mle.hpp"
#include "unidecon/smoothfn.hpp"
#include "unidecon/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace unidecon;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// "@path" reads a key=value block; anything else is a compact spec string.
DistributionModel load_distribution(const std::string& spec) {
  if (!spec.empty() && spec.front() == '@') return DistributionModel::from_key_values(read_key_values(spec.substr(1)));
  return DistributionModel::parse(spec);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("UNIDECON_SEED")) {
    const long long v = parse_integer(env);
    if (v < 0) throw ConfigError("UNIDECON_SEED must be nonnegative");
    return static_cast<std::uint64_t>(v);
  }
  return 0;
}

// "a,b,c" or "start:stop:step".
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("grid range must be start:stop:step");
    const double start = parse_double(parts[0]);
    const double stop = parse_double(parts[1]);
    const double step = parse_double(parts[2]);
    if (!(step > 0.0) || stop < start) throw ConfigError("invalid grid range " + text);
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
    for (long long i = 0; i <= count; ++i) grid.push_back(start + static_cast<double>(i) * step);
    return grid;
  }
  for (const auto& part : split(text, ',')) grid.push_back(parse_double(part));
  return grid;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split(text, ',')) {
    const long long v = parse_integer(part);
    if (v <= 0) throw ConfigError("sample sizes must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

ObservationSet load_observations(const fs::path& path) {
  const auto table = read_csv(path);
  const auto has = [&](const std::string& name) {
    return std::find(table.header.begin(), table.header.end(), name) != table.header.end();
  };
  if (!has("s")) throw DataError(path.string() + ": missing column 's'");
  auto obs = has("e") ? ObservationSet::mixed(table.column_values("e"), table.column_values("s"))
                      : ObservationSet::fixed(table.column_values("s"));
  obs.validate();
  return obs;
}

MleResult fit(const ObservationSet& obs, const ICMConfig& cfg, bool force_cs) {
  if (obs.is_fixed()) return estimate_fixed(obs, cfg, force_cs);
  if (force_cs) throw ConfigError("--force-cs applies to fixed-model samples only");
  return icm_solve_mixed(obs, cfg);
}

json icm_json(const ICMConfig& c) {
  return {{"fenchel_tolerance", c.fenchel_tolerance},
          {"max_iterations", c.max_iterations},
          {"line_search_shrink", c.line_search_shrink},
          {"line_search_slope", c.line_search_slope},
          {"value_floor", c.value_floor}};
}

class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

  json config;
  std::optional<std::uint64_t> seed;

  // Writes the output and records its digest.
  void emit(const fs::path& path, const std::string& content) {
    write_file(path, content);
    outputs_[path.string()] = sha256_hex(content);
  }

  void write(const fs::path& primary) const {
    json doc;
    doc["command"] = command_;
    doc["argv"] = argv_;
    doc["config"] = config;
    doc["master_seed"] = seed ? json(*seed) : json(nullptr);
    doc["version"] = kVersion;
    doc["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    doc["outputs"] = outputs_;
    write_file(primary.string() + ".manifest.json", doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  json outputs_ = json::object();
};

void add_solver_options(CLI::App* cmd, ICMConfig& cfg) {
  cmd->add_option("--tol", cfg.fenchel_tolerance, "Fenchel tolerance")->capture_default_str();
  cmd->add_option("--max-iter", cfg.max_iterations, "ICM iteration cap")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Uniform deconvolution: sampling, interval-censoring transforms, NPMLE, smooth functionals, "
               "Monte Carlo variance studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // sample
  struct {
    std::string model = "fixed", f0, fe, output;
    long long n = 0;
    std::optional<std::uint64_t> seed;
  } sample;
  auto* cmd_sample = app.add_subcommand("sample", "Draw a fixed- or mixed-model sample");
  cmd_sample->add_option("--model", sample.model)->check(CLI::IsMember({"fixed", "mixed"}))->capture_default_str();
  cmd_sample->add_option("--f0", sample.f0, "F0 spec, e.g. truncexp:0:2, or @file")->required();
  cmd_sample->add_option("--fe", sample.fe, "exposure distribution (mixed model)");
  cmd_sample->add_option("--n", sample.n, "sample size")->required();
  cmd_sample->add_option("--seed", sample.seed, "master seed (default $UNIDECON_SEED or 0)");
  cmd_sample->add_option("-o,--output", sample.output)->required();

  // transform
  struct {
    std::string input, output, mode = "cs";
    int m = 1;
  } transform;
  auto* cmd_transform = app.add_subcommand("transform", "Map a fixed-model sample to current-status or IC-m data");
  cmd_transform->add_option("-i,--input", transform.input)->required();
  cmd_transform->add_option("-o,--output", transform.output)->required();
  cmd_transform->add_option("--mode", transform.mode)->check(CLI::IsMember({"cs", "icm"}))->capture_default_str();
  cmd_transform->add_option("--m", transform.m, "number of inspection times (icm mode)")->capture_default_str();

  // estimate
  struct {
    std::string input, output, diagnostics;
    bool force_cs = false, allow_unconverged = false;
    ICMConfig solver;
  } estimate;
  auto* cmd_estimate = app.add_subcommand("estimate", "Compute the NPMLE of F0");
  cmd_estimate->add_option("-i,--input", estimate.input)->required();
  cmd_estimate->add_option("-o,--output", estimate.output, "point,value CSV")->required();
  cmd_estimate->add_option("--diagnostics", estimate.diagnostics, "JSON-lines file (default <output>.diagnostics.jsonl)");
  cmd_estimate->add_flag("--force-cs", estimate.force_cs, "solve through the current-status transform");
  cmd_estimate->add_flag("--allow-unconverged", estimate.allow_unconverged);
  add_solver_options(cmd_estimate, estimate.solver);

  // functionals
  struct {
    std::string input, output, functional = "mean", f0;
    std::vector<double> density, cdf;
    ICMConfig solver;
  } functionals;
  auto* cmd_functionals = app.add_subcommand("functionals", "Smooth functionals of the NPMLE");
  cmd_functionals->add_option("-i,--input", functionals.input)->required();
  cmd_functionals->add_option("-o,--output", functionals.output)->required();
  auto* opt_mean = cmd_functionals->add_option("--functional", functionals.functional, "mean (default)")
                       ->check(CLI::IsMember({"mean"}));
  auto* opt_density = cmd_functionals->add_option("--density", functionals.density, "t h")->expected(2);
  auto* opt_cdf = cmd_functionals->add_option("--cdf", functionals.cdf, "t h")->expected(2);
  opt_mean->excludes(opt_density)->excludes(opt_cdf);
  opt_density->excludes(opt_cdf);
  cmd_functionals->add_option("--f0", functionals.f0, "true F0 for the theoretical variance");
  add_solver_options(cmd_functionals, functionals.solver);

  // simulate
  struct {
    std::string config, output, model, f0, fe, grid;
    std::optional<long long> n, replications;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<double> tol;
    std::optional<int> max_iter;
  } simulate;
  auto* cmd_simulate = app.add_subcommand("simulate", "Monte Carlo variance curve");
  cmd_simulate->add_option("--config", simulate.config, "key=value file");
  cmd_simulate->add_option("-o,--output", simulate.output)->required();
  cmd_simulate->add_option("--model", simulate.model)->check(CLI::IsMember({"fixed", "mixed"}));
  cmd_simulate->add_option("--f0", simulate.f0);
  cmd_simulate->add_option("--fe", simulate.fe);
  cmd_simulate->add_option("--n", simulate.n);
  cmd_simulate->add_option("--replications", simulate.replications);
  cmd_simulate->add_option("--grid", simulate.grid, "a,b,c or start:stop:step");
  cmd_simulate->add_option("--seed", simulate.seed);
  cmd_simulate->add_option("--threads", simulate.threads, "worker cap; results do not depend on it");
  cmd_simulate->add_option("--tol", simulate.tol);
  cmd_simulate->add_option("--max-iter", simulate.max_iter);

  // diagnose-rates
  struct {
    std::string f0, output, n_values = "250,500,1000,2000,4000";
    double t0 = 0.5, t_offset = 1.0;
    long long replications = 200;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    ICMConfig solver;
  } rates;
  auto* cmd_rates = app.add_subcommand("diagnose-rates", "A_n/B_n order diagnostics for the fixed model");
  cmd_rates->add_option("--f0", rates.f0)->required();
  cmd_rates->add_option("-o,--output", rates.output)->required();
  cmd_rates->add_option("--n-values", rates.n_values)->capture_default_str();
  cmd_rates->add_option("--t0", rates.t0)->capture_default_str();
  cmd_rates->add_option("--t-offset", rates.t_offset)->capture_default_str();
  cmd_rates->add_option("--replications", rates.replications)->capture_default_str();
  cmd_rates->add_option("--seed", rates.seed);
  cmd_rates->add_option("--threads", rates.threads)->capture_default_str();
  add_solver_options(cmd_rates, rates.solver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*cmd_sample) {
      Manifest man("sample", args);
      if (sample.n <= 0) throw ConfigError("--n must be positive");
      const auto f0 = load_distribution(sample.f0);
      const auto seed = resolve_seed(sample.seed);
      man.seed = seed;
      man.config = {{"model", sample.model}, {"f0", f0.to_string()}, {"n", sample.n}};
      std::string csv;
      if (sample.model == "fixed") {
        const auto obs = sample_fixed(f0, static_cast<std::size_t>(sample.n), {seed, 0});
        csv = write_csv({"s"}, {obs.s_values});
      } else {
        if (sample.fe.empty()) throw ConfigError("--fe is required for the mixed model");
        const auto fe = load_distribution(sample.fe);
        man.config["fe"] = fe.to_string();
        const auto obs = sample_mixed(f0, fe, static_cast<std::size_t>(sample.n), {seed, 0});
        csv = write_csv({"e", "s"}, {obs.e_values, obs.s_values});
      }
      man.emit(sample.output, csv);
      man.write(sample.output);
      return kOk;
    }

    if (*cmd_transform) {
      Manifest man("transform", args);
      man.config = {{"input", transform.input}, {"mode", transform.mode}, {"m", transform.m}};
      const auto obs = load_observations(transform.input);
      if (!obs.is_fixed()) throw ConfigError("transforms are defined for fixed-model samples only");
      std::string csv;
      if (transform.mode == "cs") {
        const auto cs = to_current_status(obs);
        if (cs.inconsistent_with_unit_support)
          std::cerr << "warning: some S > 2; current-status data are inconsistent with F0(1) = 1\n";
        std::vector<double> delta(cs.delta.begin(), cs.delta.end());
        csv = write_csv({"y", "delta"}, {cs.y, delta});
      } else {
        const auto ic = to_interval_censoring(obs, transform.m);
        std::vector<double> bucket(ic.bucket.begin(), ic.bucket.end());
        csv = write_csv({"y1", "bucket"}, {ic.y1, bucket});
      }
      man.emit(transform.output, csv);
      man.write(transform.output);
      return kOk;
    }

    if (*cmd_estimate) {
      Manifest man("estimate", args);
      estimate.solver.validate();
      man.config = {{"input", estimate.input},
                    {"force_cs", estimate.force_cs},
                    {"allow_unconverged", estimate.allow_unconverged},
                    {"solver", icm_json(estimate.solver)}};
      const auto obs = load_observations(estimate.input);
      const auto res = fit(obs, estimate.solver, estimate.force_cs);
      const std::string diag_path =
          estimate.diagnostics.empty() ? estimate.output + ".diagnostics.jsonl" : estimate.diagnostics;
      json diag = {{"n", obs.n()},
                   {"model", obs.is_fixed() ? "fixed" : "mixed"},
                   {"method", res.method},
                   {"iterations", res.iterations},
                   {"loglik", res.loglik},
                   {"max_tail_sum", res.report.max_tail_sum},
                   {"inner_product", res.report.inner_product},
                   {"fenchel_satisfied", res.report.satisfied}};
      man.emit(estimate.output, write_csv({"point", "value"}, {res.estimate.points, res.estimate.values}));
      man.emit(diag_path, diag.dump() + "\n");
      man.write(estimate.output);
      if (!res.report.satisfied && !estimate.allow_unconverged) {
        std::cerr << "error: Fenchel conditions not satisfied (max tail sum "
                  << format_double(res.report.max_tail_sum) << ", inner product "
                  << format_double(res.report.inner_product) << "); rerun with --allow-unconverged to accept\n";
        return kNumerical;
      }
      return kOk;
    }

    if (*cmd_functionals) {
      Manifest man("functionals", args);
      functionals.solver.validate();
      std::optional<DistributionModel> f0;
      if (!functionals.f0.empty()) f0 = load_distribution(functionals.f0);
      const auto obs = load_observations(functionals.input);
      const auto res = fit(obs, functionals.solver, false);
      if (!res.report.satisfied) throw NumericalError("NPMLE did not satisfy the Fenchel conditions");
      const auto& mle = res.estimate;
      double est = 0.0;
      double plugin = 0.0;
      double theory = std::numeric_limits<double>::quiet_NaN();
      json cfg = {{"input", functionals.input}, {"solver", icm_json(functionals.solver)}};
      if (f0) cfg["f0"] = f0->to_string();
      if (!functionals.density.empty() || !functionals.cdf.empty()) {
        const bool dens = !functionals.density.empty();
        const auto& th = dens ? functionals.density : functionals.cdf;
        const double t = th[0];
        const KernelSpec k{th[1]};
        if (!(k.bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
        const auto target = dens ? SmoothTarget::Density : SmoothTarget::Cdf;
        est = dens ? kernel_density_estimate(mle, k, t) : kernel_cdf_estimate(mle, k, t);
        const double p = mle.evaluate(t);
        plugin = p * (1.0 - p) * (dens ? kTriweightDerivativeSquaredIntegral : kTriweightSquaredIntegral);
        if (f0) theory = asymp_variance_kernel(*f0, t, target);
        cfg["functional"] = dens ? "density" : "cdf";
        cfg["t"] = t;
        cfg["bandwidth"] = k.bandwidth;
      } else {
        const auto m = mean_estimate(mle);
        if (m.mass_deficit) std::cerr << "warning: estimate has total mass " << format_double(m.total_mass) << "\n";
        est = m.value;
        plugin = plugin_variance_mean(mle);
        if (f0) theory = smooth_variance_mean(*f0);
        cfg["functional"] = "mean";
      }
      man.config = cfg;
      man.emit(functionals.output, write_csv({"estimate", "plugin_variance", "theory_variance"}, {{est}, {plugin}, {theory}}));
      man.write(functionals.output);
      return kOk;
    }

    if (*cmd_simulate) {
      Manifest man("simulate", args);
      std::map<std::string, std::string> kv;
      if (!simulate.config.empty()) kv = read_key_values(simulate.config);
      static const std::vector<std::string> known{"model", "f0", "fe", "n", "replications", "grid",
                                                  "seed", "threads", "fenchel_tolerance", "max_iterations"};
      for (const auto& [key, value] : kv)
        if (std::find(known.begin(), known.end(), key) == known.end())
          throw ConfigError(simulate.config + ": unknown key '" + key + "'");
      auto pick = [&](const std::string& flag, const std::string& key) -> std::optional<std::string> {
        if (!flag.empty()) return flag;
        if (auto it = kv.find(key); it != kv.end()) return it->second;
        return std::nullopt;
      };

      SimConfig cfg;
      const std::string model = pick(simulate.model, "model").value_or("fixed");
      if (model != "fixed" && model != "mixed") throw ConfigError("model must be fixed or mixed");
      cfg.model = model == "fixed" ? ModelKind::Fixed : ModelKind::Mixed;
      if (auto s = pick(simulate.f0, "f0")) cfg.f0 = load_distribution(*s);
      if (auto s = pick(simulate.fe, "fe")) cfg.fe = load_distribution(*s);
      else if (cfg.model == ModelKind::Mixed) throw ConfigError("mixed model needs fe");
      auto integer = [&](const std::optional<long long>& flag, const std::string& key, long long fallback) {
        if (flag) return *flag;
        if (auto it = kv.find(key); it != kv.end()) return parse_integer(it->second);
        return fallback;
      };
      const long long n = integer(simulate.n, "n", 1000);
      const long long reps = integer(simulate.replications, "replications", 1000);
      if (n <= 0 || reps <= 0) throw ConfigError("n and replications must be positive");
      cfg.n = static_cast<std::size_t>(n);
      cfg.replications = static_cast<std::size_t>(reps);
      cfg.grid = pick(simulate.grid, "grid") ? parse_grid(*pick(simulate.grid, "grid")) : SimConfig::default_grid();
      if (simulate.seed) cfg.master_seed = *simulate.seed;
      else if (auto it = kv.find("seed"); it != kv.end()) cfg.master_seed = static_cast<std::uint64_t>(parse_integer(it->second));
      else cfg.master_seed = resolve_seed(std::nullopt);
      cfg.threads = simulate.threads ? *simulate.threads
                                     : static_cast<unsigned>(integer(std::nullopt, "threads", 0));
      if (simulate.tol) cfg.solver.fenchel_tolerance = *simulate.tol;
      else if (auto it = kv.find("fenchel_tolerance"); it != kv.end()) cfg.solver.fenchel_tolerance = parse_double(it->second);
      cfg.solver.max_iterations = static_cast<int>(
          integer(simulate.max_iter ? std::optional<long long>(*simulate.max_iter) : std::nullopt, "max_iterations",
                  cfg.solver.max_iterations));
      cfg.validate();

      man.seed = cfg.master_seed;
      man.config = {{"model", model},
                    {"f0", cfg.f0.to_string()},
                    {"fe", cfg.fe.to_string()},
                    {"n", cfg.n},
                    {"replications", cfg.replications},
                    {"grid", join(cfg.grid)},
                    {"threads", cfg.threads},
                    {"solver", icm_json(cfg.solver)}};

      const auto curve = simulate_variance_curve(cfg);
      std::vector<double> failures(curve.t.size(), static_cast<double>(curve.failures));
      man.config["failures"] = curve.failures;
      man.config["flagged"] = curve.flagged;
      if (curve.flagged)
        std::cerr << "warning: " << curve.failures << " of " << cfg.replications << " replications failed\n";
      man.emit(simulate.output,
               write_csv({"t", "empirical", "theory_conjecture", "theory_mixed", "failures"},
                         {curve.t, curve.empirical_scaled_var, curve.theory_conjecture, curve.theory_mixed, failures}));
      man.write(simulate.output);
      return kOk;
    }

    if (*cmd_rates) {
      Manifest man("diagnose-rates", args);
      if (rates.replications <= 0) throw ConfigError("--replications must be positive");
      const auto f0 = load_distribution(rates.f0);
      const auto sizes = parse_sizes(rates.n_values);
      const auto seed = resolve_seed(rates.seed);
      man.seed = seed;
      man.config = {{"f0", f0.to_string()},        {"n_values", rates.n_values}, {"t0", rates.t0},
                    {"t_offset", rates.t_offset},  {"replications", rates.replications},
                    {"threads", rates.threads},    {"solver", icm_json(rates.solver)}};
      const auto d = an_bn_diagnostics(f0, sizes, rates.t0, rates.t_offset,
                                       static_cast<std::size_t>(rates.replications), seed, rates.solver,
                                       rates.threads);
      std::vector<double> ns(d.n_values.begin(), d.n_values.end());
      std::string csv = write_csv({"n", "median_abs_An", "median_abs_Bn"}, {ns, d.median_abs_An, d.median_abs_Bn});
      csv += "# fitted_slope_An=" + format_double(d.fitted_slope_An) +
             ",fitted_slope_Bn=" + format_double(d.fitted_slope_Bn) + "\n";
      std::size_t skipped = 0;
      for (auto s : d.skipped) skipped += s;
      man.config["skipped"] = skipped;
      man.emit(rates.output, csv);
      man.write(rates.output);
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
