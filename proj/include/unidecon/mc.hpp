#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "unidecon/dist.hpp"
#include "unidecon/mle.hpp"

namespace unidecon {

// Var(argmin_t {W(t) + t^2}) for two-sided standard Brownian motion W.
double chernoff_variance();

struct CEValue {
  double value = 0.0;
  bool infinite = false;
  // Description of the offending region when infinite.
  std::string detail;
};

// 1/{F0(t0) - F0(t0-1)} + 1/{F0(t0+1) - F0(t0)}.
CEValue c_E_fixed(const DistributionModel& f0, double t0);
// int e^{-1} [1/{F0(t0) - F0(t0-e)} + 1/{F0(t0+e) - F0(t0)}] dFE(e).
CEValue c_E_mixed(const DistributionModel& f0, const DistributionModel& fe, double t0);

// (4 f0(t) F0(t) {1 - F0(t)})^{2/3} times the Chernoff variance.
std::vector<double> theory_curve_conjecture(const DistributionModel& f0, const std::vector<double>& grid);
// (4 f0(t) / c_E(t))^{2/3} times the Chernoff variance; 0 where c_E is infinite.
std::vector<double> theory_curve_mixed(const DistributionModel& f0, const DistributionModel& fe,
                                       const std::vector<double>& grid);

// Runs task(i) for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). Tasks write only to their own slot, so results do not depend
// on the worker count.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

struct SimConfig {
  ModelKind model = ModelKind::Fixed;
  DistributionModel f0 = DistributionModel::truncated_exponential(0.0, 2.0);
  // Exposure distribution; used by the mixed model only.
  DistributionModel fe = DistributionModel::degenerate(1.0);
  std::size_t n = 1000;
  std::size_t replications = 1000;
  std::vector<double> grid;
  std::uint64_t master_seed = 0;
  ICMConfig solver;
  unsigned threads = 0;

  // 19-point grid 0.1, 0.2, ..., 1.9.
  static std::vector<double> default_grid();
  // Throws ConfigError.
  void validate() const;
};

struct VarianceCurve {
  std::vector<double> t;
  // n^{2/3} times the unbiased sample variance over successful replications;
  // NaN when fewer than two succeeded.
  std::vector<double> empirical_scaled_var;
  std::vector<double> theory_conjecture;
  // Mixed-model curve for FE (degenerate at 1 in the fixed model).
  std::vector<double> theory_mixed;
  std::size_t successes = 0;
  std::size_t failures = 0;
  // More than 1% of replications failed.
  bool flagged = false;
  SimConfig meta;
};

// Replication r uses stream r of master_seed. A replication fails when the
// solver throws or its Fenchel check is not satisfied.
VarianceCurve simulate_variance_curve(const SimConfig& cfg);

// Per-replication values hat F_n(t_i), row r = replication r, NaN rows for failures.
std::vector<std::vector<double>> simulate_estimates(const SimConfig& cfg);

struct AnBn {
  double a_n = 0.0;
  double b_n = 0.0;
};

// A_n(t) and B_n(t) of the fixed-model W-process expansion, integrated over
// [t0, t0 + window). Throws NumericalError when a denominator
// hat F(s) - hat F(s-1) or hat F(s+1) - hat F(s) vanishes on the window.
AnBn an_bn_terms(const StepDistribution& fhat, const DistributionModel& f0, double t0, double window);

struct RateDiagnostics {
  std::vector<std::size_t> n_values;
  std::vector<double> median_abs_An;
  std::vector<double> median_abs_Bn;
  double fitted_slope_An = 0.0;
  double fitted_slope_Bn = 0.0;
  // Replications skipped per n (solver failure or vanishing denominator).
  std::vector<std::size_t> skipped;
};

// Window [t0, t0 + n^{-1/3} t_offset); replication r at size index k uses
// stream (k << 32) | r.
RateDiagnostics an_bn_diagnostics(const DistributionModel& f0, const std::vector<std::size_t>& n_values,
                                  double t0, double t_offset, std::size_t replications,
                                  std::uint64_t master_seed, const ICMConfig& solver = {},
                                  unsigned threads = 0);

// Least-squares slope of log y against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace unidecon
