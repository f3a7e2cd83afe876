#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "unidecon/censor.hpp"
#include "unidecon/dist.hpp"

namespace unidecon {

// Right-continuous nondecreasing step function with values in [0,1];
// zero to the left of the first point.
struct StepDistribution {
  std::vector<double> points;
  std::vector<double> values;

  double evaluate(double x) const;
  // Mass placed at each point (value minus the previous value).
  std::vector<double> jumps() const;
  double total_mass() const { return values.empty() ? 0.0 : values.back(); }
  // First point at which the value reaches 1 (within 1e-12), otherwise the last point.
  double upper_support() const;
  // Throws DomainError when the ordering or monotonicity invariants fail.
  void validate() const;
};

struct ICMConfig {
  double fenchel_tolerance = 1e-8;
  int max_iterations = 500;
  double line_search_shrink = 0.5;
  double line_search_slope = 1e-4;
  double value_floor = 1e-10;

  void validate() const;
};

// Residuals of the two optimality conditions: the largest tail integral
// of dW over the support points and the integral of F against dW.
struct FenchelReport {
  double max_tail_sum = 0.0;
  double inner_product = 0.0;
  bool satisfied = false;
};

// Pure-jump process W_{n,F}: the jump at each support point is the partial
// derivative of the mean log likelihood with respect to F at that point,
// with F held at 0 below min S and at 1 above the largest left endpoint.
struct WProcess {
  std::vector<double> points;
  std::vector<double> jumps;

  double operator()(double t) const;
  // Integral of dW over [points[k], infinity).
  double tail_sum(std::size_t k) const;
};

struct MleResult {
  StepDistribution estimate;
  FenchelReport report;
  int iterations = 0;
  double loglik = 0.0;
  std::string method;  // "icm", "pava" or "trivial"
};

// Mean log likelihood n^{-1} sum log{F(S_i) - F(S_i - 1)}; -infinity when
// any term is nonpositive.
double loglik_fixed(const StepDistribution& f, const ObservationSet& obs);
// n^{-1} sum log{F(S_i) - F(S_i - E_i)}; the 1/E_i factor of the density is
// dropped since it does not depend on F.
double loglik_mixed(const StepDistribution& f, const ObservationSet& obs);

// NPMLE for current status data: slopes of the greatest convex minorant of
// the cusum diagram of the Delta's, at the distinct ordered Y's.
StepDistribution cusum_pava_mle(const CurrentStatusData& data);

WProcess w_process(const StepDistribution& f, const ObservationSet& obs, const SupportSet& support,
                   double value_floor = 1e-10);
FenchelReport fenchel_check(const StepDistribution& f, const ObservationSet& obs, double tol,
                            double value_floor = 1e-10);

// Iterative convex minorant algorithm with backtracking line search.
// A run that hits max_iterations returns its last iterate with
// report.satisfied == false.
MleResult icm_solve_fixed(const ObservationSet& obs, const ICMConfig& cfg = {});
MleResult icm_solve_mixed(const ObservationSet& obs, const ICMConfig& cfg = {});

// Fixed-model NPMLE with routing: current-status PAVA when every S <= 2
// (or when forced), ICM otherwise.
MleResult estimate_fixed(const ObservationSet& obs, const ICMConfig& cfg = {},
                         bool force_current_status = false);

// Test oracle: coarse-to-fine exhaustive search over monotone value vectors
// on at most four free points. Refuses larger problems.
StepDistribution brute_force_mle(const ObservationSet& obs, double grid_step);

}  // namespace unidecon
