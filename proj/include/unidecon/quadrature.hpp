#pragma once

#include <functional>
#include <vector>

namespace unidecon {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  // Each panel is first split into this many equal pieces.
  int initial_subdivisions = 1;
  int max_depth = 40;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
};

// Composite 20-point Gauss-Legendre rule over the panels delimited by the
// sorted, deduplicated breakpoints (outer ones define the range), with
// adaptive bisection inside each panel. Breakpoints belong where the
// integrand has kinks or jumps.
QuadratureResult integrate_piecewise(const std::function<double(double)>& f,
                                     std::vector<double> breakpoints,
                                     const QuadratureOptions& options = {});

// Breakpoints b + k for every b in `base` and integer k, restricted to [lo, hi],
// together with lo, hi and the integers inside.
std::vector<double> integer_shifted_breakpoints(const std::vector<double>& base, double lo, double hi);

}  // namespace unidecon
