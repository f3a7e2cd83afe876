#include "unidecon/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>

namespace unidecon {

namespace {

using Rule = boost::math::quadrature::gauss<double, 20>;

struct Accumulator {
  const std::function<double(double)>& f;
  double tol_density;  // allowed error per unit length
  int max_depth;
  QuadratureResult result;

  static constexpr double kEps = std::numeric_limits<double>::epsilon();

  double rule(double a, double b) const { return Rule::integrate(f, a, b); }
  double rule_abs(double a, double b) const {
    return Rule::integrate([this](double x) { return std::abs(f(x)); }, a, b);
  }

  void panel(double a, double b, double whole, int depth) {
    const double mid = 0.5 * (a + b);
    const double left = rule(a, mid);
    const double right = rule(mid, b);
    const double err = std::abs(left + right - whole);
    const double magnitude = rule_abs(a, b);
    const double tol = std::max(tol_density * (b - a), 64.0 * kEps * magnitude);
    if (err <= tol || depth >= max_depth || !(mid > a && mid < b)) {
      if (err > tol) result.converged = false;
      result.value += left + right;
      result.error_estimate += err;
      return;
    }
    panel(a, mid, left, depth + 1);
    panel(mid, b, right, depth + 1);
  }
};

}  // namespace

QuadratureResult integrate_piecewise(const std::function<double(double)>& f,
                                     std::vector<double> breakpoints,
                                     const QuadratureOptions& options) {
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  if (breakpoints.size() < 2) return {};
  const double length = breakpoints.back() - breakpoints.front();
  Accumulator acc{f, options.abs_tol / length, options.max_depth, {}};
  const int pieces = std::max(1, options.initial_subdivisions);
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double a = breakpoints[i];
    const double b = breakpoints[i + 1];
    for (int k = 0; k < pieces; ++k) {
      const double lo = a + (b - a) * k / pieces;
      const double hi = k + 1 == pieces ? b : a + (b - a) * (k + 1) / pieces;
      acc.panel(lo, hi, acc.rule(lo, hi), 0);
    }
  }
  return acc.result;
}

std::vector<double> integer_shifted_breakpoints(const std::vector<double>& base, double lo, double hi) {
  std::vector<double> out{lo, hi};
  for (double k = std::ceil(lo); k <= hi; k += 1.0) out.push_back(k);
  for (double b : base) {
    for (double k = std::ceil(lo - b); b + k <= hi; k += 1.0) {
      const double p = b + k;
      if (p >= lo && p <= hi) out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace unidecon
