#include "unidecon/mle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "unidecon/errors.hpp"
#include "unidecon/io.hpp"
#include "unidecon/isotonic.hpp"

namespace unidecon {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log likelihood restricted to the free coordinates of the MLE class.
// Values are stored with sentinels: x[0] = 0 (forced zero) and
// x[m + 1] = 1 (forced one); free point k lives at x[k + 1].
struct IntervalProblem {
  SupportSet support;
  std::vector<double> free_points;
  std::vector<int> lower;  // sentinel-shifted indices
  std::vector<int> upper;
  std::vector<double> weight;
  std::vector<std::size_t> obs_term;  // term index of each observation, or npos
  // Left endpoints that are candidate points below min S.
  std::vector<double> zero_points;
  std::vector<int> zero_upper;
  std::vector<double> zero_weight;
  double inv_n = 1.0;

  int m() const { return static_cast<int>(free_points.size()); }

  double loglik(const std::vector<double>& x) const {
    double sum = 0.0;
    for (std::size_t t = 0; t < weight.size(); ++t) {
      const double d = x[static_cast<std::size_t>(upper[t])] - x[static_cast<std::size_t>(lower[t])];
      if (!(d > 0.0)) return kNegInf;
      sum += weight[t] * std::log(d);
    }
    return sum * inv_n;
  }

  // loglik(x_new) - loglik(x_old) accumulated term by term through log1p so
  // that increments far below the rounding level of loglik itself remain
  // resolvable.
  double loglik_change(const std::vector<double>& x_old, const std::vector<double>& x_new) const {
    double sum = 0.0;
    for (std::size_t t = 0; t < weight.size(); ++t) {
      const auto u = static_cast<std::size_t>(upper[t]);
      const auto l = static_cast<std::size_t>(lower[t]);
      const double d_new = x_new[u] - x_new[l];
      if (!(d_new > 0.0)) return kNegInf;
      const double d_old = x_old[u] - x_old[l];
      sum += weight[t] * std::log1p((d_new - d_old) / d_old);
    }
    return sum * inv_n;
  }

  // Derivative of loglik(x + s dir) at s = 0; dir carries zeros at the sentinels.
  double directional_derivative(const std::vector<double>& x, const std::vector<double>& dir) const {
    double sum = 0.0;
    for (std::size_t t = 0; t < weight.size(); ++t) {
      const auto u = static_cast<std::size_t>(upper[t]);
      const auto l = static_cast<std::size_t>(lower[t]);
      sum += weight[t] * (dir[u] - dir[l]) / (x[u] - x[l]);
    }
    return sum * inv_n;
  }

  // Gradient and the negated Hessian diagonal of the mean log likelihood.
  void derivatives(const std::vector<double>& x, std::vector<double>& grad,
                   std::vector<double>& hess, double floor) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t t = 0; t < weight.size(); ++t) {
      const auto u = static_cast<std::size_t>(upper[t]);
      const auto l = static_cast<std::size_t>(lower[t]);
      const double d = x[u] - x[l];
      if (!(d >= floor))
        throw NumericalError("degenerate likelihood: interval mass below floor at term " +
                             std::to_string(t));
      const double a = weight[t] / d;
      const double b = a / d;
      grad[u] += a;
      grad[l] -= a;
      hess[u] += b;
      hess[l] += b;
    }
    for (auto& g : grad) g *= inv_n;
    for (auto& h : hess) h *= inv_n;
  }
};

IntervalProblem build_problem(const ObservationSet& obs, SupportSet support) {
  IntervalProblem p;
  p.support = std::move(support);
  p.free_points = p.support.free_points;
  p.inv_n = 1.0 / static_cast<double>(obs.n());
  const int m = p.m();
  const double tol = kSupportMergeTolerance;

  auto free_index = [&](double x) {
    auto idx = locate_candidate(p.free_points, x);
    if (idx < 0 || std::abs(p.free_points[static_cast<std::size_t>(idx)] - x) > 2 * tol)
      throw NumericalError("support point lookup failed for " + format_double(x));
    return static_cast<int>(idx) + 1;
  };

  struct Raw {
    int lower, upper;
    std::size_t obs;
  };
  std::vector<Raw> raw;
  raw.reserve(obs.n());
  std::vector<double> zero_pts;
  std::vector<int> zero_up;
  for (std::size_t i = 0; i < obs.n(); ++i) {
    const double r = obs.s_values[i];
    const double l = r - obs.noise_length(i);
    const int up = r > p.support.forced_one_from + tol ? m + 1 : free_index(r);
    const int lo = l < p.support.forced_zero_below - tol ? 0 : free_index(l);
    if (lo >= up) throw DataError("observation " + std::to_string(i + 1) + " has an empty interval");
    if (lo == 0 && l > 0.0 && up <= m) {
      zero_pts.push_back(l);
      zero_up.push_back(up);
    }
    raw.push_back({lo, up, i});
  }

  // Aggregate identical (lower, upper) pairs; the term with lower = 0 and
  // upper = m + 1 is identically log 1 and is dropped.
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return raw[a].lower != raw[b].lower ? raw[a].lower < raw[b].lower : raw[a].upper < raw[b].upper;
  });
  p.obs_term.assign(obs.n(), static_cast<std::size_t>(-1));
  for (auto idx : order) {
    const auto& r = raw[idx];
    if (r.lower == 0 && r.upper == m + 1) continue;
    if (p.weight.empty() || p.lower.back() != r.lower || p.upper.back() != r.upper) {
      p.lower.push_back(r.lower);
      p.upper.push_back(r.upper);
      p.weight.push_back(0.0);
    }
    p.weight.back() += 1.0;
    p.obs_term[r.obs] = p.weight.size() - 1;
  }

  // Forced-zero jump points, merged by location and upper index.
  std::vector<std::size_t> zorder(zero_pts.size());
  std::iota(zorder.begin(), zorder.end(), 0);
  std::sort(zorder.begin(), zorder.end(), [&](auto a, auto b) {
    return zero_pts[a] != zero_pts[b] ? zero_pts[a] < zero_pts[b] : zero_up[a] < zero_up[b];
  });
  for (auto idx : zorder) {
    if (!p.zero_points.empty() && std::abs(p.zero_points.back() - zero_pts[idx]) <= tol &&
        p.zero_upper.back() == zero_up[idx]) {
      p.zero_weight.back() += 1.0;
      continue;
    }
    p.zero_points.push_back(zero_pts[idx]);
    p.zero_upper.push_back(zero_up[idx]);
    p.zero_weight.push_back(1.0);
  }
  return p;
}

// Sentinel-extended value vector of f on the free points.
std::vector<double> values_on_free_points(const IntervalProblem& p, const StepDistribution& f) {
  std::vector<double> x(static_cast<std::size_t>(p.m()) + 2);
  x.front() = 0.0;
  x.back() = 1.0;
  for (int k = 0; k < p.m(); ++k)
    x[static_cast<std::size_t>(k) + 1] = f.evaluate(p.free_points[static_cast<std::size_t>(k)]);
  return x;
}

StepDistribution to_step(const IntervalProblem& p, const std::vector<double>& x) {
  StepDistribution out;
  out.points = p.support.candidate_points;
  out.values.resize(out.points.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const double t = out.points[i];
    if (t < p.support.forced_zero_below - kSupportMergeTolerance) {
      out.values[i] = 0.0;
    } else if (t > p.support.forced_one_from + kSupportMergeTolerance) {
      out.values[i] = 1.0;
    } else {
      out.values[i] = x[k + 1];
      ++k;
    }
  }
  return out;
}

FenchelReport fenchel_from_gradient(const std::vector<double>& x, const std::vector<double>& grad,
                                    int m, double tol) {
  FenchelReport rep;
  double tail = 0.0;
  double best = kNegInf;
  double inner = 0.0;
  for (int k = m; k >= 1; --k) {
    const auto ku = static_cast<std::size_t>(k);
    tail += grad[ku];
    best = std::max(best, tail);
    inner += x[ku] * grad[ku];
  }
  rep.max_tail_sum = m > 0 ? best : 0.0;
  rep.inner_product = inner;
  rep.satisfied = rep.max_tail_sum <= tol && std::abs(rep.inner_product) <= tol;
  return rep;
}

MleResult run_icm(const IntervalProblem& p, const ICMConfig& cfg) {
  cfg.validate();
  const int m = p.m();
  const auto size = static_cast<std::size_t>(m) + 2;
  MleResult res;
  res.method = "icm";
  std::vector<double> x(size);
  for (int k = 0; k <= m + 1; ++k)
    x[static_cast<std::size_t>(k)] = static_cast<double>(k) / static_cast<double>(m + 1);
  x.back() = 1.0;

  if (m == 0) {
    res.method = "trivial";
    res.estimate = to_step(p, x);
    res.loglik = p.loglik(x);
    res.report = {0.0, 0.0, true};
    return res;
  }

  std::vector<double> grad(size), hess(size), z(static_cast<std::size_t>(m)),
      w(static_cast<std::size_t>(m)), trial(size), dir(size, 0.0);
  int iter = 0;
  for (;; ++iter) {
    p.derivatives(x, grad, hess, 0.0);
    res.report = fenchel_from_gradient(x, grad, m, cfg.fenchel_tolerance);
    if (res.report.satisfied || iter >= cfg.max_iterations) break;

    for (int k = 0; k < m; ++k) {
      const auto ku = static_cast<std::size_t>(k) + 1;
      const double h = std::max(hess[ku], std::numeric_limits<double>::min());
      w[static_cast<std::size_t>(k)] = h;
      z[static_cast<std::size_t>(k)] = x[ku] + grad[ku] / h;
    }
    auto y = isotonic_regression(z, w);
    double slope = 0.0;
    for (int k = 0; k < m; ++k) {
      const auto ku = static_cast<std::size_t>(k) + 1;
      double& yk = y[static_cast<std::size_t>(k)];
      yk = std::clamp(yk, cfg.value_floor, 1.0 - cfg.value_floor);
      slope += grad[ku] * (yk - x[ku]);
      dir[ku] = yk - x[ku];
    }
    if (!(slope > 0.0)) break;

    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (int k = 0; k < m; ++k) {
        const auto ku = static_cast<std::size_t>(k) + 1;
        trial[ku] = x[ku] + lambda * (y[static_cast<std::size_t>(k)] - x[ku]);
      }
      trial.front() = 0.0;
      trial.back() = 1.0;
      // The log likelihood is concave along the segment, so its gain is at
      // least lambda times the slope at the trial point; that bound stays
      // resolvable when the gain itself drops below rounding.
      const double target = cfg.line_search_slope * lambda * slope;
      const double gain = p.loglik_change(x, trial);
      if (gain >= target ||
          (gain > kNegInf && lambda * p.directional_derivative(trial, dir) >= target)) {
        x.swap(trial);
        accepted = true;
        break;
      }
      lambda *= cfg.line_search_shrink;
    }
    if (!accepted) break;
  }
  res.iterations = iter;
  res.loglik = p.loglik(x);
  res.estimate = to_step(p, x);
  return res;
}

}  // namespace

double StepDistribution::evaluate(double x) const {
  auto it = std::upper_bound(points.begin(), points.end(), x);
  if (it == points.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - points.begin()) - 1];
}

std::vector<double> StepDistribution::jumps() const {
  std::vector<double> out(values.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = values[i] - prev;
    prev = values[i];
  }
  return out;
}

double StepDistribution::upper_support() const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= 1.0 - 1e-12) return points[i];
  return points.empty() ? 0.0 : points.back();
}

void StepDistribution::validate() const {
  if (points.size() != values.size()) throw DomainError("step distribution: size mismatch");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i && !(points[i] > points[i - 1])) throw DomainError("step distribution: unsorted points");
    if (!(values[i] >= 0.0 && values[i] <= 1.0))
      throw DomainError("step distribution: value outside [0,1]");
    if (i && values[i] < values[i - 1]) throw DomainError("step distribution: decreasing values");
  }
}

void ICMConfig::validate() const {
  if (!(fenchel_tolerance > 0.0) || max_iterations < 1 || !(line_search_shrink > 0.0) ||
      !(line_search_shrink < 1.0) || !(line_search_slope > 0.0) || !(line_search_slope < 1.0) ||
      !(value_floor > 0.0) || !(value_floor < fenchel_tolerance))
    throw ConfigError("invalid ICM configuration");
}

double WProcess::operator()(double t) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size() && points[i] <= t; ++i) sum += jumps[i];
  return sum;
}

double WProcess::tail_sum(std::size_t k) const {
  double sum = 0.0;
  for (std::size_t i = k; i < jumps.size(); ++i) sum += jumps[i];
  return sum;
}

double loglik_fixed(const StepDistribution& f, const ObservationSet& obs) {
  if (!obs.is_fixed()) throw DomainError("loglik_fixed needs a fixed-model sample");
  double sum = 0.0;
  for (double s : obs.s_values) {
    const double d = f.evaluate(s) - f.evaluate(s - 1.0);
    if (!(d > 0.0)) return kNegInf;
    sum += std::log(d);
  }
  return sum / static_cast<double>(obs.n());
}

double loglik_mixed(const StepDistribution& f, const ObservationSet& obs) {
  if (obs.is_fixed()) throw DomainError("loglik_mixed needs a mixed-model sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.n(); ++i) {
    const double s = obs.s_values[i];
    const double d = f.evaluate(s) - f.evaluate(s - obs.e_values[i]);
    if (!(d > 0.0)) return kNegInf;
    sum += std::log(d);
  }
  return sum / static_cast<double>(obs.n());
}

StepDistribution cusum_pava_mle(const CurrentStatusData& data) {
  if (data.size() == 0) throw DataError("empty current status data");
  StepDistribution out;
  std::vector<double> sums, counts;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i && data.y[i] < data.y[i - 1]) throw DataError("current status data not sorted by y");
    if (out.points.empty() || data.y[i] != out.points.back()) {
      out.points.push_back(data.y[i]);
      sums.push_back(0.0);
      counts.push_back(0.0);
    }
    sums.back() += data.delta[i];
    counts.back() += 1.0;
  }
  // Isotonic regression of the group means with group-size weights is the
  // slope of the convex minorant of the cusum diagram.
  std::vector<double> means(sums.size());
  for (std::size_t k = 0; k < sums.size(); ++k) means[k] = sums[k] / counts[k];
  out.values = isotonic_regression(means, counts);
  return out;
}

WProcess w_process(const StepDistribution& f, const ObservationSet& obs, const SupportSet& support,
                   double value_floor) {
  const auto p = build_problem(obs, support);
  const auto x = values_on_free_points(p, f);
  std::vector<double> grad(x.size()), hess(x.size());
  p.derivatives(x, grad, hess, value_floor);

  WProcess w;
  for (std::size_t z = 0; z < p.zero_points.size(); ++z) {
    const double d = x[static_cast<std::size_t>(p.zero_upper[z])];
    if (!(d >= value_floor))
      throw NumericalError("degenerate likelihood at left endpoint " + format_double(p.zero_points[z]));
    const double jump = -p.zero_weight[z] / d * p.inv_n;
    if (!w.points.empty() && w.points.back() == p.zero_points[z]) {
      w.jumps.back() += jump;
    } else {
      w.points.push_back(p.zero_points[z]);
      w.jumps.push_back(jump);
    }
  }
  for (int k = 0; k < p.m(); ++k) {
    w.points.push_back(p.free_points[static_cast<std::size_t>(k)]);
    w.jumps.push_back(grad[static_cast<std::size_t>(k) + 1]);
  }
  return w;
}

FenchelReport fenchel_check(const StepDistribution& f, const ObservationSet& obs, double tol,
                            double value_floor) {
  const auto support = build_support_set(obs);
  const auto w = w_process(f, obs, support, value_floor);
  FenchelReport rep;
  rep.max_tail_sum = w.points.empty() ? 0.0 : kNegInf;
  double tail = 0.0;
  for (std::size_t i = w.points.size(); i-- > 0;) {
    tail += w.jumps[i];
    rep.max_tail_sum = std::max(rep.max_tail_sum, tail);
    rep.inner_product += f.evaluate(w.points[i]) * w.jumps[i];
  }
  rep.satisfied = rep.max_tail_sum <= tol && std::abs(rep.inner_product) <= tol;
  return rep;
}

MleResult icm_solve_fixed(const ObservationSet& obs, const ICMConfig& cfg) {
  if (!obs.is_fixed()) throw DomainError("icm_solve_fixed needs a fixed-model sample");
  return run_icm(build_problem(obs, build_support_set(obs)), cfg);
}

MleResult icm_solve_mixed(const ObservationSet& obs, const ICMConfig& cfg) {
  if (obs.is_fixed()) throw DomainError("icm_solve_mixed needs a mixed-model sample");
  return run_icm(build_problem(obs, build_support_set(obs)), cfg);
}

MleResult estimate_fixed(const ObservationSet& obs, const ICMConfig& cfg,
                         bool force_current_status) {
  if (!obs.is_fixed()) throw DomainError("estimate_fixed needs a fixed-model sample");
  const double max_s = *std::max_element(obs.s_values.begin(), obs.s_values.end());
  if (!force_current_status && max_s > 2.0) return icm_solve_fixed(obs, cfg);

  const auto cs = to_current_status(obs);
  const auto pava = cusum_pava_mle(cs);
  MleResult res;
  res.method = "pava";
  // Lift the current-status solution to the deconvolution support: every
  // S > 1 lies above m_n and carries the value 1.
  std::vector<double> pts = pava.points;
  for (double s : obs.s_values)
    if (s > 1.0) pts.push_back(s);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  res.estimate.points = pts;
  res.estimate.values.reserve(pts.size());
  for (double t : pts) res.estimate.values.push_back(t > 1.0 ? 1.0 : pava.evaluate(t));
  for (std::size_t i = 1; i < res.estimate.values.size(); ++i)
    res.estimate.values[i] = std::max(res.estimate.values[i], res.estimate.values[i - 1]);
  res.loglik = loglik_fixed(res.estimate, obs);
  const bool any_above_one = max_s > 1.0;
  if (any_above_one && std::isfinite(res.loglik)) {
    res.report = fenchel_check(res.estimate, obs, cfg.fenchel_tolerance);
  } else {
    res.report = {0.0, 0.0, std::isfinite(res.loglik)};
  }
  return res;
}

StepDistribution brute_force_mle(const ObservationSet& obs, double grid_step) {
  if (!(grid_step >= 1e-4)) throw DomainError("grid_step must be at least 1e-4");
  const auto p = build_problem(obs, build_support_set(obs));
  const int m = p.m();
  if (m > 4) throw DomainError("brute force search supports at most 4 free points");
  std::vector<double> x(static_cast<std::size_t>(m) + 2, 0.0);
  x.back() = 1.0;
  if (m == 0) return to_step(p, x);

  std::vector<double> best = x;
  double best_value = kNegInf;
  std::vector<double> candidate = x;

  // Enumerate all nondecreasing vectors with coordinate k drawn from
  // centre[k] + offset * step, offset in [-radius, radius], clipped to (0,1).
  auto search = [&](const std::vector<double>& centre, double step, int radius) {
    std::function<void(int)> recurse = [&](int k) {
      if (k > m) {
        const double value = p.loglik(candidate);
        if (value > best_value) {
          best_value = value;
          best = candidate;
        }
        return;
      }
      const auto ku = static_cast<std::size_t>(k);
      for (int off = -radius; off <= radius; ++off) {
        const double v = centre[ku] + off * step;
        if (v <= 0.0 || v >= 1.0) continue;
        if (v < candidate[ku - 1]) continue;
        candidate[ku] = v;
        recurse(k + 1);
      }
    };
    recurse(1);
  };

  // Level 0: full grid with step 1/32.
  double step = 1.0 / 32.0;
  std::vector<double> centre(x.size(), 0.5);
  search(centre, step, 15);
  // Pattern search: re-centre at the same step until the centre is the
  // best point of its window, then halve.
  while (true) {
    std::vector<double> c;
    do {
      c = best;
      search(c, step, 3);
    } while (c != best);
    if (step <= grid_step) break;
    step *= 0.5;
  }
  return to_step(p, best);
}

}  // namespace unidecon
