#include "unidecon/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "unidecon/errors.hpp"
#include "unidecon/io.hpp"
#include "unidecon/quadrature.hpp"

namespace unidecon {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Largest e in [lo, hi] with gap(e) <= 0, for gap nondecreasing in e and gap(lo) <= 0.
double last_nonpositive(const std::function<double(double)>& gap, double lo, double hi) {
  if (gap(hi) <= 0.0) return hi;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

double c_e_term(const DistributionModel& f0, double t0, double e) {
  return (1.0 / (f0.cdf(t0) - f0.cdf(t0 - e)) + 1.0 / (f0.cdf(t0 + e) - f0.cdf(t0))) / e;
}

}  // namespace

double chernoff_variance() { return 0.263555964; }

CEValue c_E_fixed(const DistributionModel& f0, double t0) {
  const double left = f0.cdf(t0) - f0.cdf(t0 - 1.0);
  const double right = f0.cdf(t0 + 1.0) - f0.cdf(t0);
  CEValue out;
  if (!(left > 0.0) || !(right > 0.0)) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    out.detail = !(left > 0.0) ? "F0(t0) - F0(t0-1) = 0 at t0 = " + format_double(t0)
                               : "F0(t0+1) - F0(t0) = 0 at t0 = " + format_double(t0);
    return out;
  }
  out.value = 1.0 / left + 1.0 / right;
  return out;
}

CEValue c_E_mixed(const DistributionModel& f0, const DistributionModel& fe, double t0) {
  CEValue out;
  auto mark_infinite = [&out](std::string detail) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    out.detail = std::move(detail);
    return out;
  };
  auto left_gap = [&](double e) { return f0.cdf(t0) - f0.cdf(t0 - e); };
  auto right_gap = [&](double e) { return f0.cdf(t0 + e) - f0.cdf(t0); };

  if (fe.kind() == DistributionKind::Degenerate || fe.kind() == DistributionKind::EmpiricalStep) {
    std::vector<double> points;
    std::vector<double> masses;
    if (fe.kind() == DistributionKind::Degenerate) {
      points.push_back(fe.lower_support());
      masses.push_back(1.0);
    } else {
      double previous = 0.0;
      for (std::size_t i = 0; i < fe.step_points().size(); ++i) {
        points.push_back(fe.step_points()[i]);
        masses.push_back(fe.step_cumulative()[i] - previous);
        previous = fe.step_cumulative()[i];
      }
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!(masses[i] > 0.0)) continue;
      const double e = points[i];
      if (!(e > 0.0)) return mark_infinite("atom of FE at e = " + format_double(e) + " <= 0");
      if (!(left_gap(e) > 0.0) || !(right_gap(e) > 0.0))
        return mark_infinite("vanishing F0 increment at the FE atom e = " + format_double(e));
      out.value += masses[i] * c_e_term(f0, t0, e);
    }
    return out;
  }

  const double a = fe.lower_support();
  const double b = fe.upper_support();
  if (!(a > 0.0)) return mark_infinite("FE puts mass on e in (0, " + format_double(std::min(b, 1.0)) + "]: integrand diverges as e -> 0");
  if (!(left_gap(a) > 0.0))
    return mark_infinite("F0(t0) - F0(t0-e) = 0 for e in [" + format_double(a) + ", " +
                         format_double(last_nonpositive(left_gap, a, b)) + "]");
  if (!(right_gap(a) > 0.0))
    return mark_infinite("F0(t0+e) - F0(t0) = 0 for e in [" + format_double(a) + ", " +
                         format_double(last_nonpositive(right_gap, a, b)) + "]");

  std::vector<double> cuts{a, b};
  for (double p : f0.breakpoints()) {
    for (double e : {t0 - p, p - t0})
      if (e > a && e < b) cuts.push_back(e);
  }
  for (double p : fe.breakpoints())
    if (p > a && p < b) cuts.push_back(p);
  const auto res = integrate_piecewise([&](double e) { return c_e_term(f0, t0, e) * fe.density(e); }, cuts,
                                       {1e-13, 1, 40});
  if (!res.converged) throw NumericalError("c_E quadrature did not converge at t0 = " + format_double(t0));
  out.value = res.value;
  return out;
}

std::vector<double> theory_curve_conjecture(const DistributionModel& f0, const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    const double p = f0.cdf(t);
    const double base = 4.0 * f0.density(t) * p * (1.0 - p);
    out.push_back(base > 0.0 ? std::pow(base, 2.0 / 3.0) * chernoff_variance() : 0.0);
  }
  return out;
}

std::vector<double> theory_curve_mixed(const DistributionModel& f0, const DistributionModel& fe,
                                       const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    const auto c = c_E_mixed(f0, fe, t);
    const double dens = f0.density(t);
    if (c.infinite || !(dens > 0.0)) {
      out.push_back(0.0);
      continue;
    }
    out.push_back(std::pow(4.0 * dens / c.value, 2.0 / 3.0) * chernoff_variance());
  }
  return out;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task) {
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = count;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<double> SimConfig::default_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(i / 10.0);
  return grid;
}

void SimConfig::validate() const {
  if (n == 0) throw ConfigError("sample size n must be positive");
  if (replications == 0) throw ConfigError("replications must be at least 1");
  if (grid.empty()) throw ConfigError("evaluation grid is empty");
  const double lo = f0.lower_support();
  const double hi = f0.upper_support();
  for (double t : grid) {
    if (!(t > lo && t < hi))
      throw ConfigError("grid point " + format_double(t) + " is not inside the support (" + format_double(lo) +
                        ", " + format_double(hi) + ")");
  }
  if (model == ModelKind::Mixed && !(fe.lower_support() > 0.0))
    throw ConfigError("exposure distribution must be supported away from 0");
  solver.validate();
}

std::vector<std::vector<double>> simulate_estimates(const SimConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<double>> rows(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    std::vector<double> row(cfg.grid.size(), kNaN);
    const SeedSpec seed{cfg.master_seed, static_cast<std::uint64_t>(r)};
    try {
      MleResult fit;
      if (cfg.model == ModelKind::Fixed) {
        fit = estimate_fixed(sample_fixed(cfg.f0, cfg.n, seed), cfg.solver);
      } else {
        fit = icm_solve_mixed(sample_mixed(cfg.f0, cfg.fe, cfg.n, seed), cfg.solver);
      }
      if (fit.report.satisfied) {
        for (std::size_t i = 0; i < cfg.grid.size(); ++i) row[i] = fit.estimate.evaluate(cfg.grid[i]);
      }
    } catch (const NumericalError&) {
    } catch (const DomainError&) {
    }
    rows[r] = std::move(row);
  });
  return rows;
}

VarianceCurve simulate_variance_curve(const SimConfig& cfg) {
  const auto rows = simulate_estimates(cfg);
  VarianceCurve curve;
  curve.meta = cfg;
  curve.t = cfg.grid;
  for (const auto& row : rows) {
    if (!row.empty() && !std::isnan(row[0]))
      ++curve.successes;
    else
      ++curve.failures;
  }
  curve.flagged = static_cast<double>(curve.failures) > 0.01 * static_cast<double>(cfg.replications);

  const double scale = std::pow(static_cast<double>(cfg.n), 2.0 / 3.0);
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    std::vector<double> values;
    values.reserve(curve.successes);
    for (const auto& row : rows)
      if (!std::isnan(row[i])) values.push_back(row[i]);
    if (values.size() < 2) {
      curve.empirical_scaled_var.push_back(kNaN);
      continue;
    }
    // Sorting first makes the result independent of replication order.
    std::sort(values.begin(), values.end());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    curve.empirical_scaled_var.push_back(scale * ss / static_cast<double>(values.size() - 1));
  }
  curve.theory_conjecture = theory_curve_conjecture(cfg.f0, cfg.grid);
  const DistributionModel fe = cfg.model == ModelKind::Fixed ? DistributionModel::degenerate(1.0) : cfg.fe;
  curve.theory_mixed = theory_curve_mixed(cfg.f0, fe, cfg.grid);
  return curve;
}

AnBn an_bn_terms(const StepDistribution& fhat, const DistributionModel& f0, double t0, double window) {
  if (!(window > 0.0)) throw DomainError("window length must be positive");
  const double lo = t0;
  const double hi = t0 + window;
  std::vector<double> cuts{lo, hi};
  auto add_shifted = [&](double p) {
    for (double k : {-1.0, 0.0, 1.0}) {
      const double q = p + k;
      if (q > lo && q < hi) cuts.push_back(q);
    }
  };
  for (double p : fhat.points) add_shifted(p);
  for (double p : f0.breakpoints()) add_shifted(p);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double s = 0.5 * (cuts[i] + cuts[i + 1]);
    const double f = fhat.evaluate(s);
    if (!(f - fhat.evaluate(s - 1.0) > 0.0) || !(fhat.evaluate(s + 1.0) - f > 0.0))
      throw NumericalError("vanishing estimate increment near s = " + format_double(s));
  }

  auto a_integrand = [&](double s) {
    const double f = fhat.evaluate(s);
    return -(f - f0.cdf(s)) * (1.0 / (f - fhat.evaluate(s - 1.0)) + 1.0 / (fhat.evaluate(s + 1.0) - f));
  };
  auto b_integrand = [&](double s) {
    const double f = fhat.evaluate(s);
    const double fm = fhat.evaluate(s - 1.0);
    const double fp = fhat.evaluate(s + 1.0);
    return (fm - f0.cdf(s - 1.0)) / (f - fm) + (fp - f0.cdf(s + 1.0)) / (fp - f);
  };
  const QuadratureOptions opts{1e-14, 1, 30};
  return {integrate_piecewise(a_integrand, cuts, opts).value, integrate_piecewise(b_integrand, cuts, opts).value};
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return kNaN;
  const std::size_t k = x.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

RateDiagnostics an_bn_diagnostics(const DistributionModel& f0, const std::vector<std::size_t>& n_values,
                                  double t0, double t_offset, std::size_t replications,
                                  std::uint64_t master_seed, const ICMConfig& solver, unsigned threads) {
  if (!(t0 > f0.lower_support() && t0 < f0.upper_support()))
    throw ConfigError("t0 must lie inside the support of F0");
  if (!(t_offset > 0.0)) throw ConfigError("t_offset must be positive");
  if (replications == 0) throw ConfigError("replications must be at least 1");
  if (n_values.empty()) throw ConfigError("no sample sizes given");
  for (std::size_t n : n_values)
    if (n == 0) throw ConfigError("sample sizes must be positive");
  solver.validate();

  RateDiagnostics out;
  out.n_values = n_values;
  std::vector<double> ns;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    const std::size_t n = n_values[k];
    const double window = std::pow(static_cast<double>(n), -1.0 / 3.0) * t_offset;
    std::vector<AnBn> terms(replications);
    std::vector<char> ok(replications, 0);
    parallel_for(replications, threads, [&](std::size_t r) {
      const SeedSpec seed{master_seed, (static_cast<std::uint64_t>(k) << 32) | r};
      try {
        const auto fit = estimate_fixed(sample_fixed(f0, n, seed), solver);
        if (!fit.report.satisfied) return;
        terms[r] = an_bn_terms(fit.estimate, f0, t0, window);
        ok[r] = 1;
      } catch (const NumericalError&) {
      } catch (const DomainError&) {
      }
    });
    std::vector<double> abs_a;
    std::vector<double> abs_b;
    for (std::size_t r = 0; r < replications; ++r) {
      if (!ok[r]) continue;
      abs_a.push_back(std::abs(terms[r].a_n));
      abs_b.push_back(std::abs(terms[r].b_n));
    }
    out.skipped.push_back(replications - abs_a.size());
    out.median_abs_An.push_back(median(abs_a));
    out.median_abs_Bn.push_back(median(abs_b));
    ns.push_back(static_cast<double>(n));
  }
  out.fitted_slope_An = log_log_slope(ns, out.median_abs_An);
  out.fitted_slope_Bn = log_log_slope(ns, out.median_abs_Bn);
  return out;
}

}  // namespace unidecon
