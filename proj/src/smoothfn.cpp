#include "unidecon/smoothfn.hpp"

#include <algorithm>
#include <cmath>

#include "unidecon/errors.hpp"
#include "unidecon/io.hpp"

namespace unidecon {

namespace {

int segments_for(double upper_support) {
  return std::max(1, static_cast<int>(std::ceil(upper_support - 1e-12)));
}

}  // namespace

ScoreFunction::ScoreFunction(RealFunction cdf, RealFunction psi, int m)
    : cdf_(std::move(cdf)), psi_(std::move(psi)), m_(m) {
  if (m_ < 1) throw DomainError("score function needs at least one segment");
}

double ScoreFunction::base_segment(double x) const {
  double sum = 0.0;
  for (int i = 0; i < m_; ++i) {
    const double p = psi_(x + i);
    if (!std::isfinite(p)) throw DomainError("psi undefined at " + format_double(x + i));
    sum -= (1.0 - cdf_(x + i)) * p;
  }
  return sum;
}

double ScoreFunction::evaluate(double x) const {
  if (x <= 1.0) return base_segment(x);
  const double i = std::ceil(x) - 1.0;
  const double y = x - i;
  double value = base_segment(y);
  for (int j = 0; j < static_cast<int>(i); ++j) value += psi_(y + j);
  return value;
}

double ScoreFunction::phi(double x) const {
  if (x < 0.0) return 0.0;
  if (x <= 1.0) return cdf_(x) * base_segment(x);
  const double i = std::ceil(x) - 1.0;
  const double y = x - i;
  double theta = base_segment(y);
  double value = cdf_(y) * theta;
  for (int j = 1; j <= static_cast<int>(i); ++j) {
    theta += psi_(y + j - 1);
    value += (cdf_(y + j) - cdf_(y + j - 1)) * theta;
  }
  return value;
}

ScoreFunction score_theta(RealFunction cdf, RealFunction psi, double upper_support) {
  return ScoreFunction(std::move(cdf), std::move(psi), segments_for(upper_support));
}

ScoreFunction score_theta(const DistributionModel& f, RealFunction psi) {
  return score_theta([f](double x) { return f.cdf(x); }, std::move(psi), f.upper_support());
}

ScoreFunction score_theta(const StepDistribution& f, RealFunction psi) {
  return score_theta([f](double x) { return f.evaluate(x); }, std::move(psi), f.upper_support());
}

double score_residual(const ScoreFunction& theta, const std::vector<double>& grid) {
  double worst = 0.0;
  for (double x : grid) {
    const double right_den = theta.cdf(x + 1.0) - theta.cdf(x);
    const double left_den = theta.cdf(x) - theta.cdf(x - 1.0);
    if (!(right_den > 0.0) || !(left_den > 0.0))
      throw NumericalError("vanishing denominator F(x+1)-F(x) or F(x)-F(x-1) at x = " +
                           format_double(x));
    const double phi_x = theta.phi(x);
    const double lhs = (theta.phi(x + 1.0) - phi_x) / right_den - (phi_x - theta.phi(x - 1.0)) / left_den;
    worst = std::max(worst, std::abs(lhs - theta.psi(x)));
  }
  return worst;
}

MeanEstimate mean_estimate(const StepDistribution& mle) {
  MeanEstimate est;
  const auto jumps = mle.jumps();
  for (std::size_t j = 0; j < jumps.size(); ++j) est.value += mle.points[j] * jumps[j];
  est.total_mass = mle.total_mass();
  if (est.total_mass < 1.0 - 1e-9) {
    est.mass_deficit = true;
    if (est.total_mass > 0.0) est.value /= est.total_mass;
  }
  return est;
}

double smooth_variance(const DistributionModel& f, const RealFunction& psi,
                       const QuadratureOptions& options) {
  const auto theta = score_theta(f, psi);
  const double hi = theta.m() + 1.0;
  auto integrand = [&](double x) {
    const double th = theta.evaluate(x);
    return th * th * (f.cdf(x) - f.cdf(x - 1.0));
  };
  const auto res =
      integrate_piecewise(integrand, integer_shifted_breakpoints(f.breakpoints(), 0.0, hi), options);
  if (!res.converged)
    throw NumericalError("smooth variance quadrature did not converge; partial estimate " +
                         format_double(res.value));
  return res.value;
}

double smooth_variance_mean(const DistributionModel& f, const QuadratureOptions& options) {
  return smooth_variance(f, [](double) { return 1.0; }, options);
}

double plugin_variance(const StepDistribution& mle, const RealFunction& psi) {
  if (mle.points.empty()) return 0.0;
  const auto theta = score_theta(mle, psi);
  const double hi = theta.m() + 1.0;
  const auto cuts = integer_shifted_breakpoints(mle.points, 0.0, hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    const double mid = 0.5 * (a + b);
    const double th = theta.evaluate(mid);
    total += (b - a) * th * th * (mle.evaluate(mid) - mle.evaluate(mid - 1.0));
  }
  return total;
}

double plugin_variance_mean(const StepDistribution& mle) {
  return plugin_variance(mle, [](double) { return 1.0; });
}

double triweight(double u) {
  if (u <= -1.0 || u >= 1.0) return 0.0;
  const double v = 1.0 - u * u;
  return 35.0 / 32.0 * v * v * v;
}

double triweight_derivative(double u) {
  if (u <= -1.0 || u >= 1.0) return 0.0;
  const double v = 1.0 - u * u;
  return -105.0 / 16.0 * u * v * v;
}

double triweight_integrated(double u) {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double u2 = u * u;
  return 0.5 + 35.0 / 32.0 * u * (1.0 - u2 + u2 * u2 * (3.0 / 5.0) - u2 * u2 * u2 / 7.0);
}

double kernel_density_estimate(const StepDistribution& mle, const KernelSpec& k, double t) {
  if (!(k.bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
  const auto jumps = mle.jumps();
  double sum = 0.0;
  for (std::size_t j = 0; j < jumps.size(); ++j)
    sum += triweight((t - mle.points[j]) / k.bandwidth) * jumps[j];
  return sum / k.bandwidth;
}

double kernel_cdf_estimate(const StepDistribution& mle, const KernelSpec& k, double t) {
  if (!(k.bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
  const auto jumps = mle.jumps();
  double sum = 0.0;
  for (std::size_t j = 0; j < jumps.size(); ++j)
    sum += triweight_integrated((t - mle.points[j]) / k.bandwidth) * jumps[j];
  return sum;
}

KernelConstants kernel_constants(const KernelSpec& k) {
  if (!(k.bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
  const QuadratureOptions opts{1e-15, 1, 40};
  KernelConstants c;
  c.int_k_squared =
      integrate_piecewise([](double u) { return triweight(u) * triweight(u); }, {-1.0, 0.0, 1.0}, opts)
          .value;
  c.int_kprime_squared = integrate_piecewise(
                             [](double u) {
                               const double d = triweight_derivative(u);
                               return d * d;
                             },
                             {-1.0, 0.0, 1.0}, opts)
                             .value;
  return c;
}

double asymp_variance_kernel(const DistributionModel& f0, double t, SmoothTarget which) {
  const double p = f0.cdf(t);
  const double constant =
      which == SmoothTarget::Density ? kTriweightDerivativeSquaredIntegral : kTriweightSquaredIntegral;
  return p * (1.0 - p) * constant;
}

TelescopingCheck telescoping_variance_check(const DistributionModel& f0, double t, double h) {
  if (!(h > 0.0)) throw DomainError("bandwidth must be positive");
  const double cell = std::floor(t - h);
  if (t - h < 0.0 || t + h > cell + 1.0)
    throw DomainError("window [t-h, t+h] must lie inside one unit interval");

  auto kh_prime = [h](double u) { return triweight_derivative(u / h) / (h * h); };
  const auto theta = score_theta(f0, [&](double y) { return -kh_prime(t - y); });
  const double hi = theta.m() + 1.0;
  const QuadratureOptions opts{1e-12 / (h * h * h), 1, 40};

  auto base = f0.breakpoints();
  base.push_back(t - h);
  base.push_back(t);
  base.push_back(t + h);
  TelescopingCheck out;
  const auto full = integrate_piecewise(
      [&](double x) {
        const double th = theta.evaluate(x);
        return th * th * (f0.cdf(x) - f0.cdf(x - 1.0));
      },
      integer_shifted_breakpoints(base, 0.0, hi), opts);
  out.full_sum = h * h * h * full.value;

  std::vector<double> cuts{t - h, t, t + h};
  for (double b : f0.breakpoints())
    if (b > t - h && b < t + h) cuts.push_back(b);
  const auto simple = integrate_piecewise(
      [&](double x) {
        const double k = kh_prime(t - x);
        const double p = f0.cdf(x);
        return k * k * p * (1.0 - p);
      },
      cuts, opts);
  out.simplified = h * h * h * simple.value;
  if (!full.converged || !simple.converged)
    throw NumericalError("telescoping check quadrature did not converge");
  return out;
}

}  // namespace unidecon
