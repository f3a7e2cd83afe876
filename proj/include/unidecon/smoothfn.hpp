#pragma once

#include <functional>
#include <vector>

#include "unidecon/dist.hpp"
#include "unidecon/mle.hpp"
#include "unidecon/quadrature.hpp"

namespace unidecon {

using RealFunction = std::function<double(double)>;

// Score function theta_F of a smooth functional with derivative psi.
//
// On [0,1]: theta(x) = -sum_{i=0}^{m-1} {1 - F(x+i)} psi(x+i).
// On (i, i+1]: theta(x) = theta(x-1) + psi(x-1), extended up to m + 1.
// phi(x) = F(x) theta(x) on [0,1] and
// phi(x+i) - phi(x+i-1) = {F(x+i) - F(x+i-1)} theta(x+i) further right.
class ScoreFunction {
 public:
  ScoreFunction(RealFunction cdf, RealFunction psi, int m);

  double base_segment(double x) const;
  double evaluate(double x) const;
  double phi(double x) const;

  double cdf(double x) const { return cdf_(x); }
  double psi(double x) const { return psi_(x); }
  int m() const { return m_; }

 private:
  RealFunction cdf_;
  RealFunction psi_;
  int m_;
};

// m = ceil(M) segments; throws DomainError when psi returns a non-finite value.
ScoreFunction score_theta(RealFunction cdf, RealFunction psi, double upper_support);
ScoreFunction score_theta(const DistributionModel& f, RealFunction psi);
ScoreFunction score_theta(const StepDistribution& f, RealFunction psi);

// max over the grid of |[phi(x+1)-phi(x)]/[F(x+1)-F(x)] - [phi(x)-phi(x-1)]/[F(x)-F(x-1)] - psi(x)|.
// Throws NumericalError naming the point when a denominator vanishes.
double score_residual(const ScoreFunction& theta, const std::vector<double>& grid);

struct MeanEstimate {
  double value = 0.0;
  double total_mass = 0.0;
  // Set when total mass < 1 - 1e-9; value then uses normalized masses.
  bool mass_deficit = false;
};

MeanEstimate mean_estimate(const StepDistribution& mle);

// sigma^2 = int_0^{m+1} theta_F(x)^2 {F(x) - F(x-1)} dx for a parametric F.
// Throws NumericalError (with the partial value) if quadrature fails.
double smooth_variance(const DistributionModel& f, const RealFunction& psi,
                       const QuadratureOptions& options = {1e-10, 1, 40});
double smooth_variance_mean(const DistributionModel& f, const QuadratureOptions& options = {1e-10, 1, 40});

// Same integral with F the MLE step function; integrated exactly over the
// intervals on which the integrand is constant.
double plugin_variance(const StepDistribution& mle, const RealFunction& psi);
double plugin_variance_mean(const StepDistribution& mle);

// Triweight kernel K(u) = 35/32 (1-u^2)^3 on [-1,1].
struct KernelSpec {
  double bandwidth = 0.1;
};

double triweight(double u);
double triweight_derivative(double u);
// Integrated kernel IK(u) = int_{-inf}^u K.
double triweight_integrated(double u);

inline constexpr double kTriweightSquaredIntegral = 350.0 / 429.0;
inline constexpr double kTriweightDerivativeSquaredIntegral = 35.0 / 11.0;

double kernel_density_estimate(const StepDistribution& mle, const KernelSpec& k, double t);
double kernel_cdf_estimate(const StepDistribution& mle, const KernelSpec& k, double t);

struct KernelConstants {
  double int_k_squared = 0.0;
  double int_kprime_squared = 0.0;
};

// By quadrature.
KernelConstants kernel_constants(const KernelSpec& k);

enum class SmoothTarget { Density, Cdf };

// F0(t){1-F0(t)} times int K'^2 (density) or int K^2 (cdf).
double asymp_variance_kernel(const DistributionModel& f0, double t, SmoothTarget which);

struct TelescopingCheck {
  double full_sum = 0.0;
  double simplified = 0.0;
};

// full_sum = h^3 int theta_{h,t}(x)^2 {F0(x)-F0(x-1)} dx with the density score
// theta_{h,t}; simplified = h^3 int K_h'(t-x)^2 F0(x){1-F0(x)} dx.
// Requires [t-h, t+h] to lie inside one unit interval [i, i+1], i >= 0.
TelescopingCheck telescoping_variance_check(const DistributionModel& f0, double t, double h);

}  // namespace unidecon
