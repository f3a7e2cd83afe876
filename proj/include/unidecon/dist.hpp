#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "unidecon/rng.hpp"

namespace unidecon {

enum class DistributionKind { TruncatedExponential, Uniform, Degenerate, EmpiricalStep };

// A distribution function with known support, used both for the hidden
// variable (F0) and for the exposure length (FE).
//
// CDF values are clamped to 0 below the lower support point and to 1 at and
// above the upper support point; they are never extrapolated.
class DistributionModel {
 public:
  // F(x) = (1 - exp(-rate (x - lower))) / (1 - exp(-rate (upper - lower))) on [lower, upper].
  static DistributionModel truncated_exponential(double lower, double upper, double rate = 1.0);
  static DistributionModel uniform(double lower, double upper);
  static DistributionModel degenerate(double at);
  // Right-continuous step CDF with nonnegative masses at the given points;
  // masses are normalized to sum to one.
  static DistributionModel empirical_step(std::vector<double> points, std::vector<double> masses);

  DistributionKind kind() const { return kind_; }
  double lower_support() const { return lower_; }
  double upper_support() const { return upper_; }
  double rate() const { return rate_; }
  const std::vector<double>& step_points() const { return points_; }
  const std::vector<double>& step_cumulative() const { return cumulative_; }

  double cdf(double x) const;
  // Lebesgue density. Throws DomainError for the atomic kinds.
  double density(double x) const;
  // Smallest x with cdf(x) >= p, p in [0, 1].
  double quantile(double p) const;
  bool is_continuous() const {
    return kind_ == DistributionKind::TruncatedExponential || kind_ == DistributionKind::Uniform;
  }
  // Points where the CDF or its derivative is not smooth.
  std::vector<double> breakpoints() const;

  // Compact text forms: "truncexp:lower:upper[:rate]", "uniform:a:b",
  // "degenerate:c", "step:p1/m1,p2/m2,...".
  std::string to_string() const;
  static DistributionModel parse(const std::string& spec);

  // key=value block form (kind, lower, upper, rate, at, points, masses).
  std::map<std::string, std::string> to_key_values() const;
  static DistributionModel from_key_values(const std::map<std::string, std::string>& kv);

 private:
  DistributionModel() = default;

  DistributionKind kind_ = DistributionKind::Uniform;
  double lower_ = 0.0;
  double upper_ = 1.0;
  double rate_ = 1.0;
  double norm_ = 1.0;  // 1 - exp(-rate (upper - lower)) for the exponential kind
  std::vector<double> points_;
  std::vector<double> cumulative_;
};

enum class ModelKind { Fixed, Mixed };

// Raw deconvolution sample: S_i (fixed model) or pairs (E_i, S_i).
struct ObservationSet {
  ModelKind model_kind = ModelKind::Fixed;
  std::vector<double> s_values;
  std::vector<double> e_values;

  std::size_t n() const { return s_values.size(); }
  bool is_fixed() const { return model_kind == ModelKind::Fixed; }
  // Noise length of observation i: 1 in the fixed model, E_i otherwise.
  double noise_length(std::size_t i) const { return is_fixed() ? 1.0 : e_values[i]; }

  static ObservationSet fixed(std::vector<double> s);
  static ObservationSet mixed(std::vector<double> e, std::vector<double> s);

  // Throws DataError when the invariants do not hold.
  void validate() const;
};

// g_S(s) = F0(s) - F0(s - 1).
double convolution_density_fixed(const DistributionModel& f0, double s);
// q(e, s) = (F0(s) - F0(s - e)) / e. Throws DomainError for e <= 0.
double convolution_density_mixed(const DistributionModel& f0, double e, double s);

// S_i = U_i + V_i, U_i ~ F0 by inverse CDF, V_i ~ Uniform(0,1).
ObservationSet sample_fixed(const DistributionModel& f0, std::size_t n, const SeedSpec& seed);
// (E_i, S_i) with E_i ~ FE, V_i | E_i ~ Uniform(0, E_i), S_i = U_i + V_i.
// Each observation consumes three uniforms, in the order (U, W, E), with
// V = E * W.
ObservationSet sample_mixed(const DistributionModel& f0, const DistributionModel& fe, std::size_t n,
                            const SeedSpec& seed);

}  // namespace unidecon
