#pragma once

#include <cstdint>
#include <vector>

#include "unidecon/dist.hpp"

namespace unidecon {

// Tolerance under which S_i - E_i and S_k are treated as one support point.
inline constexpr double kSupportMergeTolerance = 1e-12;

// Current status (IC-1) pairs (Y_i, Delta_i), sorted by y with stable ties.
struct CurrentStatusData {
  std::vector<double> y;
  std::vector<std::uint8_t> delta;
  // Set when some S_i > 2, which is impossible under F0(1) = 1.
  bool inconsistent_with_unit_support = false;

  std::size_t size() const { return y.size(); }
};

// IC-m data induced by the deconvolution: first inspection time Y_1 and
// the index j of the interval (j-1, j] containing S. The remaining
// inspection times are Y_j = Y_1 + j - 1.
struct IntervalCensoredData {
  std::vector<double> y1;
  std::vector<int> bucket;
  // Integer-valued S: y1 is recorded as 0 and flagged here.
  std::vector<std::uint8_t> integer_valued;
  int m = 1;

  std::vector<double> inspection_times(std::size_t i) const;
};

// Support structure of the restricted MLE class.
//
// forced_zero_below is min_j S_j: F = 0 strictly below it.
// forced_one_from is the largest left interval endpoint (m_n in the fixed
// model): F = 1 strictly above it. The point forced_one_from itself stays
// free, since the observation attaining the maximum needs F(m_n) < 1.
struct SupportSet {
  std::vector<double> candidate_points;
  double forced_one_from = 0.0;
  double forced_zero_below = 0.0;
  std::vector<double> free_points;
  // Multiplicity of each candidate point among the S values.
  std::vector<int> s_multiplicity;

  bool is_free(double t) const { return t >= forced_zero_below && t <= forced_one_from; }
};

// Delta_i = 1 iff S_i <= 1; Y_i = S_i if Delta_i = 1, else S_i - 1.
CurrentStatusData to_current_status(const ObservationSet& obs);

// Inverse of to_current_status for samples with all S <= 2.
std::vector<double> from_current_status(const CurrentStatusData& data);

// Bucket j with S in (j-1, j], y1 = S - floor(S). Throws DomainError when
// some S would need a bucket above m + 1.
IntervalCensoredData to_interval_censoring(const ObservationSet& obs, int m);

// m_n = max_{j: S_j > 1} (S_j - 1); throws AllMassInUnitInterval when no
// S_j exceeds 1.
double compute_m_n(const ObservationSet& obs);

// Candidate points {S_i} and {S_i - E_i > 0} (E_i = 1 in the fixed model),
// merged within kSupportMergeTolerance, with the forced 0/1 regions.
// Fixed-model samples without any S_j > 1 throw AllMassInUnitInterval.
SupportSet build_support_set(const ObservationSet& obs);

// Index of the candidate point matching x within the merge tolerance, or
// the index of the largest candidate below x; -1 when x lies below all
// candidates.
std::ptrdiff_t locate_candidate(const std::vector<double>& sorted_points, double x);

}  // namespace unidecon
