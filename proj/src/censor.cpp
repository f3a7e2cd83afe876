#include "unidecon/censor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "unidecon/errors.hpp"
#include "unidecon/io.hpp"

namespace unidecon {

std::vector<double> IntervalCensoredData::inspection_times(std::size_t i) const {
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(j)] = y1[i] + j;
  return out;
}

CurrentStatusData to_current_status(const ObservationSet& obs) {
  if (!obs.is_fixed()) throw DomainError("current status transform needs a fixed-model sample");
  const std::size_t n = obs.n();
  std::vector<double> y(n);
  std::vector<std::uint8_t> delta(n);
  CurrentStatusData out;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = obs.s_values[i];
    delta[i] = s <= 1.0 ? 1 : 0;
    y[i] = delta[i] ? s : s - 1.0;
    if (s > 2.0) out.inconsistent_with_unit_support = true;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return y[a] < y[b]; });
  out.y.reserve(n);
  out.delta.reserve(n);
  for (auto i : order) {
    out.y.push_back(y[i]);
    out.delta.push_back(delta[i]);
  }
  return out;
}

std::vector<double> from_current_status(const CurrentStatusData& data) {
  std::vector<double> s(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) s[i] = data.delta[i] ? data.y[i] : data.y[i] + 1.0;
  return s;
}

IntervalCensoredData to_interval_censoring(const ObservationSet& obs, int m) {
  if (!obs.is_fixed()) throw DomainError("IC-m transform needs a fixed-model sample");
  if (m < 1) throw DomainError("m must be at least 1");
  IntervalCensoredData out;
  out.m = m;
  out.y1.reserve(obs.n());
  out.bucket.reserve(obs.n());
  out.integer_valued.reserve(obs.n());
  for (double s : obs.s_values) {
    const double fl = std::floor(s);
    const bool integer = fl == s;
    // (j-1, j] convention: integer S belongs to bucket S itself.
    int bucket = integer ? static_cast<int>(s) : static_cast<int>(fl) + 1;
    bucket = std::max(bucket, 1);
    if (bucket > m + 1)
      throw DomainError("S = " + format_double(s) + " needs bucket " + std::to_string(bucket) +
                        " but m = " + std::to_string(m) + " allows at most " +
                        std::to_string(m + 1));
    out.y1.push_back(s - fl);
    out.bucket.push_back(bucket);
    out.integer_valued.push_back(integer ? 1 : 0);
  }
  return out;
}

double compute_m_n(const ObservationSet& obs) {
  bool any = false;
  double best = 0.0;
  for (double s : obs.s_values) {
    if (s > 1.0) {
      best = any ? std::max(best, s - 1.0) : s - 1.0;
      any = true;
    }
  }
  if (!any) throw AllMassInUnitInterval();
  return best;
}

std::ptrdiff_t locate_candidate(const std::vector<double>& sorted_points, double x) {
  auto it = std::upper_bound(sorted_points.begin(), sorted_points.end(),
                             x + kSupportMergeTolerance);
  return static_cast<std::ptrdiff_t>(it - sorted_points.begin()) - 1;
}

SupportSet build_support_set(const ObservationSet& obs) {
  if (obs.n() == 0) throw DataError("empty sample");
  SupportSet set;
  if (obs.is_fixed()) set.forced_one_from = compute_m_n(obs);

  std::vector<double> raw;
  raw.reserve(2 * obs.n());
  double min_s = obs.s_values.front();
  double max_left = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < obs.n(); ++i) {
    const double s = obs.s_values[i];
    const double left = s - obs.noise_length(i);
    raw.push_back(s);
    if (left > 0.0) raw.push_back(left);
    min_s = std::min(min_s, s);
    max_left = std::max(max_left, left);
  }
  if (!obs.is_fixed()) set.forced_one_from = max_left;
  set.forced_zero_below = min_s;

  std::sort(raw.begin(), raw.end());
  for (double p : raw) {
    if (set.candidate_points.empty() ||
        p - set.candidate_points.back() > kSupportMergeTolerance)
      set.candidate_points.push_back(p);
  }
  set.s_multiplicity.assign(set.candidate_points.size(), 0);
  for (double s : obs.s_values) {
    auto idx = locate_candidate(set.candidate_points, s);
    ++set.s_multiplicity[static_cast<std::size_t>(idx)];
  }
  for (double p : set.candidate_points)
    if (p >= set.forced_zero_below - kSupportMergeTolerance &&
        p <= set.forced_one_from + kSupportMergeTolerance)
      set.free_points.push_back(p);
  return set;
}

}  // namespace unidecon
