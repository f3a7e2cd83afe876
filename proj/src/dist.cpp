#include "unidecon/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "unidecon/errors.hpp"
#include "unidecon/io.hpp"

namespace unidecon {

DistributionModel DistributionModel::truncated_exponential(double lower, double upper, double rate) {
  if (!(upper > lower) || !(rate > 0.0) || !std::isfinite(lower) || !std::isfinite(upper) ||
      !std::isfinite(rate))
    throw ConfigError("truncated exponential needs upper > lower and rate > 0");
  DistributionModel m;
  m.kind_ = DistributionKind::TruncatedExponential;
  m.lower_ = lower;
  m.upper_ = upper;
  m.rate_ = rate;
  m.norm_ = -std::expm1(-rate * (upper - lower));
  return m;
}

DistributionModel DistributionModel::uniform(double lower, double upper) {
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
    throw ConfigError("uniform needs upper > lower");
  DistributionModel m;
  m.kind_ = DistributionKind::Uniform;
  m.lower_ = lower;
  m.upper_ = upper;
  return m;
}

DistributionModel DistributionModel::degenerate(double at) {
  if (!std::isfinite(at)) throw ConfigError("degenerate point must be finite");
  DistributionModel m;
  m.kind_ = DistributionKind::Degenerate;
  m.lower_ = at;
  m.upper_ = at;
  return m;
}

DistributionModel DistributionModel::empirical_step(std::vector<double> points,
                                                    std::vector<double> masses) {
  if (points.empty() || points.size() != masses.size())
    throw ConfigError("empirical step needs matching nonempty points and masses");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  double total = 0.0;
  for (double w : masses) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("empirical step masses must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("empirical step masses sum to zero");

  DistributionModel m;
  m.kind_ = DistributionKind::EmpiricalStep;
  double running = 0.0;
  for (auto idx : order) {
    if (!std::isfinite(points[idx])) throw ConfigError("empirical step points must be finite");
    running += masses[idx] / total;
    if (!m.points_.empty() && m.points_.back() == points[idx]) {
      m.cumulative_.back() = running;
    } else {
      m.points_.push_back(points[idx]);
      m.cumulative_.push_back(running);
    }
  }
  m.cumulative_.back() = 1.0;
  // Support runs from the first to the last point carrying mass.
  std::size_t first = 0;
  while (m.cumulative_[first] <= 0.0) ++first;
  std::size_t last = 0;
  while (m.cumulative_[last] < 1.0) ++last;
  m.lower_ = m.points_[first];
  m.upper_ = m.points_[last];
  return m;
}

double DistributionModel::cdf(double x) const {
  if (std::isnan(x)) return x;
  switch (kind_) {
    case DistributionKind::TruncatedExponential:
      if (x <= lower_) return 0.0;
      if (x >= upper_) return 1.0;
      return std::min(1.0, -std::expm1(-rate_ * (x - lower_)) / norm_);
    case DistributionKind::Uniform:
      if (x <= lower_) return 0.0;
      if (x >= upper_) return 1.0;
      return (x - lower_) / (upper_ - lower_);
    case DistributionKind::Degenerate:
      return x >= lower_ ? 1.0 : 0.0;
    case DistributionKind::EmpiricalStep: {
      auto it = std::upper_bound(points_.begin(), points_.end(), x);
      if (it == points_.begin()) return 0.0;
      return cumulative_[static_cast<std::size_t>(it - points_.begin()) - 1];
    }
  }
  return 0.0;
}

double DistributionModel::density(double x) const {
  switch (kind_) {
    case DistributionKind::TruncatedExponential:
      if (x < lower_ || x > upper_) return 0.0;
      return rate_ * std::exp(-rate_ * (x - lower_)) / norm_;
    case DistributionKind::Uniform:
      if (x < lower_ || x > upper_) return 0.0;
      return 1.0 / (upper_ - lower_);
    default:
      throw DomainError("density is undefined for atomic distributions");
  }
}

double DistributionModel::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level outside [0,1]");
  switch (kind_) {
    case DistributionKind::TruncatedExponential:
      if (p >= 1.0) return upper_;
      return std::min(upper_, lower_ - std::log1p(-p * norm_) / rate_);
    case DistributionKind::Uniform:
      return lower_ + p * (upper_ - lower_);
    case DistributionKind::Degenerate:
      return lower_;
    case DistributionKind::EmpiricalStep: {
      auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), p);
      if (it == cumulative_.end()) return upper_;
      // Skip leading zero-mass points.
      auto idx = static_cast<std::size_t>(it - cumulative_.begin());
      while (idx < points_.size() && cumulative_[idx] <= 0.0) ++idx;
      return points_[std::min(idx, points_.size() - 1)];
    }
  }
  return lower_;
}

std::vector<double> DistributionModel::breakpoints() const {
  if (kind_ == DistributionKind::EmpiricalStep) return points_;
  if (kind_ == DistributionKind::Degenerate) return {lower_};
  return {lower_, upper_};
}

std::string DistributionModel::to_string() const {
  switch (kind_) {
    case DistributionKind::TruncatedExponential:
      return "truncexp:" + format_double(lower_) + ":" + format_double(upper_) + ":" +
             format_double(rate_);
    case DistributionKind::Uniform:
      return "uniform:" + format_double(lower_) + ":" + format_double(upper_);
    case DistributionKind::Degenerate:
      return "degenerate:" + format_double(lower_);
    case DistributionKind::EmpiricalStep: {
      std::string out = "step:";
      double prev = 0.0;
      for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i) out += ',';
        out += format_double(points_[i]) + "/" + format_double(cumulative_[i] - prev);
        prev = cumulative_[i];
      }
      return out;
    }
  }
  return {};
}

DistributionModel DistributionModel::parse(const std::string& spec) {
  auto colon = spec.find(':');
  const std::string kind = trim(spec.substr(0, colon));
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto numbers = [&](std::size_t min_count, std::size_t max_count) {
    std::vector<double> out;
    if (!rest.empty())
      for (const auto& part : split(rest, ':')) out.push_back(parse_double(part));
    if (out.size() < min_count || out.size() > max_count)
      throw ConfigError("bad parameter count in distribution spec '" + spec + "'");
    return out;
  };
  try {
    if (kind == "truncexp") {
      auto p = numbers(2, 3);
      return truncated_exponential(p[0], p[1], p.size() == 3 ? p[2] : 1.0);
    }
    if (kind == "uniform") {
      auto p = numbers(2, 2);
      return uniform(p[0], p[1]);
    }
    if (kind == "degenerate") {
      auto p = numbers(1, 1);
      return degenerate(p[0]);
    }
    if (kind == "step") {
      std::vector<double> pts, ms;
      for (const auto& item : split(rest, ',')) {
        auto pm = split(item, '/');
        if (pm.size() != 2) throw ConfigError("step entries must be point/mass");
        pts.push_back(parse_double(pm[0]));
        ms.push_back(parse_double(pm[1]));
      }
      return empirical_step(std::move(pts), std::move(ms));
    }
  } catch (const DataError& e) {
    throw ConfigError("distribution spec '" + spec + "': " + e.what());
  }
  throw ConfigError("unknown distribution kind '" + kind + "'");
}

std::map<std::string, std::string> DistributionModel::to_key_values() const {
  std::map<std::string, std::string> kv;
  switch (kind_) {
    case DistributionKind::TruncatedExponential:
      kv["kind"] = "truncexp";
      kv["lower"] = format_double(lower_);
      kv["upper"] = format_double(upper_);
      kv["rate"] = format_double(rate_);
      break;
    case DistributionKind::Uniform:
      kv["kind"] = "uniform";
      kv["lower"] = format_double(lower_);
      kv["upper"] = format_double(upper_);
      break;
    case DistributionKind::Degenerate:
      kv["kind"] = "degenerate";
      kv["at"] = format_double(lower_);
      break;
    case DistributionKind::EmpiricalStep: {
      kv["kind"] = "step";
      std::string pts, ms;
      double prev = 0.0;
      for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i) {
          pts += ',';
          ms += ',';
        }
        pts += format_double(points_[i]);
        ms += format_double(cumulative_[i] - prev);
        prev = cumulative_[i];
      }
      kv["points"] = pts;
      kv["masses"] = ms;
      break;
    }
  }
  return kv;
}

DistributionModel DistributionModel::from_key_values(const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("distribution block missing key '" + key + "'");
    return it->second;
  };
  auto num = [&](const std::string& key) {
    try {
      return parse_double(get(key));
    } catch (const DataError& e) {
      throw ConfigError("distribution key '" + key + "': " + e.what());
    }
  };
  const auto& kind = get("kind");
  if (kind == "truncexp")
    return truncated_exponential(num("lower"), num("upper"), kv.count("rate") ? num("rate") : 1.0);
  if (kind == "uniform") return uniform(num("lower"), num("upper"));
  if (kind == "degenerate") return degenerate(num("at"));
  if (kind == "step") {
    std::vector<double> pts, ms;
    for (const auto& p : split(get("points"), ',')) pts.push_back(parse_double(p));
    for (const auto& m : split(get("masses"), ',')) ms.push_back(parse_double(m));
    return empirical_step(std::move(pts), std::move(ms));
  }
  throw ConfigError("unknown distribution kind '" + kind + "'");
}

ObservationSet ObservationSet::fixed(std::vector<double> s) {
  ObservationSet obs;
  obs.model_kind = ModelKind::Fixed;
  obs.s_values = std::move(s);
  obs.validate();
  return obs;
}

ObservationSet ObservationSet::mixed(std::vector<double> e, std::vector<double> s) {
  ObservationSet obs;
  obs.model_kind = ModelKind::Mixed;
  obs.e_values = std::move(e);
  obs.s_values = std::move(s);
  obs.validate();
  return obs;
}

void ObservationSet::validate() const {
  if (s_values.empty()) throw DataError("sample is empty");
  if (is_fixed() && !e_values.empty()) throw DataError("fixed-model sample carries e values");
  if (!is_fixed() && e_values.size() != s_values.size())
    throw DataError("mixed-model sample needs one e value per s value");
  for (std::size_t i = 0; i < s_values.size(); ++i) {
    if (!std::isfinite(s_values[i]) || s_values[i] < 0.0)
      throw DataError("observation " + std::to_string(i + 1) + ": s must be finite and >= 0");
    if (!is_fixed() && !(e_values[i] > 0.0 && std::isfinite(e_values[i])))
      throw DataError("observation " + std::to_string(i + 1) + ": e must be finite and > 0");
  }
}

double convolution_density_fixed(const DistributionModel& f0, double s) {
  return f0.cdf(s) - f0.cdf(s - 1.0);
}

double convolution_density_mixed(const DistributionModel& f0, double e, double s) {
  if (!(e > 0.0)) throw DomainError("noise length e must be positive");
  return (f0.cdf(s) - f0.cdf(s - e)) / e;
}

ObservationSet sample_fixed(const DistributionModel& f0, std::size_t n, const SeedSpec& seed) {
  if (n == 0) throw ConfigError("sample size must be at least 1");
  StreamRng rng(seed);
  ObservationSet obs;
  obs.model_kind = ModelKind::Fixed;
  obs.s_values.resize(n);
  for (auto& s : obs.s_values) {
    const double u = f0.quantile(rng.uniform());
    const double v = rng.uniform();
    s = u + v;
  }
  return obs;
}

ObservationSet sample_mixed(const DistributionModel& f0, const DistributionModel& fe, std::size_t n,
                            const SeedSpec& seed) {
  if (n == 0) throw ConfigError("sample size must be at least 1");
  if (!(fe.lower_support() > 0.0))
    throw ConfigError("exposure distribution must be supported away from zero");
  StreamRng rng(seed);
  ObservationSet obs;
  obs.model_kind = ModelKind::Mixed;
  obs.s_values.resize(n);
  obs.e_values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = f0.quantile(rng.uniform());
    const double w = rng.uniform();
    const double e = fe.quantile(rng.uniform());
    obs.e_values[i] = e;
    obs.s_values[i] = u + e * w;
  }
  return obs;
}

}  // namespace unidecon
