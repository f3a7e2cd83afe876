// Acceptance suite: one PASS/FAIL line per criterion.
// Exit status is nonzero only when a criterion outside kExpectedFailures fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "unidecon/censor.hpp"
#include "unidecon/dist.hpp"
#include "unidecon/errors.hpp"
#include "unidecon/mc.hpp"
#include "unidecon/mle.hpp"
#include "unidecon/smoothfn.hpp"

using namespace unidecon;

namespace {

// c_E for uniform[0,2] with FE = uniform[0.5,1.5] at t0 = 1 equals
// 4 + 4 ln 1.5: for e > 1 both increments saturate at 1/2, so the integrand
// is 4/e there rather than 4/e^2. The reference value 16/3 drops that branch.
const std::set<std::string> kExpectedFailures{"7c"};

struct Outcome {
  bool pass = false;
  std::string detail;
};

int unexpected_failures = 0;
int expected_failures = 0;

void run(const std::string& id, const std::string& title, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool expected = kExpectedFailures.count(id) > 0;
  std::printf("%s [%s] %s: %s (%.2f s)%s\n", out.pass ? "PASS" : "FAIL", id.c_str(), title.c_str(),
              out.detail.c_str(), secs, !out.pass && expected ? " [known]" : "");
  std::fflush(stdout);
  if (!out.pass) ++(expected ? expected_failures : unexpected_failures);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<double> open_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 1; i <= n; ++i) g.push_back(lo + (hi - lo) * i / (n + 1.0));
  return g;
}

double sample_variance(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

bool in_band(double t) { return t >= 0.4 - 1e-9 && t <= 1.6 + 1e-9; }

const auto te = DistributionModel::truncated_exponential(0.0, 2.0);
const auto un = DistributionModel::uniform(0.0, 2.0);
const auto fe_uniform = DistributionModel::uniform(0.5, 1.5);

// Mean-functional score for the truncated exponential on [0,2].
double theta_closed_form(double x) {
  const double e = std::numbers::e;
  const double d = e * e - 1.0;
  if (x <= 1.0) return (2.0 * std::exp(x) - e * (1.0 + e)) / (d * std::exp(x));
  if (x <= 2.0) return ((1.0 + e * e) * std::exp(x) - e * e * (1.0 + e)) / (d * std::exp(x));
  return (2.0 * e * e - (1.0 + e) * std::exp(3.0 - x)) / d;
}

Outcome criterion1() {
  const double v = smooth_variance_mean(te);
  return {std::abs(v - 0.357915) <= 5e-5, fmt("sigma^2 = %.9f, reference 0.357915", v)};
}

Outcome criterion2() {
  const auto k = kernel_constants({0.1});
  const double k2 = (35.0 / 32.0) * (35.0 / 32.0) * std::beta(0.5, 7.0);
  const double kp2 = (105.0 / 16.0) * (105.0 / 16.0) * std::beta(1.5, 5.0);
  const double d1 = std::max(std::abs(k.int_k_squared - k2), std::abs(k.int_k_squared - 350.0 / 429.0));
  const double d2 = std::max(std::abs(k.int_kprime_squared - kp2), std::abs(k.int_kprime_squared - 35.0 / 11.0));
  return {d1 < 1e-12 && d2 < 1e-12,
          fmt("int K^2 = %.15f, int K'^2 = %.15f, max deviation %.2e", k.int_k_squared,
              k.int_kprime_squared, std::max(d1, d2))};
}

Outcome criterion3() {
  const RealFunction one = [](double) { return 1.0; };
  double recursion = 0.0, equation = 0.0;
  for (const auto& f : {te, un}) {
    const auto theta = score_theta(f, one);
    for (double x : open_grid(0.0, 1.0, 1000))
      for (int i = 1; i <= theta.m(); ++i)
        recursion = std::max(recursion, std::abs(theta.evaluate(x + i) - theta.evaluate(x + i - 1) - 1.0));
    equation = std::max(equation, score_residual(theta, open_grid(0.0, 2.0, 1000)));
  }
  const auto theta = score_theta(te, one);
  double branches = 0.0;
  for (double x : open_grid(0.0, 3.0, 1000))
    branches = std::max(branches, std::abs(theta.evaluate(x) - theta_closed_form(x)));
  return {recursion < 1e-10 && equation < 1e-10 && branches < 1e-12,
          fmt("recursion %.2e, score equation %.2e, closed form %.2e", recursion, equation, branches)};
}

// Small random instances with between 1 and 4 free points and some S > 1.
ObservationSet small_instance(bool mixed, std::uint64_t r) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const SeedSpec seed{404, r * 1000 + attempt};
    const std::size_t n = 2 + (r + attempt) % 5;
    const auto obs = mixed ? sample_mixed(te, fe_uniform, n, seed) : sample_fixed(te, n, seed);
    if (*std::max_element(obs.s_values.begin(), obs.s_values.end()) <= 1.0) continue;
    const auto k = build_support_set(obs).free_points.size();
    if (k >= 1 && k <= 4) return obs;
  }
}

Outcome criterion4() {
  double worst = 0.0;
  int fenchel_failures = 0;
  for (int mixed = 0; mixed <= 1; ++mixed) {
    const std::size_t count = mixed ? 20 : 50;
    for (std::uint64_t r = 0; r < count; ++r) {
      const auto obs = small_instance(mixed, r + (mixed ? 100 : 0));
      const auto icm = mixed ? icm_solve_mixed(obs) : icm_solve_fixed(obs);
      const auto bf = brute_force_mle(obs, 1e-4);
      if (!fenchel_check(icm.estimate, obs, 1e-6).satisfied) ++fenchel_failures;
      for (double t : build_support_set(obs).free_points)
        worst = std::max(worst, std::abs(icm.estimate.evaluate(t) - bf.evaluate(t)));
    }
  }
  return {worst <= 1e-3 && fenchel_failures == 0,
          fmt("50 fixed + 20 mixed instances, max |ICM - brute force| = %.2e, Fenchel failures %.0f", worst,
              fenchel_failures)};
}

Outcome criterion5() {
  const auto unit = DistributionModel::truncated_exponential(0.0, 1.0);
  std::vector<double> worst(50, 0.0);
  parallel_for(50, 0, [&](std::size_t r) {
    const auto obs = sample_fixed(unit, 200, {505, r});
    const auto icm = icm_solve_fixed(obs);
    const auto pava = cusum_pava_mle(to_current_status(obs));
    double w = icm.report.satisfied ? 0.0 : INFINITY;
    for (double t : build_support_set(obs).free_points)
      w = std::max(w, std::abs(icm.estimate.evaluate(t) - pava.evaluate(t)));
    worst[r] = w;
  });
  const double w = *std::max_element(worst.begin(), worst.end());
  return {w <= 1e-6, fmt("max |ICM - PAVA| over 50 samples = %.2e", w)};
}

Outcome criterion6() {
  const std::size_t n = 100000;
  const auto ic = to_interval_censoring(sample_fixed(un, n, {606, 0}), 3);
  auto y = ic.y1;
  std::sort(y.begin(), y.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
    d = std::max({d, hi - y[i], y[i] - lo});
  }
  return {d < 0.0065, fmt("KS statistic %.5f", d)};
}

Outcome criterion7a() {
  double worst = 0.0;
  bool flags_agree = true;
  for (const auto& f : {te, un})
    for (double t : SimConfig::default_grid()) {
      const auto a = c_E_fixed(f, t);
      const auto b = c_E_mixed(f, DistributionModel::degenerate(1.0), t);
      if (a.infinite != b.infinite) flags_agree = false;
      if (!a.infinite && !b.infinite) worst = std::max(worst, std::abs(a.value - b.value));
    }
  return {flags_agree && worst <= 1e-12, fmt("max |c_E mixed(degenerate) - c_E fixed| = %.2e", worst)};
}

Outcome criterion7b() {
  const double a = theory_curve_conjecture(un, {1.0})[0];
  const double b = theory_curve_mixed(un, DistributionModel::degenerate(1.0), {1.0})[0];
  return {std::abs(a - b) <= 1e-12 * std::abs(a), fmt("conjecture %.12f, degenerate-E %.12f", a, b)};
}

Outcome criterion7c() {
  const auto c = c_E_mixed(un, fe_uniform, 1.0);
  const double target = 16.0 / 3.0;
  return {!c.infinite && std::abs(c.value - target) <= 1e-8,
          fmt("computed %.10f, reference 16/3 = %.10f, 4 + 4 ln 1.5 = %.10f", c.value, target,
              4.0 + 4.0 * std::log(1.5))};
}

Outcome curve_check(const VarianceCurve& curve, const std::vector<double>& reference, bool compare_closer) {
  double worst = 0.0, mad_conj = 0.0, mad_deg = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    if (!in_band(curve.t[i])) continue;
    const double emp = curve.empirical_scaled_var[i];
    worst = std::max(worst, std::isfinite(emp) ? std::abs(emp / reference[i] - 1.0) : INFINITY);
    mad_conj += std::abs(emp - curve.theory_conjecture[i]);
    mad_deg += std::abs(emp - curve.theory_mixed[i]);
    ++count;
  }
  mad_conj /= count;
  mad_deg /= count;
  bool pass = worst <= 0.25;
  std::string detail = fmt("max relative deviation %.3f on [0.4,1.6], %.0f failed replications", worst,
                           static_cast<double>(curve.failures));
  if (compare_closer) {
    pass = pass && mad_conj < mad_deg;
    detail += fmt("; mean |emp - conjecture| %.4f vs |emp - degenerate-E| %.4f", mad_conj, mad_deg);
  }
  return {pass, detail};
}

Outcome criterion8() {
  SimConfig cfg;
  cfg.model = ModelKind::Fixed;
  cfg.f0 = te;
  cfg.n = 1000;
  cfg.replications = 1000;
  cfg.grid = SimConfig::default_grid();
  cfg.master_seed = 808;
  const auto curve = simulate_variance_curve(cfg);
  return curve_check(curve, curve.theory_conjecture, true);
}

Outcome criterion9() {
  SimConfig cfg;
  cfg.model = ModelKind::Mixed;
  cfg.f0 = te;
  cfg.fe = fe_uniform;
  cfg.n = 1000;
  cfg.replications = 1000;
  cfg.grid = SimConfig::default_grid();
  cfg.master_seed = 909;
  const auto curve = simulate_variance_curve(cfg);
  return curve_check(curve, curve.theory_mixed, false);
}

Outcome criterion10() {
  const auto d = an_bn_diagnostics(te, {250, 500, 1000, 2000, 4000}, 0.5, 1.0, 200, 1010);
  std::size_t skipped = 0;
  for (auto s : d.skipped) skipped += s;
  return {d.fitted_slope_Bn >= -0.85 && d.fitted_slope_Bn <= -0.50,
          fmt("slope B_n %.3f, slope A_n %.3f, skipped %.0f", d.fitted_slope_Bn, d.fitted_slope_An,
              static_cast<double>(skipped))};
}

Outcome criterion11() {
  const std::size_t n = 10000, reps = 500;
  const double t = 1.0, h = 0.3;
  std::vector<double> est(reps, NAN);
  parallel_for(reps, 0, [&](std::size_t r) {
    const auto res = estimate_fixed(sample_fixed(te, n, {1111, r}));
    if (res.report.satisfied) est[r] = kernel_cdf_estimate(res.estimate, {h}, t);
  });
  std::vector<double> ok;
  for (double v : est)
    if (std::isfinite(v)) ok.push_back(v);
  const double scaled = n * h * sample_variance(ok);
  const double p = te.cdf(t);
  const double target = p * (1.0 - p) * kTriweightSquaredIntegral;
  return {ok.size() == reps && std::abs(scaled / target - 1.0) <= 0.20,
          fmt("(nh) var = %.5f, target %.5f, successes %.0f", scaled, target, static_cast<double>(ok.size()))};
}

Outcome criterion12() {
  const std::size_t n = 5000, reps = 2000;
  std::vector<double> means(reps, NAN), plugin(reps, NAN);
  parallel_for(reps, 0, [&](std::size_t r) {
    const auto res = estimate_fixed(sample_fixed(te, n, {1212, r}));
    if (!res.report.satisfied) return;
    means[r] = mean_estimate(res.estimate).value;
    plugin[r] = plugin_variance_mean(res.estimate);
  });
  std::vector<double> m_ok, p_ok;
  for (std::size_t r = 0; r < reps; ++r)
    if (std::isfinite(means[r])) {
      m_ok.push_back(means[r]);
      p_ok.push_back(plugin[r]);
    }
  const double scaled = n * sample_variance(m_ok);
  const double med = median(p_ok);
  const double target = 0.357915;
  return {m_ok.size() == reps && std::abs(scaled / target - 1.0) <= 0.10 && std::abs(med / target - 1.0) <= 0.10,
          fmt("n var = %.5f, median plug-in %.5f, reference %.6f", scaled, med, target)};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments restrict the run to the listed criterion ids.
  std::set<std::string> only(argv + 1, argv + argc);
  auto want = [&](const std::string& id) {
    const std::string group = id.back() >= 'a' ? id.substr(0, id.size() - 1) : id;
    return only.empty() || only.count(id) || only.count(group);
  };
  const std::vector<std::tuple<std::string, std::string, std::function<Outcome()>>> all{
      {"1", "smooth variance of the mean", criterion1},
      {"2", "triweight kernel constants", criterion2},
      {"3", "score identities", criterion3},
      {"4", "ICM against brute force", criterion4},
      {"5", "ICM against current-status PAVA", criterion5},
      {"6", "IC-m first inspection time is uniform", criterion6},
      {"7a", "degenerate exposure reduces c_E to the fixed model", criterion7a},
      {"7b", "theory curves touch at t = 1 for uniform F0", criterion7b},
      {"7c", "c_E mixed for uniform F0 and FE = U[0.5,1.5] at t0 = 1", criterion7c},
      {"8", "fixed-model variance curve", criterion8},
      {"9", "mixed-model variance curve", criterion9},
      {"10", "A_n/B_n rate diagnostics", criterion10},
      {"11", "smoothed CDF variance", criterion11},
      {"12", "mean functional CLT", criterion12},
  };
  for (const auto& [id, title, body] : all)
    if (want(id)) run(id, title, body);
  std::printf("summary: %d unexpected failure(s), %d known failure(s)\n", unexpected_failures, expected_failures);
  return unexpected_failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
