#include "ionreadout/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <boost/math/distributions/normal.hpp>

#include "ionreadout/errors.hpp"
#include "ionreadout/parallel.hpp"

namespace ionreadout {

Interval confidence_interval(std::size_t errors, std::size_t trials, double level) {
  require(trials > 0, "trials must be positive");
  require(errors <= trials, "errors cannot exceed trials");
  require(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(errors) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  Interval ci{std::clamp(center - half, 0.0, p), std::clamp(center + half, p, 1.0)};
  if (errors == 0) ci.low = 0.0;
  if (errors == trials) ci.high = 1.0;
  return ci;
}

std::uint64_t ensemble_seed(std::uint64_t seed, QubitState prepared) {
  return derive_seed(seed, prepared == QubitState::Bright ? 0xB1ULL << 32 : 0xDAULL << 32);
}

FidelityPoint evaluate_protocol(std::span<const TrialRecord> bright,
                                std::span<const TrialRecord> dark, const ProtocolParams& params,
                                double ci_level) {
  require(!bright.empty() && !dark.empty(), "both ensembles must be non-empty");
  ProtocolParams applied = params;
  if (applied.mode == ProtocolMode::FirstTwoPhoton) applied.tau_c = std::min(applied.tau_c, applied.tau_max);
  applied.validate();

  // Time is tallied as the saving against tau_max so a run where every
  // decision takes the full window averages to tau_max exactly.
  struct Tally {
    std::size_t errors = 0;
    double saved = 0.0;
  };
  auto tally = [&](std::span<const TrialRecord> records, QubitState truth) {
    Tally t;
    for (const auto& rec : records) {
      const DetectionOutcome out = decide(rec, applied);
      if (out.verdict != truth) ++t.errors;
      t.saved += applied.tau_max - out.decision_time;
    }
    return t;
  };
  const Tally b = tally(bright, QubitState::Bright);
  const Tally d = tally(dark, QubitState::Dark);
  const auto nb = static_cast<double>(bright.size());
  const auto nd = static_cast<double>(dark.size());

  FidelityPoint pt;
  pt.tau_max = applied.tau_max;
  pt.tau_c = applied.mode == ProtocolMode::FirstTwoPhoton ? applied.tau_c : 0.0;
  pt.error_given_bright = static_cast<double>(b.errors) / nb;
  pt.error_given_dark = static_cast<double>(d.errors) / nd;
  pt.error_mean = 0.5 * (pt.error_given_bright + pt.error_given_dark);
  pt.n_trials = bright.size() + dark.size();
  pt.avg_time_bright = applied.tau_max - b.saved / nb;
  pt.avg_time_dark = applied.tau_max - d.saved / nd;
  pt.avg_time = applied.tau_max - (b.saved + d.saved) / (nb + nd);
  pt.worst_time = applied.tau_max;
  // Balanced ensembles make the pooled rate equal error_mean; an unbalanced
  // split widens the pooled interval to cover it.
  pt.error_ci = confidence_interval(b.errors + d.errors, pt.n_trials, ci_level);
  pt.error_ci.low = std::min(pt.error_ci.low, pt.error_mean);
  pt.error_ci.high = std::max(pt.error_ci.high, pt.error_mean);
  return pt;
}

FidelityPoint run_detection_experiment(const ScatteringRates& rates, const ProtocolParams& params,
                                       std::size_t n_per_state, std::uint64_t seed,
                                       const ExperimentOptions& options) {
  require(n_per_state >= 1, "n_per_state must be at least 1");
  params.validate();
  const auto bright = simulate_ensemble(QubitState::Bright, rates, params.tau_max, n_per_state,
                                        ensemble_seed(seed, QubitState::Bright), options.simulation,
                                        options.threads);
  const auto dark = simulate_ensemble(QubitState::Dark, rates, params.tau_max, n_per_state,
                                      ensemble_seed(seed, QubitState::Dark), options.simulation,
                                      options.threads);
  return evaluate_protocol(bright, dark, params, options.ci_level);
}

SweepResult error_vs_time_curve(const ScatteringRates& rates, const ProtocolParams& base,
                                std::span<const double> tau_grid, std::size_t n_per_state,
                                std::uint64_t seed, const ExperimentOptions& options) {
  require(!tau_grid.empty(), "tau grid must not be empty");
  require(tau_grid.front() > 0.0, "tau grid must be positive");
  require(std::adjacent_find(tau_grid.begin(), tau_grid.end(), std::greater_equal<>()) == tau_grid.end(),
          "tau grid must be strictly increasing");
  require(n_per_state >= 1, "n_per_state must be at least 1");

  const double horizon = tau_grid.back();
  const auto bright = simulate_ensemble(QubitState::Bright, rates, horizon, n_per_state,
                                        ensemble_seed(seed, QubitState::Bright), options.simulation,
                                        options.threads);
  const auto dark = simulate_ensemble(QubitState::Dark, rates, horizon, n_per_state,
                                      ensemble_seed(seed, QubitState::Dark), options.simulation,
                                      options.threads);
  SweepResult result;
  result.mode = base.mode;
  result.seed = seed;
  result.rates = rates;
  result.points.resize(tau_grid.size());
  parallel_for(tau_grid.size(), options.threads, [&](std::size_t i) {
    ProtocolParams p = base;
    p.tau_max = tau_grid[i];
    result.points[i] = evaluate_protocol(bright, dark, p, options.ci_level);
  });
  return result;
}

std::vector<double> uniform_grid(double lower, double upper, double step) {
  require(lower > 0.0 && upper >= lower, "grid range must be positive and ordered");
  require(step > 0.0, "grid step must be positive");
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((upper - lower) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(lower + static_cast<double>(i) * step);
  if (upper - grid.back() > 1e-9 * step) grid.push_back(upper);
  return grid;
}

TauMaxOptimum optimize_tau_max(const ScatteringRates& rates, const ProtocolParams& base,
                               double lower, double upper, double resolution,
                               std::size_t n_per_state, std::uint64_t seed,
                               const ExperimentOptions& options) {
  const auto grid = uniform_grid(lower, upper, resolution);
  TauMaxOptimum opt;
  opt.curve = error_vs_time_curve(rates, base, grid, n_per_state, seed, options);
  std::size_t best = 0;
  for (std::size_t i = 1; i < opt.curve.points.size(); ++i) {
    if (opt.curve.points[i].error_mean <= opt.curve.points[best].error_mean) best = i;
  }
  opt.point = opt.curve.points[best];
  opt.tau_max = opt.point.tau_max;
  return opt;
}

}  // namespace ionreadout
