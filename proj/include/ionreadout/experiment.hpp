#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ionreadout/photon_stream.hpp"
#include "ionreadout/protocols.hpp"
#include "ionreadout/rate_model.hpp"

namespace ionreadout {

struct Interval {
  double low = 0.0;
  double high = 1.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Wilson score interval for a binomial proportion at a two-sided level.
Interval confidence_interval(std::size_t errors, std::size_t trials, double level = 0.6827);

/// Aggregate of one protocol setting over a balanced bright/dark ensemble.
struct FidelityPoint {
  double tau_max = 0.0;
  double tau_c = 0.0;             ///< cutoff actually applied (clipped to tau_max)
  double error_mean = 0.0;        ///< (P(dark | bright) + P(bright | dark)) / 2
  Interval error_ci;
  double avg_time = 0.0;          ///< over all trials
  double worst_time = 0.0;        ///< = tau_max
  std::size_t n_trials = 0;       ///< both states together

  double error_given_bright = 0.0;
  double error_given_dark = 0.0;
  double avg_time_bright = 0.0;
  double avg_time_dark = 0.0;

  double fidelity() const { return 1.0 - error_mean; }

  friend bool operator==(const FidelityPoint&, const FidelityPoint&) = default;
};

struct SweepResult {
  std::optional<double> intensity;  ///< mW/cm^2, when the rates came from an operating point
  ProtocolMode mode = ProtocolMode::FirstTwoPhoton;
  std::vector<FidelityPoint> points;  ///< ordered by tau_max
  std::uint64_t seed = 0;
  ScatteringRates rates;
};

struct ExperimentOptions {
  SimulationOptions simulation;
  unsigned threads = 1;
  double ci_level = 0.6827;
};

/// Base seed of the ensemble for one prepared state within an experiment.
std::uint64_t ensemble_seed(std::uint64_t seed, QubitState prepared);

/// Applies `params` to already simulated records (horizons must cover tau_max).
/// For FirstTwoPhoton a cutoff above tau_max is clipped to tau_max.
FidelityPoint evaluate_protocol(std::span<const TrialRecord> bright,
                                std::span<const TrialRecord> dark, const ProtocolParams& params,
                                double ci_level = 0.6827);

FidelityPoint run_detection_experiment(const ScatteringRates& rates, const ProtocolParams& params,
                                       std::size_t n_per_state, std::uint64_t seed,
                                       const ExperimentOptions& options = {});

/// One shared ensemble at horizon max(tau_grid); each grid point re-applies the
/// protocol with tau_max set to that grid value.
SweepResult error_vs_time_curve(const ScatteringRates& rates, const ProtocolParams& base,
                                std::span<const double> tau_grid, std::size_t n_per_state,
                                std::uint64_t seed, const ExperimentOptions& options = {});

struct TauMaxOptimum {
  double tau_max = 0.0;
  FidelityPoint point;
  SweepResult curve;
};

/// Grid argmin of error_mean over [lower, upper] in steps of `resolution`.
/// Ties go to the largest tau_max: the optimum is the last window before the
/// error starts to rise.
TauMaxOptimum optimize_tau_max(const ScatteringRates& rates, const ProtocolParams& base,
                               double lower, double upper, double resolution,
                               std::size_t n_per_state, std::uint64_t seed,
                               const ExperimentOptions& options = {});

/// lower, lower + step, ..., with `upper` always the final entry.
std::vector<double> uniform_grid(double lower, double upper, double step);

}  // namespace ionreadout
