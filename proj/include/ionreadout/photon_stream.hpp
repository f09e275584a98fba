#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ionreadout/rate_model.hpp"

namespace ionreadout {

enum class QubitState { Dark, Bright };

std::string_view to_string(QubitState state);
QubitState parse_state(std::string_view text);

constexpr QubitState flipped(QubitState s) {
  return s == QubitState::Dark ? QubitState::Bright : QubitState::Dark;
}

struct LatentTransition {
  double time = 0.0;
  QubitState state = QubitState::Dark;  ///< latent state entered at `time`

  friend bool operator==(const LatentTransition&, const LatentTransition&) = default;
};

/// One detection attempt: detected PMT timestamps in [0, horizon], seconds.
struct TrialRecord {
  QubitState prepared = QubitState::Dark;
  std::vector<double> events;
  double horizon = 0.0;
  /// Latent trajectory, only when requested. A preparation flip shows up as
  /// an entry at t = 0.
  std::optional<std::vector<LatentTransition>> transitions;
  std::uint64_t seed = 0;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Detector and preparation knobs layered on top of the ideal process.
/// All default to the ideal detector with perfect preparation.
struct SimulationOptions {
  bool record_trajectory = false;
  double dead_time = 0.0;          ///< non-paralyzable, s
  double time_resolution = 0.0;    ///< time-tagger bin, s; 0 keeps full precision
  double preparation_error = 0.0;  ///< probability the prepared state starts flipped
};

/// splitmix64 finalizer applied to base_seed + (index + 1) * golden gamma.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index);

/// Exact sample of the two-state jump process. Bright emits detected photons
/// at rates.detected_signal and pumps dark at rd; dark pumps bright at rb;
/// background counts arrive at rdc in either state.
TrialRecord simulate_trial(QubitState prepared, const ScatteringRates& rates, double horizon,
                           std::uint64_t seed, const SimulationOptions& options = {});

/// n_trials records; trial i uses derive_seed(base_seed, i). Output is
/// ordered by trial index and identical for any thread count (0 = all cores).
std::vector<TrialRecord> simulate_ensemble(QubitState prepared, const ScatteringRates& rates,
                                           double horizon, std::size_t n_trials,
                                           std::uint64_t base_seed,
                                           const SimulationOptions& options = {},
                                           unsigned threads = 1);

}  // namespace ionreadout
