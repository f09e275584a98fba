#pragma once

#include <cstddef>
#include <string_view>

#include "ionreadout/photon_stream.hpp"

namespace ionreadout {

enum class ProtocolMode { Threshold, FirstPhoton, FirstTwoPhoton };

std::string_view to_string(ProtocolMode mode);
ProtocolMode parse_mode(std::string_view text);

struct ProtocolParams {
  ProtocolMode mode = ProtocolMode::FirstTwoPhoton;
  double tau_max = 50e-6;   ///< s
  double tau_c = 0.0;       ///< s, FirstTwoPhoton only
  unsigned threshold = 1;   ///< Threshold only: bright iff count >= threshold

  void validate() const;

  friend bool operator==(const ProtocolParams&, const ProtocolParams&) = default;
};

struct DetectionOutcome {
  QubitState verdict = QubitState::Dark;
  double decision_time = 0.0;  ///< s
  std::size_t photons_used = 0;

  friend bool operator==(const DetectionOutcome&, const DetectionOutcome&) = default;
};

/// Counts events in [0, tau_max]; the verdict is only known at tau_max.
DetectionOutcome decide_threshold(const TrialRecord& record, const ProtocolParams& params);

/// Bright at the first event if it arrives strictly before tau_c, else bright
/// at a second event within tau_max, else dark at tau_max.
DetectionOutcome decide_first_two_photon(const TrialRecord& record, const ProtocolParams& params);

/// Bright at the first event within tau_max, else dark at tau_max.
DetectionOutcome decide_first_photon(const TrialRecord& record, const ProtocolParams& params);

/// Dispatches on params.mode.
DetectionOutcome decide(const TrialRecord& record, const ProtocolParams& params);

}  // namespace ionreadout
