#include "ionreadout/protocols.hpp"

#include <algorithm>
#include <string>

#include "ionreadout/errors.hpp"

namespace ionreadout {

namespace {

void check(const TrialRecord& record, const ProtocolParams& params, ProtocolMode expected) {
  if (params.mode != expected) throw InvalidParameter("protocol mode does not match decision rule");
  params.validate();
  if (record.horizon < params.tau_max) {
    throw InsufficientData("record horizon " + std::to_string(record.horizon) +
                           " s is shorter than tau_max " + std::to_string(params.tau_max) + " s");
  }
}

DetectionOutcome dark_at(double tau_max, std::size_t used) {
  return {QubitState::Dark, tau_max, used};
}

}  // namespace

std::string_view to_string(ProtocolMode mode) {
  switch (mode) {
    case ProtocolMode::Threshold: return "threshold";
    case ProtocolMode::FirstPhoton: return "first-photon";
    case ProtocolMode::FirstTwoPhoton: return "first-two-photon";
  }
  return "unknown";
}

ProtocolMode parse_mode(std::string_view text) {
  if (text == "threshold") return ProtocolMode::Threshold;
  if (text == "first-photon") return ProtocolMode::FirstPhoton;
  if (text == "first-two-photon") return ProtocolMode::FirstTwoPhoton;
  throw InvalidParameter("unknown protocol mode '" + std::string(text) + "'");
}

void ProtocolParams::validate() const {
  require(tau_max > 0.0, "tau_max must be positive");
  if (mode == ProtocolMode::FirstTwoPhoton) {
    require(tau_c >= 0.0 && tau_c <= tau_max, "tau_c must lie in [0, tau_max]");
  }
  if (mode == ProtocolMode::Threshold) require(threshold >= 1, "threshold must be at least 1");
}

DetectionOutcome decide_threshold(const TrialRecord& record, const ProtocolParams& params) {
  check(record, params, ProtocolMode::Threshold);
  const auto& ev = record.events;
  const auto in_window = static_cast<std::size_t>(
      std::upper_bound(ev.begin(), ev.end(), params.tau_max) - ev.begin());
  const auto verdict = in_window >= params.threshold ? QubitState::Bright : QubitState::Dark;
  return {verdict, params.tau_max, in_window};
}

DetectionOutcome decide_first_two_photon(const TrialRecord& record, const ProtocolParams& params) {
  check(record, params, ProtocolMode::FirstTwoPhoton);
  const auto& ev = record.events;
  if (ev.empty() || ev[0] > params.tau_max) return dark_at(params.tau_max, 0);
  if (ev[0] < params.tau_c) return {QubitState::Bright, ev[0], 1};
  if (ev.size() >= 2 && ev[1] <= params.tau_max) return {QubitState::Bright, ev[1], 2};
  return dark_at(params.tau_max, 1);
}

DetectionOutcome decide_first_photon(const TrialRecord& record, const ProtocolParams& params) {
  check(record, params, ProtocolMode::FirstPhoton);
  const auto& ev = record.events;
  if (ev.empty() || ev[0] > params.tau_max) return dark_at(params.tau_max, 0);
  return {QubitState::Bright, ev[0], 1};
}

DetectionOutcome decide(const TrialRecord& record, const ProtocolParams& params) {
  switch (params.mode) {
    case ProtocolMode::Threshold: return decide_threshold(record, params);
    case ProtocolMode::FirstPhoton: return decide_first_photon(record, params);
    case ProtocolMode::FirstTwoPhoton: return decide_first_two_photon(record, params);
  }
  throw InvalidParameter("unknown protocol mode");
}

}  // namespace ionreadout
