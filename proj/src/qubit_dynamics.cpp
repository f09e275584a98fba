#include "ionreadout/qubit_dynamics.hpp"

#include <cmath>

#include "ionreadout/errors.hpp"

namespace ionreadout {

namespace {
void require_rates(double rd, double rb) {
  require(rd >= 0.0 && rb >= 0.0, "pumping rates must be nonnegative");
}
}  // namespace

double bright_population(double t, double p1_initial, double rd, double rb) {
  require(t >= 0.0, "t must be nonnegative");
  require(p1_initial >= 0.0 && p1_initial <= 1.0, "p1_initial must be a probability");
  require_rates(rd, rb);
  const double k = rb + rd;
  if (k == 0.0) return p1_initial;
  const double p_inf = rb / k;
  return p_inf + (p1_initial - p_inf) * std::exp(-k * t);
}

PopulationState population_state(double t, double p1_initial, double rd, double rb) {
  const double p1 = bright_population(t, p1_initial, rd, rb);
  return {p1, 1.0 - p1};
}

double expected_counts(double tau, double p1_initial, double detected_signal, double rd,
                       double rb) {
  require(tau >= 0.0, "tau must be nonnegative");
  require(p1_initial >= 0.0 && p1_initial <= 1.0, "p1_initial must be a probability");
  require(detected_signal >= 0.0, "detected_signal must be nonnegative");
  require_rates(rd, rb);
  const double k = rb + rd;
  if (k == 0.0) return detected_signal * p1_initial * tau;
  const double p_inf = rb / k;
  // -expm1 keeps (1 - e^{-k tau})/k accurate when k tau is small.
  const double relax = -std::expm1(-k * tau) / k;
  return detected_signal * (p_inf * tau + (p1_initial - p_inf) * relax);
}

OnePhotonLikelihoods one_photon_likelihoods(double t, const ScatteringRates& rates) {
  require(t >= 0.0, "t must be nonnegative");
  require(rates.detected_signal > 0.0, "detected_signal must be positive");
  const double s = rates.detected_signal;
  return {rates.rdc * t, rates.rd / s * -std::expm1(-s * t)};
}

double optimal_cutoff(double rd, double rdc, double detected_signal) {
  require(detected_signal > 0.0, "detected_signal must be positive");
  require(rd > 0.0 && rdc > 0.0, "rd and rdc must be positive");
  if (rd <= rdc) return 0.0;
  return std::log(rd / rdc) / detected_signal;
}

}  // namespace ionreadout
