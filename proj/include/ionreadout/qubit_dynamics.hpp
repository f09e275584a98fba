#pragma once

#include "ionreadout/rate_model.hpp"

namespace ionreadout {

/// Populations of the bright manifold and the dark |0> state.
struct PopulationState {
  double p1 = 1.0;
  double p0 = 0.0;
};

/// Closed-form solution of dp1/dt = rb p0 - rd p1 with p0 + p1 = 1.
double bright_population(double t, double p1_initial, double rd, double rb);

PopulationState population_state(double t, double p1_initial, double rd, double rb);

/// Mean detected signal photons in [0, tau]: integral of detected_signal * p1(t).
/// Background counts are not included.
double expected_counts(double tau, double p1_initial, double detected_signal, double rd,
                       double rb);

struct OnePhotonLikelihoods {
  double p_dark_first = 0.0;     ///< P0(t) = rdc t
  double p_bright_single = 0.0;  ///< P1(t) = rd/S (1 - exp(-S t)), S = detected signal rate
};

/// Large-signal approximations to the probability that a lone first detection
/// by time t came from a dark or a bright ion. Only used to place the cutoff.
OnePhotonLikelihoods one_photon_likelihoods(double t, const ScatteringRates& rates);

/// Time at which P1(t) - P0(t) peaks: ln(rd/rdc)/S, or 0 when rd <= rdc.
double optimal_cutoff(double rd, double rdc, double detected_signal);

}  // namespace ionreadout
