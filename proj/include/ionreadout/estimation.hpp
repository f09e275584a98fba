#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ionreadout/photon_stream.hpp"

namespace ionreadout {

/// Mean detected counts accumulated over a window of length tau, averaged over
/// n_trials bright-prepared runs.
struct CurvePoint {
  double tau = 0.0;          ///< s
  double mean_counts = 0.0;
  std::size_t n_trials = 1;
  /// Sample variance of the per-trial counts, when known. Gives exact
  /// inverse-variance weights; otherwise a Poisson variance is assumed.
  std::optional<double> count_variance;
};

struct DecayCurve {
  std::vector<CurvePoint> points;

  /// Taus strictly increasing and positive, counts nonnegative, n_trials >= 1.
  void validate() const;
};

using Covariance3 = std::array<std::array<double, 3>, 3>;

/// Parameter order in `covariance`: detected_signal, rd, rb.
struct RateFit {
  double detected_signal = 0.0;
  double rd = 0.0;
  double rb = 0.0;
  double residual_norm = 0.0;  ///< sqrt of the weighted sum of squared residuals
  Covariance3 covariance{};
  std::size_t iterations = 0;

  double standard_error(std::size_t i) const;
};

enum class CurveWeighting {
  InverseVariance,  ///< n / variance (sample variance if given, Poisson otherwise)
  Unweighted,       ///< n_trials only
};

struct FitOptions {
  std::size_t max_iterations = 500;
  double tolerance = 1e-12;  ///< relative change in cost and step
  CurveWeighting weighting = CurveWeighting::InverseVariance;
};

class FitFailure : public std::runtime_error {
 public:
  FitFailure(const std::string& what, RateFit best) : std::runtime_error(what), best_(best) {}
  const RateFit& best_iterate() const noexcept { return best_; }

 private:
  RateFit best_;
};

/// Heuristic starting point: initial slope for the signal rate, the long-time
/// slope for the steady-state population, and the curvature time for rd + rb.
RateFit initial_guess(const DecayCurve& curve);

/// Bounded (nonnegative) Levenberg-Marquardt fit of the bright-prepared
/// mean-count curve. Throws DegenerateData when every count is zero and
/// FitFailure if the iteration budget runs out.
RateFit fit_decay_curve(const DecayCurve& curve, const RateFit& guess,
                        const FitOptions& options = {});

/// Mean and sample variance of the cumulative count at each tau over
/// bright-prepared records, minus a known background rate times tau.
DecayCurve curve_from_records(const std::vector<TrialRecord>& records,
                              const std::vector<double>& taus, double background_rate = 0.0);

/// Least-squares slope of rate = k * drive through the origin.
double fit_rate_vs_power(const std::vector<std::pair<double, double>>& points);

}  // namespace ionreadout
