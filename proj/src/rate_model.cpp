#include "ionreadout/rate_model.hpp"

#include <cmath>

#include "ionreadout/errors.hpp"

namespace ionreadout {

namespace {
constexpr double kPlanck = 6.62607015e-34;     // J s
constexpr double kLightSpeed = 299792458.0;    // m/s
constexpr double kWattPerM2ToMwPerCm2 = 0.1;
constexpr double kUm2ToCm2 = 1e-8;
constexpr double kMwToUw = 1e3;
}  // namespace

double two_level_saturation_intensity(double gamma, double wavelength_m) {
  require(gamma > 0.0 && wavelength_m > 0.0, "gamma and wavelength must be positive");
  const double si = std::numbers::pi * kPlanck * kLightSpeed * gamma /
                    (3.0 * wavelength_m * wavelength_m * wavelength_m);
  return si * kWattPerM2ToMwPerCm2;
}

void RateModel::validate() const {
  require(gamma > 0.0, "gamma must be positive");
  require(delta_hfp > 0.0, "delta_hfp must be positive");
  require(delta_hfs > 0.0, "delta_hfs must be positive");
  require(epsilon > 0.0 && epsilon <= 1.0, "epsilon must lie in (0, 1]");
  require(i_sat > 0.0, "i_sat must be positive");
  require(beam_waist > 0.0, "beam_waist must be positive");
  require(dark_count >= 0.0, "dark_count must be nonnegative");
  require(background_per_uw >= 0.0, "background_per_uw must be nonnegative");
  require(std::isfinite(detuning) && std::isfinite(zeeman), "detuning and zeeman must be finite");
}

double saturation_from_intensity(double intensity, double i_sat) {
  require(i_sat > 0.0, "i_sat must be positive");
  require(intensity >= 0.0, "intensity must be nonnegative");
  return intensity / i_sat;
}

double bright_scattering_rate(double s0, double detuning, double gamma) {
  require(s0 >= 0.0, "s0 must be nonnegative");
  require(gamma > 0.0, "gamma must be positive");
  const double x = 2.0 * detuning / gamma;
  return (gamma / 6.0) * s0 / (1.0 + (2.0 / 3.0) * s0 + x * x);
}

double dark_pumping_rate(double s0, double gamma, double delta_hfp) {
  require(s0 >= 0.0, "s0 must be nonnegative");
  require(gamma > 0.0 && delta_hfp > 0.0, "gamma and delta_hfp must be positive");
  // 2/3: one of three F=1 sublevels is dark at any time; 1/3: branching to |0>.
  const double off = gamma / (2.0 * delta_hfp);
  return (2.0 / 3.0) * (1.0 / 3.0) * (gamma / 2.0) * s0 * off * off;
}

double bright_pumping_rate(double s0, double gamma, double delta_hfp, double delta_hfs) {
  require(s0 >= 0.0, "s0 must be nonnegative");
  require(gamma > 0.0 && delta_hfp > 0.0 && delta_hfs > 0.0,
          "gamma and hyperfine splittings must be positive");
  // 2/3: branching from P1/2 F=1 into the bright manifold.
  const double off = gamma / (2.0 * (delta_hfp + delta_hfs));
  return (2.0 / 3.0) * (gamma / 2.0) * s0 * off * off;
}

double power_from_intensity(double intensity, double waist_um) {
  require(intensity >= 0.0, "intensity must be nonnegative");
  require(waist_um > 0.0, "beam waist must be positive");
  const double area_cm2 = std::numbers::pi * waist_um * waist_um * kUm2ToCm2 / 2.0;
  return intensity * area_cm2 * kMwToUw;
}

double background_rate(double power_uw, double dark_count, double background_per_uw) {
  require(power_uw >= 0.0, "power must be nonnegative");
  return dark_count + background_per_uw * power_uw;
}

ScatteringRates rates_for_operating_point(const RateModel& model, double intensity) {
  model.validate();
  ScatteringRates r;
  r.s0 = saturation_from_intensity(intensity, model.i_sat);
  r.r0 = bright_scattering_rate(r.s0, model.detuning, model.gamma);
  r.detected_signal = model.epsilon * r.r0;
  r.rd = dark_pumping_rate(r.s0, model.gamma, model.delta_hfp);
  r.rb = bright_pumping_rate(r.s0, model.gamma, model.delta_hfp, model.delta_hfs);
  r.rdc = background_rate(power_from_intensity(intensity, model.beam_waist), model.dark_count,
                          model.background_per_uw);
  return r;
}

}  // namespace ionreadout
