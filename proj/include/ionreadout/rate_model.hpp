#pragma once

#include <numbers>

namespace ionreadout {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Two-level saturation intensity pi*h*c*Gamma / (3 lambda^3), in mW/cm^2.
double two_level_saturation_intensity(double gamma, double wavelength_m);

/// Physical constants and detection-beam settings for a 171Yb+ readout.
///
/// Angular frequencies are stored in rad/s. The defaults are the measured
/// values for the NA = 0.6 surface-trap apparatus; `i_sat` defaults to the
/// two-level value at 369.5 nm and is the knob to recalibrate the intensity
/// axis against data.
struct RateModel {
  double gamma = kTwoPi * 19.6e6;       ///< P1/2 linewidth
  double delta_hfp = kTwoPi * 2.1e9;    ///< P1/2 hyperfine splitting
  double delta_hfs = kTwoPi * 12.6e9;   ///< S1/2 hyperfine splitting
  double zeeman = kTwoPi * 4.8e6;       ///< carried for reference only
  double detuning = 0.0;                ///< detection beam detuning
  double epsilon = 0.022;               ///< overall detection efficiency
  double i_sat = two_level_saturation_intensity(kTwoPi * 19.6e6, 369.5e-9);
  double beam_waist = 41.0;             ///< um
  double dark_count = 6.5;              ///< Hz
  double background_per_uw = 35.0;      ///< Hz per uW of beam power

  /// Throws InvalidParameter if any field is out of its physical domain.
  void validate() const;

  friend bool operator==(const RateModel&, const RateModel&) = default;
};

/// Operational rates for one operating point, all in events/s.
struct ScatteringRates {
  double s0 = 0.0;
  double r0 = 0.0;               ///< bright-state scattering rate
  double detected_signal = 0.0;  ///< epsilon * r0
  double rd = 0.0;               ///< bright -> dark pumping
  double rb = 0.0;               ///< dark -> bright pumping
  double rdc = 0.0;              ///< dark counts + beam background

  friend bool operator==(const ScatteringRates&, const ScatteringRates&) = default;
};

double saturation_from_intensity(double intensity, double i_sat);

/// (Gamma/6) s0 / (1 + 2 s0/3 + (2 detuning/Gamma)^2). Assumes the coherent
/// dark states are destabilized at the optimal Zeeman splitting.
double bright_scattering_rate(double s0, double detuning, double gamma);

/// Off-resonant pumping |1> -> |0> through P1/2 F=1.
double dark_pumping_rate(double s0, double gamma, double delta_hfp);

/// Off-resonant pumping |0> -> S1/2 F=1 through P1/2 F=1.
double bright_pumping_rate(double s0, double gamma, double delta_hfp, double delta_hfs);

/// Peak intensity to power for a Gaussian beam: P = I pi w^2 / 2.
/// Intensity in mW/cm^2, waist in um, result in uW.
double power_from_intensity(double intensity, double waist_um);

double background_rate(double power_uw, double dark_count, double background_per_uw);

ScatteringRates rates_for_operating_point(const RateModel& model, double intensity);

}  // namespace ionreadout
