#include <cmath>
#include <random>

#include <doctest.h>

#include "ionreadout/errors.hpp"
#include "ionreadout/estimation.hpp"
#include "ionreadout/qubit_dynamics.hpp"
#include "ionreadout/rate_model.hpp"

using namespace ionreadout;
using doctest::Approx;

namespace {

DecayCurve noiseless(double signal, double rd, double rb, std::size_t n = 30, double span = 5.0) {
  DecayCurve c;
  const double k = rd + rb > 0.0 ? rd + rb : 170.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double tau = span / k * static_cast<double>(i) / static_cast<double>(n);
    c.points.push_back({tau, expected_counts(tau, 1.0, signal, rd, rb), 1000, std::nullopt});
  }
  return c;
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

}  // namespace

TEST_CASE("noiseless canonical curve is recovered") {
  const auto curve = noiseless(1.87e5, 170.0, 10.0);
  const auto fit = fit_decay_curve(curve, initial_guess(curve));
  CHECK(rel(fit.detected_signal, 1.87e5) < 1e-3);
  CHECK(rel(fit.rd, 170.0) < 1e-3);
  CHECK(rel(fit.rb, 10.0) < 1e-3);
  double scale = 0.0;
  for (const auto& p : curve.points) scale = std::max(scale, p.mean_counts);
  double worst = 0.0;
  for (const auto& p : curve.points) {
    const double model = expected_counts(p.tau, 1.0, fit.detected_signal, fit.rd, fit.rb);
    worst = std::max(worst, std::fabs(model - p.mean_counts) / scale);
  }
  CHECK(worst < 1e-8);
  CHECK(fit.residual_norm >= 0.0);
}

TEST_CASE("a straight line fits with both pumping rates at zero") {
  DecayCurve line;
  for (int i = 1; i <= 12; ++i) line.points.push_back({i * 1e-4, 2.5e4 * i * 1e-4, 500, std::nullopt});
  const auto fit = fit_decay_curve(line, initial_guess(line));
  CHECK(fit.detected_signal == Approx(2.5e4).epsilon(1e-8));
  CHECK(fit.rd == Approx(0.0).epsilon(1e-6).scale(1.0));
  CHECK(fit.rb == Approx(0.0).epsilon(1e-6).scale(1.0));
  CHECK(fit.rd >= 0.0);
  CHECK(fit.rb >= 0.0);
}

TEST_CASE("fit errors") {
  DecayCurve zeros;
  for (int i = 1; i <= 5; ++i) zeros.points.push_back({i * 1e-4, 0.0, 10, std::nullopt});
  CHECK_THROWS_AS(fit_decay_curve(zeros, RateFit{}), DegenerateData);

  auto short_curve = noiseless(1e5, 100, 5, 3);
  CHECK_THROWS_AS(fit_decay_curve(short_curve, RateFit{}), InvalidParameter);

  DecayCurve unordered = noiseless(1e5, 100, 5, 6);
  std::swap(unordered.points[1], unordered.points[2]);
  CHECK_THROWS_AS(fit_decay_curve(unordered, RateFit{}), InvalidParameter);

  const auto curve = noiseless(1.87e5, 170.0, 10.0);
  FitOptions starved;
  starved.max_iterations = 1;
  RateFit far{1e3, 1.0, 1.0};
  try {
    fit_decay_curve(curve, far, starved);
    FAIL("expected FitFailure");
  } catch (const FitFailure& e) {
    CHECK(e.best_iterate().iterations == 1);
    CHECK(e.best_iterate().detected_signal > 0.0);
  }
}

TEST_CASE("unweighted fitting also recovers the rates") {
  const auto curve = noiseless(6.4e4, 47.0, 2.9);
  FitOptions opt;
  opt.weighting = CurveWeighting::Unweighted;
  const auto fit = fit_decay_curve(curve, initial_guess(curve), opt);
  CHECK(rel(fit.detected_signal, 6.4e4) < 1e-3);
  CHECK(rel(fit.rd, 47.0) < 1e-3);
  CHECK(rel(fit.rb, 2.9) < 1e-3);
}

TEST_CASE("curves from records subtract background and report variance") {
  std::vector<TrialRecord> recs(3);
  for (auto& r : recs) r.horizon = 1e-3;
  recs[0].events = {1e-4, 2e-4, 9e-4};
  recs[1].events = {5e-4};
  const auto c = curve_from_records(recs, {1.5e-4, 1e-3}, 100.0);
  REQUIRE(c.points.size() == 2);
  CHECK(c.points[0].mean_counts == Approx(1.0 / 3.0 - 100.0 * 1.5e-4));
  CHECK(c.points[1].mean_counts == Approx(4.0 / 3.0 - 0.1));
  CHECK(c.points[1].n_trials == 3);
  CHECK(*c.points[1].count_variance == Approx(((3 - 4.0 / 3) * (3 - 4.0 / 3) + (1 - 4.0 / 3) * (1 - 4.0 / 3) +
                                               (4.0 / 3) * (4.0 / 3)) / 2.0));
  CHECK_THROWS_AS(curve_from_records(recs, {2e-3}), InsufficientData);
}

TEST_CASE("rate-versus-drive slope through the origin") {
  CHECK(fit_rate_vs_power({{1.0, 3.0}, {2.0, 6.0}, {5.0, 15.0}}) == Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(fit_rate_vs_power({{0.0, 1.0}, {0.0, 2.0}}), DegenerateData);
  CHECK_THROWS_AS(fit_rate_vs_power({{1.0, 1.0}}), InvalidParameter);
  CHECK_THROWS_AS(fit_rate_vs_power({{1.0, -1.0}, {2.0, 1.0}}), InvalidParameter);

  const RateModel m;
  std::vector<std::pair<double, double>> pts;
  for (double i : {8.0, 29.0, 36.0}) pts.emplace_back(i, rates_for_operating_point(m, i).rd);
  const double slope = fit_rate_vs_power(pts);
  CHECK(slope == Approx(rates_for_operating_point(m, 1.0).rd).epsilon(1e-9));

  std::vector<std::pair<double, double>> scaled;
  for (auto [x, y] : pts) scaled.emplace_back(x, 7.0 * y);
  CHECK(fit_rate_vs_power(scaled) == Approx(7.0 * slope).epsilon(1e-14));
}

TEST_CASE("noisy rate-versus-drive points") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  const double k = 5.87;
  std::vector<std::pair<double, double>> pts;
  for (int i = 1; i <= 10; ++i) pts.emplace_back(4.0 * i, k * 4.0 * i * (1.0 + noise(rng)));
  CHECK(rel(fit_rate_vs_power(pts), k) < 0.05);
}
