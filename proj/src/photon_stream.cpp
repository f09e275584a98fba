#include "ionreadout/photon_stream.hpp"

#include <cmath>
#include <random>

#include "ionreadout/errors.hpp"
#include "ionreadout/parallel.hpp"

namespace ionreadout {

namespace {

/// Bit-reproducible uniforms and exponentials from a standard engine; the
/// std distributions are implementation-defined and are avoided on purpose.
class TrialRng {
 public:
  explicit TrialRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

void apply_detector(std::vector<double>& events, const SimulationOptions& options) {
  if (options.time_resolution > 0.0) {
    for (double& t : events) t = std::floor(t / options.time_resolution) * options.time_resolution;
  }
  if (options.dead_time > 0.0 || options.time_resolution > 0.0) {
    std::vector<double> kept;
    kept.reserve(events.size());
    for (double t : events) {
      if (!kept.empty() && (t <= kept.back() || t - kept.back() < options.dead_time)) continue;
      kept.push_back(t);
    }
    events = std::move(kept);
  }
}

}  // namespace

std::string_view to_string(QubitState state) {
  return state == QubitState::Bright ? "bright" : "dark";
}

QubitState parse_state(std::string_view text) {
  if (text == "bright" || text == "1") return QubitState::Bright;
  if (text == "dark" || text == "0") return QubitState::Dark;
  throw InvalidParameter("unknown qubit state '" + std::string(text) + "'");
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
  std::uint64_t z = base_seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrialRecord simulate_trial(QubitState prepared, const ScatteringRates& rates, double horizon,
                           std::uint64_t seed, const SimulationOptions& options) {
  require(horizon > 0.0, "horizon must be positive");
  require(rates.detected_signal >= 0.0 && rates.rd >= 0.0 && rates.rb >= 0.0 && rates.rdc >= 0.0,
          "rates must be nonnegative");
  require(options.preparation_error >= 0.0 && options.preparation_error <= 1.0,
          "preparation_error must be a probability");
  require(options.dead_time >= 0.0 && options.time_resolution >= 0.0,
          "dead_time and time_resolution must be nonnegative");

  TrialRecord record;
  record.prepared = prepared;
  record.horizon = horizon;
  record.seed = seed;
  if (options.record_trajectory) record.transitions.emplace();

  TrialRng rng(seed);
  QubitState state = prepared;
  if (options.preparation_error > 0.0 && rng.uniform() < options.preparation_error) {
    state = flipped(state);
    if (record.transitions) record.transitions->push_back({0.0, state});
  }

  const double signal = rates.detected_signal;
  double t = 0.0;
  for (;;) {
    const bool bright = state == QubitState::Bright;
    const double pump = bright ? rates.rd : rates.rb;
    const double emit = bright ? signal : 0.0;
    const double total = emit + pump + rates.rdc;
    if (total <= 0.0) break;
    t += rng.exponential(total);
    if (t > horizon) break;
    const double pick = rng.uniform() * total;
    if (pick >= emit && pick < emit + pump) {
      state = flipped(state);
      if (record.transitions) record.transitions->push_back({t, state});
    } else if (record.events.empty() || t > record.events.back()) {
      record.events.push_back(t);
    }
  }
  apply_detector(record.events, options);
  return record;
}

std::vector<TrialRecord> simulate_ensemble(QubitState prepared, const ScatteringRates& rates,
                                           double horizon, std::size_t n_trials,
                                           std::uint64_t base_seed,
                                           const SimulationOptions& options, unsigned threads) {
  require(n_trials >= 1, "n_trials must be at least 1");
  require(horizon > 0.0, "horizon must be positive");
  std::vector<TrialRecord> out(n_trials);
  parallel_for(n_trials, threads, [&](std::size_t i) {
    out[i] = simulate_trial(prepared, rates, horizon, derive_seed(base_seed, i), options);
  });
  return out;
}

}  // namespace ionreadout
