#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ionreadout/estimation.hpp"
#include "ionreadout/photon_stream.hpp"
#include "ionreadout/protocols.hpp"
#include "ionreadout/rate_model.hpp"

namespace ionreadout::cli {

struct GridSpec {
  double start = 0.5e-6;
  double stop = 250e-6;
  double step = 0.5e-6;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Everything that determines the data a run produces. Thread count and
/// output location are runtime settings and deliberately live elsewhere, so
/// they never change the config hash.
struct RunConfig {
  RateModel model;
  std::vector<double> intensities{8.0, 29.0, 36.0};  ///< mW/cm^2
  ProtocolMode mode = ProtocolMode::FirstTwoPhoton;
  double tau_max = 50e-6;
  std::optional<double> tau_c;  ///< empty: optimal cutoff from the rates
  unsigned threshold = 1;
  std::size_t trials_per_state = 50000;
  double horizon = 200e-6;      ///< simulate: record length
  GridSpec tau_grid;            ///< sweep
  GridSpec optimize_range{1e-6, 250e-6, 1e-6};
  SimulationOptions simulation;
  double ci_level = 0.6827;
  FitOptions fit;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Frequencies appear in the file as f/(2 pi) in MHz or GHz, e.g.
/// "gamma_2pi_mhz": 19.6 means Gamma = 2 pi x 19.6 MHz.
nlohmann::json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical serialization used for hashing and for embedding in outputs.
std::string canonical_text(const RunConfig& config);

/// FNV-1a 64 of canonical_text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace ionreadout::cli
