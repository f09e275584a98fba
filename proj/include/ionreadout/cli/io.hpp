#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ionreadout/estimation.hpp"
#include "ionreadout/experiment.hpp"
#include "ionreadout/photon_stream.hpp"
#include "ionreadout/protocols.hpp"

namespace ionreadout::cli {

/// Nine significant digits, locale independent.
std::string format_number(double value);

/// Provenance line written at the top of every data file. Lines starting
/// with '#' are skipped by readers.
std::string provenance_line(std::string_view config_hash, std::uint64_t seed);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view provenance,
            const std::vector<std::string>& header);

  CsvWriter& cell(double value);
  CsvWriter& cell(std::uint64_t value);
  CsvWriter& cell(std::string_view value);
  void end_row();
  /// Flushes and throws std::runtime_error if anything failed to write.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool row_started_ = false;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// trial_id,prepared,timestamp_s; ids count dark trials first, then bright.
void write_events(const std::filesystem::path& path, std::string_view provenance,
                  const std::vector<TrialRecord>& dark, const std::vector<TrialRecord>& bright);

void write_trial_summary(const std::filesystem::path& path, std::string_view provenance,
                         const std::vector<TrialRecord>& dark,
                         const std::vector<TrialRecord>& bright);

void write_outcomes(const std::filesystem::path& path, std::string_view provenance,
                    const std::vector<TrialRecord>& dark, const std::vector<TrialRecord>& bright,
                    const ProtocolParams& params);

void write_sweep(const std::filesystem::path& path, std::string_view provenance,
                 const SweepResult& sweep);

void write_curve(const std::filesystem::path& path, std::string_view provenance,
                 const DecayCurve& curve);

/// Reads tau_s,mean_counts,n_trials[,count_variance]. Columns are matched by
/// header name; ParseError names the offending row and column.
DecayCurve read_curve(std::istream& in);
DecayCurve read_curve(const std::filesystem::path& path);

nlohmann::json to_json(const ScatteringRates& rates);
nlohmann::json to_json(const RateFit& fit);
nlohmann::json to_json(const FidelityPoint& point);

}  // namespace ionreadout::cli
