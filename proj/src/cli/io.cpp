#include "ionreadout/cli/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ionreadout/errors.hpp"

namespace ionreadout::cli {

using nlohmann::json;

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string provenance_line(std::string_view config_hash, std::uint64_t seed) {
  return "# ionreadout config_hash=" + std::string(config_hash) + " seed=" + std::to_string(seed);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::string_view provenance,
                     const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out_ << provenance << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(double value) { return cell(std::string_view(format_number(value))); }

CsvWriter& CsvWriter::cell(std::uint64_t value) { return cell(std::string_view(std::to_string(value))); }

CsvWriter& CsvWriter::cell(std::string_view value) {
  if (row_started_) out_ << ',';
  out_ << value;
  row_started_ = true;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_started_ = false;
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("failed writing " + path_.string());
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  out.close();
  if (out.fail()) throw std::runtime_error("failed writing " + path.string());
}

namespace {

template <class Fn>
void for_each_trial(const std::vector<TrialRecord>& dark, const std::vector<TrialRecord>& bright,
                    Fn&& fn) {
  std::uint64_t id = 0;
  for (const auto& r : dark) fn(id++, r);
  for (const auto& r : bright) fn(id++, r);
}

}  // namespace

void write_events(const std::filesystem::path& path, std::string_view provenance,
                  const std::vector<TrialRecord>& dark, const std::vector<TrialRecord>& bright) {
  CsvWriter csv(path, provenance, {"trial_id", "prepared", "timestamp_s"});
  for_each_trial(dark, bright, [&](std::uint64_t id, const TrialRecord& r) {
    for (double t : r.events) {
      csv.cell(id).cell(to_string(r.prepared)).cell(t);
      csv.end_row();
    }
  });
  csv.close();
}

void write_trial_summary(const std::filesystem::path& path, std::string_view provenance,
                         const std::vector<TrialRecord>& dark,
                         const std::vector<TrialRecord>& bright) {
  CsvWriter csv(path, provenance,
                {"trial_id", "prepared", "seed", "n_events", "first_event_s", "second_event_s",
                 "horizon_s"});
  for_each_trial(dark, bright, [&](std::uint64_t id, const TrialRecord& r) {
    csv.cell(id).cell(to_string(r.prepared)).cell(r.seed).cell(std::uint64_t{r.events.size()});
    csv.cell(r.events.size() > 0 ? format_number(r.events[0]) : std::string());
    csv.cell(r.events.size() > 1 ? format_number(r.events[1]) : std::string());
    csv.cell(r.horizon);
    csv.end_row();
  });
  csv.close();
}

void write_outcomes(const std::filesystem::path& path, std::string_view provenance,
                    const std::vector<TrialRecord>& dark, const std::vector<TrialRecord>& bright,
                    const ProtocolParams& params) {
  CsvWriter csv(path, provenance,
                {"trial_id", "prepared", "verdict", "decision_time_s", "photons_used"});
  for_each_trial(dark, bright, [&](std::uint64_t id, const TrialRecord& r) {
    const auto out = decide(r, params);
    csv.cell(id).cell(to_string(r.prepared)).cell(to_string(out.verdict)).cell(out.decision_time);
    csv.cell(std::uint64_t{out.photons_used});
    csv.end_row();
  });
  csv.close();
}

void write_sweep(const std::filesystem::path& path, std::string_view provenance,
                 const SweepResult& sweep) {
  CsvWriter csv(path, provenance,
                {"tau_max_s", "tau_c_s", "error_mean", "ci_low", "ci_high", "avg_time_s",
                 "worst_time_s", "n_trials", "error_given_bright", "error_given_dark",
                 "avg_time_bright_s", "avg_time_dark_s"});
  for (const auto& p : sweep.points) {
    csv.cell(p.tau_max).cell(p.tau_c).cell(p.error_mean).cell(p.error_ci.low).cell(p.error_ci.high);
    csv.cell(p.avg_time).cell(p.worst_time).cell(std::uint64_t{p.n_trials});
    csv.cell(p.error_given_bright).cell(p.error_given_dark).cell(p.avg_time_bright).cell(p.avg_time_dark);
    csv.end_row();
  }
  csv.close();
}

void write_curve(const std::filesystem::path& path, std::string_view provenance,
                 const DecayCurve& curve) {
  CsvWriter csv(path, provenance, {"tau_s", "mean_counts", "n_trials", "count_variance"});
  for (const auto& p : curve.points) {
    csv.cell(p.tau).cell(p.mean_counts).cell(std::uint64_t{p.n_trials});
    csv.cell(p.count_variance ? format_number(*p.count_variance) : std::string());
    csv.end_row();
  }
  csv.close();
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, std::size_t row, std::size_t col) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError("expected a number, got '" + text + "'", row, col);
  }
  return v;
}

}  // namespace

DecayCurve read_curve(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  std::map<std::string, std::size_t> column;
  DecayCurve curve;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    const auto cells = split(line);
    if (column.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) column[cells[i]] = i;
      for (const char* need : {"tau_s", "mean_counts", "n_trials"}) {
        if (!column.contains(need)) throw ParseError(std::string("missing column '") + need + "'", row, 0);
      }
      continue;
    }
    auto get = [&](const char* name) -> const std::string& {
      const std::size_t c = column.at(name);
      if (c >= cells.size()) throw ParseError(std::string("missing value for ") + name, row, c + 1);
      return cells[c];
    };
    CurvePoint p;
    p.tau = parse_double(get("tau_s"), row, column["tau_s"] + 1);
    p.mean_counts = parse_double(get("mean_counts"), row, column["mean_counts"] + 1);
    const double n = parse_double(get("n_trials"), row, column["n_trials"] + 1);
    if (n < 1.0 || n != std::floor(n)) throw ParseError("n_trials must be a positive integer", row, column["n_trials"] + 1);
    p.n_trials = static_cast<std::size_t>(n);
    if (column.contains("count_variance")) {
      const std::size_t c = column["count_variance"];
      if (c < cells.size() && !cells[c].empty()) p.count_variance = parse_double(cells[c], row, c + 1);
    }
    if (p.tau <= 0.0 || p.mean_counts < 0.0) throw ParseError("tau must be positive and counts nonnegative", row, 0);
    if (!curve.points.empty() && p.tau <= curve.points.back().tau) {
      throw ParseError("tau_s must be strictly increasing", row, column["tau_s"] + 1);
    }
    curve.points.push_back(p);
  }
  if (column.empty()) throw ParseError("no header line", row, 0);
  return curve;
}

DecayCurve read_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_curve(in);
}

json to_json(const ScatteringRates& r) {
  return {{"s0", r.s0},         {"r0_per_s", r.r0}, {"detected_signal_per_s", r.detected_signal},
          {"rd_per_s", r.rd},   {"rb_per_s", r.rb}, {"rdc_per_s", r.rdc}};
}

json to_json(const RateFit& f) {
  json cov = json::array();
  for (const auto& row : f.covariance) cov.push_back(row);
  return {{"detected_signal_per_s", f.detected_signal},
          {"rd_per_s", f.rd},
          {"rb_per_s", f.rb},
          {"detected_signal_stderr", f.standard_error(0)},
          {"rd_stderr", f.standard_error(1)},
          {"rb_stderr", f.standard_error(2)},
          {"residual_norm", f.residual_norm},
          {"iterations", f.iterations},
          {"covariance", cov}};
}

json to_json(const FidelityPoint& p) {
  return {{"tau_max_s", p.tau_max},
          {"tau_c_s", p.tau_c},
          {"error_mean", p.error_mean},
          {"fidelity", p.fidelity()},
          {"ci_low", p.error_ci.low},
          {"ci_high", p.error_ci.high},
          {"avg_time_s", p.avg_time},
          {"worst_time_s", p.worst_time},
          {"n_trials", p.n_trials},
          {"error_given_bright", p.error_given_bright},
          {"error_given_dark", p.error_given_dark},
          {"avg_time_bright_s", p.avg_time_bright},
          {"avg_time_dark_s", p.avg_time_dark}};
}

}  // namespace ionreadout::cli
