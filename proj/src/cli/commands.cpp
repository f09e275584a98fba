#include "ionreadout/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <ostream>

#include "ionreadout/cli/io.hpp"
#include "ionreadout/estimation.hpp"
#include "ionreadout/experiment.hpp"
#include "ionreadout/qubit_dynamics.hpp"

namespace ionreadout::cli {

using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json metadata(const RunConfig& config, std::string_view command) {
  return {{"command", std::string(command)},
          {"config", to_json(config)},
          {"config_hash", config_hash(config)},
          {"seed", config.seed},
          {"created_utc", utc_now()}};
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
}

ProtocolParams protocol_for(const RunConfig& config, const ScatteringRates& rates) {
  ProtocolParams p;
  p.mode = config.mode;
  p.tau_max = config.tau_max;
  p.threshold = config.threshold;
  if (config.mode == ProtocolMode::FirstTwoPhoton) p.tau_c = config.tau_c.value_or(cutoff_for(rates));
  return p;
}

ExperimentOptions experiment_options(const RunConfig& config, const Runtime& runtime) {
  return {config.simulation, runtime.threads, config.ci_level};
}

std::string us(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", seconds * 1e6);
  return buf;
}

}  // namespace

double cutoff_for(const ScatteringRates& rates) {
  if (rates.detected_signal <= 0.0 || rates.rd <= 0.0 || rates.rdc <= 0.0) return 0.0;
  return optimal_cutoff(rates.rd, rates.rdc, rates.detected_signal);
}

std::string intensity_tag(double intensity) { return "I" + format_number(intensity); }

void cmd_rates(const RunConfig& config, const Runtime& runtime, std::ostream& out) {
  ensure_dir(runtime.out_dir);
  const auto prov = provenance_line(config_hash(config), config.seed);
  CsvWriter csv(runtime.out_dir / "rates.csv", prov,
                {"intensity_mw_cm2", "power_uw", "s0", "r0_per_s", "detected_signal_per_s",
                 "rd_per_s", "rb_per_s", "rdc_per_s", "tau_c_s"});
  json meta = metadata(config, "rates");
  out << "intensity_mw_cm2  s0  r0_per_s  detected_signal_per_s  rd_per_s  rb_per_s  rdc_per_s  tau_c_us\n";
  for (double intensity : config.intensities) {
    const auto r = rates_for_operating_point(config.model, intensity);
    const double power = power_from_intensity(intensity, config.model.beam_waist);
    const double tau_c = cutoff_for(r);
    csv.cell(intensity).cell(power).cell(r.s0).cell(r.r0).cell(r.detected_signal);
    csv.cell(r.rd).cell(r.rb).cell(r.rdc).cell(tau_c);
    csv.end_row();
    out << format_number(intensity) << "  " << format_number(r.s0) << "  " << format_number(r.r0)
        << "  " << format_number(r.detected_signal) << "  " << format_number(r.rd) << "  "
        << format_number(r.rb) << "  " << format_number(r.rdc) << "  " << us(tau_c) << '\n';
    json row = to_json(r);
    row["intensity_mw_cm2"] = intensity;
    row["power_uw"] = power;
    row["tau_c_s"] = tau_c;
    meta["operating_points"].push_back(row);
  }
  csv.close();
  write_json(runtime.out_dir / "rates_metadata.json", meta);
}

void cmd_simulate(const RunConfig& config, const Runtime& runtime, std::ostream& out) {
  ensure_dir(runtime.out_dir);
  const auto prov = provenance_line(config_hash(config), config.seed);
  json meta = metadata(config, "simulate");
  for (double intensity : config.intensities) {
    const auto rates = rates_for_operating_point(config.model, intensity);
    auto params = protocol_for(config, rates);
    params.tau_max = std::min(params.tau_max, config.horizon);
    if (params.mode == ProtocolMode::FirstTwoPhoton) params.tau_c = std::min(params.tau_c, params.tau_max);
    const auto dark = simulate_ensemble(QubitState::Dark, rates, config.horizon, config.trials_per_state,
                                        ensemble_seed(config.seed, QubitState::Dark),
                                        config.simulation, runtime.threads);
    const auto bright = simulate_ensemble(QubitState::Bright, rates, config.horizon,
                                          config.trials_per_state,
                                          ensemble_seed(config.seed, QubitState::Bright),
                                          config.simulation, runtime.threads);
    const auto tag = intensity_tag(intensity);
    write_events(runtime.out_dir / ("events_" + tag + ".csv"), prov, dark, bright);
    write_trial_summary(runtime.out_dir / ("trials_" + tag + ".csv"), prov, dark, bright);
    write_outcomes(runtime.out_dir / ("outcomes_" + tag + ".csv"), prov, dark, bright, params);

    std::vector<double> taus;
    for (double t : uniform_grid(config.tau_grid.start, std::max(config.tau_grid.start, config.tau_grid.stop),
                                 config.tau_grid.step)) {
      if (t <= config.horizon) taus.push_back(t);
    }
    if (!taus.empty()) {
      write_curve(runtime.out_dir / ("curve_" + tag + ".csv"), prov,
                  curve_from_records(bright, taus, rates.rdc));
    }
    const auto point = evaluate_protocol(bright, dark, params, config.ci_level);
    out << tag << ": " << 2 * config.trials_per_state << " trials, horizon " << us(config.horizon)
        << " us, " << to_string(params.mode) << " fidelity " << format_number(point.fidelity())
        << ", avg time " << us(point.avg_time) << " us\n";
    json op{{"intensity_mw_cm2", intensity}, {"rates", to_json(rates)},
            {"protocol_tau_max_s", params.tau_max}, {"protocol_tau_c_s", params.tau_c},
            {"summary", to_json(point)}};
    meta["operating_points"].push_back(op);
  }
  write_json(runtime.out_dir / "simulate_metadata.json", meta);
}

void cmd_sweep(const RunConfig& config, const Runtime& runtime, std::ostream& out) {
  ensure_dir(runtime.out_dir);
  const auto prov = provenance_line(config_hash(config), config.seed);
  json meta = metadata(config, "sweep");
  const auto grid = uniform_grid(config.tau_grid.start, config.tau_grid.stop, config.tau_grid.step);
  for (double intensity : config.intensities) {
    const auto rates = rates_for_operating_point(config.model, intensity);
    const auto base = protocol_for(config, rates);
    auto sweep = error_vs_time_curve(rates, base, grid, config.trials_per_state, config.seed,
                                     experiment_options(config, runtime));
    sweep.intensity = intensity;
    const auto name = "sweep_" + std::string(to_string(config.mode)) + "_" + intensity_tag(intensity) + ".csv";
    write_sweep(runtime.out_dir / name, prov, sweep);
    const auto best = std::min_element(sweep.points.begin(), sweep.points.end(),
                                       [](const auto& a, const auto& b) { return a.error_mean < b.error_mean; });
    out << intensity_tag(intensity) << ": tau_c " << us(base.tau_c) << " us, " << sweep.points.size()
        << " points -> " << name << "; min error " << format_number(best->error_mean) << " at tau_max "
        << us(best->tau_max) << " us (avg " << us(best->avg_time) << " us)\n";
    meta["operating_points"].push_back({{"intensity_mw_cm2", intensity},
                                        {"rates", to_json(rates)},
                                        {"tau_c_s", base.tau_c},
                                        {"file", name}});
  }
  write_json(runtime.out_dir / "sweep_metadata.json", meta);
}

void cmd_optimize(const RunConfig& config, const Runtime& runtime, std::ostream& out) {
  ensure_dir(runtime.out_dir);
  const auto prov = provenance_line(config_hash(config), config.seed);
  json meta = metadata(config, "optimize");
  const auto mode = std::string(to_string(config.mode));
  CsvWriter summary(runtime.out_dir / ("optimize_" + mode + ".csv"), prov,
                    {"intensity_mw_cm2", "tau_c_s", "tau_max_s", "error_mean", "fidelity", "ci_low",
                     "ci_high", "avg_time_s", "worst_time_s", "n_trials"});
  for (double intensity : config.intensities) {
    const auto rates = rates_for_operating_point(config.model, intensity);
    const auto base = protocol_for(config, rates);
    const auto& range = config.optimize_range;
    const auto opt = optimize_tau_max(rates, base, range.start, range.stop, range.step,
                                      config.trials_per_state, config.seed,
                                      experiment_options(config, runtime));
    const auto& p = opt.point;
    summary.cell(intensity).cell(p.tau_c).cell(p.tau_max).cell(p.error_mean).cell(p.fidelity());
    summary.cell(p.error_ci.low).cell(p.error_ci.high).cell(p.avg_time).cell(p.worst_time);
    summary.cell(std::uint64_t{p.n_trials});
    summary.end_row();
    out << intensity_tag(intensity) << ": tau_max " << us(p.tau_max) << " us, fidelity "
        << format_number(p.fidelity()) << ", avg time " << us(p.avg_time) << " us, worst "
        << us(p.worst_time) << " us\n";
    json op = to_json(p);
    op["intensity_mw_cm2"] = intensity;
    op["rates"] = to_json(rates);
    meta["operating_points"].push_back(op);
  }
  summary.close();
  write_json(runtime.out_dir / ("optimize_" + mode + "_metadata.json"), meta);
}

void cmd_fit(const RunConfig& config, const Runtime& runtime,
             const std::filesystem::path& curve_file, std::ostream& out) {
  const auto curve = read_curve(curve_file);
  const auto fit = fit_decay_curve(curve, initial_guess(curve), config.fit);
  ensure_dir(runtime.out_dir);
  json report = metadata(config, "fit");
  report["input"] = curve_file.string();
  report["n_points"] = curve.points.size();
  report["fit"] = to_json(fit);
  write_json(runtime.out_dir / "fit_report.json", report);
  out << "detected_signal_per_s " << format_number(fit.detected_signal) << " +/- "
      << format_number(fit.standard_error(0)) << '\n'
      << "rd_per_s " << format_number(fit.rd) << " +/- " << format_number(fit.standard_error(1)) << '\n'
      << "rb_per_s " << format_number(fit.rb) << " +/- " << format_number(fit.standard_error(2)) << '\n'
      << "residual_norm " << format_number(fit.residual_norm) << '\n';
}

}  // namespace ionreadout::cli
