#include "ionreadout/cli/config.hpp"

#include <cstdio>
#include <fstream>

#include "ionreadout/errors.hpp"

namespace ionreadout::cli {

using nlohmann::json;

namespace {

constexpr double kMHz = 1e6;
constexpr double kGHz = 1e9;

double angular(double f_2pi, double unit) { return kTwoPi * f_2pi * unit; }
double cyclic(double omega, double unit) { return omega / (kTwoPi * unit); }

json grid_json(const GridSpec& g) { return {{"start_s", g.start}, {"stop_s", g.stop}, {"step_s", g.step}}; }

GridSpec grid_from(const json& j, GridSpec g) {
  g.start = j.value("start_s", g.start);
  g.stop = j.value("stop_s", g.stop);
  g.step = j.value("step_s", g.step);
  return g;
}

std::string weighting_name(CurveWeighting w) {
  return w == CurveWeighting::Unweighted ? "unweighted" : "inverse-variance";
}

CurveWeighting parse_weighting(const std::string& s) {
  if (s == "unweighted") return CurveWeighting::Unweighted;
  if (s == "inverse-variance") return CurveWeighting::InverseVariance;
  throw InvalidParameter("unknown fit weighting '" + s + "'");
}

void check_grid(const GridSpec& g, const char* what) {
  if (!(g.start > 0.0 && g.stop >= g.start && g.step > 0.0)) {
    throw InvalidParameter(std::string(what) + ": need 0 < start <= stop and step > 0");
  }
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  require(!intensities.empty(), "at least one intensity is required");
  for (double i : intensities) require(i >= 0.0, "intensities must be nonnegative");
  ProtocolParams p{mode, tau_max, tau_c.value_or(0.0), threshold};
  p.validate();
  require(trials_per_state >= 1, "trials_per_state must be at least 1");
  require(horizon > 0.0, "horizon must be positive");
  check_grid(tau_grid, "tau_grid");
  check_grid(optimize_range, "optimize");
  require(simulation.dead_time >= 0.0 && simulation.time_resolution >= 0.0,
          "dead_time and time_resolution must be nonnegative");
  require(simulation.preparation_error >= 0.0 && simulation.preparation_error <= 1.0,
          "preparation_error must be a probability");
  require(ci_level > 0.0 && ci_level < 1.0, "ci_level must lie in (0, 1)");
  require(fit.max_iterations >= 1 && fit.tolerance > 0.0, "fit settings must be positive");
}

json to_json(const RunConfig& c) {
  const auto& m = c.model;
  json doc;
  doc["model"] = {
      {"gamma_2pi_mhz", cyclic(m.gamma, kMHz)},
      {"delta_hfp_2pi_ghz", cyclic(m.delta_hfp, kGHz)},
      {"delta_hfs_2pi_ghz", cyclic(m.delta_hfs, kGHz)},
      {"zeeman_2pi_mhz", cyclic(m.zeeman, kMHz)},
      {"detuning_2pi_mhz", cyclic(m.detuning, kMHz)},
      {"epsilon", m.epsilon},
      {"i_sat_mw_cm2", m.i_sat},
      {"beam_waist_um", m.beam_waist},
      {"dark_count_hz", m.dark_count},
      {"background_per_uw_hz", m.background_per_uw},
  };
  doc["intensities_mw_cm2"] = c.intensities;
  doc["protocol"] = {
      {"mode", std::string(to_string(c.mode))},
      {"tau_max_s", c.tau_max},
      {"tau_c_s", c.tau_c ? json(*c.tau_c) : json(nullptr)},
      {"threshold", c.threshold},
  };
  doc["trials_per_state"] = c.trials_per_state;
  doc["horizon_s"] = c.horizon;
  doc["tau_grid"] = grid_json(c.tau_grid);
  doc["optimize"] = grid_json(c.optimize_range);
  doc["simulation"] = {
      {"dead_time_s", c.simulation.dead_time},
      {"time_resolution_s", c.simulation.time_resolution},
      {"preparation_error", c.simulation.preparation_error},
  };
  doc["ci_level"] = c.ci_level;
  doc["fit"] = {
      {"max_iterations", c.fit.max_iterations},
      {"tolerance", c.fit.tolerance},
      {"weighting", weighting_name(c.fit.weighting)},
  };
  doc["seed"] = c.seed;
  return doc;
}

RunConfig config_from_json(const json& doc) {
  RunConfig c;
  try {
    if (!doc.is_object()) throw InvalidParameter("config must be a JSON object");
    if (doc.contains("model")) {
      const auto& j = doc.at("model");
      auto& m = c.model;
      m.gamma = angular(j.value("gamma_2pi_mhz", cyclic(m.gamma, kMHz)), kMHz);
      m.delta_hfp = angular(j.value("delta_hfp_2pi_ghz", cyclic(m.delta_hfp, kGHz)), kGHz);
      m.delta_hfs = angular(j.value("delta_hfs_2pi_ghz", cyclic(m.delta_hfs, kGHz)), kGHz);
      m.zeeman = angular(j.value("zeeman_2pi_mhz", cyclic(m.zeeman, kMHz)), kMHz);
      m.detuning = angular(j.value("detuning_2pi_mhz", cyclic(m.detuning, kMHz)), kMHz);
      m.epsilon = j.value("epsilon", m.epsilon);
      m.i_sat = j.value("i_sat_mw_cm2", m.i_sat);
      m.beam_waist = j.value("beam_waist_um", m.beam_waist);
      m.dark_count = j.value("dark_count_hz", m.dark_count);
      m.background_per_uw = j.value("background_per_uw_hz", m.background_per_uw);
    }
    if (doc.contains("intensities_mw_cm2")) {
      c.intensities = doc.at("intensities_mw_cm2").get<std::vector<double>>();
    }
    if (doc.contains("protocol")) {
      const auto& j = doc.at("protocol");
      c.mode = parse_mode(j.value("mode", std::string(to_string(c.mode))));
      c.tau_max = j.value("tau_max_s", c.tau_max);
      if (j.contains("tau_c_s") && !j.at("tau_c_s").is_null()) c.tau_c = j.at("tau_c_s").get<double>();
      c.threshold = j.value("threshold", c.threshold);
    }
    c.trials_per_state = doc.value("trials_per_state", c.trials_per_state);
    c.horizon = doc.value("horizon_s", c.horizon);
    if (doc.contains("tau_grid")) c.tau_grid = grid_from(doc.at("tau_grid"), c.tau_grid);
    if (doc.contains("optimize")) c.optimize_range = grid_from(doc.at("optimize"), c.optimize_range);
    if (doc.contains("simulation")) {
      const auto& j = doc.at("simulation");
      c.simulation.dead_time = j.value("dead_time_s", c.simulation.dead_time);
      c.simulation.time_resolution = j.value("time_resolution_s", c.simulation.time_resolution);
      c.simulation.preparation_error = j.value("preparation_error", c.simulation.preparation_error);
    }
    c.ci_level = doc.value("ci_level", c.ci_level);
    if (doc.contains("fit")) {
      const auto& j = doc.at("fit");
      c.fit.max_iterations = j.value("max_iterations", c.fit.max_iterations);
      c.fit.tolerance = j.value("tolerance", c.fit.tolerance);
      c.fit.weighting = parse_weighting(j.value("weighting", weighting_name(c.fit.weighting)));
    }
    c.seed = doc.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidParameter("config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

std::string canonical_text(const RunConfig& config) { return to_json(config).dump(); }

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ionreadout::cli
