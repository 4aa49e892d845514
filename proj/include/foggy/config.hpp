#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "foggy/decoygen.hpp"
#include "foggy/error.hpp"
#include "foggy/synthpeople.hpp"
#include "foggy/targeting.hpp"

namespace foggy {

// --- INI-style config files ---------------------------------------------
// [section] headers, key = value lines, '#' or ';' comments, UTF-8.

class IniFile {
 public:
  static IniFile parse(std::istream& is) {
    IniFile ini;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw ConfigError("config line " + std::to_string(lineno) +
                            ": unterminated section header");
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty key");
      ini.values_[section + "." + key] = value;
    }
    return ini;
  }

  static IniFile parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return parse(f);
  }

  bool has(const std::string& section, const std::string& key) const {
    return values_.count(section + "." + key) != 0;
  }

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const {
    auto it = values_.find(section + "." + key);
    return it == values_.end() ? fallback : it->second;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  std::map<std::string, std::string> values_;
};

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + what + ": '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + what + ": '" + s + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t a = 0, b = item.size();
    while (a < b && std::isspace(static_cast<unsigned char>(item[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(item[b - 1]))) --b;
    if (b > a) out.push_back(item.substr(a, b - a));
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s,
                                             const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(item, what));
  return out;
}

inline std::vector<int> parse_int_list(const std::string& s,
                                       const std::string& what) {
  std::vector<int> out;
  for (const auto& item : split_list(s))
    out.push_back(static_cast<int>(parse_int(item, what)));
  return out;
}

// --- scenario configuration ----------------------------------------------

/// Model described by its seed and optional hidden width ("seed" or
/// "seed:hidden").
struct ModelSpec {
  std::uint64_t seed = 0;
  int hidden = EmbedNet::kDefaultHidden;

  static ModelSpec parse(const std::string& s) {
    ModelSpec m;
    const auto colon = s.find(':');
    m.seed = static_cast<std::uint64_t>(
        parse_int(colon == std::string::npos ? s : s.substr(0, colon),
                  "model seed"));
    if (colon != std::string::npos)
      m.hidden = static_cast<int>(parse_int(s.substr(colon + 1), "model hidden"));
    return m;
  }

  std::string text() const {
    return std::to_string(seed) +
           (hidden == EmbedNet::kDefaultHidden
                ? std::string()
                : ":" + std::to_string(hidden));
  }
};

struct AttackPreset {
  double alpha = 0.1;
  int max_iterations = 400;
  int patience = 10;
  StepRule step_rule = StepRule::Sign;
  std::string transform_preset = "none";  // "none" or "eot"
  double noise_sigma = 0.5;
  int eot_samples = 1;
};

inline const std::vector<std::string> kScenarioNames = {
    "loss-profile",   "community-sweep", "ratio-sweep", "solo-subsample",
    "multi-round",    "transfer",        "top1-oracle"};

struct ScenarioConfig {
  std::string scenario;
  SynthDatasetSpec dataset;
  TargetKind strategy = TargetKind::RandomLookup;
  std::vector<double> epsilon_grid;
  std::vector<int> k_grid;
  std::vector<double> decoy_ratios;
  std::vector<double> subsample_rates;  // solo-subsample only
  std::vector<ModelSpec> generation_models;
  ModelSpec evaluation_model;
  AttackPreset attack;
  double tau_percentile = 0.95;  // top1-oracle calibration
  int profile_jobs = 19;         // loss-profile job count
  std::string out_dir = "out";
  std::uint64_t master_seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (std::find(kScenarioNames.begin(), kScenarioNames.end(), scenario) ==
        kScenarioNames.end())
      throw ConfigError("unknown scenario: " + scenario);
    dataset.validate();
    if (epsilon_grid.empty()) throw ConfigError("empty epsilon grid");
    if (k_grid.empty()) throw ConfigError("empty k grid");
    for (int k : k_grid)
      if (k < 1) throw ConfigError("k grid values must be >= 1");
    if (decoy_ratios.empty()) throw ConfigError("empty decoy ratio list");
    for (double r : decoy_ratios)
      if (r < 0) throw ConfigError("decoy ratios must be >= 0");
    if (generation_models.empty()) throw ConfigError("no generation models");
    if (scenario == "solo-subsample") {
      if (subsample_rates.empty()) throw ConfigError("empty subsample rates");
      for (double r : subsample_rates)
        if (r <= 0 || r > 1)
          throw ConfigError("subsample rates must lie in (0, 1]");
    }
  }
};

/// Fill a ScenarioConfig from an INI file, applying per-scenario defaults
/// for everything the file does not set.
inline ScenarioConfig resolve_scenario_config(const std::string& scenario,
                                              const IniFile& ini,
                                              std::uint64_t seed_override,
                                              bool has_seed_override,
                                              const std::string& out_override) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;

  // dataset defaults; the transfer scenario gets a smaller corpus because
  // its preset runs thousands of long EOT attacks
  if (scenario == "transfer") {
    cfg.dataset.identity_count = 8;
    cfg.dataset.photos_per_identity = 12;
    cfg.dataset.queries_per_identity = 3;
  }
  const auto& ds = cfg.dataset;
  cfg.dataset.identity_count = static_cast<int>(parse_int(
      ini.get("dataset", "identities", std::to_string(ds.identity_count)),
      "dataset.identities"));
  cfg.dataset.photos_per_identity = static_cast<int>(parse_int(
      ini.get("dataset", "photos", std::to_string(ds.photos_per_identity)),
      "dataset.photos"));
  cfg.dataset.queries_per_identity = static_cast<int>(parse_int(
      ini.get("dataset", "queries", std::to_string(ds.queries_per_identity)),
      "dataset.queries"));
  cfg.dataset.width = static_cast<int>(
      parse_int(ini.get("dataset", "width", "16"), "dataset.width"));
  cfg.dataset.height = static_cast<int>(
      parse_int(ini.get("dataset", "height", "16"), "dataset.height"));
  cfg.dataset.channels = static_cast<int>(
      parse_int(ini.get("dataset", "channels", "1"), "dataset.channels"));
  cfg.dataset.jitter.brightness = parse_double(
      ini.get("dataset", "jitter_brightness", "0.05"), "jitter_brightness");
  cfg.dataset.jitter.noise_sigma = parse_double(
      ini.get("dataset", "jitter_noise_sigma", "0.02"), "jitter_noise_sigma");
  cfg.dataset.jitter.max_translation = static_cast<int>(parse_int(
      ini.get("dataset", "jitter_translation", "1"), "jitter_translation"));
  cfg.dataset.identity_blend = parse_double(
      ini.get("dataset", "identity_blend",
              std::to_string(cfg.dataset.identity_blend)),
      "identity_blend");

  cfg.master_seed = has_seed_override
                        ? seed_override
                        : static_cast<std::uint64_t>(parse_int(
                              ini.get("run", "seed", "1"), "run.seed"));
  cfg.dataset.master_seed = cfg.master_seed;
  cfg.out_dir = !out_override.empty() ? out_override
                                      : ini.get("run", "out", "out");
  cfg.threads = static_cast<unsigned>(
      parse_int(ini.get("run", "threads", "0"), "run.threads"));

  cfg.strategy = parse_strategy(ini.get(
      "targets", "strategy",
      scenario == "transfer" || scenario == "top1-oracle" ? "mean"
                                                          : "random-lookup"));

  // grids
  std::string eps_default = "0.06";
  if (scenario == "loss-profile")
    eps_default = "0.0,0.02,0.04,0.06,0.08,0.1,0.2,0.5,0.7";
  else if (scenario == "community-sweep")
    eps_default = "0.02,0.04,0.06,0.08,0.1";
  else if (scenario == "transfer")
    eps_default = "0.5";
  else if (scenario == "solo-subsample")
    eps_default = "0.04";
  cfg.epsilon_grid =
      parse_double_list(ini.get("sweep", "epsilons", eps_default), "epsilons");

  std::string k_default = "1,5,10,50,100";
  if (scenario == "transfer") k_default = "1";
  cfg.k_grid = parse_int_list(ini.get("sweep", "ks", k_default), "ks");

  std::string ratio_default = "4";
  if (scenario == "ratio-sweep") ratio_default = "0,0.25,0.5,1,2,4";
  else if (scenario == "transfer") ratio_default = "0,2,8";
  else if (scenario == "multi-round") ratio_default = "2";
  else if (scenario == "top1-oracle") ratio_default = "0,1,2,4";
  else if (scenario == "community-sweep") ratio_default = "4";
  else if (scenario == "solo-subsample" || scenario == "loss-profile")
    ratio_default = "0";
  cfg.decoy_ratios =
      parse_double_list(ini.get("sweep", "ratios", ratio_default), "ratios");
  cfg.subsample_rates = parse_double_list(
      ini.get("sweep", "subsample_rates", "1.0,0.9,0.75"), "subsample_rates");

  // models: generation set and evaluation model
  const std::string gen_default = scenario == "transfer" ? "42,43" : "42";
  cfg.generation_models.clear();
  for (const auto& item :
       split_list(ini.get("models", "generation", gen_default)))
    cfg.generation_models.push_back(ModelSpec::parse(item));
  const std::string eval_default = scenario == "transfer" ? "99:96" : "42";
  cfg.evaluation_model =
      ModelSpec::parse(ini.get("models", "evaluation", eval_default));

  // attack preset: the transfer regime runs longer at a smaller step with
  // the EOT chain enabled and effectively no early stop
  if (scenario == "transfer") {
    cfg.attack.alpha = 0.01;
    cfg.attack.max_iterations = 2000;
    cfg.attack.patience = 2000;
    cfg.attack.transform_preset = "eot";
  }
  cfg.attack.alpha = parse_double(
      ini.get("attack", "alpha", std::to_string(cfg.attack.alpha)), "alpha");
  cfg.attack.max_iterations = static_cast<int>(parse_int(
      ini.get("attack", "iterations", std::to_string(cfg.attack.max_iterations)),
      "iterations"));
  cfg.attack.patience = static_cast<int>(parse_int(
      ini.get("attack", "patience", std::to_string(cfg.attack.patience)),
      "patience"));
  cfg.attack.step_rule =
      parse_step_rule(ini.get("attack", "step_rule", "sign"));
  {
    std::string preset =
        ini.get("attack", "transforms", cfg.attack.transform_preset);
    if (preset == "eot-appendix-c") preset = "eot";  // accepted alias
    if (preset != "none" && preset != "eot")
      throw ConfigError("unknown transform preset: " + preset);
    cfg.attack.transform_preset = preset;
  }
  cfg.attack.noise_sigma = parse_double(
      ini.get("attack", "noise_sigma", std::to_string(cfg.attack.noise_sigma)),
      "noise_sigma");
  cfg.attack.eot_samples = static_cast<int>(parse_int(
      ini.get("attack", "eot_samples", "1"), "eot_samples"));

  cfg.tau_percentile = parse_double(
      ini.get("oracle", "tau_percentile", "0.95"), "tau_percentile");
  cfg.profile_jobs = static_cast<int>(parse_int(
      ini.get("sweep", "profile_jobs", std::to_string(ds.identity_count)),
      "profile_jobs"));

  cfg.validate();
  return cfg;
}

}  // namespace foggy
