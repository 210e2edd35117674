#include "esmppt/config.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "esmppt/errors.hpp"

namespace esmppt {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail_at(const std::string& source, int line, const std::string& message) {
  throw ParseError(source + ":" + std::to_string(line) + ": " + message);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text,
                                          const std::string& source_name) {
  KeyValueConfig cfg;
  cfg.source_ = source_name;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find('#');
    if (comment != std::string::npos) raw.erase(comment);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(source_name, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail_at(source_name, line_no, "empty key");
    if (value.empty()) fail_at(source_name, line_no, "empty value for key '" + key + "'");
    if (cfg.values_.count(key)) fail_at(source_name, line_no, "duplicate key '" + key + "'");
    cfg.values_[key] = value;
    cfg.lines_[key] = line_no;
    cfg.order_.push_back(key);
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& KeyValueConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ParseError(source_ + ": missing required key '" + key + "'");
  }
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string& text = get_string(key);
  if (text == "inf") return std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    fail_at(source_, lines_.at(key), "key '" + key + "': not a number: '" + text + "'");
  }
  return value;
}

int KeyValueConfig::get_int(const std::string& key) const {
  const double value = get_double(key);
  const int as_int = static_cast<int>(value);
  if (static_cast<double>(as_int) != value) {
    fail_at(source_, lines_.at(key), "key '" + key + "': expected an integer");
  }
  return as_int;
}

std::uint64_t KeyValueConfig::get_uint64(const std::string& key) const {
  const std::string& text = get_string(key);
  char* end = nullptr;
  const unsigned long long value = std::strtoull(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0') {
    fail_at(source_, lines_.at(key), "key '" + key + "': expected an unsigned integer");
  }
  return value;
}

double KeyValueConfig::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
int KeyValueConfig::get_int_or(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}
std::string KeyValueConfig::get_string_or(const std::string& key,
                                          const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}
std::uint64_t KeyValueConfig::get_uint64_or(const std::string& key,
                                            std::uint64_t fallback) const {
  return has(key) ? get_uint64(key) : fallback;
}

void KeyValueConfig::require_known_keys(const std::vector<std::string>& allowed) const {
  for (const auto& key : order_) {
    bool ok = false;
    for (const auto& pattern : allowed) {
      if (key == pattern ||
          (key.size() > pattern.size() && key.compare(0, pattern.size(), pattern) == 0 &&
           key[pattern.size()] == '.')) {
        ok = true;
        break;
      }
    }
    if (!ok) fail_at(source_, lines_.at(key), "unknown key '" + key + "'");
  }
}

PlantConfig load_plant_config(const KeyValueConfig& cfg) {
  cfg.require_known_keys({"pv", "converter", "load", "mode"});
  PlantConfig plant;
  plant.pv.i_sc_ref = cfg.get_double("pv.i_sc_ref");
  plant.pv.i_0_ref = cfg.get_double("pv.i_0_ref");
  plant.pv.r_s = cfg.get_double("pv.r_s");
  plant.pv.r_p = cfg.get_double("pv.r_p");
  plant.pv.n_ideality = cfg.get_double("pv.n_ideality");
  plant.pv.alpha_i = cfg.get_double("pv.alpha_i");
  plant.pv.e_g = cfg.get_double("pv.e_g");
  plant.pv.n_series_cells = cfg.get_int("pv.n_series_cells");
  plant.pv.g_ref = cfg.get_double_or("pv.g_ref", 1000.0);
  plant.pv.t_ref = cfg.get_double_or("pv.t_ref", 298.15);
  plant.converter.inductance = cfg.get_double_or("converter.inductance", 1e-3);
  plant.converter.capacitance = cfg.get_double_or("converter.capacitance", 4.7e-3);

  const std::string kind = cfg.get_string_or("load.kind", "constant_voltage");
  if (kind == "constant_voltage") {
    plant.load.kind = LoadKind::ConstantVoltage;
  } else if (kind == "resistive") {
    plant.load.kind = LoadKind::Resistive;
  } else {
    throw ParseError(cfg.source() + ": load.kind must be constant_voltage or resistive");
  }
  plant.load.value = cfg.get_double("load.value");

  const std::string mode = cfg.get_string_or("mode", "quasi_static");
  if (mode == "quasi_static") {
    plant.mode = PlantMode::QuasiStatic;
  } else if (mode == "dynamic") {
    plant.mode = PlantMode::Dynamic;
  } else {
    throw ParseError(cfg.source() + ": mode must be quasi_static or dynamic");
  }
  plant.validate();
  return plant;
}

EsParams load_es_params(const KeyValueConfig& cfg) {
  cfg.require_known_keys({"variant", "gain_k", "omega", "omega_h", "omega_l", "amp_a",
                          "lambda", "alpha0", "beta", "pt_q", "pt_horizon_T",
                          "pt_stop_fraction", "t0", "d_hat0", "plant_ref"});
  EsParams params;
  const std::string variant = cfg.get_string("variant");
  if (variant == "classic") {
    params.variant = EsVariant::Classic;
  } else if (variant == "unbiased_exp") {
    params.variant = EsVariant::UnbiasedExp;
  } else if (variant == "unbiased_pt") {
    params.variant = EsVariant::UnbiasedPT;
  } else {
    throw ParseError(cfg.source() +
                     ": variant must be classic, unbiased_exp or unbiased_pt");
  }
  params.gain_k = cfg.get_double("gain_k");
  params.omega = cfg.get_double("omega");
  params.omega_h = cfg.get_double("omega_h");
  params.omega_l = cfg.get_double("omega_l");
  params.amp_a = cfg.get_double("amp_a");
  params.lambda = cfg.get_double_or("lambda", params.variant == EsVariant::Classic ? 0.0 : 0.05);
  params.alpha0 = cfg.get_double_or("alpha0", 1.0);
  params.beta = cfg.get_double_or("beta", 0.0);
  params.pt_q = cfg.get_double_or("pt_q", 1.0);
  params.pt_horizon_T = cfg.get_double_or("pt_horizon_T", 6.0);
  params.pt_stop_fraction = cfg.get_double_or("pt_stop_fraction", 5.0 / 6.0);
  params.t0 = cfg.get_double_or("t0", 0.0);
  params.d_hat0 = cfg.get_double_or("d_hat0", 0.1);
  params.validate();
  return params;
}

Scenario load_scenario(const KeyValueConfig& cfg) {
  cfg.require_known_keys({"duration", "dt", "noise_std", "rng_seed", "keyframe"});
  Scenario sc;
  sc.duration = cfg.get_double("duration");
  sc.dt = cfg.get_double("dt");
  sc.noise_std = cfg.get_double_or("noise_std", 0.0);
  sc.rng_seed = cfg.get_uint64_or("rng_seed", 1);
  sc.env_profile.clear();
  for (int i = 0;; ++i) {
    const std::string prefix = "keyframe." + std::to_string(i) + ".";
    if (!cfg.has(prefix + "time")) break;
    EnvKeyframe kf;
    kf.time = cfg.get_double(prefix + "time");
    kf.irradiance = cfg.get_double(prefix + "irradiance");
    kf.temperature = cfg.get_double(prefix + "temperature");
    sc.env_profile.push_back(kf);
  }
  if (sc.env_profile.empty()) {
    throw ParseError(cfg.source() + ": at least keyframe.0.{time,irradiance,temperature} required");
  }
  sc.validate();
  return sc;
}

const char* to_string(EsVariant variant) {
  switch (variant) {
    case EsVariant::Classic: return "classic";
    case EsVariant::UnbiasedExp: return "unbiased_exp";
    case EsVariant::UnbiasedPT: return "unbiased_pt";
  }
  return "?";
}

const char* to_string(LoadKind kind) {
  return kind == LoadKind::ConstantVoltage ? "constant_voltage" : "resistive";
}

const char* to_string(PlantMode mode) {
  return mode == PlantMode::QuasiStatic ? "quasi_static" : "dynamic";
}

std::string plant_snapshot_json(const PlantConfig& cfg) {
  nlohmann::ordered_json j;
  j["pv.i_sc_ref"] = cfg.pv.i_sc_ref;
  j["pv.i_0_ref"] = cfg.pv.i_0_ref;
  j["pv.r_s"] = cfg.pv.r_s;
  j["pv.r_p"] = std::isinf(cfg.pv.r_p) ? nlohmann::ordered_json("inf")
                                       : nlohmann::ordered_json(cfg.pv.r_p);
  j["pv.n_ideality"] = cfg.pv.n_ideality;
  j["pv.alpha_i"] = cfg.pv.alpha_i;
  j["pv.e_g"] = cfg.pv.e_g;
  j["pv.n_series_cells"] = cfg.pv.n_series_cells;
  j["pv.g_ref"] = cfg.pv.g_ref;
  j["pv.t_ref"] = cfg.pv.t_ref;
  j["converter.inductance"] = cfg.converter.inductance;
  j["converter.capacitance"] = cfg.converter.capacitance;
  j["load.kind"] = to_string(cfg.load.kind);
  j["load.value"] = cfg.load.value;
  j["mode"] = to_string(cfg.mode);
  return j.dump(2);
}

std::string es_params_snapshot_json(const EsParams& params) {
  nlohmann::ordered_json j;
  j["variant"] = to_string(params.variant);
  j["gain_k"] = params.gain_k;
  j["omega"] = params.omega;
  j["omega_h"] = params.omega_h;
  j["omega_l"] = params.omega_l;
  j["amp_a"] = params.amp_a;
  j["lambda"] = params.lambda;
  j["alpha0"] = params.alpha0;
  j["beta"] = params.beta;
  j["pt_q"] = params.pt_q;
  j["pt_horizon_T"] = params.pt_horizon_T;
  j["pt_stop_fraction"] = params.pt_stop_fraction;
  j["t0"] = params.t0;
  j["d_hat0"] = params.d_hat0;
  return j.dump(2);
}

std::string scenario_snapshot_json(const Scenario& scenario) {
  nlohmann::ordered_json j;
  j["duration"] = scenario.duration;
  j["dt"] = scenario.dt;
  j["noise_std"] = scenario.noise_std;
  j["rng_seed"] = scenario.rng_seed;
  nlohmann::ordered_json frames = nlohmann::ordered_json::array();
  for (const auto& kf : scenario.env_profile) {
    nlohmann::ordered_json f;
    f["time"] = kf.time;
    f["irradiance"] = kf.irradiance;
    f["temperature"] = kf.temperature;
    frames.push_back(f);
  }
  j["keyframes"] = frames;
  return j.dump(2);
}

}  // namespace esmppt
