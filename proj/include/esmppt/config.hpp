#ifndef ESMPPT_CONFIG_HPP
#define ESMPPT_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "esmppt/es_controllers.hpp"
#include "esmppt/power_stage.hpp"
#include "esmppt/sim_engine.hpp"

namespace esmppt {

// Flat "key = value" text config. '#' starts a comment; keys are dotted
// lowercase paths. Parse errors carry <source>:<line>.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_text(const std::string& text,
                                   const std::string& source_name = "<text>");

  bool has(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_uint64(const std::string& key) const;

  double get_double_or(const std::string& key, double fallback) const;
  int get_int_or(const std::string& key, int fallback) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  std::uint64_t get_uint64_or(const std::string& key, std::uint64_t fallback) const;

  const std::vector<std::string>& keys() const { return order_; }
  const std::string& source() const { return source_; }

  // every key must appear in allowed (exact match or listed prefix followed
  // by '.'), otherwise ParseError with the offending line
  void require_known_keys(const std::vector<std::string>& allowed) const;

 private:
  std::string source_;
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::vector<std::string> order_;
};

PlantConfig load_plant_config(const KeyValueConfig& cfg);
EsParams load_es_params(const KeyValueConfig& cfg);
Scenario load_scenario(const KeyValueConfig& cfg);

// Canonical resolved snapshots (stable key order, all defaults filled in);
// JSON text used by run manifests.
std::string plant_snapshot_json(const PlantConfig& cfg);
std::string es_params_snapshot_json(const EsParams& params);
std::string scenario_snapshot_json(const Scenario& scenario);

const char* to_string(EsVariant variant);
const char* to_string(LoadKind kind);
const char* to_string(PlantMode mode);

}  // namespace esmppt

#endif
