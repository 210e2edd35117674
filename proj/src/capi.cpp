#include "esmppt.h"

#include <cstring>
#include <exception>
#include <string>

#include <json.hpp>

#include "esmppt/analysis.hpp"
#include "esmppt/config.hpp"
#include "esmppt/errors.hpp"
#include "esmppt/io.hpp"
#include "esmppt/sim_engine.hpp"

struct esmppt_plant {
  esmppt::PlantConfig cfg;
};
struct esmppt_controller {
  esmppt::EsParams params;
};
struct esmppt_scenario {
  esmppt::Scenario scenario;
};
struct esmppt_trace {
  esmppt::SimTrace trace;
};

namespace {

thread_local std::string g_last_error;

esmppt_status record_error(const std::exception& e, esmppt_status status) {
  g_last_error = e.what();
  return status;
}

template <typename Fn>
esmppt_status guarded(Fn&& fn) {
  try {
    fn();
    return ESMPPT_OK;
  } catch (const esmppt::ParseError& e) {
    return record_error(e, ESMPPT_ERR_PARSE);
  } catch (const esmppt::InvalidArgument& e) {
    return record_error(e, ESMPPT_ERR_INVALID_ARGUMENT);
  } catch (const esmppt::NoConvergence& e) {
    return record_error(e, ESMPPT_ERR_NO_CONVERGENCE);
  } catch (const esmppt::DomainError& e) {
    return record_error(e, ESMPPT_ERR_DOMAIN);
  } catch (const esmppt::NonFinite& e) {
    return record_error(e, ESMPPT_ERR_NONFINITE);
  } catch (const esmppt::ConductionModeViolation& e) {
    return record_error(e, ESMPPT_ERR_CONDUCTION_MODE);
  } catch (const esmppt::DegenerateParameters& e) {
    return record_error(e, ESMPPT_ERR_DEGENERATE);
  } catch (const esmppt::WindowTooShort& e) {
    return record_error(e, ESMPPT_ERR_WINDOW);
  } catch (const esmppt::Error& e) {
    return record_error(e, ESMPPT_ERR_IO);
  } catch (const std::exception& e) {
    return record_error(e, ESMPPT_ERR_UNKNOWN);
  } catch (...) {
    g_last_error = "unknown error";
    return ESMPPT_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

esmppt_status require(bool ok, const char* message) {
  if (ok) return ESMPPT_OK;
  g_last_error = message;
  return ESMPPT_ERR_INVALID_ARGUMENT;
}

// Re-parse a single overridden key through the existing loader so overrides
// obey exactly the file schema and validation.
template <typename Loaded, Loaded (*Load)(const esmppt::KeyValueConfig&),
          std::string (*Snapshot)(const Loaded&)>
Loaded apply_override(const Loaded& current, const char* key, const char* value) {
  using nlohmann::ordered_json;
  const ordered_json snap = ordered_json::parse(Snapshot(current));
  const std::string override_key(key);
  std::string text;
  const auto emit = [&](const std::string& k, const ordered_json& v) {
    if (k == override_key) return;  // replaced below
    text += k + " = " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  };
  for (const auto& [k, v] : snap.items()) {
    if (k == "keyframes") {
      int i = 0;
      for (const auto& frame : v) {
        const std::string prefix = "keyframe." + std::to_string(i++) + ".";
        for (const char* field : {"time", "irradiance", "temperature"}) {
          emit(prefix + field, frame.at(field));
        }
      }
    } else {
      emit(k, v);
    }
  }
  text += override_key + " = " + value + "\n";
  return Load(esmppt::KeyValueConfig::parse_text(text, "<override>"));
}

}  // namespace

extern "C" {

const char* esmppt_version(void) { return "0.1.0"; }

const char* esmppt_last_error(void) { return g_last_error.c_str(); }

void esmppt_string_free(char* s) { delete[] s; }

/* ---- plant ---- */

esmppt_status esmppt_plant_create_from_file(const char* path, esmppt_plant** out) {
  if (require(path && out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new esmppt_plant{esmppt::load_plant_config(esmppt::KeyValueConfig::parse_file(path))};
  });
}

esmppt_status esmppt_plant_create_from_text(const char* text, esmppt_plant** out) {
  if (require(text && out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new esmppt_plant{esmppt::load_plant_config(esmppt::KeyValueConfig::parse_text(text))};
  });
}

void esmppt_plant_destroy(esmppt_plant* plant) { delete plant; }

esmppt_status esmppt_plant_snapshot_json(const esmppt_plant* plant, char** json_out) {
  if (require(plant && json_out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] { *json_out = dup_string(esmppt::plant_snapshot_json(plant->cfg)); });
}

esmppt_status esmppt_plant_reference_env(const esmppt_plant* plant, double* g_ref,
                                         double* t_ref) {
  if (require(plant, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  if (g_ref) *g_ref = plant->cfg.pv.g_ref;
  if (t_ref) *t_ref = plant->cfg.pv.t_ref;
  return ESMPPT_OK;
}

/* ---- controller ---- */

esmppt_status esmppt_controller_create_from_file(const char* path, esmppt_controller** out) {
  if (require(path && out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new esmppt_controller{esmppt::load_es_params(esmppt::KeyValueConfig::parse_file(path))};
  });
}

esmppt_status esmppt_controller_create_from_text(const char* text, esmppt_controller** out) {
  if (require(text && out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new esmppt_controller{esmppt::load_es_params(esmppt::KeyValueConfig::parse_text(text))};
  });
}

esmppt_status esmppt_controller_clone(const esmppt_controller* controller,
                                      esmppt_controller** out) {
  if (require(controller && out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  *out = new esmppt_controller{controller->params};
  return ESMPPT_OK;
}

esmppt_status esmppt_controller_set(esmppt_controller* controller, const char* key,
                                    const char* value) {
  if (require(controller && key && value, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    controller->params =
        apply_override<esmppt::EsParams, esmppt::load_es_params,
                       esmppt::es_params_snapshot_json>(controller->params, key, value);
  });
}

void esmppt_controller_destroy(esmppt_controller* controller) { delete controller; }

esmppt_status esmppt_controller_snapshot_json(const esmppt_controller* controller,
                                              char** json_out) {
  if (require(controller && json_out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded(
      [&] { *json_out = dup_string(esmppt::es_params_snapshot_json(controller->params)); });
}

/* ---- scenario ---- */

esmppt_status esmppt_scenario_create_from_file(const char* path, esmppt_scenario** out) {
  if (require(path && out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new esmppt_scenario{esmppt::load_scenario(esmppt::KeyValueConfig::parse_file(path))};
  });
}

esmppt_status esmppt_scenario_create_from_text(const char* text, esmppt_scenario** out) {
  if (require(text && out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new esmppt_scenario{esmppt::load_scenario(esmppt::KeyValueConfig::parse_text(text))};
  });
}

esmppt_status esmppt_scenario_clone(const esmppt_scenario* scenario, esmppt_scenario** out) {
  if (require(scenario && out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  *out = new esmppt_scenario{scenario->scenario};
  return ESMPPT_OK;
}

esmppt_status esmppt_scenario_set(esmppt_scenario* scenario, const char* key,
                                  const char* value) {
  if (require(scenario && key && value, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    scenario->scenario =
        apply_override<esmppt::Scenario, esmppt::load_scenario,
                       esmppt::scenario_snapshot_json>(scenario->scenario, key, value);
  });
}

esmppt_status esmppt_scenario_set_seed(esmppt_scenario* scenario, uint64_t seed) {
  if (require(scenario, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  scenario->scenario.rng_seed = seed;
  return ESMPPT_OK;
}

void esmppt_scenario_destroy(esmppt_scenario* scenario) { delete scenario; }

esmppt_status esmppt_scenario_snapshot_json(const esmppt_scenario* scenario,
                                            char** json_out) {
  if (require(scenario && json_out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded(
      [&] { *json_out = dup_string(esmppt::scenario_snapshot_json(scenario->scenario)); });
}

/* ---- PV and plant queries ---- */

esmppt_status esmppt_pv_curve(const esmppt_plant* plant, double irradiance,
                              double temperature_k, int32_t n_points, double* voltage,
                              double* current, double* power) {
  if (require(plant && n_points >= 2, "plant null or n_points < 2"))
    return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto points =
        esmppt::pv_curve(plant->cfg.pv, {irradiance, temperature_k}, n_points);
    for (int32_t i = 0; i < n_points; ++i) {
      if (voltage) voltage[i] = points[i].voltage;
      if (current) current[i] = points[i].current;
      if (power) power[i] = points[i].power;
    }
  });
}

esmppt_status esmppt_pv_mpp(const esmppt_plant* plant, double irradiance,
                            double temperature_k, double* voltage, double* current,
                            double* power) {
  if (require(plant, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto mpp = esmppt::mpp_oracle(plant->cfg.pv, {irradiance, temperature_k});
    if (voltage) *voltage = mpp.voltage;
    if (current) *current = mpp.current;
    if (power) *power = mpp.power;
  });
}

esmppt_status esmppt_duty_power_curve(const esmppt_plant* plant, double irradiance,
                                      double temperature_k, int32_t n_points, double* duty,
                                      double* power) {
  if (require(plant && n_points >= 2, "plant null or n_points < 2"))
    return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto curve =
        esmppt::duty_power_curve(plant->cfg, {irradiance, temperature_k}, n_points);
    for (int32_t i = 0; i < n_points; ++i) {
      if (duty) duty[i] = curve[i].duty;
      if (power) power[i] = curve[i].power;
    }
  });
}

esmppt_status esmppt_optimal_duty(const esmppt_plant* plant, double irradiance,
                                  double temperature_k, double* duty, double* power,
                                  double* curvature) {
  if (require(plant, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto opt = esmppt::optimal_duty_oracle(plant->cfg, {irradiance, temperature_k});
    if (duty) *duty = opt.duty;
    if (power) *power = opt.power;
    if (curvature) *curvature = opt.curvature;
  });
}

/* ---- validation ---- */

esmppt_status esmppt_validate_tuning(const esmppt_controller* controller,
                                     const esmppt_plant* plant, double irradiance,
                                     double temperature_k, char** report_json,
                                     int32_t* hard_ok) {
  if (require(controller && plant, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto opt = esmppt::optimal_duty_oracle(plant->cfg, {irradiance, temperature_k});
    const auto report = esmppt::check_conditions(controller->params, opt.curvature);
    if (report_json) *report_json = dup_string(esmppt::tuning_report_json(report));
    if (hard_ok) *hard_ok = (report.cond_13_ok && report.cond_14_ok) ? 1 : 0;
  });
}

/* ---- simulation ---- */

esmppt_status esmppt_simulate(const esmppt_plant* plant, const esmppt_controller* controller,
                              const esmppt_scenario* scenario, esmppt_trace** out) {
  if (require(plant && controller && scenario && out, "null argument"))
    return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new esmppt_trace{
        esmppt::run(plant->cfg, controller->params, scenario->scenario)};
  });
}

esmppt_status esmppt_simulate_shading(const esmppt_plant* plant,
                                      const esmppt_controller* controller,
                                      esmppt_trace** out) {
  if (require(plant && controller && out, "null argument"))
    return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new esmppt_trace{esmppt::run_shading_scenario(plant->cfg, controller->params)};
  });
}

void esmppt_trace_destroy(esmppt_trace* trace) { delete trace; }

int32_t esmppt_trace_column_count(void) {
  return static_cast<int32_t>(esmppt::SimTrace::kColumnNames.size());
}

const char* esmppt_trace_column_name(int32_t index) {
  if (index < 0 || index >= esmppt_trace_column_count()) return nullptr;
  return esmppt::SimTrace::kColumnNames[static_cast<size_t>(index)];
}

int64_t esmppt_trace_row_count(const esmppt_trace* trace) {
  return trace ? static_cast<int64_t>(trace->trace.rows()) : 0;
}

int32_t esmppt_trace_aborted(const esmppt_trace* trace) {
  return trace && trace->trace.aborted_nonfinite ? 1 : 0;
}

esmppt_status esmppt_trace_get_column(const esmppt_trace* trace, int32_t index, double* out,
                                      int64_t capacity) {
  if (require(trace && out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  if (require(index >= 0 && index < esmppt_trace_column_count(), "column index out of range"))
    return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto& col = trace->trace.column(static_cast<size_t>(index));
    if (capacity < static_cast<int64_t>(col.size())) {
      throw esmppt::InvalidArgument("esmppt_trace_get_column: capacity too small");
    }
    std::memcpy(out, col.data(), col.size() * sizeof(double));
  });
}

esmppt_status esmppt_trace_write_csv(const esmppt_trace* trace, const char* path) {
  if (require(trace && path, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] { esmppt::write_file(path, esmppt::trace_csv(trace->trace)); });
}

esmppt_status esmppt_trace_metrics_json(const esmppt_trace* trace, double epsilon,
                                        char** json_out) {
  if (require(trace && json_out, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *json_out = dup_string(esmppt::metrics_json(esmppt::compute_metrics(trace->trace, epsilon)));
  });
}

esmppt_status esmppt_max_safe_stop_fraction(const esmppt_controller* controller, double dt,
                                            double* fraction) {
  if (require(controller && fraction, "null argument")) return ESMPPT_ERR_INVALID_ARGUMENT;
  return guarded([&] { *fraction = esmppt::max_safe_stop_fraction(controller->params, dt); });
}

}  // extern "C"
