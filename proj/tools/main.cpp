// Command-line front end. Everything numerical goes through the shared C API
// (esmppt.h); this layer only parses options, resolves preset names, writes
// artifacts and draws diagnostic SVGs.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "esmppt.h"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

[[noreturn]] void fail(int code, const std::string& message) {
  std::fprintf(stderr, "esmppt: %s\n", message.c_str());
  std::exit(code);
}

int exit_code_for(esmppt_status status) {
  switch (status) {
    case ESMPPT_ERR_PARSE:
    case ESMPPT_ERR_INVALID_ARGUMENT:
    case ESMPPT_ERR_DOMAIN:
    case ESMPPT_ERR_DEGENERATE:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

void check(esmppt_status status, const std::string& what) {
  if (status != ESMPPT_OK) {
    fail(exit_code_for(status), what + ": " + esmppt_last_error());
  }
}

std::string take(char* s) {
  std::string out = s ? s : "";
  esmppt_string_free(s);
  return out;
}

struct PlantDeleter {
  void operator()(esmppt_plant* p) const { esmppt_plant_destroy(p); }
};
struct ControllerDeleter {
  void operator()(esmppt_controller* c) const { esmppt_controller_destroy(c); }
};
struct ScenarioDeleter {
  void operator()(esmppt_scenario* s) const { esmppt_scenario_destroy(s); }
};
struct TraceDeleter {
  void operator()(esmppt_trace* t) const { esmppt_trace_destroy(t); }
};
using PlantPtr = std::unique_ptr<esmppt_plant, PlantDeleter>;
using ControllerPtr = std::unique_ptr<esmppt_controller, ControllerDeleter>;
using ScenarioPtr = std::unique_ptr<esmppt_scenario, ScenarioDeleter>;
using TracePtr = std::unique_ptr<esmppt_trace, TraceDeleter>;

std::string g_config_dir;

std::string config_dir() {
  if (!g_config_dir.empty()) return g_config_dir;
  if (const char* env = std::getenv("ESMPPT_CONFIG_DIR"); env && *env) return env;
  return "presets";
}

// a config argument is either a path or a preset name under the config dir
std::string resolve_config(const std::string& name) {
  if (fs::exists(name) && fs::is_regular_file(name)) return name;
  for (const auto& candidate :
       {fs::path(config_dir()) / name, fs::path(config_dir()) / (name + ".cfg")}) {
    if (fs::exists(candidate)) return candidate.string();
  }
  fail(kExitValidation, "cannot resolve config '" + name + "' (searched ./" + name +
                            " and " + config_dir() + "/" + name + "[.cfg])");
}

std::string preset_label(const std::string& resolved_path) {
  return fs::path(resolved_path).stem().string();
}

PlantPtr load_plant(const std::string& path) {
  esmppt_plant* p = nullptr;
  check(esmppt_plant_create_from_file(path.c_str(), &p), "loading plant " + path);
  return PlantPtr(p);
}

ControllerPtr load_controller(const std::string& path) {
  esmppt_controller* c = nullptr;
  check(esmppt_controller_create_from_file(path.c_str(), &c), "loading controller " + path);
  return ControllerPtr(c);
}

ScenarioPtr load_scenario(const std::string& path) {
  esmppt_scenario* s = nullptr;
  check(esmppt_scenario_create_from_file(path.c_str(), &s), "loading scenario " + path);
  return ScenarioPtr(s);
}

ordered_json snapshot_of(const esmppt_plant* p) {
  char* s = nullptr;
  check(esmppt_plant_snapshot_json(p, &s), "plant snapshot");
  return ordered_json::parse(take(s));
}
ordered_json snapshot_of(const esmppt_controller* c) {
  char* s = nullptr;
  check(esmppt_controller_snapshot_json(c, &s), "controller snapshot");
  return ordered_json::parse(take(s));
}
ordered_json snapshot_of(const esmppt_scenario* s) {
  char* j = nullptr;
  check(esmppt_scenario_snapshot_json(s, &j), "scenario snapshot");
  return ordered_json::parse(take(j));
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(kExitRuntime, "cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(kExitRuntime, "cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) fail(kExitRuntime, "write failed: " + path.string());
}

// minimal scan for optional CLI-layer hints (e.g. plant_ref) in preset files
std::optional<std::string> scan_key(const std::string& path, const std::string& key) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    if (trim(line.substr(0, eq)) == key) return trim(line.substr(eq + 1));
  }
  return std::nullopt;
}

struct TraceData {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& col(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return columns[i];
    }
    fail(kExitRuntime, "trace column missing: " + name);
  }
};

TraceData fetch(const esmppt_trace* trace) {
  TraceData data;
  const int32_t n_cols = esmppt_trace_column_count();
  const int64_t rows = esmppt_trace_row_count(trace);
  for (int32_t c = 0; c < n_cols; ++c) {
    data.names.emplace_back(esmppt_trace_column_name(c));
    std::vector<double> col(static_cast<size_t>(rows));
    check(esmppt_trace_get_column(trace, c, col.data(), rows), "reading trace");
    data.columns.push_back(std::move(col));
  }
  return data;
}

ordered_json base_manifest(const std::string& command, const std::string& out_dir) {
  ordered_json m;
  m["tool_version"] = esmppt_version();
  m["command"] = command;
  m["out_dir"] = out_dir;
  return m;
}

std::string num_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  std::string s = buf;
  for (auto& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return s;
}

/* ---------------- pv-curve ---------------- */

struct PvCurveOpts {
  std::string plant;
  std::vector<double> g{1000.0};
  std::vector<double> t_celsius{25.0};
  int points = 200;
  std::string out = "out/pv_curve";
};

int cmd_pv_curve(const PvCurveOpts& opt) {
  const std::string plant_path = resolve_config(opt.plant);
  const PlantPtr plant = load_plant(plant_path);
  if (opt.points < 2) fail(kExitValidation, "--points must be at least 2");
  ensure_dir(opt.out);

  svgplot::LinePlot plot("P-V curves", "module voltage [V]", "power [W]");
  for (double g : opt.g) {
    for (double tc : opt.t_celsius) {
      const double t_kelvin = tc + 273.15;
      std::vector<double> v(opt.points), i(opt.points), p(opt.points);
      check(esmppt_pv_curve(plant.get(), g, t_kelvin, opt.points, v.data(), i.data(),
                            p.data()),
            "pv curve");
      std::string csv = "voltage,current,power\n";
      for (int k = 0; k < opt.points; ++k) {
        char line[128];
        std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g\n", v[k], i[k], p[k]);
        csv += line;
      }
      const std::string tag = "g" + num_tag(g) + "_t" + num_tag(tc);
      write_text(fs::path(opt.out) / ("pv_curve_" + tag + ".csv"), csv);
      plot.add_series("G=" + num_tag(g) + " T=" + num_tag(tc) + "C", v, p);
    }
  }
  write_text(fs::path(opt.out) / "pv_curves.svg", plot.render());

  ordered_json manifest = base_manifest("pv-curve", opt.out);
  manifest["inputs"]["plant"] = plant_path;
  manifest["resolved"]["plant"] = snapshot_of(plant.get());
  manifest["irradiances"] = opt.g;
  manifest["temperatures_celsius"] = opt.t_celsius;
  manifest["points"] = opt.points;
  write_text(fs::path(opt.out) / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

/* ---------------- duty-curve ---------------- */

struct DutyCurveOpts {
  std::string plant;
  double g = 1000.0;
  double t_celsius = 25.0;
  int points = 200;
  std::string out = "out/duty_curve";
};

int cmd_duty_curve(const DutyCurveOpts& opt) {
  const std::string plant_path = resolve_config(opt.plant);
  const PlantPtr plant = load_plant(plant_path);
  if (opt.points < 2) fail(kExitValidation, "--points must be at least 2");
  ensure_dir(opt.out);

  const double t_kelvin = opt.t_celsius + 273.15;
  std::vector<double> duty(opt.points), power(opt.points);
  check(esmppt_duty_power_curve(plant.get(), opt.g, t_kelvin, opt.points, duty.data(),
                                power.data()),
        "duty curve");
  std::string csv = "duty,power\n";
  for (int k = 0; k < opt.points; ++k) {
    char line[96];
    std::snprintf(line, sizeof(line), "%.12g,%.12g\n", duty[k], power[k]);
    csv += line;
  }
  write_text(fs::path(opt.out) / "duty_power.csv", csv);

  double d_star = 0.0, p_star = 0.0, curvature = 0.0;
  check(esmppt_optimal_duty(plant.get(), opt.g, t_kelvin, &d_star, &p_star, &curvature),
        "optimal duty");

  svgplot::LinePlot plot("Power vs duty cycle", "duty cycle", "power [W]");
  plot.add_series("P(d)", duty, power);
  plot.add_series("optimum", {d_star, d_star}, {0.0, p_star});
  write_text(fs::path(opt.out) / "duty_power.svg", plot.render());

  ordered_json manifest = base_manifest("duty-curve", opt.out);
  manifest["inputs"]["plant"] = plant_path;
  manifest["resolved"]["plant"] = snapshot_of(plant.get());
  manifest["irradiance"] = opt.g;
  manifest["temperature_celsius"] = opt.t_celsius;
  manifest["points"] = opt.points;
  manifest["optimal_duty"] = d_star;
  manifest["optimal_power"] = p_star;
  manifest["curvature"] = curvature;
  write_text(fs::path(opt.out) / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

/* ---------------- simulate ---------------- */

struct SimulateOpts {
  std::string plant;
  std::string controller;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  double epsilon = 0.02;
  bool force = false;
  std::string out = "out/simulate";
};

ordered_json run_one(const esmppt_plant* plant, const esmppt_controller* controller,
                     const esmppt_scenario* scenario, double epsilon,
                     const std::string& out_dir, const std::string& stem,
                     TraceData* data_out) {
  esmppt_trace* raw = nullptr;
  check(esmppt_simulate(plant, controller, scenario, &raw), "simulation");
  TracePtr trace(raw);
  if (esmppt_trace_aborted(trace.get())) {
    fail(kExitRuntime, "simulation aborted on a non-finite state (partial trace discarded)");
  }
  check(esmppt_trace_write_csv(trace.get(), (fs::path(out_dir) / (stem + ".csv")).string().c_str()),
        "writing trace");
  char* metrics_raw = nullptr;
  check(esmppt_trace_metrics_json(trace.get(), epsilon, &metrics_raw), "metrics");
  const std::string metrics = take(metrics_raw);
  if (data_out) *data_out = fetch(trace.get());
  return ordered_json::parse(metrics);
}

int cmd_simulate(const SimulateOpts& opt) {
  const std::string plant_path = resolve_config(opt.plant);
  const std::string controller_path = resolve_config(opt.controller);
  const std::string scenario_path = resolve_config(opt.scenario);
  const PlantPtr plant = load_plant(plant_path);
  const ControllerPtr controller = load_controller(controller_path);
  ScenarioPtr scenario = load_scenario(scenario_path);
  if (opt.seed) {
    check(esmppt_scenario_set_seed(scenario.get(), *opt.seed), "seed override");
  }

  // validate against the optimum at the scenario's starting environment
  const ordered_json scenario_snap = snapshot_of(scenario.get());
  const double g0 = scenario_snap["keyframes"][0]["irradiance"].get<double>();
  const double t0 = scenario_snap["keyframes"][0]["temperature"].get<double>();
  char* report_raw = nullptr;
  int32_t hard_ok = 0;
  check(esmppt_validate_tuning(controller.get(), plant.get(), g0, t0, &report_raw, &hard_ok),
        "tuning validation");
  const ordered_json tuning = ordered_json::parse(take(report_raw));
  if (!hard_ok && !opt.force) {
    std::fprintf(stderr, "esmppt: tuning fails the stability conditions (use --force to run anyway)\n%s\n",
                 tuning.dump(2).c_str());
    return kExitValidation;
  }

  ensure_dir(opt.out);
  TraceData data;
  const ordered_json metrics =
      run_one(plant.get(), controller.get(), scenario.get(), opt.epsilon, opt.out, "trace",
              &data);
  write_text(fs::path(opt.out) / "metrics.json", metrics.dump(2) + "\n");

  svgplot::LinePlot power_plot("Power convergence", "time [s]", "power [W]");
  power_plot.add_series("power", data.col("time"), data.col("power"));
  power_plot.add_series("optimum", data.col("time"), data.col("oracle_p_star"));
  write_text(fs::path(opt.out) / "plot_power.svg", power_plot.render());

  svgplot::LinePlot duty_plot("Duty-cycle convergence", "time [s]", "duty cycle");
  duty_plot.add_series("applied duty", data.col("time"), data.col("duty_applied"));
  duty_plot.add_series("duty estimate", data.col("time"), data.col("d_hat"));
  duty_plot.add_series("optimum", data.col("time"), data.col("oracle_d_star"));
  write_text(fs::path(opt.out) / "plot_duty.svg", duty_plot.render());

  ordered_json manifest = base_manifest("simulate", opt.out);
  manifest["inputs"]["plant"] = plant_path;
  manifest["inputs"]["controller"] = controller_path;
  manifest["inputs"]["scenario"] = scenario_path;
  manifest["resolved"]["plant"] = snapshot_of(plant.get());
  manifest["resolved"]["controller"] = snapshot_of(controller.get());
  manifest["resolved"]["scenario"] = snapshot_of(scenario.get());
  manifest["rng_seed"] = scenario_snap["rng_seed"];
  if (opt.seed) manifest["rng_seed"] = *opt.seed;
  manifest["epsilon"] = opt.epsilon;
  manifest["forced"] = opt.force;
  manifest["tuning_report"] = tuning;
  write_text(fs::path(opt.out) / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

/* ---------------- compare ---------------- */

struct CompareOpts {
  std::vector<std::string> presets;
  std::string plant;
  std::string scenario;
  double epsilon = 0.02;
  std::string out = "out/compare";
};

int cmd_compare(const CompareOpts& opt) {
  if (opt.presets.empty()) fail(kExitValidation, "compare needs at least one preset");
  const std::string plant_path = resolve_config(opt.plant);
  const std::string scenario_path = resolve_config(opt.scenario);

  // presets may pin the plant they were tuned for; conflicting pins are fatal
  std::optional<std::string> pinned;
  std::vector<std::string> controller_paths;
  for (const auto& name : opt.presets) {
    const std::string path = resolve_config(name);
    controller_paths.push_back(path);
    if (const auto ref = scan_key(path, "plant_ref")) {
      const std::string resolved_ref = resolve_config(*ref);
      if (pinned && *pinned != resolved_ref) {
        fail(kExitValidation, "presets pin different plants: " + *pinned + " vs " +
                                  resolved_ref);
      }
      if (!pinned) pinned = resolved_ref;
      if (fs::weakly_canonical(resolved_ref) != fs::weakly_canonical(plant_path)) {
        fail(kExitValidation, "preset " + name + " pins plant " + resolved_ref +
                                  " but --plant is " + plant_path);
      }
    }
  }

  const PlantPtr plant = load_plant(plant_path);
  const ScenarioPtr scenario = load_scenario(scenario_path);
  ensure_dir(opt.out);

  svgplot::LinePlot power_plot("Power convergence", "time [s]", "power [W]");
  ordered_json table = ordered_json::array();
  ordered_json resolved_controllers;
  bool first = true;
  for (const auto& path : controller_paths) {
    const std::string label = preset_label(path);
    const ControllerPtr controller = load_controller(path);
    TraceData data;
    ordered_json metrics = run_one(plant.get(), controller.get(), scenario.get(),
                                   opt.epsilon, opt.out, "trace_" + label, &data);
    power_plot.add_series(label, data.col("time"), data.col("power"));
    if (first) {
      power_plot.add_series("optimum", data.col("time"), data.col("oracle_p_star"));
      first = false;
    }
    ordered_json row;
    row["preset"] = label;
    for (const auto& [k, v] : metrics.items()) row[k] = v;
    table.push_back(row);
    resolved_controllers[label] = snapshot_of(controller.get());
  }

  // rank by convergence time; never-converged (null) entries sink to the end
  std::stable_sort(table.begin(), table.end(), [](const ordered_json& a, const ordered_json& b) {
    const bool a_null = a["convergence_time"].is_null();
    const bool b_null = b["convergence_time"].is_null();
    if (a_null != b_null) return !a_null;
    if (a_null && b_null) return false;
    return a["convergence_time"].get<double>() < b["convergence_time"].get<double>();
  });

  write_text(fs::path(opt.out) / "ranking.json", table.dump(2) + "\n");
  write_text(fs::path(opt.out) / "compare_power.svg", power_plot.render());

  ordered_json manifest = base_manifest("compare", opt.out);
  manifest["inputs"]["plant"] = plant_path;
  manifest["inputs"]["scenario"] = scenario_path;
  manifest["inputs"]["presets"] = controller_paths;
  manifest["resolved"]["plant"] = snapshot_of(plant.get());
  manifest["resolved"]["scenario"] = snapshot_of(scenario.get());
  manifest["resolved"]["controllers"] = resolved_controllers;
  manifest["epsilon"] = opt.epsilon;
  write_text(fs::path(opt.out) / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

/* ---------------- validate ---------------- */

struct ValidateOpts {
  std::string controller;
  std::string plant;
  std::optional<double> g;
  std::optional<double> t_celsius;
  std::string out;
};

int cmd_validate(const ValidateOpts& opt) {
  const std::string controller_path = resolve_config(opt.controller);
  const std::string plant_path = resolve_config(opt.plant);
  const ControllerPtr controller = load_controller(controller_path);
  const PlantPtr plant = load_plant(plant_path);

  double g = 0.0, t = 0.0;
  check(esmppt_plant_reference_env(plant.get(), &g, &t), "reference env");
  if (opt.g) g = *opt.g;
  if (opt.t_celsius) t = *opt.t_celsius + 273.15;

  char* report_raw = nullptr;
  int32_t hard_ok = 0;
  check(esmppt_validate_tuning(controller.get(), plant.get(), g, t, &report_raw, &hard_ok),
        "tuning validation");
  const std::string report = take(report_raw);
  std::printf("%s\n", report.c_str());
  if (!opt.out.empty()) {
    ensure_dir(fs::path(opt.out).parent_path().string().empty()
                   ? "."
                   : fs::path(opt.out).parent_path().string());
    write_text(opt.out, report + "\n");
  }
  return hard_ok ? 0 : kExitValidation;
}

/* ---------------- sweep ---------------- */

struct SweepOpts {
  std::string plant;
  std::string controller;
  std::string scenario;
  std::string param;
  std::vector<std::string> values;
  std::string param2;
  std::vector<std::string> values2;
  int jobs = 1;
  double epsilon = 0.02;
  std::string out = "out/sweep";
};

struct SweepPoint {
  std::string v1;
  std::string v2;  // empty when no second parameter
  ordered_json metrics;
  bool failed = false;
  std::string error;
};

void apply_param(esmppt_controller* controller, esmppt_scenario* scenario,
                 const std::string& param, const std::string& value, std::string* error) {
  std::string key = param;
  esmppt_status st;
  if (key.rfind("scenario.", 0) == 0) {
    st = esmppt_scenario_set(scenario, key.substr(9).c_str(), value.c_str());
  } else {
    if (key.rfind("controller.", 0) == 0) key = key.substr(11);
    st = esmppt_controller_set(controller, key.c_str(), value.c_str());
  }
  if (st != ESMPPT_OK) *error = esmppt_last_error();
}

int cmd_sweep(const SweepOpts& opt) {
  if (opt.values.empty()) fail(kExitValidation, "--values must not be empty");
  if (!opt.param2.empty() && opt.values2.empty()) {
    fail(kExitValidation, "--values2 must not be empty when --param2 is given");
  }
  const std::string plant_path = resolve_config(opt.plant);
  const std::string controller_path = resolve_config(opt.controller);
  const std::string scenario_path = resolve_config(opt.scenario);
  const PlantPtr plant = load_plant(plant_path);
  const ControllerPtr controller = load_controller(controller_path);
  const ScenarioPtr scenario = load_scenario(scenario_path);

  // fail fast on an unknown parameter path before fanning out
  {
    esmppt_controller* probe_c = nullptr;
    esmppt_scenario* probe_s = nullptr;
    check(esmppt_controller_clone(controller.get(), &probe_c), "clone");
    check(esmppt_scenario_clone(scenario.get(), &probe_s), "clone");
    ControllerPtr pc(probe_c);
    ScenarioPtr ps(probe_s);
    std::string error;
    apply_param(probe_c, probe_s, opt.param, opt.values.front(), &error);
    if (error.empty() && !opt.param2.empty()) {
      apply_param(probe_c, probe_s, opt.param2, opt.values2.front(), &error);
    }
    if (!error.empty()) fail(kExitValidation, "bad sweep parameter: " + error);
  }

  std::vector<SweepPoint> points;
  for (const auto& v1 : opt.values) {
    if (opt.param2.empty()) {
      points.push_back({v1, "", {}, false, ""});
    } else {
      for (const auto& v2 : opt.values2) points.push_back({v1, v2, {}, false, ""});
    }
  }

  ensure_dir(opt.out);
  ensure_dir((fs::path(opt.out) / "runs").string());

  std::atomic<size_t> next{0};
  const int jobs = std::max(1, opt.jobs);
  const auto worker = [&] {
    for (;;) {
      const size_t index = next.fetch_add(1);
      if (index >= points.size()) return;
      SweepPoint& point = points[index];

      esmppt_controller* c_raw = nullptr;
      esmppt_scenario* s_raw = nullptr;
      if (esmppt_controller_clone(controller.get(), &c_raw) != ESMPPT_OK ||
          esmppt_scenario_clone(scenario.get(), &s_raw) != ESMPPT_OK) {
        point.failed = true;
        point.error = esmppt_last_error();
        continue;
      }
      ControllerPtr c(c_raw);
      ScenarioPtr s(s_raw);
      std::string error;
      apply_param(c_raw, s_raw, opt.param, point.v1, &error);
      if (error.empty() && !opt.param2.empty()) {
        apply_param(c_raw, s_raw, opt.param2, point.v2, &error);
      }
      if (!error.empty()) {
        point.failed = true;
        point.error = error;
        continue;
      }

      esmppt_trace* t_raw = nullptr;
      if (esmppt_simulate(plant.get(), c_raw, s_raw, &t_raw) != ESMPPT_OK) {
        point.failed = true;
        point.error = esmppt_last_error();
        continue;
      }
      TracePtr trace(t_raw);
      char padded[32];
      std::snprintf(padded, sizeof(padded), "%04zu", index);
      const fs::path run_dir = fs::path(opt.out) / "runs" / padded;
      std::error_code ec;
      fs::create_directories(run_dir, ec);
      char* metrics_raw = nullptr;
      if (ec ||
          esmppt_trace_write_csv(trace.get(), (run_dir / "trace.csv").string().c_str()) !=
              ESMPPT_OK ||
          esmppt_trace_metrics_json(trace.get(), opt.epsilon, &metrics_raw) != ESMPPT_OK) {
        point.failed = true;
        point.error = esmppt_last_error();
        continue;
      }
      point.metrics = ordered_json::parse(take(metrics_raw));
      std::ofstream mout(run_dir / "metrics.json", std::ios::binary);
      mout << point.metrics.dump(2) << "\n";
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (const auto& point : points) {
    if (point.failed) fail(kExitRuntime, "sweep point failed: " + point.error);
  }

  std::string csv = opt.param;
  if (!opt.param2.empty()) csv += "," + opt.param2;
  csv += ",convergence_time,steady_bias,dither_amplitude_final,tracking_rmse,"
         "energy_captured_ratio\n";
  for (const auto& point : points) {
    csv += point.v1;
    if (!opt.param2.empty()) csv += "," + point.v2;
    const auto field = [&](const char* name) -> std::string {
      const auto& v = point.metrics[name];
      if (v.is_null()) return "inf";
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.12g", v.get<double>());
      return buf;
    };
    csv += std::string(",") + field("convergence_time") + "," + field("steady_bias") + "," +
           field("dither_amplitude_final") + "," + field("tracking_rmse") + "," +
           field("energy_captured_ratio") + "\n";
  }
  write_text(fs::path(opt.out) / "sweep.csv", csv);

  ordered_json manifest = base_manifest("sweep", opt.out);
  manifest["inputs"]["plant"] = plant_path;
  manifest["inputs"]["controller"] = controller_path;
  manifest["inputs"]["scenario"] = scenario_path;
  manifest["resolved"]["plant"] = snapshot_of(plant.get());
  manifest["resolved"]["controller"] = snapshot_of(controller.get());
  manifest["resolved"]["scenario"] = snapshot_of(scenario.get());
  manifest["sweep"]["param"] = opt.param;
  manifest["sweep"]["values"] = opt.values;
  if (!opt.param2.empty()) {
    manifest["sweep"]["param2"] = opt.param2;
    manifest["sweep"]["values2"] = opt.values2;
  }
  manifest["epsilon"] = opt.epsilon;
  manifest["jobs"] = jobs;
  write_text(fs::path(opt.out) / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extremum-seeking MPPT simulation toolkit"};
  app.set_version_flag("--version", esmppt_version());
  app.add_option("--config-dir", g_config_dir,
                 "directory searched for preset names (env ESMPPT_CONFIG_DIR)");
  app.require_subcommand(1);

  PvCurveOpts pv_opts;
  auto* pv = app.add_subcommand("pv-curve", "export P-V curves and an overlay plot");
  pv->add_option("--plant", pv_opts.plant, "plant config (path or preset)")->required();
  pv->add_option("--g", pv_opts.g, "irradiance values [W/m^2]")->delimiter(',');
  pv->add_option("--t", pv_opts.t_celsius, "cell temperatures [Celsius]")->delimiter(',');
  pv->add_option("--points", pv_opts.points, "samples per curve");
  pv->add_option("--out", pv_opts.out, "output directory");

  DutyCurveOpts duty_opts;
  auto* duty = app.add_subcommand("duty-curve", "export the duty-to-power map and its optimum");
  duty->add_option("--plant", duty_opts.plant)->required();
  duty->add_option("--g", duty_opts.g, "irradiance [W/m^2]");
  duty->add_option("--t", duty_opts.t_celsius, "cell temperature [Celsius]");
  duty->add_option("--points", duty_opts.points, "samples on [0, 0.98]");
  duty->add_option("--out", duty_opts.out, "output directory");

  SimulateOpts sim_opts;
  std::uint64_t seed_value = 0;
  auto* sim = app.add_subcommand("simulate", "closed-loop run: trace, metrics, plots");
  sim->add_option("--plant", sim_opts.plant)->required();
  sim->add_option("--controller", sim_opts.controller)->required();
  sim->add_option("--scenario", sim_opts.scenario)->required();
  auto* seed_opt = sim->add_option("--seed", seed_value, "override the scenario RNG seed");
  sim->add_option("--epsilon", sim_opts.epsilon, "convergence band for metrics");
  sim->add_flag("--force", sim_opts.force, "run even if the tuning fails validation");
  sim->add_option("--out", sim_opts.out, "output directory");

  CompareOpts cmp_opts;
  auto* cmp = app.add_subcommand("compare", "run presets on one plant/scenario and rank them");
  cmp->add_option("presets", cmp_opts.presets, "controller presets")->required();
  cmp->add_option("--plant", cmp_opts.plant)->required();
  cmp->add_option("--scenario", cmp_opts.scenario)->required();
  cmp->add_option("--epsilon", cmp_opts.epsilon);
  cmp->add_option("--out", cmp_opts.out, "output directory");

  ValidateOpts val_opts;
  double val_g = 0.0, val_t = 0.0;
  auto* val = app.add_subcommand("validate", "check tuning conditions against a plant");
  val->add_option("--controller", val_opts.controller)->required();
  val->add_option("--plant", val_opts.plant)->required();
  auto* val_g_opt = val->add_option("--g", val_g, "irradiance [W/m^2], default plant reference");
  auto* val_t_opt = val->add_option("--t", val_t, "temperature [Celsius], default plant reference");
  val->add_option("--out", val_opts.out, "also write the report here");

  SweepOpts sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "metrics over a 1-2 parameter grid");
  sweep->add_option("--plant", sweep_opts.plant)->required();
  sweep->add_option("--controller", sweep_opts.controller)->required();
  sweep->add_option("--scenario", sweep_opts.scenario)->required();
  sweep->add_option("--param", sweep_opts.param, "parameter path, e.g. lambda or scenario.noise_std")
      ->required();
  sweep->add_option("--values", sweep_opts.values, "comma-separated values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--param2", sweep_opts.param2, "optional second parameter");
  sweep->add_option("--values2", sweep_opts.values2, "values for --param2")->delimiter(',');
  sweep->add_option("--jobs", sweep_opts.jobs, "parallel workers");
  sweep->add_option("--epsilon", sweep_opts.epsilon);
  sweep->add_option("--out", sweep_opts.out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (pv->parsed()) return cmd_pv_curve(pv_opts);
  if (duty->parsed()) return cmd_duty_curve(duty_opts);
  if (sim->parsed()) {
    if (seed_opt->count() > 0) sim_opts.seed = seed_value;
    return cmd_simulate(sim_opts);
  }
  if (cmp->parsed()) return cmd_compare(cmp_opts);
  if (val->parsed()) {
    if (val_g_opt->count() > 0) val_opts.g = val_g;
    if (val_t_opt->count() > 0) val_opts.t_celsius = val_t;
    return cmd_validate(val_opts);
  }
  if (sweep->parsed()) return cmd_sweep(sweep_opts);
  return 0;
}
