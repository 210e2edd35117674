#ifndef ESMPPT_SIM_ENGINE_HPP
#define ESMPPT_SIM_ENGINE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "esmppt/es_controllers.hpp"
#include "esmppt/power_stage.hpp"

namespace esmppt {

struct EnvKeyframe {
  double time = 0.0;
  double irradiance = 1000.0;
  double temperature = 298.15;
};

// Time profile of the environment plus measurement-noise settings. The
// profile is piecewise linear between keyframes and clamped outside them.
struct Scenario {
  double duration = 60.0;  // s
  double dt = 0.005;       // s
  std::vector<EnvKeyframe> env_profile{{0.0, 1000.0, 298.15}};
  double noise_std = 0.0;  // W, additive Gaussian on the measured power
  std::uint64_t rng_seed = 1;

  void validate() const;
  Environment env_at(double t) const;
};

// Uniform-grid trajectory of everything the experiments plot.
struct SimTrace {
  std::vector<double> time;
  std::vector<double> duty_applied;
  std::vector<double> d_hat;
  std::vector<double> g_hat;
  std::vector<double> eta;
  std::vector<double> alpha;
  std::vector<double> power;  // true (noise-free) power
  std::vector<double> env_irradiance;
  std::vector<double> env_temperature;
  std::vector<double> oracle_d_star;
  std::vector<double> oracle_p_star;
  std::vector<double> saturation_flag;
  bool aborted_nonfinite = false;

  static constexpr std::array<const char*, 12> kColumnNames = {
      "time",         "duty_applied",    "d_hat",          "g_hat",
      "eta",          "alpha",           "power",          "env_irradiance",
      "env_temperature", "oracle_d_star", "oracle_p_star", "saturation_flag"};

  std::size_t rows() const { return time.size(); }
  const std::vector<double>& column(std::size_t index) const;
  std::vector<double>& column(std::size_t index);
};

struct MetricsReport {
  double epsilon = 0.0;
  double convergence_time = 0.0;  // +inf when the band is never held
  double steady_bias = 0.0;
  double dither_amplitude_final = 0.0;
  double tracking_rmse = 0.0;
  double energy_captured_ratio = 0.0;
};

// Static duty -> power map with a known optimum; what the seekers optimize.
class PowerMap {
 public:
  virtual ~PowerMap() = default;
  virtual double power(double duty, const Environment& env) const = 0;
  virtual OptimalDuty optimum(const Environment& env) const = 0;
};

// Quasi-static PV + boost + load composition.
class QuasiStaticPlantMap final : public PowerMap {
 public:
  explicit QuasiStaticPlantMap(PlantConfig cfg);
  double power(double duty, const Environment& env) const override;
  OptimalDuty optimum(const Environment& env) const override;

 private:
  PlantConfig cfg_;
};

// Synthetic quadratic desk map p_star + (curvature/2) * (d - d_star)^2,
// independent of the environment.
class QuadraticPowerMap final : public PowerMap {
 public:
  QuadraticPowerMap(double d_star, double p_star, double curvature);
  double power(double duty, const Environment& env) const override;
  OptimalDuty optimum(const Environment& env) const override;

 private:
  double d_star_;
  double p_star_;
  double curvature_;
};

// Fixed-step classical 4th-order integration of the closed loop on a static
// power map. Noise enters only the controller's measurement path; the trace
// logs true power. Deterministic for a given seed.
SimTrace run_on_map(const PowerMap& map, const EsParams& controller,
                    const Scenario& scenario,
                    std::optional<ControllerState> initial = std::nullopt);

// Same, with the plant composed from cfg (QuasiStatic uses the static map,
// Dynamic co-integrates the converter states).
SimTrace run(const PlantConfig& plant, const EsParams& controller,
             const Scenario& scenario,
             std::optional<ControllerState> initial = std::nullopt);

// Built-in shading profile: irradiance constant to 40 s, ramped down to 40%
// by 115 s, ramped back up by 180 s.
Scenario shading_scenario(double g_base = 1000.0, double temperature = 298.15,
                          double dt = 0.005);
SimTrace run_shading_scenario(const PlantConfig& plant, const EsParams& controller);

MetricsReport compute_metrics(const SimTrace& trace, double epsilon);

// Largest horizon fraction a prescribed-time run can reach before the chirp
// outruns the dt resolution guard; 1 for non-chirped variants.
double max_safe_stop_fraction(const EsParams& controller, double dt);

}  // namespace esmppt

#endif
