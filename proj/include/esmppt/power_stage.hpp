#ifndef ESMPPT_POWER_STAGE_HPP
#define ESMPPT_POWER_STAGE_HPP

#include <vector>

#include "esmppt/pv_model.hpp"

namespace esmppt {

struct ConverterParams {
  double inductance = 1e-3;    // H
  double capacitance = 4.7e-3;  // F

  void validate() const;
};

enum class LoadKind { ConstantVoltage, Resistive };

struct LoadSpec {
  LoadKind kind = LoadKind::ConstantVoltage;
  double value = 35.0;  // V for ConstantVoltage, ohm for Resistive

  void validate() const;
};

enum class PlantMode { QuasiStatic, Dynamic };

// PV module + boost converter + load: the static map duty -> power the
// extremum seekers optimize, plus an optional dynamic converter mode.
struct PlantConfig {
  PvModuleParams pv;
  ConverterParams converter;
  LoadSpec load;
  PlantMode mode = PlantMode::QuasiStatic;

  void validate() const;
};

struct DynamicPlantState {
  double inductor_current = 0.0;  // A, must stay >= 0 (continuous conduction)
  double output_voltage = 0.0;    // V
};

struct DutyPower {
  double duty = 0.0;
  double power = 0.0;
};

struct OptimalDuty {
  double duty = 0.0;
  double power = 0.0;
  double curvature = 0.0;  // d2P/dd2 at the optimum, negative on valid plants
};

// duty grids stop short of the singular d = 1 boundary
inline constexpr double kDutyGridMax = 0.98;

// Internal series resistance of the constant-voltage load in Dynamic mode.
// Keeps the output-voltage state well-posed while staying close enough to an
// ideal source that the dynamic equilibrium matches the quasi-static map.
inline constexpr double kCvLoadResistance = 1e-4;  // ohm

// Steady-state power delivered by the PV at the operating point implied by a
// duty cycle in [0, 1). QuasiStatic mode only.
double steady_state_map(const PlantConfig& cfg, const Environment& env, double duty);

// Uniform duty grid on [0, kDutyGridMax].
std::vector<DutyPower> duty_power_curve(const PlantConfig& cfg, const Environment& env,
                                        int n_points);

// Time derivatives of the averaged converter states. Dynamic mode only;
// throws ConductionModeViolation when inductor current is negative.
DynamicPlantState dynamic_step_derivatives(const PlantConfig& cfg, const Environment& env,
                                           const DynamicPlantState& state, double duty);

// Steady state of the dynamic model at a fixed duty (derivatives vanish there).
DynamicPlantState dynamic_equilibrium(const PlantConfig& cfg, const Environment& env,
                                      double duty);

// Golden-section search over the duty-power curve, 1e-7 duty tolerance, plus
// the central-difference curvature at the optimum (step 1e-4).
OptimalDuty optimal_duty_oracle(const PlantConfig& cfg, const Environment& env);

}  // namespace esmppt

#endif
