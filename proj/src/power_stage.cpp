#include "esmppt/power_stage.hpp"

#include <algorithm>
#include <cmath>

#include "esmppt/errors.hpp"

namespace esmppt {

void ConverterParams::validate() const {
  if (!(inductance > 0.0)) throw InvalidArgument("converter: inductance must be > 0");
  if (!(capacitance > 0.0)) throw InvalidArgument("converter: capacitance must be > 0");
}

void LoadSpec::validate() const {
  if (!(value > 0.0)) throw InvalidArgument("load: value must be > 0");
}

void PlantConfig::validate() const {
  pv.validate();
  load.validate();
  if (mode == PlantMode::Dynamic) {
    converter.validate();
    if (!std::isfinite(converter.inductance) || !std::isfinite(converter.capacitance)) {
      throw InvalidArgument("plant: dynamic mode requires finite converter params");
    }
  }
}

namespace {

void check_duty(double duty) {
  if (!(duty >= 0.0) || !(duty < 1.0)) {
    throw InvalidArgument("duty must lie in [0, 1)");
  }
}

// Resistive load steady state: V = (1-d)^2 R I(V), solved by bisection on V.
double resistive_terminal_voltage(const PlantConfig& cfg, const Environment& env,
                                  double duty) {
  const double voc = open_circuit_voltage(cfg.pv, env);
  if (voc <= 0.0) return 0.0;
  const double k = (1.0 - duty) * (1.0 - duty) * cfg.load.value;
  const auto mismatch = [&](double v) { return v - k * solve_current(cfg.pv, env, v); };
  double lo = 0.0, hi = voc;
  if (mismatch(lo) >= 0.0) return 0.0;  // no photocurrent
  constexpr double kTol = 1e-9;
  while (hi - lo > kTol) {
    const double mid = 0.5 * (lo + hi);
    if (mismatch(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double steady_state_map(const PlantConfig& cfg, const Environment& env, double duty) {
  cfg.validate();
  env.validate();
  check_duty(duty);
  if (cfg.load.kind == LoadKind::ConstantVoltage) {
    const double v = (1.0 - duty) * cfg.load.value;
    const double i = solve_current(cfg.pv, env, v);
    return v * i;
  }
  const double v = resistive_terminal_voltage(cfg, env, duty);
  return v * solve_current(cfg.pv, env, v);
}

std::vector<DutyPower> duty_power_curve(const PlantConfig& cfg, const Environment& env,
                                        int n_points) {
  if (n_points < 2) throw InvalidArgument("duty_power_curve: n_points must be >= 2");
  std::vector<DutyPower> curve;
  curve.reserve(static_cast<size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double d = kDutyGridMax * static_cast<double>(k) / (n_points - 1);
    curve.push_back({d, steady_state_map(cfg, env, d)});
  }
  return curve;
}

namespace {

double load_current(const LoadSpec& load, double output_voltage) {
  if (load.kind == LoadKind::ConstantVoltage) {
    return (output_voltage - load.value) / kCvLoadResistance;
  }
  return output_voltage / load.value;
}

}  // namespace

DynamicPlantState dynamic_step_derivatives(const PlantConfig& cfg, const Environment& env,
                                           const DynamicPlantState& state, double duty) {
  if (cfg.mode != PlantMode::Dynamic) {
    throw InvalidArgument("dynamic_step_derivatives: plant mode must be Dynamic");
  }
  cfg.validate();
  check_duty(duty);
  if (state.inductor_current < 0.0) {
    throw ConductionModeViolation("inductor current went negative (left CCM)");
  }
  const double v = voltage_at_current(cfg.pv, env, state.inductor_current);
  const double i_o = load_current(cfg.load, state.output_voltage);
  const double di_l = (v - (1.0 - duty) * state.output_voltage) / cfg.converter.inductance;
  const double dv_o = ((1.0 - duty) * state.inductor_current - i_o) / cfg.converter.capacitance;
  if (!std::isfinite(di_l) || !std::isfinite(dv_o)) {
    throw NonFinite("dynamic_step_derivatives: non-finite derivative");
  }
  return {di_l, dv_o};
}

DynamicPlantState dynamic_equilibrium(const PlantConfig& cfg, const Environment& env,
                                      double duty) {
  cfg.validate();
  env.validate();
  check_duty(duty);
  const double q = 1.0 - duty;
  const double i_sc = solve_current(cfg.pv, env, 0.0);
  // PV voltage falls with current while the converter-side voltage rises,
  // so the balance V_pv(I) = (1-d) * V_o(I) has a single crossing.
  const auto mismatch = [&](double i_l) {
    double v_o;
    if (cfg.load.kind == LoadKind::ConstantVoltage) {
      v_o = cfg.load.value + kCvLoadResistance * q * i_l;
    } else {
      v_o = cfg.load.value * q * i_l;
    }
    return voltage_at_current(cfg.pv, env, i_l) - q * v_o;
  };
  double lo = 0.0, hi = i_sc;
  if (mismatch(lo) <= 0.0) {
    // converter-side voltage exceeds V_oc already at zero current
    double v_o = cfg.load.kind == LoadKind::ConstantVoltage ? cfg.load.value : 0.0;
    return {0.0, v_o};
  }
  if (mismatch(hi) >= 0.0) {
    const double v_o = cfg.load.kind == LoadKind::ConstantVoltage
                           ? cfg.load.value + kCvLoadResistance * q * i_sc
                           : cfg.load.value * q * i_sc;
    return {i_sc, v_o};
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-12 * std::max(1.0, i_sc); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mismatch(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double i_l = 0.5 * (lo + hi);
  const double v_o = cfg.load.kind == LoadKind::ConstantVoltage
                         ? cfg.load.value + kCvLoadResistance * q * i_l
                         : cfg.load.value * q * i_l;
  return {i_l, v_o};
}

OptimalDuty optimal_duty_oracle(const PlantConfig& cfg, const Environment& env) {
  cfg.validate();
  env.validate();
  const auto power_at = [&](double d) { return steady_state_map(cfg, env, d); };

  constexpr int kScanPoints = 257;
  double best_d = 0.0;
  double best_p = power_at(0.0);
  for (int k = 1; k < kScanPoints; ++k) {
    const double d = kDutyGridMax * static_cast<double>(k) / (kScanPoints - 1);
    const double p = power_at(d);
    if (p > best_p) {
      best_p = p;
      best_d = d;
    }
  }
  const double scan_step = kDutyGridMax / (kScanPoints - 1);
  double a = std::max(0.0, best_d - scan_step);
  double b = std::min(kDutyGridMax, best_d + scan_step);
  constexpr double kInvPhi = 0.6180339887498949;
  constexpr double kDutyTol = 1e-7;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = power_at(c);
  double fd = power_at(d);
  while (b - a > kDutyTol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = power_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = power_at(d);
    }
  }
  double d_star = 0.5 * (a + b);
  double p_star = power_at(d_star);
  if (p_star < best_p) {
    d_star = best_d;
    p_star = best_p;
  }

  constexpr double kFdStep = 1e-4;
  const double p_plus = power_at(std::min(d_star + kFdStep, kDutyGridMax));
  const double p_minus = power_at(std::max(d_star - kFdStep, 0.0));
  const double curvature = (p_plus - 2.0 * p_star + p_minus) / (kFdStep * kFdStep);
  return {d_star, p_star, curvature};
}

}  // namespace esmppt
