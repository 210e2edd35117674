#include "esmppt/pv_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "esmppt/errors.hpp"

namespace esmppt {

namespace {

constexpr double kResidualTarget = 1e-12;  // aim well below the 1e-10 contract
constexpr double kResidualLimit = 1e-10;
constexpr int kMaxNewtonIters = 100;

// exp() that saturates instead of overflowing; Newton steps keep their
// direction because numerator and denominator saturate together.
double safe_exp(double x) {
  return std::exp(std::min(x, 700.0));
}

double shunt_conductance(const PvModuleParams& p) {
  return std::isinf(p.r_p) ? 0.0 : 1.0 / p.r_p;
}

}  // namespace

void PvModuleParams::validate() const {
  if (!(i_sc_ref > 0.0)) throw InvalidArgument("pv: i_sc_ref must be > 0");
  if (!(i_0_ref > 0.0)) throw InvalidArgument("pv: i_0_ref must be > 0");
  if (!(r_s >= 0.0)) throw InvalidArgument("pv: r_s must be >= 0");
  if (!(r_p > 0.0)) throw InvalidArgument("pv: r_p must be > 0");
  if (!(n_ideality > 0.0)) throw InvalidArgument("pv: n_ideality must be > 0");
  if (n_series_cells < 1) throw InvalidArgument("pv: n_series_cells must be >= 1");
  if (!(g_ref > 0.0)) throw InvalidArgument("pv: g_ref must be > 0");
  if (!(t_ref > 0.0)) throw InvalidArgument("pv: t_ref must be > 0");
  if (!std::isfinite(e_g) || !std::isfinite(alpha_i)) {
    throw InvalidArgument("pv: e_g and alpha_i must be finite");
  }
}

void Environment::validate() const {
  if (!(irradiance >= 0.0)) throw InvalidArgument("env: irradiance must be >= 0");
  if (!(temperature > 0.0)) throw InvalidArgument("env: temperature must be > 0");
}

double thermal_voltage(double temperature) {
  return constants::boltzmann * temperature / constants::elementary_charge;
}

double photo_current(const PvModuleParams& params, const Environment& env) {
  return (params.i_sc_ref + params.alpha_i * (env.temperature - params.t_ref)) *
         env.irradiance / params.g_ref;
}

double saturation_current(const PvModuleParams& params, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("saturation_current: temperature must be > 0");
  const double ratio = temperature / params.t_ref;
  const double eg_joule = params.e_g * constants::elementary_charge;
  const double exponent = eg_joule / (params.n_ideality * constants::boltzmann) *
                          (1.0 / params.t_ref - 1.0 / temperature);
  return params.i_0_ref * ratio * ratio * ratio * std::exp(exponent);
}

double diode_residual(const PvModuleParams& params, const Environment& env,
                      double module_voltage, double current) {
  const double v_cell = module_voltage / params.n_series_cells;
  const double u = v_cell + current * params.r_s;
  const double nvt = params.n_ideality * thermal_voltage(env.temperature);
  const double i_ph = photo_current(params, env);
  const double i_0 = saturation_current(params, env.temperature);
  return current - i_ph + i_0 * std::expm1(u / nvt) + u * shunt_conductance(params);
}

double solve_current(const PvModuleParams& params, const Environment& env,
                     double module_voltage) {
  params.validate();
  env.validate();
  if (!(module_voltage >= 0.0)) {
    throw InvalidArgument("solve_current: module_voltage must be >= 0");
  }

  const double v_cell = module_voltage / params.n_series_cells;
  const double nvt = params.n_ideality * thermal_voltage(env.temperature);
  const double i_ph = photo_current(params, env);
  const double i_0 = saturation_current(params, env.temperature);
  const double g_p = shunt_conductance(params);

  const auto residual = [&](double i) {
    const double u = v_cell + i * params.r_s;
    return i - i_ph + i_0 * std::expm1(std::min(u / nvt, 700.0)) + u * g_p;
  };
  const auto slope = [&](double i) {
    const double u = v_cell + i * params.r_s;
    return 1.0 + i_0 * params.r_s / nvt * safe_exp(u / nvt) + params.r_s * g_p;
  };

  // Start at I_ph, clipped so the diode exponent begins at the open-circuit
  // knee: beyond it Newton only crawls (each step shrinks the exponent by
  // roughly one), which exhausts the budget at high irradiance.
  double i = i_ph;
  if (params.r_s > 0.0 && i_ph > 0.0) {
    const double u_knee = std::max(nvt * std::log1p(i_ph / i_0), v_cell);
    i = std::min(i, (u_knee - v_cell) / params.r_s);
  }
  double f = residual(i);
  for (int iter = 0; iter < kMaxNewtonIters; ++iter) {
    if (std::abs(f) <= kResidualTarget) return i;
    double step = f / slope(i);
    // halve the step until the residual actually shrinks
    double i_next = i - step;
    double f_next = residual(i_next);
    for (int k = 0; k < 60 && std::abs(f_next) > std::abs(f); ++k) {
      step *= 0.5;
      i_next = i - step;
      f_next = residual(i_next);
    }
    i = i_next;
    f = f_next;
  }
  if (std::abs(f) <= kResidualLimit) return i;
  throw NoConvergence("solve_current: Newton iteration exhausted at |residual|=" +
                      std::to_string(std::abs(f)));
}

namespace {

// Solve the per-cell junction equation for u = V_c + I*R_s at a known current.
// g(u) = I - I_ph + I_0*expm1(u/nvt) + u/R_p is increasing and convex; the
// shunt-free closed form starts Newton at or above the root.
double junction_voltage(const PvModuleParams& params, const Environment& env,
                        double current) {
  const double nvt = params.n_ideality * thermal_voltage(env.temperature);
  const double i_ph = photo_current(params, env);
  const double i_0 = saturation_current(params, env.temperature);
  const double g_p = shunt_conductance(params);

  const double excess = i_ph - current;
  double u = excess > 0.0 ? nvt * std::log1p(excess / i_0) : 0.0;
  double g = current - i_ph + i_0 * std::expm1(std::min(u / nvt, 700.0)) + u * g_p;
  for (int iter = 0; iter < kMaxNewtonIters; ++iter) {
    if (std::abs(g) <= kResidualTarget) return u;
    const double dg = i_0 / nvt * safe_exp(u / nvt) + g_p;
    double step = g / dg;
    double u_next = u - step;
    double g_next = current - i_ph + i_0 * std::expm1(std::min(u_next / nvt, 700.0)) +
                    u_next * g_p;
    for (int k = 0; k < 60 && std::abs(g_next) > std::abs(g); ++k) {
      step *= 0.5;
      u_next = u - step;
      g_next = current - i_ph + i_0 * std::expm1(std::min(u_next / nvt, 700.0)) +
               u_next * g_p;
    }
    u = u_next;
    g = g_next;
  }
  if (std::abs(g) <= kResidualLimit) return u;
  throw NoConvergence("junction_voltage: Newton iteration exhausted");
}

}  // namespace

double open_circuit_voltage(const PvModuleParams& params, const Environment& env) {
  params.validate();
  env.validate();
  if (photo_current(params, env) <= 0.0) return 0.0;
  return params.n_series_cells * junction_voltage(params, env, 0.0);
}

double voltage_at_current(const PvModuleParams& params, const Environment& env,
                          double current) {
  params.validate();
  env.validate();
  if (current <= 0.0) return open_circuit_voltage(params, env);
  const double i_ph = photo_current(params, env);
  if (i_ph <= 0.0) return 0.0;
  if (std::isinf(params.r_p) &&
      current >= i_ph + saturation_current(params, env.temperature)) {
    return 0.0;  // beyond the shunt-free asymptote; no junction solution
  }
  // V(I) is strictly below V_oc for I > 0, so only the short-circuit side
  // needs clamping (currents beyond I_sc have no non-negative voltage).
  const double u = junction_voltage(params, env, current);
  const double v = params.n_series_cells * (u - current * params.r_s);
  return std::max(v, 0.0);
}

std::vector<IvPoint> pv_curve(const PvModuleParams& params, const Environment& env,
                              int n_points) {
  if (n_points < 2) throw InvalidArgument("pv_curve: n_points must be >= 2");
  const double voc = open_circuit_voltage(params, env);
  std::vector<IvPoint> points;
  points.reserve(static_cast<size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double v = voc * static_cast<double>(k) / (n_points - 1);
    const double i = solve_current(params, env, v);
    points.push_back({v, i, v * i});
  }
  return points;
}

IvPoint mpp_oracle(const PvModuleParams& params, const Environment& env) {
  params.validate();
  env.validate();
  if (photo_current(params, env) <= 0.0) return {0.0, 0.0, 0.0};
  const double voc = open_circuit_voltage(params, env);
  if (voc <= 0.0) return {0.0, 0.0, 0.0};

  const auto power_at = [&](double v) { return v * solve_current(params, env, v); };

  constexpr int kGridPoints = 1024;
  double best_v = 0.0;
  double best_p = 0.0;
  for (int k = 0; k < kGridPoints; ++k) {
    const double v = voc * static_cast<double>(k) / (kGridPoints - 1);
    const double p = power_at(v);
    if (p > best_p) {
      best_p = p;
      best_v = v;
    }
  }

  // golden-section refinement between the grid neighbours of the peak
  const double step = voc / (kGridPoints - 1);
  double a = std::max(0.0, best_v - step);
  double b = std::min(voc, best_v + step);
  constexpr double kInvPhi = 0.6180339887498949;
  constexpr double kVoltageTol = 1e-6;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = power_at(c);
  double fd = power_at(d);
  while (b - a > kVoltageTol) {
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
  const double v_star = 0.5 * (a + b);
  const double p_star = power_at(v_star);
  if (p_star < best_p) {
    const double i = solve_current(params, env, best_v);
    return {best_v, i, best_v * i};
  }
  const double i = solve_current(params, env, v_star);
  return {v_star, i, v_star * i};
}

}  // namespace esmppt
