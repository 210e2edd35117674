#include "esmppt/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "esmppt/errors.hpp"

namespace esmppt {

void Scenario::validate() const {
  if (!(dt > 0.0)) throw InvalidArgument("scenario: dt must be > 0");
  if (!(duration >= dt)) throw InvalidArgument("scenario: duration must be >= dt");
  if (env_profile.empty()) throw InvalidArgument("scenario: at least one keyframe required");
  for (size_t i = 0; i < env_profile.size(); ++i) {
    if (!(env_profile[i].irradiance >= 0.0)) {
      throw InvalidArgument("scenario: keyframe irradiance must be >= 0");
    }
    if (!(env_profile[i].temperature > 0.0)) {
      throw InvalidArgument("scenario: keyframe temperature must be > 0");
    }
    if (i > 0 && !(env_profile[i].time > env_profile[i - 1].time)) {
      throw InvalidArgument("scenario: keyframe times must be strictly increasing");
    }
  }
  if (!(noise_std >= 0.0)) throw InvalidArgument("scenario: noise_std must be >= 0");
}

Environment Scenario::env_at(double t) const {
  const auto& kf = env_profile;
  if (t <= kf.front().time) return {kf.front().irradiance, kf.front().temperature};
  if (t >= kf.back().time) return {kf.back().irradiance, kf.back().temperature};
  size_t hi = 1;
  while (kf[hi].time < t) ++hi;
  const auto& a = kf[hi - 1];
  const auto& b = kf[hi];
  const double w = (t - a.time) / (b.time - a.time);
  return {a.irradiance + w * (b.irradiance - a.irradiance),
          a.temperature + w * (b.temperature - a.temperature)};
}

const std::vector<double>& SimTrace::column(std::size_t index) const {
  return const_cast<SimTrace*>(this)->column(index);
}

std::vector<double>& SimTrace::column(std::size_t index) {
  switch (index) {
    case 0: return time;
    case 1: return duty_applied;
    case 2: return d_hat;
    case 3: return g_hat;
    case 4: return eta;
    case 5: return alpha;
    case 6: return power;
    case 7: return env_irradiance;
    case 8: return env_temperature;
    case 9: return oracle_d_star;
    case 10: return oracle_p_star;
    case 11: return saturation_flag;
    default: throw InvalidArgument("SimTrace: column index out of range");
  }
}

QuasiStaticPlantMap::QuasiStaticPlantMap(PlantConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.mode = PlantMode::QuasiStatic;
  cfg_.validate();
}

double QuasiStaticPlantMap::power(double duty, const Environment& env) const {
  return steady_state_map(cfg_, env, duty);
}

OptimalDuty QuasiStaticPlantMap::optimum(const Environment& env) const {
  return optimal_duty_oracle(cfg_, env);
}

QuadraticPowerMap::QuadraticPowerMap(double d_star, double p_star, double curvature)
    : d_star_(d_star), p_star_(p_star), curvature_(curvature) {
  if (!(curvature < 0.0)) throw InvalidArgument("QuadraticPowerMap: curvature must be < 0");
}

double QuadraticPowerMap::power(double duty, const Environment&) const {
  const double e = duty - d_star_;
  return p_star_ + 0.5 * curvature_ * e * e;
}

OptimalDuty QuadraticPowerMap::optimum(const Environment&) const {
  return {d_star_, p_star_, curvature_};
}

namespace {

// Box-Muller over mt19937_64: fully specified, so traces are reproducible
// across platforms (std::normal_distribution is not).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform_pos();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  double uniform_pos() {  // (0, 1]
    return (static_cast<double>(rng_()) + 1.0) * 0x1p-64;
  }

  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct OracleCache {
  const PowerMap& map;
  bool valid = false;
  Environment last{};
  OptimalDuty opt{};

  const OptimalDuty& at(const Environment& env) {
    const auto moved = [](double now, double ref) {
      return std::abs(now - ref) > 1e-3 * std::max(std::abs(ref), 1e-12);
    };
    if (!valid || moved(env.irradiance, last.irradiance) ||
        moved(env.temperature, last.temperature)) {
      opt = map.optimum(env);
      last = env;
      valid = true;
    }
    return opt;
  }
};

double effective_end_time(const EsParams& params, const Scenario& scenario) {
  double t_end = params.t0 + scenario.duration;
  if (params.variant == EsVariant::UnbiasedPT) {
    t_end = std::min(t_end, params.t0 + params.pt_stop_fraction * params.pt_horizon_T);
  }
  return t_end;
}

void check_resolution_guard(const EsParams& params, const Scenario& scenario,
                            double t_end) {
  double omega_eff = params.omega;
  if (params.variant == EsVariant::UnbiasedPT) {
    omega_eff *= std::pow(mu(t_end, params.t0, params.pt_horizon_T), params.pt_q);
  }
  const double bound = std::min(0.01, 2.0 * M_PI / (50.0 * omega_eff));
  if (scenario.dt > bound) {
    throw DomainError("scenario dt " + std::to_string(scenario.dt) +
                      " exceeds the resolution guard " + std::to_string(bound) +
                      "; max safe stop fraction for this dt is " +
                      std::to_string(max_safe_stop_fraction(params, scenario.dt)));
  }
}

template <std::size_t N, typename Deriv>
std::array<double, N> rk4_step(const Deriv& deriv, const std::array<double, N>& y,
                               double t, double dt) {
  const auto advance = [&](const std::array<double, N>& base, double scale,
                           const std::array<double, N>& slope) {
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = base[i] + scale * slope[i];
    return out;
  };
  const auto k1 = deriv(t, y);
  const auto k2 = deriv(t + 0.5 * dt, advance(y, 0.5 * dt, k1));
  const auto k3 = deriv(t + 0.5 * dt, advance(y, 0.5 * dt, k2));
  const auto k4 = deriv(t + dt, advance(y, dt, k3));
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

template <std::size_t N>
bool all_finite(const std::array<double, N>& y) {
  for (double v : y) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void push_row(SimTrace& trace, double t, const AppliedDuty& applied,
              const ControllerState& st, double p_true, const Environment& env,
              const OptimalDuty& opt) {
  trace.time.push_back(t);
  trace.duty_applied.push_back(applied.duty);
  trace.d_hat.push_back(st.d_hat);
  trace.g_hat.push_back(st.g_hat);
  trace.eta.push_back(st.eta);
  trace.alpha.push_back(st.alpha);
  trace.power.push_back(p_true);
  trace.env_irradiance.push_back(env.irradiance);
  trace.env_temperature.push_back(env.temperature);
  trace.oracle_d_star.push_back(opt.duty);
  trace.oracle_p_star.push_back(opt.power);
  trace.saturation_flag.push_back(applied.saturated ? 1.0 : 0.0);
}

}  // namespace

SimTrace run_on_map(const PowerMap& map, const EsParams& controller,
                    const Scenario& scenario, std::optional<ControllerState> initial) {
  controller.validate();
  scenario.validate();
  const double t_begin = controller.t0;
  const double t_end = effective_end_time(controller, scenario);
  check_resolution_guard(controller, scenario, t_end);
  const auto n_steps = static_cast<long>(std::llround((t_end - t_begin) / scenario.dt));
  if (n_steps < 1) throw InvalidArgument("run: duration shorter than one step");

  GaussianStream gauss(scenario.rng_seed);
  double held_noise = scenario.noise_std * gauss.next();

  OracleCache oracle{map};
  ControllerState st;
  if (initial) {
    st = *initial;
  } else {
    st.d_hat = controller.d_hat0;
    st.g_hat = 0.0;
    st.alpha = controller.alpha0;
    const AppliedDuty d0 = applied_duty(controller, st, t_begin);
    // warm-start the washout filter at the first measurement
    st.eta = map.power(d0.duty, scenario.env_at(t_begin)) + held_noise;
  }

  const auto deriv = [&](double t, const std::array<double, 4>& y) -> std::array<double, 4> {
    const ControllerState cs{y[0], y[1], y[2], y[3]};
    const Environment env = scenario.env_at(t);
    const AppliedDuty d = applied_duty(controller, cs, t);
    const double measured = map.power(d.duty, env) + held_noise;
    const ControllerState cd = derivatives(controller, cs, measured, t);
    return {cd.d_hat, cd.g_hat, cd.eta, cd.alpha};
  };

  SimTrace trace;
  for (long i = 0; i <= n_steps; ++i) {
    const double t = t_begin + static_cast<double>(i) * scenario.dt;
    const Environment env = scenario.env_at(t);
    const AppliedDuty applied = applied_duty(controller, st, t);
    const double p_true = map.power(applied.duty, env);
    push_row(trace, t, applied, st, p_true, env, oracle.at(env));
    if (i == n_steps) break;

    std::array<double, 4> y{st.d_hat, st.g_hat, st.eta, st.alpha};
    try {
      y = rk4_step(deriv, y, t, scenario.dt);
    } catch (const NonFinite&) {
      trace.aborted_nonfinite = true;
      break;
    }
    if (!all_finite(y)) {
      trace.aborted_nonfinite = true;
      break;
    }
    st = {y[0], y[1], y[2], y[3]};
    held_noise = scenario.noise_std * gauss.next();
  }
  return trace;
}

namespace {

SimTrace run_dynamic(const PlantConfig& plant, const EsParams& controller,
                     const Scenario& scenario, std::optional<ControllerState> initial) {
  const double t_begin = controller.t0;
  const double t_end = effective_end_time(controller, scenario);
  check_resolution_guard(controller, scenario, t_end);
  const auto n_steps = static_cast<long>(std::llround((t_end - t_begin) / scenario.dt));
  if (n_steps < 1) throw InvalidArgument("run: duration shorter than one step");

  PlantConfig qs_cfg = plant;
  qs_cfg.mode = PlantMode::QuasiStatic;
  const QuasiStaticPlantMap oracle_map(qs_cfg);
  OracleCache oracle{oracle_map};

  GaussianStream gauss(scenario.rng_seed);
  double held_noise = scenario.noise_std * gauss.next();

  ControllerState st;
  DynamicPlantState ps;
  const Environment env0 = scenario.env_at(t_begin);
  if (initial) {
    st = *initial;
    ps = dynamic_equilibrium(plant, env0, applied_duty(controller, st, t_begin).duty);
  } else {
    st.d_hat = controller.d_hat0;
    st.g_hat = 0.0;
    st.alpha = controller.alpha0;
    const AppliedDuty d0 = applied_duty(controller, st, t_begin);
    ps = dynamic_equilibrium(plant, env0, d0.duty);
    const double v0 = voltage_at_current(plant.pv, env0, ps.inductor_current);
    st.eta = v0 * ps.inductor_current + held_noise;
  }

  const auto deriv = [&](double t, const std::array<double, 6>& y) -> std::array<double, 6> {
    const ControllerState cs{y[0], y[1], y[2], y[3]};
    const DynamicPlantState dps{y[4], y[5]};
    const Environment env = scenario.env_at(t);
    const AppliedDuty d = applied_duty(controller, cs, t);
    const double v = voltage_at_current(plant.pv, env, std::max(y[4], 0.0));
    const double measured = v * y[4] + held_noise;
    const ControllerState cd = derivatives(controller, cs, measured, t);
    const DynamicPlantState pd = dynamic_step_derivatives(plant, env, dps, d.duty);
    return {cd.d_hat, cd.g_hat, cd.eta, cd.alpha, pd.inductor_current, pd.output_voltage};
  };

  SimTrace trace;
  for (long i = 0; i <= n_steps; ++i) {
    const double t = t_begin + static_cast<double>(i) * scenario.dt;
    const Environment env = scenario.env_at(t);
    const AppliedDuty applied = applied_duty(controller, st, t);
    const double v = voltage_at_current(plant.pv, env, std::max(ps.inductor_current, 0.0));
    const double p_true = v * ps.inductor_current;
    push_row(trace, t, applied, st, p_true, env, oracle.at(env));
    if (i == n_steps) break;

    std::array<double, 6> y{st.d_hat, st.g_hat, st.eta, st.alpha,
                            ps.inductor_current, ps.output_voltage};
    try {
      y = rk4_step(deriv, y, t, scenario.dt);
    } catch (const NonFinite&) {
      trace.aborted_nonfinite = true;
      break;
    }
    if (!all_finite(y)) {
      trace.aborted_nonfinite = true;
      break;
    }
    st = {y[0], y[1], y[2], y[3]};
    ps = {y[4], y[5]};
    held_noise = scenario.noise_std * gauss.next();
  }
  return trace;
}

}  // namespace

SimTrace run(const PlantConfig& plant, const EsParams& controller,
             const Scenario& scenario, std::optional<ControllerState> initial) {
  plant.validate();
  controller.validate();
  scenario.validate();
  if (plant.mode == PlantMode::Dynamic) {
    return run_dynamic(plant, controller, scenario, initial);
  }
  return run_on_map(QuasiStaticPlantMap(plant), controller, scenario, initial);
}

Scenario shading_scenario(double g_base, double temperature, double dt) {
  Scenario sc;
  sc.duration = 180.0;
  sc.dt = dt;
  sc.noise_std = 0.0;
  sc.rng_seed = 1;
  sc.env_profile = {{0.0, g_base, temperature},
                    {40.0, g_base, temperature},
                    {115.0, 0.4 * g_base, temperature},
                    {180.0, g_base, temperature}};
  return sc;
}

SimTrace run_shading_scenario(const PlantConfig& plant, const EsParams& controller) {
  return run(plant, controller, shading_scenario());
}

MetricsReport compute_metrics(const SimTrace& trace, double epsilon) {
  const size_t n = trace.rows();
  if (n == 0) throw InvalidArgument("compute_metrics: empty trace");

  MetricsReport report;
  report.epsilon = epsilon;

  // first entry into the +-eps*P* band that is never left again
  size_t conv_idx = 0;
  bool any_violation = false;
  for (size_t i = n; i-- > 0;) {
    const double band = epsilon * trace.oracle_p_star[i];
    if (std::abs(trace.power[i] - trace.oracle_p_star[i]) > band) {
      conv_idx = i + 1;
      any_violation = true;
      break;
    }
  }
  if (any_violation && conv_idx >= n) {
    report.convergence_time = std::numeric_limits<double>::infinity();
  } else {
    report.convergence_time = trace.time[conv_idx] - trace.time.front();
  }

  const double t_window = trace.time.back() - 0.1 * (trace.time.back() - trace.time.front());
  double sum_d = 0.0;
  double min_d = std::numeric_limits<double>::infinity();
  double max_d = -std::numeric_limits<double>::infinity();
  size_t count = 0;
  for (size_t i = 0; i < n; ++i) {
    if (trace.time[i] < t_window) continue;
    sum_d += trace.duty_applied[i];
    min_d = std::min(min_d, trace.duty_applied[i]);
    max_d = std::max(max_d, trace.duty_applied[i]);
    ++count;
  }
  report.steady_bias = std::abs(sum_d / static_cast<double>(count) - trace.oracle_d_star.back());
  report.dither_amplitude_final = 0.5 * (max_d - min_d);

  double sq_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = trace.oracle_p_star[i] - trace.power[i];
    sq_sum += e * e;
  }
  report.tracking_rmse = std::sqrt(sq_sum / static_cast<double>(n));

  double energy = 0.0, energy_star = 0.0;
  for (size_t i = 1; i < n; ++i) {
    const double dt = trace.time[i] - trace.time[i - 1];
    energy += 0.5 * dt * (trace.power[i] + trace.power[i - 1]);
    energy_star += 0.5 * dt * (trace.oracle_p_star[i] + trace.oracle_p_star[i - 1]);
  }
  report.energy_captured_ratio = energy_star > 0.0 ? energy / energy_star : 1.0;
  return report;
}

double max_safe_stop_fraction(const EsParams& controller, double dt) {
  if (controller.variant != EsVariant::UnbiasedPT) return 1.0;
  if (!(dt > 0.0)) throw InvalidArgument("max_safe_stop_fraction: dt must be > 0");
  const double max_omega_eff = 2.0 * M_PI / (50.0 * dt);
  const double mu_max = std::pow(max_omega_eff / controller.omega, 1.0 / controller.pt_q);
  if (mu_max <= 1.0) return 0.0;
  return 1.0 - 1.0 / mu_max;
}

}  // namespace esmppt
