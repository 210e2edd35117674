#include "esmppt/es_controllers.hpp"

#include <cmath>
#include <string>

#include "esmppt/errors.hpp"

namespace esmppt {

void EsParams::validate() const {
  if (!(gain_k > 0.0)) throw InvalidArgument("es: gain_k must be > 0");
  if (!(omega > 0.0)) throw InvalidArgument("es: omega must be > 0");
  if (!(omega_h > 0.0)) throw InvalidArgument("es: omega_h must be > 0");
  if (!(omega_l > 0.0)) throw InvalidArgument("es: omega_l must be > 0");
  if (!(amp_a > 0.0)) throw InvalidArgument("es: amp_a must be > 0");
  if (!(alpha0 > 0.0)) throw InvalidArgument("es: alpha0 must be > 0");
  if (!(beta >= 0.0)) throw InvalidArgument("es: beta must be >= 0");
  if (variant == EsVariant::Classic) {
    if (!(lambda >= 0.0)) throw InvalidArgument("es: lambda must be >= 0");
  } else {
    if (!(lambda > 0.0)) throw InvalidArgument("es: lambda must be > 0");
  }
  if (variant == EsVariant::UnbiasedPT) {
    if (!(pt_q >= 1.0)) throw InvalidArgument("es: pt_q must be >= 1");
    if (!(pt_horizon_T > 0.0)) throw InvalidArgument("es: pt_horizon_T must be > 0");
    if (!(pt_stop_fraction > 0.0) || !(pt_stop_fraction < 1.0)) {
      throw InvalidArgument("es: pt_stop_fraction must lie in (0, 1)");
    }
  }
  if (!(d_hat0 >= kDutyMin) || !(d_hat0 <= kDutyMax)) {
    throw InvalidArgument("es: d_hat0 must lie in the duty range");
  }
}

double mu(double t, double t0, double horizon_T) {
  if (!(horizon_T > 0.0)) throw InvalidArgument("mu: horizon_T must be > 0");
  if (t < t0 || t >= t0 + horizon_T) {
    throw DomainError("mu: t outside [t0, t0 + T), t=" + std::to_string(t));
  }
  return horizon_T / (horizon_T + t0 - t);
}

double alpha_pt_closed_form(const EsParams& params, double t) {
  const double m = mu(t, params.t0, params.pt_horizon_T);
  const double lt = params.lambda * params.pt_horizon_T;
  if (params.pt_q == 1.0) {
    return params.alpha0 * std::pow(m, -lt);
  }
  return params.alpha0 *
         std::exp(-lt / (params.pt_q - 1.0) * (std::pow(m, params.pt_q - 1.0) - 1.0));
}

namespace {

// Phase argument of the prescribed-time chirp; coincides with the dilated
// time expressed through the blow-up scaling.
double chirp_time(const EsParams& params, double m) {
  if (params.pt_q == 1.0) {
    return params.t0 + params.pt_horizon_T * std::log(m);
  }
  return params.t0 +
         params.pt_horizon_T * (std::pow(m, params.pt_q - 1.0) - 1.0) / (params.pt_q - 1.0);
}

}  // namespace

DitherPair dither_signals(const EsParams& params, double t) {
  if (params.variant == EsVariant::UnbiasedPT) {
    const double m = mu(t, params.t0, params.pt_horizon_T);
    const double s = std::sin(params.omega * chirp_time(params, m));
    return {params.amp_a * s, 2.0 / params.amp_a * s};
  }
  const double s = std::sin(params.omega * t);
  return {params.amp_a * s, 2.0 / params.amp_a * s};
}

double time_dilate(const EsParams& params, double t) {
  const double m = mu(t, params.t0, params.pt_horizon_T);
  if (params.pt_q == 1.0) {
    return params.t0 + params.pt_horizon_T * std::log(m);
  }
  return params.t0 +
         params.pt_horizon_T * (std::pow(m, params.pt_q - 1.0) - 1.0) / (params.pt_q - 1.0);
}

double time_contract(const EsParams& params, double tau_check) {
  if (tau_check < params.t0) {
    throw DomainError("time_contract: tau_check must be >= t0");
  }
  const double T = params.pt_horizon_T;
  const double shifted = tau_check - params.t0;
  if (params.pt_q == 1.0) {
    return params.t0 + T * (1.0 - std::exp(-shifted / T));
  }
  const double base = T / (T + (params.pt_q - 1.0) * shifted);
  return params.t0 + T * (1.0 - std::pow(base, 1.0 / (params.pt_q - 1.0)));
}

ControllerState derivatives(const EsParams& params, const ControllerState& state,
                            double measured_power, double t) {
  const DitherPair dither = dither_signals(params, t);

  double scale = 1.0;
  if (params.variant == EsVariant::UnbiasedPT) {
    scale = std::pow(mu(t, params.t0, params.pt_horizon_T), params.pt_q);
  }

  ControllerState deriv;
  deriv.d_hat = params.gain_k * state.g_hat * scale;
  deriv.g_hat = (-params.omega_l * state.g_hat +
                 params.omega_l * (measured_power - state.eta) / state.alpha * dither.demod) *
                scale;
  deriv.eta = (-params.omega_h * state.eta + params.omega_h * measured_power) * scale;
  switch (params.variant) {
    case EsVariant::Classic:
      deriv.alpha = 0.0;
      break;
    case EsVariant::UnbiasedExp:
      deriv.alpha = -params.lambda * state.alpha + params.lambda * params.beta;
      break;
    case EsVariant::UnbiasedPT:
      deriv.alpha = -params.lambda * scale * state.alpha;
      break;
  }
  if (!std::isfinite(deriv.d_hat) || !std::isfinite(deriv.g_hat) ||
      !std::isfinite(deriv.eta) || !std::isfinite(deriv.alpha)) {
    throw NonFinite("derivatives: non-finite controller derivative at t=" +
                    std::to_string(t));
  }
  return deriv;
}

AppliedDuty applied_duty(const EsParams& params, const ControllerState& state, double t) {
  const double raw = state.d_hat + state.alpha * dither_signals(params, t).perturb;
  if (raw < kDutyMin) return {kDutyMin, true};
  if (raw > kDutyMax) return {kDutyMax, true};
  return {raw, false};
}

}  // namespace esmppt
