#ifndef ESMPPT_ES_CONTROLLERS_HPP
#define ESMPPT_ES_CONTROLLERS_HPP

namespace esmppt {

enum class EsVariant { Classic, UnbiasedExp, UnbiasedPT };

// Tuning constants shared by all extremum-seeking variants. Fields that only
// matter for one variant (pt_*, beta) are ignored by the others.
struct EsParams {
  EsVariant variant = EsVariant::UnbiasedExp;
  double gain_k = 0.01;    // adaptation gain [1/s scale]
  double omega = 5.0;      // dither frequency [rad/s]
  double omega_h = 3.0;    // washout (high-pass) corner [rad/s]
  double omega_l = 3.0;    // demodulation low-pass corner [rad/s]
  double amp_a = 0.2;      // dither amplitude
  double lambda = 0.05;    // amplitude decay rate [1/s]
  double alpha0 = 1.0;     // initial amplitude scale
  double beta = 0.0;       // amplitude floor; 0 disables the floor
  double pt_q = 1.0;       // blow-up exponent, >= 1 (UnbiasedPT)
  double pt_horizon_T = 6.0;       // prescribed horizon [s] (UnbiasedPT)
  double pt_stop_fraction = 5.0 / 6.0;  // simulations stop at this horizon fraction
  double t0 = 0.0;         // controller start time [s]
  double d_hat0 = 0.1;     // initial duty estimate used for default states

  void validate() const;
};

// Live controller states in measurable coordinates.
struct ControllerState {
  double d_hat = 0.0;  // duty estimate
  double g_hat = 0.0;  // gradient estimate
  double eta = 0.0;    // washout-filtered power
  double alpha = 1.0;  // dither amplitude scale, > 0
};

struct DitherPair {
  double perturb = 0.0;  // added to the duty estimate
  double demod = 0.0;    // multiplies the filtered power error
};

struct AppliedDuty {
  double duty = 0.0;
  bool saturated = false;
};

inline constexpr double kDutyMin = 0.0;
inline constexpr double kDutyMax = 0.98;

// Blow-up scaling T / (T + t0 - t); diverges at the horizon t0 + T.
double mu(double t, double t0, double horizon_T);

// Closed-form amplitude of the prescribed-time decay law. UnbiasedPT only.
double alpha_pt_closed_form(const EsParams& params, double t);

// Perturbation/demodulation pair at time t. Constant-frequency sinusoids for
// Classic/UnbiasedExp, hyperbolic chirps for UnbiasedPT.
DitherPair dither_signals(const EsParams& params, double t);

// Dilated time in which the chirped system becomes a constant-frequency one.
double time_dilate(const EsParams& params, double t);

// Inverse of time_dilate; maps [t0, inf) back onto [t0, t0 + T).
double time_contract(const EsParams& params, double tau_check);

// Time derivative of the controller state given the measured power.
ControllerState derivatives(const EsParams& params, const ControllerState& state,
                            double measured_power, double t);

// d_hat + alpha * perturb saturated into [kDutyMin, kDutyMax].
AppliedDuty applied_duty(const EsParams& params, const ControllerState& state, double t);

}  // namespace esmppt

#endif
