#ifndef ESMPPT_ANALYSIS_HPP
#define ESMPPT_ANALYSIS_HPP

#include <array>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "esmppt/es_controllers.hpp"

namespace esmppt {

// Outcome of the tuning-condition checks plus the averaged-system spectrum.
struct TuningReport {
  bool cond_13_ok = false;  // lambda < min(omega_l, omega_h) / 2
  bool cond_14_ok = false;  // k above the curvature-dependent lower bound
  std::vector<std::string> degeneracy_warnings;
  double h_used = 0.0;
  std::array<std::complex<double>, 4> jacobian_eigenvalues{};
  bool hurwitz = false;
};

struct RateFit {
  double fitted_rate = 0.0;  // 1/s
  double r_squared = 0.0;
  std::pair<double, double> window{0.0, 0.0};
};

// Evaluate the stability conditions for a curvature h < 0 and compute the
// averaged-Jacobian eigenvalues analytically: the 2x2 block
// [[lambda, k], [omega_l*h, lambda - omega_l]] plus (2*lambda - omega_h)
// and -lambda.
TuningReport check_conditions(const EsParams& params, double h);

// Equilibrium (d_tilde_f, g_hat_f, eta_tilde_f, alpha) of the averaged system
// on a quadratic map with curvature h.
struct AveragedEquilibrium {
  double d_tilde_f = 0.0;
  double g_hat_f = 0.0;
  double eta_tilde_f = 0.0;
  double alpha = 0.0;
};
AveragedEquilibrium averaged_equilibrium(const EsParams& params, double h);

// Right-hand side of the averaged dynamics specialized to the quadratic map
// nu(z) = (h/2) z^2, where the averaging integrals have closed forms. State
// order matches AveragedEquilibrium. Used as the integration oracle and as
// the finite-difference target for the Jacobian cross-check.
std::array<double, 4> averaged_quadratic_rhs(const EsParams& params, double h,
                                             const std::array<double, 4>& state);

// Least-squares slope of log|error| over [window.first, window.second];
// values are clipped below at 1e-15. Throws WindowTooShort under 10 samples.
RateFit fit_exponential_rate(std::span<const double> times,
                             std::span<const double> errors,
                             std::pair<double, double> window);

// Default fit window: from the first time |error| drops below half its
// initial value to the end of the trace.
std::pair<double, double> default_rate_window(std::span<const double> times,
                                              std::span<const double> errors);

// True when the |d_hat - d_star| error level at the stop time is within tol
// and no larger than the levels at the 0.5 and 0.75 horizon-fraction
// checkpoints. Levels are short-window maxima so that dither-ripple phase
// cannot decide the outcome once the error is far below tolerance.
bool prescribed_time_check(std::span<const double> times,
                           std::span<const double> d_hat, double d_star,
                           double t0, double horizon_T, double stop_fraction,
                           double tol);

}  // namespace esmppt

#endif
