#include "esmppt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "esmppt/errors.hpp"

namespace esmppt {

TuningReport check_conditions(const EsParams& params, double h) {
  if (!(h < 0.0)) throw DomainError("check_conditions: curvature h must be < 0");

  const double lambda = params.lambda;
  const double wl = params.omega_l;
  const double wh = params.omega_h;
  const double k = params.gain_k;

  TuningReport report;
  report.h_used = h;
  report.cond_13_ok = lambda < 0.5 * std::min(wl, wh);
  const double k_bound = (wl - lambda) * (lambda / wl) * (1.0 / -h);
  report.cond_14_ok = k > k_bound;

  // uniqueness conditions for the averaged equilibrium
  if (wl == lambda) {
    report.degeneracy_warnings.push_back("omega_l equals lambda");
  }
  if (wh == 2.0 * lambda) {
    report.degeneracy_warnings.push_back("omega_h equals 2*lambda");
  }
  const double trace = 2.0 * lambda - wl;
  const double det = lambda * (lambda - wl) - k * wl * h;
  if (det == 0.0) {
    report.degeneracy_warnings.push_back("gain_k sits on the singular 2x2-block boundary");
  }

  const double disc = trace * trace - 4.0 * det;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    report.jacobian_eigenvalues[0] = {0.5 * (trace + root), 0.0};
    report.jacobian_eigenvalues[1] = {0.5 * (trace - root), 0.0};
  } else {
    const double imag = 0.5 * std::sqrt(-disc);
    report.jacobian_eigenvalues[0] = {0.5 * trace, imag};
    report.jacobian_eigenvalues[1] = {0.5 * trace, -imag};
  }
  report.jacobian_eigenvalues[2] = {2.0 * lambda - wh, 0.0};
  report.jacobian_eigenvalues[3] = {-lambda, 0.0};

  report.hurwitz = std::all_of(report.jacobian_eigenvalues.begin(),
                               report.jacobian_eigenvalues.end(),
                               [](const std::complex<double>& z) { return z.real() < 0.0; });
  return report;
}

AveragedEquilibrium averaged_equilibrium(const EsParams& params, double h) {
  const double lambda = params.lambda;
  const double wh = params.omega_h;
  if (wh == 2.0 * lambda) {
    throw DegenerateParameters("averaged_equilibrium: omega_h equals 2*lambda");
  }
  AveragedEquilibrium eq;
  eq.eta_tilde_f = wh * h * params.amp_a * params.amp_a / (4.0 * (wh - 2.0 * lambda));
  return eq;
}

std::array<double, 4> averaged_quadratic_rhs(const EsParams& params, double h,
                                             const std::array<double, 4>& state) {
  const double lambda = params.lambda;
  const double wl = params.omega_l;
  const double wh = params.omega_h;
  const double a = params.amp_a;
  const double d_f = state[0];
  const double g_f = state[1];
  const double eta_f = state[2];
  const double alpha = state[3];

  // For nu(z) = (h/2) z^2 the dither averages reduce to:
  //   <nu * (2/a) sin> / alpha^2 = h * d_f
  //   <nu> / alpha^2             = (h/2) * (d_f^2 + a^2/2)
  return {
      lambda * d_f + params.gain_k * g_f,
      (lambda - wl) * g_f + wl * h * d_f,
      (2.0 * lambda - wh) * eta_f + wh * 0.5 * h * (d_f * d_f + 0.5 * a * a),
      -lambda * alpha,
  };
}

RateFit fit_exponential_rate(std::span<const double> times,
                             std::span<const double> errors,
                             std::pair<double, double> window) {
  if (times.size() != errors.size()) {
    throw InvalidArgument("fit_exponential_rate: times/errors length mismatch");
  }
  if (!(window.first < window.second)) {
    throw InvalidArgument("fit_exponential_rate: empty window");
  }
  double sum_t = 0.0, sum_y = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.first || times[i] > window.second) continue;
    sum_t += times[i];
    sum_y += std::log(std::max(errors[i], 1e-15));
    ++n;
  }
  if (n < 10) {
    throw WindowTooShort("fit_exponential_rate: fewer than 10 samples in window");
  }
  const double mean_t = sum_t / static_cast<double>(n);
  const double mean_y = sum_y / static_cast<double>(n);
  double s_tt = 0.0, s_ty = 0.0, s_yy = 0.0;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.first || times[i] > window.second) continue;
    const double dt = times[i] - mean_t;
    const double dy = std::log(std::max(errors[i], 1e-15)) - mean_y;
    s_tt += dt * dt;
    s_ty += dt * dy;
    s_yy += dy * dy;
  }
  RateFit fit;
  fit.window = window;
  const double slope = s_ty / s_tt;
  fit.fitted_rate = -slope;
  if (s_yy <= 0.0) {
    fit.r_squared = 1.0;  // constant trace: the zero-slope fit is exact
  } else {
    fit.r_squared = std::clamp(s_ty * s_ty / (s_tt * s_yy), 0.0, 1.0);
  }
  return fit;
}

std::pair<double, double> default_rate_window(std::span<const double> times,
                                              std::span<const double> errors) {
  if (times.empty() || times.size() != errors.size()) {
    throw InvalidArgument("default_rate_window: bad trace");
  }
  const double half = 0.5 * errors.front();
  double start = times.front();
  for (size_t i = 0; i < times.size(); ++i) {
    if (errors[i] < half) {
      start = times[i];
      break;
    }
  }
  return {start, times.back()};
}

namespace {

// Error level at time t: the max of |d_hat - d_star| over a short trailing
// window (2% of the horizon). A pointwise sample would compare dither-ripple
// phases instead of envelopes once the error is far below tolerance.
double error_level(std::span<const double> times, std::span<const double> d_hat,
                   double d_star, double t, double width) {
  double level = 0.0;
  bool found = false;
  size_t last_at_or_before = 0;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] > t) break;
    last_at_or_before = i;
    if (times[i] >= t - width) {
      level = std::max(level, std::abs(d_hat[i] - d_star));
      found = true;
    }
  }
  if (!found) level = std::abs(d_hat[last_at_or_before] - d_star);
  return level;
}

}  // namespace

bool prescribed_time_check(std::span<const double> times,
                           std::span<const double> d_hat, double d_star,
                           double t0, double horizon_T, double stop_fraction,
                           double tol) {
  if (times.empty() || times.size() != d_hat.size()) return false;
  const double width = 0.02 * horizon_T;
  const double t_stop = t0 + stop_fraction * horizon_T;
  const double err_stop = error_level(times, d_hat, d_star, t_stop, width);
  if (err_stop > tol) return false;
  for (double fraction : {0.5, 0.75}) {
    const double t_check = t0 + fraction * horizon_T;
    if (t_check >= t_stop) continue;
    if (err_stop > error_level(times, d_hat, d_star, t_check, width)) return false;
  }
  return true;
}

}  // namespace esmppt
