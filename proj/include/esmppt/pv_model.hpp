#ifndef ESMPPT_PV_MODEL_HPP
#define ESMPPT_PV_MODEL_HPP

#include <vector>

namespace esmppt {

namespace constants {
// CODATA values; fixed here so golden numbers are reproducible.
inline constexpr double boltzmann = 1.380649e-23;           // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
}  // namespace constants

// Electrical constants of the single-diode cell model. Resistances enter the
// per-cell equation; series cells share one current and split the module
// voltage evenly. r_p = +inf is a valid sentinel that drops the shunt branch.
struct PvModuleParams {
  double i_sc_ref = 5.5;      // short-circuit current at reference [A]
  double i_0_ref = 1e-10;     // diode reverse saturation current at T_ref [A]
  double r_s = 0.5;           // series resistance [ohm]
  double r_p = 200.0;         // shunt resistance [ohm], may be +inf
  double n_ideality = 1.2;    // diode ideality factor
  double alpha_i = 0.0047;    // temperature coefficient of i_sc [A/K]
  double e_g = 1.121;         // bandgap energy [eV]
  int n_series_cells = 60;
  double g_ref = 1000.0;      // reference irradiance [W/m^2]
  double t_ref = 298.15;      // reference temperature [K]

  void validate() const;  // throws InvalidArgument
};

struct Environment {
  double irradiance = 1000.0;   // W/m^2
  double temperature = 298.15;  // K

  void validate() const;
};

struct IvPoint {
  double voltage = 0.0;  // module terminal voltage [V]
  double current = 0.0;  // A
  double power = 0.0;    // W, always voltage * current
};

// k_B * T / q
double thermal_voltage(double temperature);

// (i_sc_ref + alpha_i * (T - T_ref)) * G / G_ref
double photo_current(const PvModuleParams& params, const Environment& env);

// i_0_ref * (T/T_ref)^3 * exp((q*E_g/(n*k_B)) * (1/T_ref - 1/T))
double saturation_current(const PvModuleParams& params, double temperature);

// Residual of the implicit diode equation at (module_voltage, current).
// Zero at the solution; exposed so tests can check solver tolerance.
double diode_residual(const PvModuleParams& params, const Environment& env,
                      double module_voltage, double current);

// Solve the implicit I-V relation for current at a module voltage >= 0.
// Damped Newton from I = I_ph; |residual| <= 1e-10 A guaranteed on success.
double solve_current(const PvModuleParams& params, const Environment& env,
                     double module_voltage);

// Module voltage at which current crosses zero (0 when there is no
// photocurrent). Bisection against solve_current.
double open_circuit_voltage(const PvModuleParams& params, const Environment& env);

// Inverse of the I-V curve: module voltage at a given current, clamped to
// [0, V_oc]. Scalar Newton on the junction voltage; no nested current solve.
double voltage_at_current(const PvModuleParams& params, const Environment& env,
                          double current);

// Uniform voltage grid from 0 to V_oc, n_points >= 2.
std::vector<IvPoint> pv_curve(const PvModuleParams& params, const Environment& env,
                              int n_points);

// Ground-truth maximum power point: 1024-point grid scan plus golden-section
// refinement to 1e-6 V. Returned power >= power of every grid point.
IvPoint mpp_oracle(const PvModuleParams& params, const Environment& env);

}  // namespace esmppt

#endif
