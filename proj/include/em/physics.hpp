#pragma once

#include <utility>
#include <vector>

#include "em/error.hpp"

namespace em {

// Material constants for the stress model. Defaults are typical copper
// interconnect values; all fields must be strictly positive.
struct MaterialParams {
  double k_boltzmann = 1.38e-23;      // J/K
  double e_charge = 1.6e-19;          // C
  double z_eff = 10.0;                // effective charge number |Z*|
  double e_activation_eV = 1.1;       // activation energy, eV
  double bulk_modulus = 1e11;         // effective bulk modulus B, Pa
  double d0_self_diffusion = 5.2e-5;  // D0, m^2/s
  double resistivity = 2.2e-8;        // Ohm*m
  double atomic_volume = 8.78e-30;    // m^3
  double sigma_crit = 4e8;            // critical tensile stress, Pa
  double c_v = 8.49e28;               // atoms per m^3; flux reporting only

  void validate() const;
};

enum class TemperatureKind { constant, sinusoidal, tabulated };

// T(t) model. Sinusoidal: T0 + amplitude * sin(angular_rate * t).
// Tabulated: piecewise-linear through (t, T) points sorted by t.
struct TemperatureModel {
  TemperatureKind kind = TemperatureKind::constant;
  double T0 = 350.0;          // K
  double amplitude = 0.0;     // K
  double angular_rate = 0.0;  // rad/s
  std::vector<std::pair<double, double>> table;

  void validate() const;
};

double temperature(double t, const TemperatureModel& model);

// EM driving force G = |Z*| e rho j / Omega, signed with j. Pa/m.
double em_driving_force(double j, const MaterialParams& p);

// Stress diffusivity kappa = D0 exp(-Ea/(kT)) * B * Omega / (kT). m^2/s.
double diffusivity(double T, const MaterialParams& p);

// Normalization constants mapping SI quantities to O(1)-O(1e2) ranges for
// network inputs. omega_x is a reference length in meters; omega_t and
// omega_sigma are reciprocal references: scaled t = t * omega_t, scaled
// sigma = sigma * omega_sigma, scaled x = x / omega_x. All-identity factors
// leave every quantity unchanged.
struct ScalingFactors {
  double omega_x = 1e-5;      // m
  double omega_t = 1e-7;      // 1/s
  double omega_sigma = 1e-7;  // 1/Pa

  void validate() const;

  double scale_x(double x) const { return x / omega_x; }
  double unscale_x(double x) const { return x * omega_x; }
  double scale_t(double t) const { return t * omega_t; }
  double unscale_t(double t) const { return t / omega_t; }
  double scale_sigma(double s) const { return s * omega_sigma; }
  double unscale_sigma(double s) const { return s / omega_sigma; }
  // Induced maps keeping the diffusion equation form-invariant.
  double scale_kappa(double k) const { return k / (omega_t * omega_x * omega_x); }
  double scale_gradient(double g) const { return g * omega_x * omega_sigma; }
  double unscale_gradient(double g) const { return g / (omega_x * omega_sigma); }
};

}  // namespace em
