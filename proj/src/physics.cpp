#include "em/physics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace em {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::parse_error: return "ParseError";
    case Errc::dangling_reference: return "DanglingReference";
    case Errc::disconnected_graph: return "DisconnectedGraph";
    case Errc::degree_exceeded: return "DegreeExceeded";
    case Errc::geometry_mismatch: return "GeometryMismatch";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::nonpositive_temperature: return "NonpositiveTemperature";
    case Errc::out_of_table: return "OutOfTable";
    case Errc::order_out_of_range: return "OrderOutOfRange";
    case Errc::zero_total_width: return "ZeroTotalWidth";
    case Errc::degree_mismatch: return "DegreeMismatch";
    case Errc::out_of_domain: return "OutOfDomain";
    case Errc::invalid_architecture: return "InvalidArchitecture";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::line_search_failed: return "LineSearchFailed";
    case Errc::singular_system: return "SingularSystem";
    case Errc::step_too_large: return "StepTooLarge";
    case Errc::key_mismatch: return "KeyMismatch";
    case Errc::architecture_mismatch: return "ArchitectureMismatch";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

void MaterialParams::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      fail(Errc::invalid_spec, std::string("material.") + name + " must be > 0");
  };
  check(k_boltzmann, "k_boltzmann");
  check(e_charge, "e_charge");
  check(z_eff, "z_eff");
  check(e_activation_eV, "e_activation_eV");
  check(bulk_modulus, "bulk_modulus");
  check(d0_self_diffusion, "d0_self_diffusion");
  check(resistivity, "resistivity");
  check(atomic_volume, "atomic_volume");
  check(sigma_crit, "sigma_crit");
  check(c_v, "c_v");
}

void TemperatureModel::validate() const {
  if (!(T0 > 0.0)) fail(Errc::nonpositive_temperature, "temperature.T0 must be > 0");
  if (kind == TemperatureKind::sinusoidal) {
    if (amplitude < 0.0) fail(Errc::invalid_spec, "temperature.amplitude must be >= 0");
    if (!(T0 - amplitude > 0.0))
      fail(Errc::nonpositive_temperature, "temperature.T0 - amplitude must stay > 0");
  }
  if (kind == TemperatureKind::tabulated) {
    if (table.size() < 2) fail(Errc::invalid_spec, "temperature.table needs >= 2 entries");
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (!(table[i].second > 0.0))
        fail(Errc::nonpositive_temperature, "temperature.table entries must stay > 0");
      if (i > 0 && !(table[i].first > table[i - 1].first))
        fail(Errc::invalid_spec, "temperature.table times must be strictly increasing");
    }
  }
}

double temperature(double t, const TemperatureModel& model) {
  switch (model.kind) {
    case TemperatureKind::constant:
      return model.T0;
    case TemperatureKind::sinusoidal:
      return model.T0 + model.amplitude * std::sin(model.angular_rate * t);
    case TemperatureKind::tabulated: {
      const auto& tab = model.table;
      if (tab.empty() || t < tab.front().first || t > tab.back().first)
        fail(Errc::out_of_table, "temperature query t=" + std::to_string(t) + " outside table");
      auto it = std::lower_bound(tab.begin(), tab.end(), t,
                                 [](const auto& row, double v) { return row.first < v; });
      if (it == tab.begin()) return it->second;
      auto lo = std::prev(it);
      double f = (t - lo->first) / (it->first - lo->first);
      return lo->second + f * (it->second - lo->second);
    }
  }
  return model.T0;
}

double em_driving_force(double j, const MaterialParams& p) {
  return p.z_eff * p.e_charge * p.resistivity * j / p.atomic_volume;
}

double diffusivity(double T, const MaterialParams& p) {
  if (!(T > 0.0)) fail(Errc::nonpositive_temperature, "T=" + std::to_string(T));
  const double kT = p.k_boltzmann * T;
  const double e_a = p.e_activation_eV * p.e_charge;  // eV -> J
  const double d_a = p.d0_self_diffusion * std::exp(-e_a / kT);
  return d_a * p.bulk_modulus * p.atomic_volume / kT;
}

void ScalingFactors::validate() const {
  if (!(omega_x > 0.0) || !(omega_t > 0.0) || !(omega_sigma > 0.0))
    fail(Errc::invalid_spec, "scaling factors must be strictly positive");
}

}  // namespace em
