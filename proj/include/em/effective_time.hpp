#pragma once

#include <vector>

#include "em/physics.hpp"
#include "em/trial.hpp"

namespace em {

// Monotone map t -> T'(t) = int_0^t kappa(T(u)) / kappa0 du turning the
// time-varying-temperature problem into a constant-diffusivity one.
class EffectiveTimeMap {
public:
  EffectiveTimeMap(const TemperatureModel& temp, const MaterialParams& material, double kappa0,
                   double t_max, double rel_tol = 1e-8);

  double operator()(double t) const;
  double kappa0() const { return kappa0_; }
  double t_max() const { return ts_.back(); }

private:
  double kappa0_;
  std::vector<double> ts_;
  std::vector<double> tps_;    // cumulative integral at ts_
  std::vector<double> rates_;  // integrand kappa/kappa0 at ts_
};

double effective_time(double t, const TemperatureModel& temp, const MaterialParams& material,
                      double kappa0, double rel_tol = 1e-8);

// trial_eval at the remapped time; seg must carry kappa = map.kappa0().
double dynamic_stress(double x, double t, const SegmentContext& seg, const GradientSpec& grads,
                      const TrialConfig& cfg, const EffectiveTimeMap& map);

}  // namespace em
