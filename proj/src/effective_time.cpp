#include "em/effective_time.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "em/error.hpp"

namespace em {

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double tol = std::max(std::abs(whole) * rel_tol, 1e-300);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

EffectiveTimeMap::EffectiveTimeMap(const TemperatureModel& temp, const MaterialParams& material,
                                   double kappa0, double t_max, double rel_tol)
    : kappa0_(kappa0) {
  if (!(kappa0 > 0.0)) fail(Errc::invalid_spec, "kappa0 must be > 0");
  if (!(t_max > 0.0)) fail(Errc::invalid_spec, "t_max must be > 0");
  const auto rate = [&](double u) { return diffusivity(temperature(u, temp), material) / kappa0_; };

  // Knot count resolves the fastest temperature oscillation comfortably.
  int n = 1024;
  if (temp.kind == TemperatureKind::sinusoidal && temp.angular_rate > 0.0) {
    const double period = 2.0 * M_PI / temp.angular_rate;
    n = std::max(n, static_cast<int>(64.0 * t_max / period));
  }
  n = std::min(n, 1 << 16);

  ts_.resize(n + 1);
  tps_.resize(n + 1);
  rates_.resize(n + 1);
  ts_[0] = 0.0;
  tps_[0] = 0.0;
  rates_[0] = rate(0.0);
  const double h = t_max / n;
  double acc = 0.0;
  for (int i = 1; i <= n; ++i) {
    ts_[i] = i * h;
    const double piece = integrate(rate, ts_[i - 1], ts_[i], rel_tol * 1e-2);
    acc += piece;
    tps_[i] = acc;
    rates_[i] = rate(ts_[i]);
    if (!(tps_[i] > tps_[i - 1]))
      fail(Errc::invalid_spec, "effective time not strictly increasing near t=" +
                                   std::to_string(ts_[i]));
  }
}

double EffectiveTimeMap::operator()(double t) const {
  if (t < 0.0) fail(Errc::out_of_range, "t must be >= 0");
  if (t == 0.0) return 0.0;
  if (t > ts_.back() * (1.0 + 1e-12))
    fail(Errc::out_of_range, "t=" + std::to_string(t) + " beyond cached horizon");
  const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
  const std::size_t hi = std::min<std::size_t>(it - ts_.begin(), ts_.size() - 1);
  const std::size_t lo = hi - 1;
  const double h = ts_[hi] - ts_[lo];
  const double u = (t - ts_[lo]) / h;
  // Cubic Hermite in the cumulative integral; derivatives are the integrand.
  const double p0 = tps_[lo], p1 = tps_[hi];
  const double m0 = rates_[lo] * h, m1 = rates_[hi] * h;
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * p1 +
         (u3 - u2) * m1;
}

double effective_time(double t, const TemperatureModel& temp, const MaterialParams& material,
                      double kappa0, double rel_tol) {
  if (t < 0.0) fail(Errc::out_of_range, "t must be >= 0");
  if (t == 0.0) return 0.0;
  const auto rate = [&](double u) { return diffusivity(temperature(u, temp), material) / kappa0; };
  // Integrate piecewise so oscillatory profiles are resolved.
  int pieces = 16;
  if (temp.kind == TemperatureKind::sinusoidal && temp.angular_rate > 0.0) {
    const double period = 2.0 * M_PI / temp.angular_rate;
    pieces = std::max(pieces, static_cast<int>(16.0 * t / period));
  }
  pieces = std::min(pieces, 1 << 14);
  double acc = 0.0;
  for (int i = 0; i < pieces; ++i)
    acc += integrate(rate, t * i / pieces, t * (i + 1) / pieces, rel_tol * 1e-2);
  return acc;
}

double dynamic_stress(double x, double t, const SegmentContext& seg, const GradientSpec& grads,
                      const TrialConfig& cfg, const EffectiveTimeMap& map) {
  return trial_eval(x, map(t), seg, grads, cfg);
}

}  // namespace em
