#include "em/trial.hpp"

#include <cmath>
#include <string>

namespace em {

void TrialConfig::validate() const {
  if (n_gauss < 1 || n_gauss > 64)
    fail(Errc::order_out_of_range, "n_gauss " + std::to_string(n_gauss) + " outside [1, 64]");
  if (n_reflections < 1 || n_reflections > 16)
    fail(Errc::invalid_spec,
         "n_reflections " + std::to_string(n_reflections) + " outside [1, 16]");
  if (!(erfc_tolerance > 0.0)) fail(Errc::invalid_spec, "erfc_tolerance must be > 0");
}

double erfc(double x) { return std::erfc(x); }

double basis_g(double x, double t, double kappa) {
  if (!(t > 0.0)) return 0.0;
  const double kt = kappa * t;
  const double root = std::sqrt(kt);
  const double u = x / (2.0 * root);
  if (u > 6.0) return 0.0;  // both terms below double noise past here
  return 2.0 * std::sqrt(kt / M_PI) * std::exp(-u * u) - x * erfc(u);
}

namespace {

double legendre_p(int n, double x, double* dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    if (dp) *dp = 0.0;
    return 1.0;
  }
  double d1 = 1.0;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
  d1 = n * (x * p1 - p0) / (x * x - 1.0);
  if (dp) *dp = d1;
  return p1;
}

}  // namespace

GaussLegendre gauss_legendre(int n) {
  if (n < 1 || n > 64)
    fail(Errc::order_out_of_range, "order " + std::to_string(n) + " outside [1, 64]");
  GaussLegendre out;
  out.nodes.resize(n);
  out.weights.resize(n);
  if (n == 1) {
    out.nodes[0] = 0.0;
    out.weights[0] = 2.0;
    return out;
  }
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-based initial guess for the i-th root, then Newton.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = legendre_p(n, x, &dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double p_unused = legendre_p(n, x, &dp);
    (void)p_unused;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out.nodes[i] = -std::abs(x);
    out.weights[i] = w;
    out.nodes[n - 1 - i] = std::abs(x);
    out.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    out.nodes[half - 1] = 0.0;
    double dp = 0.0;
    legendre_p(n, 0.0, &dp);
    out.weights[half - 1] = 2.0 / (dp * dp);
  }
  return out;
}

std::array<double, kMaxDegree> initial_gradient_J(const NodeContext& ctx) {
  std::array<double, kMaxDegree> k{};
  if (ctx.degree == 1) {
    k[0] = -ctx.adj_G[0];
    return k;
  }
  double num = 0.0, den = 0.0;
  for (int m = 0; m < ctx.degree; ++m) {
    num += ctx.signs[m] * ctx.adj_w[m] * ctx.adj_G[m];
    den += ctx.adj_w[m];
  }
  if (!(den > 0.0)) fail(Errc::zero_total_width, "node " + std::to_string(ctx.node_id));
  for (int m = 0; m < ctx.degree; ++m) k[m] = -ctx.signs[m] * num / den;
  return k;
}

std::array<double, kMaxDegree> transform_H(const NodeContext& ctx, const double* d_first,
                                           int n_first) {
  std::array<double, kMaxDegree> d{};
  if (ctx.degree == 1) {
    if (n_first != 0)
      fail(Errc::degree_mismatch, "terminal node takes 0 inputs, got " + std::to_string(n_first));
    return d;
  }
  if (n_first != ctx.degree - 1)
    fail(Errc::degree_mismatch, "node of degree " + std::to_string(ctx.degree) + " takes " +
                                    std::to_string(ctx.degree - 1) + " inputs, got " +
                                    std::to_string(n_first));
  double acc = 0.0;
  for (int m = 0; m < ctx.degree - 1; ++m) {
    d[m] = d_first[m];
    acc += ctx.signs[m] * ctx.adj_w[m] * d_first[m];
  }
  const int last = ctx.degree - 1;
  d[last] = -ctx.signs[last] / ctx.adj_w[last] * acc;
  return d;
}

std::array<double, kMaxDegree - 1> transform_H_row(const NodeContext& ctx, int slot) {
  std::array<double, kMaxDegree - 1> row{};
  if (ctx.degree == 1) return row;
  if (slot < 0 || slot >= ctx.degree)
    fail(Errc::degree_mismatch, "slot " + std::to_string(slot) + " at node of degree " +
                                    std::to_string(ctx.degree));
  if (slot < ctx.degree - 1) {
    row[slot] = 1.0;
    return row;
  }
  const int last = ctx.degree - 1;
  for (int p = 0; p < last; ++p)
    row[p] = -ctx.signs[last] / ctx.adj_w[last] * ctx.signs[p] * ctx.adj_w[p];
  return row;
}

namespace {

// Image arguments of the reflected heat kernels for one segment.
inline double xi1(int n, double x, double L) { return (2.0 * n + 2.0) * L - x; }
inline double xi2(int n, double x, double L) { return (2.0 * n + 1.0) * L - x; }
inline double xi3(int n, double x, double L) { return 2.0 * n * L + x; }
inline double xi4(int n, double x, double L) { return (2.0 * n + 1.0) * L + x; }

}  // namespace

EvalPlan plan_eval(double x, double t, const SegmentContext& seg, const TrialConfig& cfg) {
  cfg.validate();
  if (!(x >= 0.0 && x <= seg.L * (1.0 + 1e-12)))
    fail(Errc::out_of_domain, "x=" + std::to_string(x) + " outside [0, L]");
  if (t < 0.0) fail(Errc::out_of_domain, "t=" + std::to_string(t) + " negative");

  EvalPlan plan;
  plan.t = t;
  if (t == 0.0) return plan;  // zero initial condition

  const double L = seg.L;
  const double kappa = seg.kappa;
  for (int n = 0; n < cfg.n_reflections; ++n) {
    plan.b_prev -= basis_g(xi1(n, x, L), t, kappa) + basis_g(xi3(n, x, L), t, kappa);
    plan.b_next += basis_g(xi2(n, x, L), t, kappa) + basis_g(xi4(n, x, L), t, kappa);
  }

  const GaussLegendre gl = gauss_legendre(cfg.n_gauss);
  plan.tau.resize(cfg.n_gauss);
  plan.c_prev.assign(cfg.n_gauss, 0.0);
  plan.c_next.assign(cfg.n_gauss, 0.0);
  for (int q = 0; q < cfg.n_gauss; ++q) {
    const double tau = 0.5 * t * (1.0 + gl.nodes[q]);
    const double rem = t - tau;  // kernel age t - tau
    const double wq = 0.5 * t * gl.weights[q];
    plan.tau[q] = tau;
    double sum13 = 0.0, sum24 = 0.0;
    for (int n = 0; n < cfg.n_reflections; ++n) {
      sum13 += basis_g(xi1(n, x, L), rem, kappa) + basis_g(xi3(n, x, L), rem, kappa);
      sum24 += basis_g(xi2(n, x, L), rem, kappa) + basis_g(xi4(n, x, L), rem, kappa);
    }
    plan.c_prev[q] = -wq * sum13;
    plan.c_next[q] = wq * sum24;
  }
  return plan;
}

double trial_eval(double x, double t, const SegmentContext& seg, const GradientSpec& grads,
                  const TrialConfig& cfg) {
  const EvalPlan plan = plan_eval(x, t, seg, cfg);
  if (t == 0.0) return 0.0;
  double sigma = plan.b_prev * grads.k0_prev + plan.b_next * grads.k0_next;
  for (std::size_t q = 0; q < plan.tau.size(); ++q) {
    if (grads.d_prev) sigma += plan.c_prev[q] * grads.d_prev(plan.tau[q]);
    if (grads.d_next) sigma += plan.c_next[q] * grads.d_next(plan.tau[q]);
  }
  return sigma;
}

double pde_residual(const SegmentContext& seg, const GradientSpec& grads, const TrialConfig& cfg,
                    const std::vector<double>& xs, const std::vector<double>& ts, double hx,
                    double ht) {
  double worst = 0.0;
  const auto eval = [&](double x, double t) { return trial_eval(x, t, seg, grads, cfg); };
  for (double t : ts) {
    for (double x : xs) {
      const double sxx = (-eval(x + 2 * hx, t) + 16 * eval(x + hx, t) - 30 * eval(x, t) +
                          16 * eval(x - hx, t) - eval(x - 2 * hx, t)) /
                         (12.0 * hx * hx);
      const double st = (eval(x, t + ht) - eval(x, t - ht)) / (2.0 * ht);
      worst = std::max(worst, std::abs(st - seg.kappa * sxx));
    }
  }
  return worst;
}

}  // namespace em
