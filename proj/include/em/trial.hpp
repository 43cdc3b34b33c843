#pragma once

#include <array>
#include <functional>
#include <vector>

#include "em/tree.hpp"

namespace em {

struct TrialConfig {
  int n_gauss = 8;        // quadrature order for the temporal convolution
  int n_reflections = 3;  // image terms n = 0 .. n_reflections-1
  double erfc_tolerance = 1e-12;

  void validate() const;
};

// Neumann data of one segment: boundary stress gradients at t = 0 and their
// time derivatives. Null derivative callables mean identically zero.
struct GradientSpec {
  double k0_prev = 0.0;
  double k0_next = 0.0;
  std::function<double(double)> d_prev;
  std::function<double(double)> d_next;
};

double erfc(double x);

// Heat-kernel primitive g(x,t) = 2 sqrt(kt/pi) exp(-x^2/(4kt)) - x erfc(x/(2 sqrt(kt))).
// Returns 0 at t <= 0 (continuous limit) and in the deep-underflow region.
double basis_g(double x, double t, double kappa);

struct GaussLegendre {
  std::vector<double> nodes;    // roots of P_n on (-1, 1), ascending
  std::vector<double> weights;  // positive, summing to 2
};
GaussLegendre gauss_legendre(int n);

// Initial boundary gradients at a node, one entry per incident segment slot:
// -G_b at terminals, otherwise -s_m * sum_j(s_j w_j G_j) / sum_j(w_j).
std::array<double, kMaxDegree> initial_gradient_J(const NodeContext& ctx);

// Completes the first M-1 gradient derivatives with the unique M-th value
// making sum_m s_m w_m d_m vanish; terminals get 0.
std::array<double, kMaxDegree> transform_H(const NodeContext& ctx, const double* d_first,
                                           int n_first);

// Row `slot` of the (linear) transform H as coefficients over its M-1 inputs.
std::array<double, kMaxDegree - 1> transform_H_row(const NodeContext& ctx, int slot);

// Quadrature-discretized structure of one evaluation point. The stress is
// affine in the boundary data:
//   sigma = b_prev k0_prev + b_next k0_next
//         + sum_q (c_prev[q] d_prev(tau[q]) + c_next[q] d_next(tau[q])).
struct EvalPlan {
  double t = 0.0;
  std::vector<double> tau;
  std::vector<double> c_prev;
  std::vector<double> c_next;
  double b_prev = 0.0;
  double b_next = 0.0;
};

EvalPlan plan_eval(double x, double t, const SegmentContext& seg, const TrialConfig& cfg);

double trial_eval(double x, double t, const SegmentContext& seg, const GradientSpec& grads,
                  const TrialConfig& cfg);

// Max |d sigma/dt - kappa d2 sigma/dx2| over the sample grid, by central
// differences on trial_eval (5-point in x, step hx; 2-point in t, step ht).
double pde_residual(const SegmentContext& seg, const GradientSpec& grads, const TrialConfig& cfg,
                    const std::vector<double>& xs, const std::vector<double>& ts, double hx,
                    double ht);

}  // namespace em
