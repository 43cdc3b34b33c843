#pragma once

#include <functional>
#include <vector>

#include "em/stress_field.hpp"
#include "em/tree.hpp"

namespace em {

struct FdmConfig {
  double dx_target = 1e-7;  // per-segment pitch = L / ceil(L / dx_target)
  double dt_initial = 5.0;
  double dt_growth = 1.05;  // geometric schedule
  double dt_max = 1e6;
  double t_end = 1e8;

  void validate() const;
};

// Backward-Euler reference solve over the whole tree. One linear system per
// step: interior rows carry the 3-point diffusion stencil, terminal rows a
// ghost-point zero-flux closure, junction rows a width-weighted discrete
// flux balance on the shared unknown.
struct FdmRun {
  StressField field;
  std::vector<double> step_times;
  std::vector<double> max_sigma;        // running max over the grid, per step
  std::vector<double> mass_residual;    // |sum_i w_i int sigma| / sum_i w_i int |sigma|
  std::vector<double> flux_residual;    // worst junction row residual, relative
};

// kappa_of_t overrides the per-segment diffusivity when non-null (shared by
// all segments, evaluated at the end of each implicit step).
FdmRun fdm_solve(const InterconnectTree& tree, const TreeContexts& ctx, const FdmConfig& cfg,
                 const std::vector<double>& probe_times,
                 const std::vector<double>& probe_fractions,
                 const std::function<double(double)>& kappa_of_t = {});

}  // namespace em
