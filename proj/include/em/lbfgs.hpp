#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace em {

enum class StopReason { converged, max_iters, line_search_failed };

const char* stop_reason_name(StopReason r);

struct LbfgsOptions {
  int max_iters = 2000;
  int memory = 8;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  double grad_tolerance = 1e-8;   // on the gradient inf-norm
  double loss_tolerance = 1e-10;  // relative change over `patience` accepted steps
  int patience = 20;
  double initial_step = 1e-3;  // trial step of the very first line search
  int max_line_search = 30;
};

struct LbfgsHistoryRow {
  int iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // inf-norm
  double wall_s = 0.0;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double loss = 0.0;
  int iterations = 0;
  StopReason stop = StopReason::converged;
  std::vector<LbfgsHistoryRow> history;
  double wall_s = 0.0;
};

// f(x, grad_out) -> loss; grad_out is resized by the callee.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts);

}  // namespace em
