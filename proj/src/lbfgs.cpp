#include "em/lbfgs.hpp"

#include <chrono>
#include <cmath>
#include <deque>

#include "em/error.hpp"

namespace em {

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_iters: return "max_iters";
    case StopReason::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Probe {
  double alpha = 0.0;
  double f = 0.0;
  double df = 0.0;  // directional derivative g(x + alpha d) . d
  bool finite = false;
  Eigen::VectorXd grad;
};

class LineSearch {
public:
  LineSearch(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& d, double f0,
             double df0, const LbfgsOptions& opts)
      : f_(f), x_(x), d_(d), f0_(f0), df0_(df0), c1_(opts.c1), c2_(opts.c2),
        budget_(opts.max_line_search) {}

  Probe zero() const {
    Probe p;
    p.f = f0_;
    p.df = df0_;
    p.finite = true;
    return p;
  }

  Probe eval(double alpha) {
    Probe p;
    p.alpha = alpha;
    if (budget_-- <= 0) return p;
    xt_ = x_ + alpha * d_;
    p.f = f_(xt_, p.grad);
    p.df = p.grad.dot(d_);
    p.finite = std::isfinite(p.f) && std::isfinite(p.df);
    return p;
  }

  bool sufficient_decrease(const Probe& p) const { return p.f <= f0_ + c1_ * p.alpha * df0_; }
  bool curvature(const Probe& p) const { return std::abs(p.df) <= -c2_ * df0_; }
  bool exhausted() const { return budget_ <= 0; }

private:
  const Objective& f_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& d_;
  double f0_, df0_, c1_, c2_;
  int budget_;
  Eigen::VectorXd xt_;
};

// Shrinks [lo, hi] until the strong-Wolfe pair holds at the midpoint.
// Invariants: lo is finite and satisfies sufficient decrease; the gradient at
// lo points toward hi; hi closes the bracket (violated decrease, higher f, or
// nonnegative slope). A non-finite midpoint only moves the hi endpoint.
Probe zoom(LineSearch& ls, Probe lo, double hi_alpha, double hi_f, bool hi_f_valid) {
  for (int it = 0; it < 48 && !ls.exhausted(); ++it) {
    if (std::abs(hi_alpha - lo.alpha) <= 1e-14 * std::max(1.0, std::abs(lo.alpha))) break;
    const double mid = 0.5 * (lo.alpha + hi_alpha);
    const Probe m = ls.eval(mid);
    if (!m.finite) {
      hi_alpha = mid;
      hi_f_valid = false;
      continue;
    }
    if (!ls.sufficient_decrease(m) || m.f >= lo.f) {
      hi_alpha = mid;
      hi_f = m.f;
      hi_f_valid = true;
    } else {
      if (ls.curvature(m)) return m;
      if (m.df * (hi_alpha - lo.alpha) >= 0.0) {
        hi_alpha = lo.alpha;
        hi_f = lo.f;
        hi_f_valid = true;
      }
      lo = m;
    }
  }
  (void)hi_f;
  (void)hi_f_valid;
  // Bracket collapsed without meeting the curvature test; settle for the best
  // sufficient-decrease point so the outer loop can finish monotonically.
  if (lo.alpha > 0.0 && lo.finite) return lo;
  Probe failed;
  return failed;
}

Probe wolfe_search(LineSearch& ls, double step0) {
  Probe prev = ls.zero();
  double alpha = step0;
  for (int round = 0; round < 64 && !ls.exhausted(); ++round) {
    const Probe cur = ls.eval(alpha);
    if (!cur.finite) {
      alpha = 0.5 * (prev.alpha + alpha);
      if (alpha <= 1e-300) break;
      continue;
    }
    if (!ls.sufficient_decrease(cur) || cur.f >= prev.f) {
      return zoom(ls, prev, cur.alpha, cur.f, true);
    }
    if (ls.curvature(cur)) return cur;
    if (cur.df >= 0.0) return zoom(ls, cur, prev.alpha, prev.f, true);
    prev = cur;
    alpha = std::min(2.0 * alpha, 1e12);
  }
  Probe failed;
  return failed;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t_start).count();
  };

  LbfgsResult res;
  Eigen::VectorXd g;
  double fx = f(x0, g);
  if (!std::isfinite(fx)) fail(Errc::non_finite_loss, "objective non-finite at the initial point");

  Eigen::VectorXd x = std::move(x0);
  res.history.push_back({0, fx, g.lpNorm<Eigen::Infinity>(), elapsed()});
  res.stop = StopReason::max_iters;

  std::deque<Eigen::VectorXd> s_mem, y_mem;
  std::deque<double> rho_mem;
  double best_recent = fx;
  int since_improve = 0;
  Eigen::VectorXd g_new;

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tolerance) {
      res.stop = StopReason::converged;
      break;
    }

    // Two-loop recursion for the search direction.
    Eigen::VectorXd d = -g;
    std::vector<double> alpha_mem(s_mem.size());
    for (int i = static_cast<int>(s_mem.size()) - 1; i >= 0; --i) {
      alpha_mem[i] = rho_mem[i] * s_mem[i].dot(d);
      d -= alpha_mem[i] * y_mem[i];
    }
    if (!s_mem.empty()) d *= s_mem.back().dot(y_mem.back()) / y_mem.back().squaredNorm();
    for (std::size_t i = 0; i < s_mem.size(); ++i) {
      const double beta = rho_mem[i] * y_mem[i].dot(d);
      d += (alpha_mem[i] - beta) * s_mem[i];
    }

    double df0 = g.dot(d);
    if (!(df0 < 0.0)) {  // defective curvature history: restart steepest descent
      d = -g;
      df0 = g.dot(d);
      s_mem.clear();
      y_mem.clear();
      rho_mem.clear();
    }

    LineSearch ls(f, x, d, fx, df0, opts);
    // The first direction is raw steepest descent with an arbitrary norm;
    // start that search from a step of length initial_step in parameter
    // space. Later iterations carry quasi-Newton scaling, so 1 is right.
    const double step0 = (iter == 1) ? opts.initial_step / std::max(d.norm(), 1e-12) : 1.0;
    const Probe accepted = wolfe_search(ls, step0);
    if (!accepted.finite || accepted.alpha <= 0.0 || accepted.f > fx) {
      res.stop = StopReason::line_search_failed;
      break;
    }

    const Eigen::VectorXd x_new = x + accepted.alpha * d;
    g_new = accepted.grad;

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_mem.push_back(std::move(s));
      y_mem.push_back(std::move(yv));
      rho_mem.push_back(1.0 / sy);
      if (static_cast<int>(s_mem.size()) > opts.memory) {
        s_mem.pop_front();
        y_mem.pop_front();
        rho_mem.pop_front();
      }
    }

    x = x_new;
    g = g_new;
    fx = accepted.f;
    res.iterations = iter;
    res.history.push_back({iter, fx, g.lpNorm<Eigen::Infinity>(), elapsed()});

    const double improve = (best_recent - fx) / std::max(std::abs(best_recent), 1e-300);
    if (improve > opts.loss_tolerance) {
      best_recent = fx;
      since_improve = 0;
    } else if (++since_improve >= opts.patience) {
      res.stop = StopReason::converged;
      break;
    }
  }

  res.x = std::move(x);
  res.loss = fx;
  res.wall_s = elapsed();
  return res;
}

}  // namespace em
