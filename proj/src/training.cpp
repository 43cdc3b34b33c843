#include "em/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <string>

#include "em/rng.hpp"

namespace em {

void TrainingConfig::validate() const {
  if (n_c < 1) fail(Errc::invalid_spec, "training.n_c must be >= 1");
  if (!(t_steady > 0.0)) fail(Errc::invalid_spec, "training.t_steady must be > 0");
  if (max_iters < 0) fail(Errc::invalid_spec, "training.max_iters must be >= 0");
  if (lbfgs_memory < 3 || lbfgs_memory > 20)
    fail(Errc::invalid_spec, "training.lbfgs_memory must be in [3, 20]");
  if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
    fail(Errc::invalid_spec, "training requires 0 < c1 < c2 < 1");
  if (hidden_layers < 1 || hidden_width < 1)
    fail(Errc::invalid_spec, "training.hidden_layers and hidden_width must be >= 1");
}

int mlp_input_dim(bool extended) { return extended ? 15 : 7; }

void fill_mlp_input(double* dst, const NodeContext& node, double tau, bool extended) {
  dst[0] = tau;
  dst[1] = node.coord.x;
  dst[2] = node.coord.y;
  for (int m = 0; m < kMaxDegree; ++m) dst[3 + m] = node.adj_G[m];
  if (extended) {
    for (int m = 0; m < kMaxDegree; ++m) {
      dst[7 + 2 * m] = node.adj_coord[m].x;
      dst[8 + 2 * m] = node.adj_coord[m].y;
    }
  }
}

std::vector<int> mlp_layer_sizes(const TrainingConfig& cfg) {
  std::vector<int> sizes;
  sizes.push_back(mlp_input_dim(cfg.mode == TrainMode::parameterized || cfg.extended_inputs));
  for (int i = 0; i < cfg.hidden_layers; ++i) sizes.push_back(cfg.hidden_width);
  sizes.push_back(kMaxDegree - 1);
  return sizes;
}

std::vector<ContinuityPair> build_training_set(const TreeContexts& ctx,
                                               const TrainingConfig& cfg) {
  cfg.validate();
  std::vector<ContinuityPair> out;
  Rng rng(cfg.seed);
  for (int nid : ctx.interior_junctions) {
    const NodeContext& node = ctx.nodes[nid];
    // Stratified log-uniform draws over [1e-4 T, T], one per log-equal
    // stratum, with the horizon endpoint always present: the trial function
    // at T integrates the derivatives over the whole window, so leaving the
    // top fraction unsampled lets them drift unconstrained right where the
    // late probes evaluate.
    std::vector<double> times(cfg.n_c);
    const double lo = 1e-4 * cfg.t_steady;
    const double span = cfg.t_steady / lo;
    times.back() = cfg.t_steady;
    const int n_random = cfg.n_c - 1;
    for (int k = 0; k < n_random; ++k) {
      const double a = lo * std::pow(span, static_cast<double>(k) / n_random);
      const double b = lo * std::pow(span, static_cast<double>(k + 1) / n_random);
      times[k] = rng.log_uniform(a, b);
    }
    for (int j = 0; j + 1 < node.degree; ++j) {
      const int sa = node.adj_segment[j];
      const int sb = node.adj_segment[j + 1];
      const double xa = node.signs[j] > 0 ? ctx.segments[sa].L : 0.0;
      const double xb = node.signs[j + 1] > 0 ? ctx.segments[sb].L : 0.0;
      for (double t : times) out.push_back({nid, sa, sb, xa, xb, t});
    }
  }
  return out;
}

namespace {

std::uint64_t time_key(double t) {
  std::uint64_t k;
  std::memcpy(&k, &t, 8);
  return k;
}

}  // namespace

ContinuityAssembly::ContinuityAssembly(std::vector<const TreeContexts*> cases,
                                       std::vector<std::vector<ContinuityPair>> pairs,
                                       const TrialConfig& trial, bool extended)
    : input_dim_(mlp_input_dim(extended)) {
  if (cases.size() != pairs.size())
    fail(Errc::dimension_mismatch, "cases and pair lists must align");

  std::map<std::tuple<int, int, std::uint64_t>, int> eval_index;
  std::vector<std::tuple<int, int, double>> eval_order;  // (case, node, tau)

  const auto eval_col = [&](int case_idx, int node_id, double tau) {
    const auto key = std::make_tuple(case_idx, node_id, time_key(tau));
    const auto [it, fresh] = eval_index.try_emplace(key, static_cast<int>(eval_order.size()));
    if (fresh) eval_order.emplace_back(case_idx, node_id, tau);
    return it->second;
  };

  const auto k0_of = [](const NodeContext& node, int slot) {
    return initial_gradient_J(node)[slot];
  };

  for (std::size_t c = 0; c < cases.size(); ++c) {
    const TreeContexts& ctx = *cases[c];
    for (const ContinuityPair& p : pairs[c]) {
      PairTerm term{0.0, static_cast<int>(coefs_.size()), 0};
      for (int side = 0; side < 2; ++side) {
        const double pm = side == 0 ? 1.0 : -1.0;
        const int sid = side == 0 ? p.seg_a : p.seg_b;
        const double x = side == 0 ? p.x_a : p.x_b;
        const SegmentContext& seg = ctx.segments[sid];
        const EvalPlan plan = plan_eval(x, p.t, seg, trial);
        term.base += pm * (plan.b_prev * k0_of(seg.ctx_prev, seg.slot_prev) +
                           plan.b_next * k0_of(seg.ctx_next, seg.slot_next));
        for (int end = 0; end < 2; ++end) {
          const NodeContext& node = end == 0 ? seg.ctx_prev : seg.ctx_next;
          if (node.degree < 2) continue;  // terminals contribute no derivative
          const int slot = end == 0 ? seg.slot_prev : seg.slot_next;
          const auto& cvec = end == 0 ? plan.c_prev : plan.c_next;
          const auto hrow = transform_H_row(node, slot);
          for (std::size_t q = 0; q < plan.tau.size(); ++q) {
            if (cvec[q] == 0.0) continue;
            const int col = eval_col(static_cast<int>(c), node.node_id, plan.tau[q]);
            for (int r = 0; r < node.degree - 1; ++r) {
              if (hrow[r] == 0.0) continue;
              coefs_.push_back({col, r, pm * cvec[q] * hrow[r]});
            }
          }
        }
      }
      term.coef_end = static_cast<int>(coefs_.size());
      pairs_.push_back(term);
    }
  }

  inputs_.resize(input_dim_, static_cast<Eigen::Index>(eval_order.size()));
  for (std::size_t i = 0; i < eval_order.size(); ++i) {
    const auto& [c, node_id, tau] = eval_order[i];
    fill_mlp_input(inputs_.col(static_cast<Eigen::Index>(i)).data(),
                   cases[c]->nodes[node_id], tau, extended);
  }
}

double ContinuityAssembly::value(const MlpModel& model) const {
  if (model.input_dim() != input_dim_)
    fail(Errc::dimension_mismatch, "model input dim " + std::to_string(model.input_dim()) +
                                       ", assembly expects " + std::to_string(input_dim_));
  const Eigen::MatrixXd Y = n_evals() ? mlp_forward_batch(model, inputs_) : Eigen::MatrixXd();
  double total = 0.0;
  for (const PairTerm& p : pairs_) {
    double r = p.base;
    for (int k = p.coef_begin; k < p.coef_end; ++k)
      r += coefs_[k].w * Y(coefs_[k].row, coefs_[k].col);
    total += r * r;
  }
  return total;
}

double ContinuityAssembly::value_and_gradient(const MlpModel& model, Eigen::VectorXd& grad) const {
  if (model.input_dim() != input_dim_)
    fail(Errc::dimension_mismatch, "model input dim vs assembly");
  grad = Eigen::VectorXd::Zero(model.parameter_count());
  if (pairs_.empty()) return 0.0;
  const Eigen::MatrixXd Y = n_evals() ? mlp_forward_batch(model, inputs_) : Eigen::MatrixXd();
  Eigen::MatrixXd dY = Eigen::MatrixXd::Zero(model.output_dim(), inputs_.cols());
  double total = 0.0;
  for (const PairTerm& p : pairs_) {
    double r = p.base;
    for (int k = p.coef_begin; k < p.coef_end; ++k)
      r += coefs_[k].w * Y(coefs_[k].row, coefs_[k].col);
    total += r * r;
    const double two_r = 2.0 * r;
    for (int k = p.coef_begin; k < p.coef_end; ++k)
      dY(coefs_[k].row, coefs_[k].col) += two_r * coefs_[k].w;
  }
  if (n_evals()) mlp_backward_batch(model, inputs_, dY, grad);
  return total;
}

double loss(const MlpModel& model, const std::vector<ContinuityPair>& pairs,
            const TreeContexts& ctx, const TrialConfig& trial) {
  if (pairs.empty()) return 0.0;
  const bool extended = model.input_dim() == mlp_input_dim(true);
  ContinuityAssembly asmb({&ctx}, {pairs}, trial, extended);
  const double v = asmb.value(model);
  if (!std::isfinite(v)) fail(Errc::non_finite_loss, "loss is not finite");
  return v;
}

Eigen::VectorXd loss_gradient(const MlpModel& model, const std::vector<ContinuityPair>& pairs,
                              const TreeContexts& ctx, const TrialConfig& trial) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.parameter_count());
  if (pairs.empty()) return grad;
  const bool extended = model.input_dim() == mlp_input_dim(true);
  ContinuityAssembly asmb({&ctx}, {pairs}, trial, extended);
  const double v = asmb.value_and_gradient(model, grad);
  if (!std::isfinite(v)) fail(Errc::non_finite_loss, "loss is not finite");
  return grad;
}

namespace {

std::pair<MlpModel, TrainReport> run_lbfgs(MlpModel model, const ContinuityAssembly& asmb,
                                           const TrainingConfig& cfg) {
  LbfgsOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.memory = cfg.lbfgs_memory;
  opts.c1 = cfg.wolfe_c1;
  opts.c2 = cfg.wolfe_c2;
  opts.grad_tolerance = cfg.grad_tolerance;
  opts.loss_tolerance = cfg.loss_tolerance;
  opts.initial_step = cfg.initial_step;

  MlpModel work = model;
  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    work.unflatten(x);
    return asmb.value_and_gradient(work, g);
  };

  LbfgsResult res = lbfgs_minimize(objective, model.flatten(), opts);
  model.unflatten(res.x);

  TrainReport report;
  report.iterations = res.iterations;
  report.initial_loss = res.history.front().loss;
  report.final_loss = res.loss;
  report.stop = res.stop;
  report.history = std::move(res.history);
  report.wall_s = res.wall_s;
  report.initial_step = cfg.initial_step;
  return {std::move(model), std::move(report)};
}

}  // namespace

std::pair<MlpModel, TrainReport> train(MlpModel model, const TreeContexts& ctx,
                                       const TrialConfig& trial, const TrainingConfig& cfg) {
  cfg.validate();
  const std::vector<ContinuityPair> pairs = build_training_set(ctx, cfg);
  if (pairs.empty()) {
    TrainReport report;
    report.stop = StopReason::converged;
    report.initial_step = cfg.initial_step;
    return {std::move(model), report};
  }
  const bool extended = model.input_dim() == mlp_input_dim(true);
  ContinuityAssembly asmb({&ctx}, {pairs}, trial, extended);
  return run_lbfgs(std::move(model), asmb, cfg);
}

std::pair<MlpModel, TrainReport> train_parameterized(MlpModel model, const RandomTreeSpec& spec,
                                                     int n_cases, const MaterialParams& material,
                                                     double T_ref, const ScalingFactors& scaling,
                                                     const TrialConfig& trial,
                                                     const TrainingConfig& cfg) {
  cfg.validate();
  if (cfg.mode != TrainMode::parameterized)
    fail(Errc::invalid_spec, "train_parameterized requires mode=parameterized");
  if (n_cases < 1) fail(Errc::invalid_spec, "n_cases must be >= 1");

  std::vector<TreeContexts> storage;
  storage.reserve(n_cases);
  std::vector<const TreeContexts*> cases;
  std::vector<std::vector<ContinuityPair>> pairs;
  for (int i = 0; i < n_cases; ++i) {
    RandomTreeSpec s = spec;
    s.seed = spec.seed + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ull;
    const InterconnectTree tree = generate_random_tree(s);
    storage.push_back(scale_problem(node_contexts(tree, material, T_ref), scaling));
    TrainingConfig per_case = cfg;
    per_case.seed = cfg.seed + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ull + 1;
    pairs.push_back(build_training_set(storage.back(), per_case));
  }
  for (const auto& c : storage) cases.push_back(&c);

  ContinuityAssembly asmb(std::move(cases), std::move(pairs), trial, true);
  return run_lbfgs(std::move(model), asmb, cfg);
}

StressEvaluator::StressEvaluator(const TreeContexts& ctx, const MlpModel& model,
                                 const TrialConfig& trial, bool extended)
    : ctx_(ctx), model_(model), trial_(trial), extended_(extended) {
  if (model.input_dim() != mlp_input_dim(extended))
    fail(Errc::architecture_mismatch, "model input dim " + std::to_string(model.input_dim()) +
                                          " vs expected " +
                                          std::to_string(mlp_input_dim(extended)));
}

double StressEvaluator::d_slot(int node_id, int slot, double tau) const {
  const NodeContext& node = ctx_.nodes[node_id];
  if (node.degree < 2) return 0.0;
  const auto key = std::make_pair(node_id, time_key(tau));
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    Eigen::VectorXd x(mlp_input_dim(extended_));
    fill_mlp_input(x.data(), node, tau, extended_);
    it = cache_.emplace(key, mlp_forward(model_, x)).first;
  }
  const auto hrow = transform_H_row(node, slot);
  double d = 0.0;
  for (int r = 0; r < node.degree - 1; ++r) d += hrow[r] * it->second[r];
  return d;
}

double StressEvaluator::operator()(int segment_id, double x, double t) const {
  const SegmentContext& seg = ctx_.segments.at(segment_id);
  const EvalPlan plan = plan_eval(x, t, seg, trial_);
  if (t == 0.0) return 0.0;
  const double k0p = initial_gradient_J(seg.ctx_prev)[seg.slot_prev];
  const double k0n = initial_gradient_J(seg.ctx_next)[seg.slot_next];
  double sigma = plan.b_prev * k0p + plan.b_next * k0n;
  for (std::size_t q = 0; q < plan.tau.size(); ++q) {
    if (plan.c_prev[q] != 0.0)
      sigma += plan.c_prev[q] * d_slot(seg.ctx_prev.node_id, seg.slot_prev, plan.tau[q]);
    if (plan.c_next[q] != 0.0)
      sigma += plan.c_next[q] * d_slot(seg.ctx_next.node_id, seg.slot_next, plan.tau[q]);
  }
  return sigma;
}

double StressEvaluator::max_over_fractions(double t, const std::vector<double>& fractions) const {
  double best = -HUGE_VAL;
  for (const auto& seg : ctx_.segments)
    for (double f : fractions)
      best = std::max(best, (*this)(seg.segment_id, f * seg.L, t));
  return best;
}

}  // namespace em
