#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "em/lbfgs.hpp"
#include "em/mlp.hpp"
#include "em/trial.hpp"
#include "em/tree.hpp"

namespace em {

enum class TrainMode { per_case, parameterized };

// All time quantities here live in the same units as the contexts handed to
// the training entry points (callers typically pre-scale to O(1) ranges).
struct TrainingConfig {
  int n_c = 30;            // time samples per junction
  double t_steady = 10.0;  // observation horizon
  int max_iters = 2000;
  int lbfgs_memory = 8;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double grad_tolerance = 1e-8;
  double loss_tolerance = 1e-10;
  double initial_step = 1e-3;
  int hidden_layers = 5;
  int hidden_width = 50;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::per_case;
  bool extended_inputs = false;  // adjacent-coordinate input block (implied
                                 // by parameterized mode)

  void validate() const;
};

struct ContinuityPair {
  int node_id = -1;
  int seg_a = -1, seg_b = -1;
  double x_a = 0.0, x_b = 0.0;  // junction-side coordinate on each segment
  double t = 0.0;
};

struct TrainReport {
  int iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  StopReason stop = StopReason::converged;
  std::vector<LbfgsHistoryRow> history;
  double wall_s = 0.0;
  double initial_step = 1e-3;
};

int mlp_input_dim(bool extended);
void fill_mlp_input(double* dst, const NodeContext& node, double tau, bool extended);
std::vector<int> mlp_layer_sizes(const TrainingConfig& cfg);

// (M-1) chained adjacent-segment pairs per interior junction, each at n_c
// log-uniform times over [1e-4 t_steady, t_steady]; deterministic per seed.
std::vector<ContinuityPair> build_training_set(const TreeContexts& ctx, const TrainingConfig& cfg);

// Junction-continuity loss, precomputed so every evaluation is one batched
// network pass plus affine bookkeeping. The quadrature coefficients do not
// depend on the parameters.
class ContinuityAssembly {
public:
  ContinuityAssembly(std::vector<const TreeContexts*> cases,
                     std::vector<std::vector<ContinuityPair>> pairs, const TrialConfig& trial,
                     bool extended);

  double value(const MlpModel& model) const;
  double value_and_gradient(const MlpModel& model, Eigen::VectorXd& grad) const;

  std::size_t n_pairs() const { return pairs_.size(); }
  std::size_t n_evals() const { return static_cast<std::size_t>(inputs_.cols()); }

private:
  struct Coef {
    int col;       // evaluation column
    int row;       // network output row
    double w;      // d(residual)/d(output)
  };
  struct PairTerm {
    double base;
    int coef_begin, coef_end;
  };

  Eigen::MatrixXd inputs_;  // input_dim x n_evals
  std::vector<Coef> coefs_;
  std::vector<PairTerm> pairs_;
  int input_dim_;
};

double loss(const MlpModel& model, const std::vector<ContinuityPair>& pairs,
            const TreeContexts& ctx, const TrialConfig& trial);
Eigen::VectorXd loss_gradient(const MlpModel& model, const std::vector<ContinuityPair>& pairs,
                              const TreeContexts& ctx, const TrialConfig& trial);

std::pair<MlpModel, TrainReport> train(MlpModel model, const TreeContexts& ctx,
                                       const TrialConfig& trial, const TrainingConfig& cfg);

// Label-free batched training over generated two-segment cases with the
// extended (adjacent-coordinate) inputs. Cases are generated from `spec`
// with per-case derived seeds; contexts are scaled with `scaling`.
std::pair<MlpModel, TrainReport> train_parameterized(MlpModel model, const RandomTreeSpec& spec,
                                                     int n_cases, const MaterialParams& material,
                                                     double T_ref, const ScalingFactors& scaling,
                                                     const TrialConfig& trial,
                                                     const TrainingConfig& cfg);

// Stress evaluation of a trained (or raw) model on one tree; all quantities
// in the contexts' units. Network outputs are cached per (node, time).
class StressEvaluator {
public:
  StressEvaluator(const TreeContexts& ctx, const MlpModel& model, const TrialConfig& trial,
                  bool extended);

  double operator()(int segment_id, double x, double t) const;
  double max_over_fractions(double t, const std::vector<double>& fractions) const;

private:
  double d_slot(int node_id, int slot, double tau) const;

  const TreeContexts& ctx_;
  const MlpModel& model_;
  TrialConfig trial_;
  bool extended_;
  mutable std::map<std::pair<int, std::uint64_t>, Eigen::VectorXd> cache_;
};

}  // namespace em
