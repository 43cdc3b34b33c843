#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "em/physics.hpp"

namespace em {

// Dense multilayer perceptron: tanh on hidden layers, identity output.
struct MlpModel {
  std::vector<int> layer_sizes;          // input, hidden..., output
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int n_layers() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;

  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& params);
};

// Glorot-uniform weights, zero biases; the draw sequence is fixed by seed.
MlpModel init_xavier(const std::vector<int>& layer_sizes, std::uint64_t seed);

Eigen::VectorXd mlp_forward(const MlpModel& m, const Eigen::VectorXd& x);

// Columns of X are independent inputs.
Eigen::MatrixXd mlp_forward_batch(const MlpModel& m, const Eigen::MatrixXd& X);

// Accumulates d(sum_b dY_b . y_b)/d(params) into grad (sized like flatten()).
// When dX is non-null it receives the input cotangents.
void mlp_backward_batch(const MlpModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd& dY,
                        Eigen::VectorXd& grad, Eigen::MatrixXd* dX = nullptr);

// Jacobian dy/dx at a single input, output_dim x input_dim.
Eigen::MatrixXd mlp_input_jacobian(const MlpModel& m, const Eigen::VectorXd& x);

struct CheckpointMeta {
  std::vector<int> layer_sizes;
  std::uint64_t seed = 0;
  ScalingFactors scaling;
  std::string mode = "per_case";
};

// Binary file: header + flat little-endian float64 parameters, with a JSON
// sidecar at <path>.json describing architecture, seed and scaling.
void save_checkpoint(const MlpModel& m, const CheckpointMeta& meta, const std::string& path);
MlpModel load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace em
