#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "em/mlp.hpp"
#include "em/rng.hpp"

using namespace em;

namespace {

const std::vector<int> kSizes{7, 50, 50, 50, 50, 50, 3};

Eigen::VectorXd random_input(int dim, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = rng.uniform(-2.0, 2.0);
  return x;
}

}  // namespace

TEST_CASE("xavier init is reproducible and respects the fan bound") {
  const MlpModel a = init_xavier(kSizes, 7);
  const MlpModel b = init_xavier(kSizes, 7);
  const MlpModel c = init_xavier(kSizes, 8);
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());

  const double bound = std::sqrt(6.0 / 100.0);
  const auto& w = a.weights[2];  // 50 x 50 layer
  CHECK(w.maxCoeff() <= bound);
  CHECK(w.minCoeff() >= -bound);
  CHECK(w.maxCoeff() > 0.5 * bound);  // the draw actually spans the range
  for (const auto& bias : a.biases) CHECK(bias.isZero());
}

TEST_CASE("parameter count follows the dense layer formula") {
  const MlpModel m = init_xavier(kSizes, 1);
  // 7*50+50 + 4*(50*50+50) + 50*3+3
  CHECK(m.parameter_count() == 10753u);
  CHECK(m.flatten().size() == 10753);
}

TEST_CASE("zero parameters produce zero output") {
  MlpModel m = init_xavier(kSizes, 3);
  m.unflatten(Eigen::VectorXd::Zero(m.parameter_count()));
  const Eigen::VectorXd y = mlp_forward(m, random_input(7, 11));
  CHECK(y.norm() == 0.0);
}

TEST_CASE("flatten and unflatten round-trip") {
  MlpModel m = init_xavier({5, 9, 2}, 17);
  const Eigen::VectorXd p = m.flatten();
  MlpModel other = init_xavier({5, 9, 2}, 99);
  other.unflatten(p);
  CHECK(other.flatten() == p);
  CHECK_THROWS_AS(other.unflatten(Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("batch forward equals per-sample forward") {
  const MlpModel m = init_xavier(kSizes, 5);
  Eigen::MatrixXd X(7, 6);
  for (int c = 0; c < 6; ++c) X.col(c) = random_input(7, 100 + c);
  const Eigen::MatrixXd Y = mlp_forward_batch(m, X);
  for (int c = 0; c < 6; ++c) {
    // Matrix-matrix and matrix-vector kernels order their sums differently,
    // so agreement is to rounding, not bit-exact.
    const Eigen::VectorXd y = mlp_forward(m, X.col(c));
    CHECK((Y.col(c) - y).lpNorm<Eigen::Infinity>() < 1e-13);
  }
}

TEST_CASE("forward is locally Lipschitz under small input perturbations") {
  const MlpModel m = init_xavier(kSizes, 21);
  double lip = 1.0;
  for (const auto& w : m.weights) lip *= w.operatorNorm();
  const Eigen::VectorXd x = random_input(7, 3);
  const Eigen::VectorXd y = mlp_forward(m, x);
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd eps(7);
    for (int i = 0; i < 7; ++i) eps[i] = rng.uniform(-1e-4, 1e-4);
    const Eigen::VectorXd y2 = mlp_forward(m, x + eps);
    CHECK((y2 - y).norm() <= lip * eps.norm() * (1.0 + 1e-9));
  }
}

TEST_CASE("input jacobian matches central differences in t") {
  const MlpModel m = init_xavier(kSizes, 31);
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd x = random_input(7, 500 + trial);
    const Eigen::MatrixXd J = mlp_input_jacobian(m, x);
    const double h = 1e-6;
    Eigen::VectorXd xp = x, xm = x;
    xp[0] += h;
    xm[0] -= h;
    const Eigen::VectorXd fd = (mlp_forward(m, xp) - mlp_forward(m, xm)) / (2.0 * h);
    for (int r = 0; r < 3; ++r) {
      const double denom = std::max(std::abs(fd[r]), 1e-8);
      CHECK(std::abs(J(r, 0) - fd[r]) / denom < 1e-6);
    }
  }
}

TEST_CASE("parameter gradient matches central finite differences") {
  const std::vector<int> sizes{4, 12, 10, 3};
  MlpModel m = init_xavier(sizes, 41);
  const Eigen::MatrixXd X = random_input(4, 61);
  Eigen::MatrixXd dY(3, 1);
  dY << 0.7, -1.3, 0.4;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.parameter_count());
  mlp_backward_batch(m, X, dY, grad);

  Eigen::VectorXd params = m.flatten();
  Rng rng(5150);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 20) {
    const auto idx = static_cast<Eigen::Index>(rng.index(params.size()));
    Eigen::VectorXd pp = params, pm = params;
    pp[idx] += h;
    pm[idx] -= h;
    MlpModel mp = m, mm = m;
    mp.unflatten(pp);
    mm.unflatten(pm);
    const double fp = dY.col(0).dot(mlp_forward(mp, X.col(0)));
    const double fm = dY.col(0).dot(mlp_forward(mm, X.col(0)));
    const double fd = (fp - fm) / (2.0 * h);
    if (std::abs(fd) < 1e-7) continue;  // skip numerically dead coordinates
    CHECK(std::abs(grad[idx] - fd) / std::abs(fd) < 1e-5);
    ++checked;
  }
}

TEST_CASE("zero upstream cotangent gives a zero gradient") {
  const MlpModel m = init_xavier({7, 20, 3}, 3);
  Eigen::MatrixXd X(7, 4);
  for (int c = 0; c < 4; ++c) X.col(c) = random_input(7, 900 + c);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.parameter_count());
  mlp_backward_batch(m, X, Eigen::MatrixXd::Zero(3, 4), grad);
  CHECK(grad.norm() == 0.0);
}

TEST_CASE("batch gradient equals the sum of per-sample gradients") {
  const MlpModel m = init_xavier({6, 15, 9, 3}, 19);
  const int B = 5;
  Eigen::MatrixXd X(6, B), dY(3, B);
  Rng rng(23);
  for (int c = 0; c < B; ++c) {
    X.col(c) = random_input(6, 40 + c);
    for (int r = 0; r < 3; ++r) dY(r, c) = rng.uniform(-1.0, 1.0);
  }
  Eigen::VectorXd batch = Eigen::VectorXd::Zero(m.parameter_count());
  mlp_backward_batch(m, X, dY, batch);
  Eigen::VectorXd summed = Eigen::VectorXd::Zero(m.parameter_count());
  for (int c = 0; c < B; ++c) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m.parameter_count());
    mlp_backward_batch(m, X.col(c), dY.col(c), g);
    summed += g;
  }
  CHECK((batch - summed).lpNorm<Eigen::Infinity>() <
        1e-12 * std::max(1.0, batch.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("repeated evaluation is bit-identical") {
  const MlpModel m = init_xavier(kSizes, 2);
  Eigen::MatrixXd X(7, 3);
  for (int c = 0; c < 3; ++c) X.col(c) = random_input(7, 70 + c);
  const Eigen::MatrixXd y1 = mlp_forward_batch(m, X);
  const Eigen::MatrixXd y2 = mlp_forward_batch(m, X);
  CHECK((y1 - y2).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
  const MlpModel m = init_xavier({7, 10, 3}, 1);
  CHECK_THROWS_WITH_AS(mlp_forward(m, Eigen::VectorXd::Zero(5)),
                       doctest::Contains("DimensionMismatch"), Error);
  CHECK_THROWS_AS(init_xavier({7}, 1), Error);
}

TEST_CASE("checkpoint save/load round-trips parameters and metadata") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "emstress_ckpt_test";
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();

  const MlpModel m = init_xavier({7, 30, 30, 3}, 123);
  CheckpointMeta meta;
  meta.layer_sizes = m.layer_sizes;
  meta.seed = 123;
  meta.scaling = ScalingFactors{2e-5, 1e-7, 5e-8};
  meta.mode = "per_case";
  save_checkpoint(m, meta, path);

  CheckpointMeta back;
  const MlpModel loaded = load_checkpoint(path, &back);
  CHECK(loaded.layer_sizes == m.layer_sizes);
  CHECK(loaded.flatten() == m.flatten());
  CHECK(back.seed == 123);
  CHECK(back.scaling.omega_x == 2e-5);
  CHECK(back.mode == "per_case");

  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), Error);
  fs::remove_all(dir);
}
