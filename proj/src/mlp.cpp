#include "em/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "em/error.hpp"
#include "em/rng.hpp"
#include "json.hpp"

namespace em {

namespace {

void check_architecture(const std::vector<int>& sizes) {
  if (sizes.size() < 2) fail(Errc::invalid_architecture, "need at least input and output layers");
  for (int s : sizes)
    if (s < 1) fail(Errc::invalid_architecture, "layer size " + std::to_string(s));
}

constexpr int kBatchChunk = 4096;

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < n_layers(); ++l)
    n += static_cast<std::size_t>(weights[l].size()) + static_cast<std::size_t>(biases[l].size());
  return n;
}

Eigen::VectorXd MlpModel::flatten() const {
  Eigen::VectorXd out(parameter_count());
  Eigen::Index at = 0;
  for (int l = 0; l < n_layers(); ++l) {
    const auto& w = weights[l];
    out.segment(at, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    at += w.size();
    out.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  return out;
}

void MlpModel::unflatten(const Eigen::VectorXd& params) {
  if (params.size() != static_cast<Eigen::Index>(parameter_count()))
    fail(Errc::dimension_mismatch, "parameter vector of size " + std::to_string(params.size()) +
                                       ", expected " + std::to_string(parameter_count()));
  Eigen::Index at = 0;
  for (int l = 0; l < n_layers(); ++l) {
    auto& w = weights[l];
    Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) = params.segment(at, w.size());
    at += w.size();
    biases[l] = params.segment(at, biases[l].size());
    at += biases[l].size();
  }
}

MlpModel init_xavier(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  check_architecture(layer_sizes);
  MlpModel m;
  m.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int c = 0; c < fan_in; ++c)
      for (int r = 0; r < fan_out; ++r) w(r, c) = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return m;
}

Eigen::VectorXd mlp_forward(const MlpModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.input_dim())
    fail(Errc::dimension_mismatch, "input of size " + std::to_string(x.size()) + ", expected " +
                                       std::to_string(m.input_dim()));
  Eigen::VectorXd a = x;
  for (int l = 0; l < m.n_layers(); ++l) {
    a = (m.weights[l] * a + m.biases[l]).eval();
    if (l + 1 < m.n_layers()) a = a.array().tanh().matrix();
  }
  return a;
}

Eigen::MatrixXd mlp_forward_batch(const MlpModel& m, const Eigen::MatrixXd& X) {
  if (X.rows() != m.input_dim())
    fail(Errc::dimension_mismatch, "batch rows " + std::to_string(X.rows()) + ", expected " +
                                       std::to_string(m.input_dim()));
  Eigen::MatrixXd a = X;
  for (int l = 0; l < m.n_layers(); ++l) {
    Eigen::MatrixXd z = m.weights[l] * a;
    z.colwise() += m.biases[l];
    if (l + 1 < m.n_layers()) z = z.array().tanh().matrix();
    a = std::move(z);
  }
  return a;
}

void mlp_backward_batch(const MlpModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd& dY,
                        Eigen::VectorXd& grad, Eigen::MatrixXd* dX) {
  if (X.rows() != m.input_dim() || dY.rows() != m.output_dim() || X.cols() != dY.cols())
    fail(Errc::dimension_mismatch, "backward batch shapes");
  if (grad.size() != static_cast<Eigen::Index>(m.parameter_count()))
    fail(Errc::dimension_mismatch, "gradient accumulator size");
  if (dX) dX->resize(X.rows(), X.cols());

  const int L = m.n_layers();
  std::vector<Eigen::MatrixXd> act(L);  // post-activation outputs per layer, chunk-local

  for (Eigen::Index start = 0; start < X.cols(); start += kBatchChunk) {
    const Eigen::Index cols = std::min<Eigen::Index>(kBatchChunk, X.cols() - start);
    const auto Xc = X.middleCols(start, cols);

    Eigen::MatrixXd a = Xc;
    for (int l = 0; l < L; ++l) {
      Eigen::MatrixXd z = m.weights[l] * a;
      z.colwise() += m.biases[l];
      if (l + 1 < L) z = z.array().tanh().matrix();
      act[l] = z;
      a = std::move(z);
    }

    const Eigen::MatrixXd x_chunk = Xc;
    Eigen::MatrixXd delta = dY.middleCols(start, cols);
    for (int l = L - 1; l >= 0; --l) {
      const Eigen::MatrixXd& input = (l == 0) ? x_chunk : act[l - 1];
      // Parameter block offsets mirror flatten().
      Eigen::Index at = 0;
      for (int k = 0; k < l; ++k) at += m.weights[k].size() + m.biases[k].size();
      Eigen::Map<Eigen::MatrixXd> gw(grad.data() + at, m.weights[l].rows(), m.weights[l].cols());
      gw.noalias() += delta * input.transpose();
      grad.segment(at + m.weights[l].size(), m.biases[l].size()) += delta.rowwise().sum();
      if (l > 0) {
        Eigen::MatrixXd up = m.weights[l].transpose() * delta;
        // tanh'(z) = 1 - tanh(z)^2, expressed through the stored activation.
        delta = up.array() * (1.0 - act[l - 1].array().square());
      } else if (dX) {
        dX->middleCols(start, cols) = m.weights[0].transpose() * delta;
      }
    }
  }
}

Eigen::MatrixXd mlp_input_jacobian(const MlpModel& m, const Eigen::VectorXd& x) {
  Eigen::MatrixXd X = x;
  Eigen::MatrixXd J;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.parameter_count());
  J.resize(m.output_dim(), m.input_dim());
  for (int r = 0; r < m.output_dim(); ++r) {
    Eigen::MatrixXd dY = Eigen::MatrixXd::Zero(m.output_dim(), 1);
    dY(r, 0) = 1.0;
    Eigen::MatrixXd dX;
    grad.setZero();
    mlp_backward_batch(m, X, dY, grad, &dX);
    J.row(r) = dX.col(0).transpose();
  }
  return J;
}

namespace {

constexpr char kMagic[8] = {'E', 'M', 'M', 'L', 'P', '0', '0', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  write_u64(os, v);
}

double read_f64(std::istream& is) {
  const std::uint64_t v = read_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void save_checkpoint(const MlpModel& m, const CheckpointMeta& meta, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::io_error, "cannot open " + path + " for writing");
  os.write(kMagic, 8);
  write_u64(os, m.layer_sizes.size());
  for (int s : m.layer_sizes) write_u64(os, static_cast<std::uint64_t>(s));
  const Eigen::VectorXd params = m.flatten();
  write_u64(os, static_cast<std::uint64_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) write_f64(os, params[i]);
  if (!os) fail(Errc::io_error, "short write to " + path);

  nlohmann::json side;
  side["layer_sizes"] = m.layer_sizes;
  side["seed"] = meta.seed;
  side["scaling"] = {{"omega_x", meta.scaling.omega_x},
                     {"omega_t", meta.scaling.omega_t},
                     {"omega_sigma", meta.scaling.omega_sigma}};
  side["mode"] = meta.mode;
  std::ofstream js(path + ".json");
  if (!js) fail(Errc::io_error, "cannot open " + path + ".json for writing");
  js << side.dump(2) << "\n";
}

MlpModel load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io_error, "cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    fail(Errc::parse_error, path + " is not a model checkpoint");
  const std::uint64_t n_sizes = read_u64(is);
  if (n_sizes < 2 || n_sizes > 64) fail(Errc::parse_error, "corrupt checkpoint header");
  std::vector<int> sizes(n_sizes);
  for (auto& s : sizes) s = static_cast<int>(read_u64(is));
  check_architecture(sizes);

  MlpModel m;
  m.layer_sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    m.weights.emplace_back(Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]));
    m.biases.emplace_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
  const std::uint64_t n_params = read_u64(is);
  if (n_params != m.parameter_count())
    fail(Errc::parse_error, "checkpoint parameter count mismatch");
  Eigen::VectorXd params(n_params);
  for (std::uint64_t i = 0; i < n_params; ++i)
    params[static_cast<Eigen::Index>(i)] = read_f64(is);
  if (!is) fail(Errc::parse_error, "truncated checkpoint " + path);
  m.unflatten(params);

  if (meta) {
    meta->layer_sizes = sizes;
    std::ifstream js(path + ".json");
    if (js) {
      nlohmann::json side = nlohmann::json::parse(js, nullptr, false);
      if (!side.is_discarded()) {
        meta->seed = side.value("seed", 0ull);
        meta->mode = side.value("mode", "per_case");
        if (side.contains("scaling")) {
          meta->scaling.omega_x = side["scaling"].value("omega_x", 1e-5);
          meta->scaling.omega_t = side["scaling"].value("omega_t", 1e-7);
          meta->scaling.omega_sigma = side["scaling"].value("omega_sigma", 1e-7);
        }
      }
    }
  }
  return m;
}

}  // namespace em
