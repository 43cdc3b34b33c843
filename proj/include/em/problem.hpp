#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "em/effective_time.hpp"
#include "em/fdm.hpp"
#include "em/mlp.hpp"
#include "em/training.hpp"

namespace em {

struct ProbeConfig {
  std::vector<double> times;      // s; defaults to 10 log-spaced in [1e5, 1e8]
  std::vector<double> fractions;  // per-segment; defaults to nodes + 9 interior points
};

struct RunConfig {
  InterconnectTree tree;
  MaterialParams material;
  TemperatureModel temperature;
  ScalingFactors scaling;
  TrialConfig trial;
  TrainingConfig training;  // t_steady in SI seconds here
  FdmConfig fdm;
  ProbeConfig probes;
  std::optional<RandomTreeSpec> random_tree;  // generates the tree when present
  int param_cases = 1000;                     // parameterized-mode training set size
  std::uint64_t config_hash = 0;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// e.g. "4 segments, 1 junction, 4 terminals"
std::string describe(const InterconnectTree& tree);

// A parsed configuration with its derived data, ready for solver calls.
// Stress I/O at this level is in SI units; scaling is internal.
class Problem {
public:
  explicit Problem(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  RunConfig& mutable_config() { return cfg_; }
  const InterconnectTree& tree() const { return cfg_.tree; }
  const TreeContexts& contexts_si() const { return ctx_si_; }
  const TreeContexts& contexts_scaled() const { return ctx_scaled_; }
  bool dynamic_temperature() const;
  double scaled_time(double t_si) const;  // effective-time remap, then scaling

  MlpModel make_model(std::uint64_t seed) const;
  TrainReport train_model(MlpModel& model) const;

  StressField infer(const MlpModel& model) const;
  double infer_at(const MlpModel& model, int segment_id, double fraction, double t_si) const;
  FdmRun oracle() const;
  NucleationResult nucleation(const MlpModel& model) const;

private:
  RunConfig cfg_;
  TreeContexts ctx_si_;
  TreeContexts ctx_scaled_;
  std::unique_ptr<EffectiveTimeMap> time_map_;
};

}  // namespace em
