// Command-line front end over the shared-library C API.
//
// Subcommands: validate, oracle, train, infer, compare, sweep, bench.
// Everything numerical goes through emstress.h; this file owns argument
// parsing, config patching for sweeps, and CSV serialization.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "emstress.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

struct Options {
  std::string config;
  std::string checkpoint;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<std::string> axes;
  bool quiet = false;
  bool nucleation = false;
};

int exit_code_of(ems_status s) {
  return s == EMS_ERR_NUMERIC ? kExitNumeric : kExitValidation;
}

int fail_with(ems_status s, const std::string& context) {
  std::cerr << "error: " << context << ": " << ems_status_name(s) << ": " << ems_last_error()
            << "\n";
  return exit_code_of(s);
}

struct Problem {
  ems_problem* handle = nullptr;
  ~Problem() { ems_problem_free(handle); }
};
struct Model {
  ems_model* handle = nullptr;
  ~Model() { ems_model_free(handle); }
};
struct Field {
  ems_field* handle = nullptr;
  ~Field() { ems_field_free(handle); }
};
struct Report {
  ems_report* handle = nullptr;
  ~Report() { ems_report_free(handle); }
};

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CLI::RuntimeError("cannot open " + path, kExitValidation);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int open_problem(const std::string& json_text, const Options& opt, Problem& problem) {
  const ems_status st = ems_problem_from_json(json_text.c_str(), &problem.handle);
  if (st != EMS_OK) return fail_with(st, "loading config");
  if (opt.seed) {
    const ems_status s2 = ems_problem_override_seed(problem.handle, *opt.seed);
    if (s2 != EMS_OK) return fail_with(s2, "applying --seed");
  }
  return kExitOk;
}

std::uint64_t effective_seed(const Options& opt, const Problem& problem) {
  return opt.seed ? *opt.seed : ems_problem_seed(problem.handle);
}

std::string csv_note(const Problem& problem, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "config_hash=%016llx seed=%llu",
                static_cast<unsigned long long>(ems_problem_config_hash(problem.handle)),
                static_cast<unsigned long long>(seed));
  return buf;
}

int write_field_csv(const Field& field, const fs::path& path, const std::string& note) {
  std::ofstream os(path);
  if (!os) {
    std::cerr << "error: cannot write " << path << "\n";
    return kExitValidation;
  }
  os << "# " << note << "\n";
  os << "segment_id,x_m,t_s,sigma_Pa,source\n";
  const char* source = ems_field_source(field.handle) == 1 ? "trial" : "oracle";
  char line[160];
  for (size_t i = 0; i < ems_field_len(field.handle); ++i) {
    ems_sample s{};
    ems_field_get(field.handle, i, &s);
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%s\n", s.segment_id, s.x_m, s.t_s,
                  s.sigma_pa, source);
    os << line;
  }
  return kExitOk;
}

int write_history_csv(const Report& report, const fs::path& path, const std::string& note) {
  std::ofstream os(path);
  if (!os) {
    std::cerr << "error: cannot write " << path << "\n";
    return kExitValidation;
  }
  os << "# " << note << "\n";
  os << "iter,loss,grad_norm,wall_time_s\n";
  char line[160];
  for (size_t i = 0; i < ems_report_history_len(report.handle); ++i) {
    int32_t iter = 0;
    double loss = 0, gnorm = 0, wall = 0;
    ems_report_history_row(report.handle, i, &iter, &loss, &gnorm, &wall);
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.6f\n", iter, loss, gnorm, wall);
    os << line;
  }
  return kExitOk;
}

void write_report_json(const Report& report, double train_s, const fs::path& path) {
  static const char* kStop[] = {"converged", "max_iters", "line_search_failed"};
  json j;
  j["iterations"] = ems_report_iterations(report.handle);
  j["initial_loss"] = ems_report_initial_loss(report.handle);
  j["final_loss"] = ems_report_final_loss(report.handle);
  const int stop = ems_report_stop_reason(report.handle);
  j["stop_reason"] = kStop[stop >= 0 && stop <= 2 ? stop : 2];
  j["wall_s"] = train_s;
  std::ofstream os(path);
  os << j.dump(2) << "\n";
}

// ---- sweep machinery ------------------------------------------------------

struct Axis {
  std::string name;               // canonical config pointer
  std::string label;              // user-facing column name
  std::vector<double> values;
};

// Accepts N_g/N_c/layers/neurons/n_segments plus raw config keys.
Axis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    throw CLI::RuntimeError("--axis expects name=v1,v2,...", kExitValidation);
  Axis axis;
  axis.label = text.substr(0, eq);
  std::string name = axis.label;
  if (name == "N_g" || name == "n_gauss") axis.name = "/trial/n_gauss";
  else if (name == "N_c" || name == "n_c") axis.name = "/training/n_c";
  else if (name == "layers") axis.name = "/training/hidden_layers";
  else if (name == "neurons") axis.name = "/training/hidden_width";
  else if (name == "n_segments") axis.name = "/random_tree/n_segments";
  else throw CLI::RuntimeError("unknown sweep axis: " + name, kExitValidation);
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) axis.values.push_back(std::stod(item));
  if (axis.values.empty()) throw CLI::RuntimeError("empty axis: " + name, kExitValidation);
  return axis;
}

json patched_config(json base, const std::vector<Axis>& axes, const std::vector<int>& pick) {
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const double v = axes[a].values[pick[a]];
    base[json::json_pointer(axes[a].name)] = static_cast<std::int64_t>(v);
  }
  return base;
}

struct SweepCell {
  std::vector<double> values;
  double rel_error = -1.0;
  double train_s = 0.0;
  double infer_s = 0.0;
  int status = kExitOk;
  std::string message;
};

int run_cell(const json& cfg, const Options& opt, const fs::path& cell_dir, SweepCell& cell) {
  fs::create_directories(cell_dir);
  Problem problem;
  const int rc = open_problem(cfg.dump(), opt, problem);
  if (rc != kExitOk) return rc;
  const std::uint64_t seed = effective_seed(opt, problem);

  Model model;
  ems_status st = ems_model_init(problem.handle, seed, &model.handle);
  if (st != EMS_OK) return fail_with(st, "model init");

  Report report;
  st = ems_train(problem.handle, model.handle, &report.handle);
  if (st != EMS_OK) return fail_with(st, "training");
  cell.train_s = ems_report_wall_seconds(report.handle);

  const std::string note = csv_note(problem, seed);
  ems_model_save(model.handle, (cell_dir / "model.ckpt").string().c_str());
  write_history_csv(report, cell_dir / "loss_history.csv", note);

  const auto t0 = std::chrono::steady_clock::now();
  Field trial;
  st = ems_infer(problem.handle, model.handle, &trial.handle);
  if (st != EMS_OK) return fail_with(st, "inference");
  cell.infer_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Field oracle;
  st = ems_oracle_solve(problem.handle, &oracle.handle);
  if (st != EMS_OK) return fail_with(st, "oracle");

  int32_t zero_ref = 0;
  st = ems_relative_error(trial.handle, oracle.handle, &cell.rel_error, &zero_ref);
  if (st != EMS_OK) return fail_with(st, "comparison");

  write_field_csv(trial, cell_dir / "trial.csv", note);
  write_field_csv(oracle, cell_dir / "oracle.csv", note);
  return kExitOk;
}

// ---- subcommands ----------------------------------------------------------

int cmd_validate(const Options& opt) {
  Problem problem;
  const int rc = open_problem(read_file(opt.config), opt, problem);
  if (rc != kExitOk) return rc;
  char buf[160];
  ems_problem_summary(problem.handle, buf, sizeof buf);
  if (!opt.quiet) std::cout << "valid, " << buf << "\n";
  return kExitOk;
}

int cmd_oracle(const Options& opt) {
  Problem problem;
  const int rc = open_problem(read_file(opt.config), opt, problem);
  if (rc != kExitOk) return rc;
  Field field;
  const ems_status st = ems_oracle_solve(problem.handle, &field.handle);
  if (st != EMS_OK) return fail_with(st, "oracle solve");
  fs::create_directories(opt.out);
  const fs::path path = fs::path(opt.out) / "oracle.csv";
  const int wc = write_field_csv(field, path, csv_note(problem, effective_seed(opt, problem)));
  if (wc != kExitOk) return wc;
  if (!opt.quiet)
    std::cout << "wrote " << path.string() << " (" << ems_field_len(field.handle) << " samples)\n";
  return kExitOk;
}

int cmd_train(const Options& opt) {
  Problem problem;
  const int rc = open_problem(read_file(opt.config), opt, problem);
  if (rc != kExitOk) return rc;
  const std::uint64_t seed = effective_seed(opt, problem);

  Model model;
  ems_status st = ems_model_init(problem.handle, seed, &model.handle);
  if (st != EMS_OK) return fail_with(st, "model init");

  Report report;
  st = ems_train(problem.handle, model.handle, &report.handle);
  if (st != EMS_OK) return fail_with(st, "training");

  fs::create_directories(opt.out);
  const fs::path ckpt = fs::path(opt.out) / "model.ckpt";
  st = ems_model_save(model.handle, ckpt.string().c_str());
  if (st != EMS_OK) return fail_with(st, "saving checkpoint");
  const std::string note = csv_note(problem, seed);
  write_history_csv(report, fs::path(opt.out) / "loss_history.csv", note);
  write_report_json(report, ems_report_wall_seconds(report.handle),
                    fs::path(opt.out) / "train_report.json");
  if (!opt.quiet)
    std::cout << "trained " << ems_report_iterations(report.handle) << " iterations, loss "
              << ems_report_initial_loss(report.handle) << " -> "
              << ems_report_final_loss(report.handle) << " in "
              << ems_report_wall_seconds(report.handle) << " s; wrote " << ckpt.string() << "\n";
  return kExitOk;
}

int cmd_infer(const Options& opt) {
  Problem problem;
  const int rc = open_problem(read_file(opt.config), opt, problem);
  if (rc != kExitOk) return rc;
  Model model;
  ems_status st = ems_model_load(problem.handle, opt.checkpoint.c_str(), &model.handle);
  if (st != EMS_OK) return fail_with(st, "loading checkpoint");

  Field field;
  st = ems_infer(problem.handle, model.handle, &field.handle);
  if (st != EMS_OK) return fail_with(st, "inference");
  fs::create_directories(opt.out);
  const fs::path path = fs::path(opt.out) / "trial.csv";
  const int wc = write_field_csv(field, path, csv_note(problem, effective_seed(opt, problem)));
  if (wc != kExitOk) return wc;
  if (!opt.quiet)
    std::cout << "wrote " << path.string() << " (" << ems_field_len(field.handle) << " samples)\n";

  if (opt.nucleation) {
    int32_t found = 0;
    double t_nuc = 0.0;
    st = ems_nucleation_time(problem.handle, model.handle, &found, &t_nuc);
    if (st != EMS_OK) return fail_with(st, "nucleation search");
    if (found)
      std::cout << "nucleation_time_s=" << t_nuc << "\n";
    else
      std::cout << "nucleation_time_s=none (sigma_crit=" << ems_problem_sigma_crit(problem.handle)
                << " Pa not reached)\n";
  }
  return kExitOk;
}

int cmd_compare(const Options& opt) {
  Problem problem;
  const int rc = open_problem(read_file(opt.config), opt, problem);
  if (rc != kExitOk) return rc;
  Model model;
  ems_status st = ems_model_load(problem.handle, opt.checkpoint.c_str(), &model.handle);
  if (st != EMS_OK) return fail_with(st, "loading checkpoint");

  Field trial;
  st = ems_infer(problem.handle, model.handle, &trial.handle);
  if (st != EMS_OK) return fail_with(st, "inference");
  Field oracle;
  st = ems_oracle_solve(problem.handle, &oracle.handle);
  if (st != EMS_OK) return fail_with(st, "oracle solve");

  double global = 0.0;
  int32_t zero_ref = 0;
  st = ems_relative_error(trial.handle, oracle.handle, &global, &zero_ref);
  if (st != EMS_OK) return fail_with(st, "comparison");

  std::vector<double> times(64), errors(64);
  size_t n = 0;
  ems_relative_error_per_time(trial.handle, oracle.handle, times.data(), errors.data(), 64, &n);

  fs::create_directories(opt.out);
  const fs::path path = fs::path(opt.out) / "compare.csv";
  std::ofstream os(path);
  os << "# " << csv_note(problem, effective_seed(opt, problem)) << "\n";
  os << "t_s,rel_error\n";
  char line[96];
  for (size_t i = 0; i < std::min(n, times.size()); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", times[i], errors[i]);
    os << line;
  }
  std::cout << "global_rel_error=" << global << (zero_ref ? " (zero reference: absolute)" : "")
            << "\n";
  if (!opt.quiet) std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_sweep(const Options& opt, bool bench) {
  json base = json::parse(read_file(opt.config), nullptr, false);
  if (base.is_discarded()) {
    std::cerr << "error: config is not valid JSON\n";
    return kExitValidation;
  }

  std::vector<Axis> axes;
  for (const auto& a : opt.axes) axes.push_back(parse_axis(a));
  if (axes.empty()) {
    if (bench)
      axes.push_back(parse_axis("n_segments=22,58,109"));
    else {
      std::cerr << "error: sweep needs at least one --axis\n";
      return kExitValidation;
    }
  }
  if (axes.size() > 2) {
    std::cerr << "error: at most two sweep axes\n";
    return kExitValidation;
  }

  std::vector<std::vector<int>> picks;
  if (axes.size() == 1) {
    for (std::size_t i = 0; i < axes[0].values.size(); ++i) picks.push_back({static_cast<int>(i)});
  } else {
    for (std::size_t i = 0; i < axes[0].values.size(); ++i)
      for (std::size_t j = 0; j < axes[1].values.size(); ++j)
        picks.push_back({static_cast<int>(i), static_cast<int>(j)});
  }

  fs::create_directories(opt.out);
  std::vector<SweepCell> cells(picks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= picks.size()) return;
      SweepCell& cell = cells[i];
      std::string tag;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        cell.values.push_back(axes[a].values[picks[i][a]]);
        tag += (a ? "_" : "") + axes[a].label + "=" +
               std::to_string(static_cast<long long>(cell.values.back()));
      }
      const json cfg = patched_config(base, axes, picks[i]);
      try {
        cell.status = run_cell(cfg, opt, fs::path(opt.out) / ("cell_" + tag), cell);
      } catch (const std::exception& e) {
        cell.status = kExitNumeric;
        cell.message = e.what();
      }
      if (!opt.quiet) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cout << "cell " << tag << ": rel_error=" << cell.rel_error
                  << " train_s=" << cell.train_s << " infer_s=" << cell.infer_s << "\n";
      }
    }
  };

  const int jobs = std::max(1, opt.jobs);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  const fs::path path = fs::path(opt.out) / "sweep.csv";
  std::ofstream os(path);
  os << "# seed=" << (opt.seed ? *opt.seed : 0) << "\n";
  for (const auto& a : axes) os << a.label << ",";
  os << "rel_error,train_s,infer_s\n";
  int status = kExitOk;
  for (const auto& cell : cells) {
    for (double v : cell.values) os << v << ",";
    char line[96];
    std::snprintf(line, sizeof line, "%.6e,%.3f,%.4f\n", cell.rel_error, cell.train_s,
                  cell.infer_s);
    os << line;
    status = std::max(status, cell.status);
  }
  if (!opt.quiet) std::cout << "wrote " << path.string() << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesh-free electromigration stress solver for interconnect trees"};
  app.require_subcommand(1);

  Options opt;
  app.add_option("--config", opt.config, "run configuration (JSON)")->required();
  app.add_option("--checkpoint", opt.checkpoint, "model checkpoint path");
  app.add_option("--out", opt.out, "output directory");
  app.add_option("--seed", opt.seed, "override config seeds");
  app.add_option("--jobs", opt.jobs, "concurrent sweep cells");
  app.add_option("--axis", opt.axes, "sweep axis, e.g. N_g=8,16,32 (repeatable)");
  app.add_flag("--quiet", opt.quiet, "suppress progress output");
  app.add_flag("--nucleation", opt.nucleation, "report void nucleation time after inference");

  auto* validate = app.add_subcommand("validate", "check a config and print its structure");
  auto* oracle = app.add_subcommand("oracle", "run the finite-difference reference solver");
  auto* train = app.add_subcommand("train", "train the gradient network");
  auto* infer = app.add_subcommand("infer", "evaluate the trial function at the probes");
  auto* compare = app.add_subcommand("compare", "relative error of the model vs the oracle");
  auto* sweep = app.add_subcommand("sweep", "train/compare over a parameter grid");
  auto* bench = app.add_subcommand("bench", "scalability sweep over n_segments");

  for (auto* sub : {validate, oracle, train, infer, compare, sweep, bench}) sub->fallthrough();
  infer->needs(app.get_option("--checkpoint"));
  compare->needs(app.get_option("--checkpoint"));

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(opt);
    if (oracle->parsed()) return cmd_oracle(opt);
    if (train->parsed()) return cmd_train(opt);
    if (infer->parsed()) return cmd_infer(opt);
    if (compare->parsed()) return cmd_compare(opt);
    if (sweep->parsed()) return cmd_sweep(opt, false);
    if (bench->parsed()) return cmd_sweep(opt, true);
  } catch (const CLI::RuntimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.get_exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitValidation;
}
