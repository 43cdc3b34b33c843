#include "emstress.h"

#include <cstring>
#include <exception>
#include <string>

#include "em/problem.hpp"

namespace {

thread_local std::string g_last_error;

ems_status status_of(const em::Error& e) {
  switch (e.code()) {
    case em::Errc::parse_error:
      return EMS_ERR_PARSE;
    case em::Errc::io_error:
      return EMS_ERR_IO;
    case em::Errc::architecture_mismatch:
    case em::Errc::invalid_architecture:
      return EMS_ERR_ARCH_MISMATCH;
    case em::Errc::non_finite_loss:
    case em::Errc::singular_system:
    case em::Errc::step_too_large:
    case em::Errc::line_search_failed:
      return EMS_ERR_NUMERIC;
    default:
      return EMS_ERR_VALIDATION;
  }
}

template <typename Fn>
ems_status guarded(Fn&& fn) {
  try {
    fn();
    return EMS_OK;
  } catch (const em::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EMS_ERR_NUMERIC;
  } catch (...) {
    g_last_error = "unknown error";
    return EMS_ERR_NUMERIC;
  }
}

ems_status invalid_argument(const char* what) {
  g_last_error = std::string("invalid argument: ") + what;
  return EMS_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct ems_problem {
  em::Problem impl;
};

struct ems_model {
  em::MlpModel impl;
  em::CheckpointMeta meta;
};

struct ems_field {
  em::StressField impl;
};

struct ems_report {
  em::TrainReport impl;
};

extern "C" {

const char* ems_version(void) { return "0.1.0"; }

const char* ems_status_name(ems_status status) {
  switch (status) {
    case EMS_OK: return "ok";
    case EMS_ERR_PARSE: return "parse_error";
    case EMS_ERR_VALIDATION: return "validation_error";
    case EMS_ERR_NUMERIC: return "numeric_error";
    case EMS_ERR_IO: return "io_error";
    case EMS_ERR_ARCH_MISMATCH: return "architecture_mismatch";
    case EMS_ERR_INVALID_ARGUMENT: return "invalid_argument";
  }
  return "unknown";
}

const char* ems_last_error(void) { return g_last_error.c_str(); }

ems_status ems_problem_from_json(const char* json_text, ems_problem** out) {
  if (!json_text || !out) return invalid_argument("null pointer");
  return guarded([&] { *out = new ems_problem{em::Problem(em::parse_run_config(json_text))}; });
}

ems_status ems_problem_from_file(const char* path, ems_problem** out) {
  if (!path || !out) return invalid_argument("null pointer");
  return guarded([&] { *out = new ems_problem{em::Problem(em::load_run_config(path))}; });
}

void ems_problem_free(ems_problem* p) { delete p; }

ems_status ems_problem_summary(const ems_problem* p, char* buf, size_t buflen) {
  if (!p || !buf || buflen == 0) return invalid_argument("null pointer or empty buffer");
  return guarded([&] {
    const std::string s = em::describe(p->impl.tree());
    std::strncpy(buf, s.c_str(), buflen - 1);
    buf[buflen - 1] = '\0';
  });
}

uint64_t ems_problem_config_hash(const ems_problem* p) {
  return p ? p->impl.config().config_hash : 0;
}

int32_t ems_problem_n_segments(const ems_problem* p) {
  return p ? static_cast<int32_t>(p->impl.tree().segments.size()) : 0;
}

ems_status ems_problem_override_seed(ems_problem* p, uint64_t seed) {
  if (!p) return invalid_argument("null problem");
  return guarded([&] {
    p->impl.mutable_config().training.seed = seed;
    if (p->impl.mutable_config().random_tree)
      p->impl.mutable_config().random_tree->seed = seed;
  });
}

uint64_t ems_problem_seed(const ems_problem* p) {
  return p ? p->impl.config().training.seed : 0;
}

double ems_problem_sigma_crit(const ems_problem* p) {
  return p ? p->impl.config().material.sigma_crit : 0.0;
}

ems_status ems_model_init(const ems_problem* p, uint64_t seed, ems_model** out) {
  if (!p || !out) return invalid_argument("null pointer");
  return guarded([&] {
    auto* m = new ems_model;
    m->impl = p->impl.make_model(seed);
    m->meta.layer_sizes = m->impl.layer_sizes;
    m->meta.seed = seed;
    m->meta.scaling = p->impl.config().scaling;
    m->meta.mode =
        p->impl.config().training.mode == em::TrainMode::parameterized ? "parameterized"
                                                                       : "per_case";
    *out = m;
  });
}

ems_status ems_model_load(const ems_problem* p, const char* path, ems_model** out) {
  if (!p || !path || !out) return invalid_argument("null pointer");
  return guarded([&] {
    em::CheckpointMeta meta;
    em::MlpModel loaded = em::load_checkpoint(path, &meta);
    const std::vector<int> expected = em::mlp_layer_sizes(p->impl.config().training);
    if (loaded.layer_sizes != expected)
      em::fail(em::Errc::architecture_mismatch,
               "checkpoint layer sizes do not match the problem config");
    *out = new ems_model{std::move(loaded), std::move(meta)};
  });
}

ems_status ems_model_save(const ems_model* m, const char* path) {
  if (!m || !path) return invalid_argument("null pointer");
  return guarded([&] { em::save_checkpoint(m->impl, m->meta, path); });
}

void ems_model_free(ems_model* m) { delete m; }

int64_t ems_model_parameter_count(const ems_model* m) {
  return m ? static_cast<int64_t>(m->impl.parameter_count()) : 0;
}

ems_status ems_train(const ems_problem* p, ems_model* m, ems_report** out_report) {
  if (!p || !m) return invalid_argument("null pointer");
  return guarded([&] {
    em::TrainReport report = p->impl.train_model(m->impl);
    if (out_report) *out_report = new ems_report{std::move(report)};
  });
}

int32_t ems_report_iterations(const ems_report* r) { return r ? r->impl.iterations : 0; }
double ems_report_initial_loss(const ems_report* r) { return r ? r->impl.initial_loss : 0.0; }
double ems_report_final_loss(const ems_report* r) { return r ? r->impl.final_loss : 0.0; }
int32_t ems_report_stop_reason(const ems_report* r) {
  return r ? static_cast<int32_t>(r->impl.stop) : 0;
}
double ems_report_wall_seconds(const ems_report* r) { return r ? r->impl.wall_s : 0.0; }
size_t ems_report_history_len(const ems_report* r) { return r ? r->impl.history.size() : 0; }

ems_status ems_report_history_row(const ems_report* r, size_t i, int32_t* iter, double* loss,
                                  double* grad_norm, double* wall_s) {
  if (!r || i >= r->impl.history.size()) return invalid_argument("bad report row");
  const auto& row = r->impl.history[i];
  if (iter) *iter = row.iter;
  if (loss) *loss = row.loss;
  if (grad_norm) *grad_norm = row.grad_norm;
  if (wall_s) *wall_s = row.wall_s;
  return EMS_OK;
}

void ems_report_free(ems_report* r) { delete r; }

ems_status ems_infer(const ems_problem* p, const ems_model* m, ems_field** out) {
  if (!p || !m || !out) return invalid_argument("null pointer");
  return guarded([&] { *out = new ems_field{p->impl.infer(m->impl)}; });
}

ems_status ems_infer_at(const ems_problem* p, const ems_model* m, int32_t segment_id,
                        double fraction, double t_s, double* sigma_pa) {
  if (!p || !m || !sigma_pa) return invalid_argument("null pointer");
  return guarded([&] { *sigma_pa = p->impl.infer_at(m->impl, segment_id, fraction, t_s); });
}

ems_status ems_oracle_solve(const ems_problem* p, ems_field** out) {
  if (!p || !out) return invalid_argument("null pointer");
  return guarded([&] { *out = new ems_field{p->impl.oracle().field}; });
}

size_t ems_field_len(const ems_field* f) { return f ? f->impl.samples.size() : 0; }

ems_status ems_field_get(const ems_field* f, size_t i, ems_sample* out) {
  if (!f || !out || i >= f->impl.samples.size()) return invalid_argument("bad field index");
  const auto& s = f->impl.samples[i];
  *out = {s.segment_id, s.x, s.t, s.sigma};
  return EMS_OK;
}

int32_t ems_field_source(const ems_field* f) {
  return f && f->impl.source == em::FieldSource::trial ? 1 : 0;
}

void ems_field_free(ems_field* f) { delete f; }

ems_status ems_relative_error(const ems_field* pred, const ems_field* ref, double* global,
                              int32_t* zero_reference) {
  if (!pred || !ref || !global) return invalid_argument("null pointer");
  return guarded([&] {
    const em::ErrorReport rep = em::relative_error(pred->impl, ref->impl);
    *global = rep.global;
    if (zero_reference) *zero_reference = rep.zero_reference ? 1 : 0;
  });
}

ems_status ems_relative_error_per_time(const ems_field* pred, const ems_field* ref, double* times,
                                       double* errors, size_t cap, size_t* n_out) {
  if (!pred || !ref || !n_out) return invalid_argument("null pointer");
  return guarded([&] {
    const em::ErrorReport rep = em::relative_error(pred->impl, ref->impl);
    *n_out = rep.per_time.size();
    const size_t n = std::min(cap, rep.per_time.size());
    for (size_t i = 0; i < n; ++i) {
      if (times) times[i] = rep.per_time[i].first;
      if (errors) errors[i] = rep.per_time[i].second;
    }
  });
}

ems_status ems_nucleation_time(const ems_problem* p, const ems_model* m, int32_t* found,
                               double* t_s) {
  if (!p || !m || !found || !t_s) return invalid_argument("null pointer");
  return guarded([&] {
    const em::NucleationResult res = p->impl.nucleation(m->impl);
    *found = res.found ? 1 : 0;
    *t_s = res.t;
  });
}

ems_status ems_field_nucleation_time(const ems_field* f, double sigma_crit_pa, int32_t* found,
                                     double* t_s) {
  if (!f || !found || !t_s) return invalid_argument("null pointer");
  return guarded([&] {
    const em::NucleationResult res = em::nucleation_time(f->impl, sigma_crit_pa);
    *found = res.found ? 1 : 0;
    *t_s = res.t;
  });
}

}  // extern "C"
