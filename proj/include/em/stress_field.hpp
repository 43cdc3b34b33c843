#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace em {

enum class FieldSource { oracle, trial };

const char* field_source_name(FieldSource s);

struct StressSample {
  int segment_id = 0;
  double x = 0.0;      // m (or scaled units, caller's choice)
  double t = 0.0;      // s
  double sigma = 0.0;  // Pa
};

struct StressField {
  FieldSource source = FieldSource::oracle;
  std::vector<StressSample> samples;
};

void write_stress_csv(std::ostream& os, const StressField& field, const std::string& header_note);
StressField read_stress_csv(std::istream& is);

struct ErrorReport {
  double global = 0.0;
  bool zero_reference = false;  // global holds the absolute norm when set
  std::vector<std::pair<double, double>> per_time;  // (t, relative error at t)
};

// ||pred - ref||_2 / ||ref||_2 over matched (segment, x, t) keys.
ErrorReport relative_error(const StressField& pred, const StressField& ref);

struct NucleationResult {
  bool found = false;
  double t = 0.0;
  bool monotone_warning = false;
};

// Earliest t with max_sigma(t) >= sigma_crit, bracketed over [t_lo, t_hi] and
// refined by bisection to rel_tol; falls back to a dense scan when the
// trajectory is found to be non-monotone across the bracketing grid.
NucleationResult nucleation_time(const std::function<double(double)>& max_sigma, double t_lo,
                                 double t_hi, double sigma_crit, double rel_tol = 0.01,
                                 int n_bracket = 64);

// Same search over the per-time maxima of a sampled field (linear in t).
NucleationResult nucleation_time(const StressField& field, double sigma_crit);

}  // namespace em
