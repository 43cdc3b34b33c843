#include "em/stress_field.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "em/error.hpp"

namespace em {

const char* field_source_name(FieldSource s) {
  return s == FieldSource::oracle ? "oracle" : "trial";
}

void write_stress_csv(std::ostream& os, const StressField& field, const std::string& header_note) {
  if (!header_note.empty()) os << "# " << header_note << "\n";
  os << "segment_id,x_m,t_s,sigma_Pa,source\n";
  os.precision(17);
  for (const auto& s : field.samples)
    os << s.segment_id << ',' << s.x << ',' << s.t << ',' << s.sigma << ','
       << field_source_name(field.source) << "\n";
}

StressField read_stress_csv(std::istream& is) {
  StressField field;
  std::string line;
  bool have_source = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("segment_id", 0) == 0) continue;
    std::istringstream row(line);
    StressSample s;
    char comma;
    std::string source;
    if (!(row >> s.segment_id >> comma >> s.x >> comma >> s.t >> comma >> s.sigma >> comma))
      fail(Errc::parse_error, "bad CSV row: " + line);
    std::getline(row, source);
    if (!have_source) {
      field.source = (source == "trial") ? FieldSource::trial : FieldSource::oracle;
      have_source = true;
    }
    field.samples.push_back(s);
  }
  return field;
}

namespace {

struct Key {
  int seg;
  double x;
  double t;
  bool operator<(const Key& o) const {
    if (seg != o.seg) return seg < o.seg;
    if (x != o.x) return x < o.x;
    return t < o.t;
  }
};

}  // namespace

ErrorReport relative_error(const StressField& pred, const StressField& ref) {
  if (pred.samples.size() != ref.samples.size())
    fail(Errc::key_mismatch, "sample counts differ: " + std::to_string(pred.samples.size()) +
                                 " vs " + std::to_string(ref.samples.size()));
  std::map<Key, double> ref_map;
  for (const auto& s : ref.samples) ref_map[{s.segment_id, s.x, s.t}] = s.sigma;

  double num = 0.0, den = 0.0;
  std::map<double, std::pair<double, double>> per_time;  // t -> (num, den)
  for (const auto& s : pred.samples) {
    const auto it = ref_map.find({s.segment_id, s.x, s.t});
    if (it == ref_map.end())
      fail(Errc::key_mismatch, "no reference sample at segment " + std::to_string(s.segment_id) +
                                   " x=" + std::to_string(s.x) + " t=" + std::to_string(s.t));
    const double d = s.sigma - it->second;
    num += d * d;
    den += it->second * it->second;
    auto& cell = per_time[s.t];
    cell.first += d * d;
    cell.second += it->second * it->second;
  }

  ErrorReport rep;
  if (den == 0.0) {
    rep.zero_reference = true;
    rep.global = std::sqrt(num);
  } else {
    rep.global = std::sqrt(num / den);
  }
  for (const auto& [t, cell] : per_time)
    rep.per_time.emplace_back(t, cell.second > 0.0 ? std::sqrt(cell.first / cell.second)
                                                   : std::sqrt(cell.first));
  return rep;
}

NucleationResult nucleation_time(const std::function<double(double)>& max_sigma, double t_lo,
                                 double t_hi, double sigma_crit, double rel_tol, int n_bracket) {
  NucleationResult res;
  if (!(t_hi > t_lo) || n_bracket < 2) fail(Errc::invalid_spec, "bad nucleation bracket");

  // Log-spaced bracketing grid; stress builds up over decades.
  std::vector<double> ts(n_bracket);
  std::vector<double> vs(n_bracket);
  const double lo = std::max(t_lo, t_hi * 1e-12);
  for (int i = 0; i < n_bracket; ++i) {
    ts[i] = lo * std::pow(t_hi / lo, static_cast<double>(i) / (n_bracket - 1));
    vs[i] = max_sigma(ts[i]);
  }
  for (int i = 1; i < n_bracket; ++i)
    if (vs[i] < vs[i - 1] - 1e-9 * std::abs(vs[i - 1])) res.monotone_warning = true;

  int hit = -1;
  if (res.monotone_warning) {
    // Dense scan fallback: first grid crossing wins.
    for (int i = 0; i < n_bracket && hit < 0; ++i)
      if (vs[i] >= sigma_crit) hit = i;
    if (hit < 0) return res;
    res.found = true;
    res.t = ts[hit];
    return res;
  }

  for (int i = 0; i < n_bracket && hit < 0; ++i)
    if (vs[i] >= sigma_crit) hit = i;
  if (hit < 0) return res;
  if (hit == 0) {
    res.found = true;
    res.t = ts[0];
    return res;
  }

  double a = ts[hit - 1], b = ts[hit];
  while ((b - a) > rel_tol * b) {
    const double mid = 0.5 * (a + b);
    if (max_sigma(mid) >= sigma_crit)
      b = mid;
    else
      a = mid;
  }
  res.found = true;
  res.t = b;
  return res;
}

NucleationResult nucleation_time(const StressField& field, double sigma_crit) {
  std::map<double, double> max_by_t;
  for (const auto& s : field.samples) {
    auto [it, fresh] = max_by_t.try_emplace(s.t, s.sigma);
    if (!fresh) it->second = std::max(it->second, s.sigma);
  }
  NucleationResult res;
  double prev = -HUGE_VAL;
  double prev_t = 0.0;
  for (const auto& [t, v] : max_by_t) {
    if (v < prev - 1e-9 * std::abs(prev)) res.monotone_warning = true;
    if (v >= sigma_crit) {
      res.found = true;
      // Interpolate the crossing between stored times when possible.
      if (prev > -HUGE_VAL && v > prev) {
        const double f = (sigma_crit - prev) / (v - prev);
        res.t = prev_t + f * (t - prev_t);
      } else {
        res.t = t;
      }
      return res;
    }
    prev = v;
    prev_t = t;
  }
  return res;
}

}  // namespace em
