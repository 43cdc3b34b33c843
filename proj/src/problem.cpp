#include "em/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace em {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
  fail(Errc::parse_error, path + ": " + why);
}

double get_num(const json& j, const std::string& path, const char* key, double fallback,
               bool required = false) {
  if (!j.contains(key)) {
    if (required) bad_field(path + "." + key, "missing");
    return fallback;
  }
  if (!j[key].is_number()) bad_field(path + "." + key, "must be a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) bad_field(path + "." + key, "must be an integer");
  return j[key].get<int>();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<double> default_probe_times() {
  std::vector<double> t(10);
  for (int i = 0; i < 10; ++i) t[i] = 1e5 * std::pow(1e3, i / 9.0);
  t[9] = 1e8;
  return t;
}

std::vector<double> default_probe_fractions() {
  std::vector<double> f(11);
  for (int i = 0; i <= 10; ++i) f[i] = i / 10.0;
  return f;
}

InterconnectTree tree_from_json(const json& root) {
  if (!root.contains("nodes") || !root["nodes"].is_array())
    bad_field("nodes", "missing or not an array");
  if (!root.contains("segments") || !root["segments"].is_array())
    bad_field("segments", "missing or not an array");

  std::vector<Node> nodes;
  for (std::size_t i = 0; i < root["nodes"].size(); ++i) {
    const json& jn = root["nodes"][i];
    const std::string path = "nodes[" + std::to_string(i) + "]";
    Node n;
    n.id = get_int(jn, path, "id", -1);
    if (n.id < 0) bad_field(path + ".id", "missing or negative");
    n.coord.x = get_num(jn, path, "x_m", 0.0, true);
    n.coord.y = get_num(jn, path, "y_m", 0.0, true);
    nodes.push_back(n);
  }

  std::vector<Segment> segments;
  for (std::size_t i = 0; i < root["segments"].size(); ++i) {
    const json& js = root["segments"][i];
    const std::string path = "segments[" + std::to_string(i) + "]";
    Segment s;
    s.id = get_int(js, path, "id", -1);
    if (s.id < 0) bad_field(path + ".id", "missing or negative");
    s.node_prev = get_int(js, path, "prev", -1);
    s.node_next = get_int(js, path, "next", -1);
    if (s.node_prev < 0 || s.node_next < 0) bad_field(path, "prev/next node ids required");
    s.width = get_num(js, path, "width_m", 0.0, true);
    if (!(s.width > 0.0)) bad_field(path + ".width_m", "must be > 0");
    s.current_density = get_num(js, path, "j_A_per_m2", 0.0, true);
    const std::string ori = js.value("orientation", std::string("horizontal"));
    if (ori != "horizontal" && ori != "vertical")
      bad_field(path + ".orientation", "must be horizontal or vertical");
    s.orientation = ori == "vertical" ? Orientation::vertical : Orientation::horizontal;
    // Length derives from the node coordinates unless given explicitly, in
    // which case build_tree cross-checks it.
    if (js.contains("length_m")) {
      s.length = get_num(js, path, "length_m", 0.0);
    } else {
      const auto find_node = [&](int id) -> const Node* {
        for (const auto& n : nodes)
          if (n.id == id) return &n;
        return nullptr;
      };
      const Node* a = find_node(s.node_prev);
      const Node* b = find_node(s.node_next);
      if (!a || !b) fail(Errc::dangling_reference, path + " references a missing node");
      s.length = std::hypot(b->coord.x - a->coord.x, b->coord.y - a->coord.y);
    }
    segments.push_back(s);
  }
  return build_tree(std::move(segments), std::move(nodes));
}

MaterialParams material_from_json(const json& root) {
  MaterialParams m;
  if (!root.contains("material")) return m;
  const json& jm = root["material"];
  const std::string p = "material";
  m.k_boltzmann = get_num(jm, p, "k_boltzmann_J_per_K", m.k_boltzmann);
  m.e_charge = get_num(jm, p, "e_charge_C", m.e_charge);
  m.z_eff = get_num(jm, p, "z_eff", m.z_eff);
  m.e_activation_eV = get_num(jm, p, "e_activation_eV", m.e_activation_eV);
  m.bulk_modulus = get_num(jm, p, "bulk_modulus_Pa", m.bulk_modulus);
  m.d0_self_diffusion = get_num(jm, p, "d0_m2_per_s", m.d0_self_diffusion);
  m.resistivity = get_num(jm, p, "resistivity_ohm_m", m.resistivity);
  m.atomic_volume = get_num(jm, p, "atomic_volume_m3", m.atomic_volume);
  m.sigma_crit = get_num(jm, p, "sigma_crit_Pa", m.sigma_crit);
  m.c_v = get_num(jm, p, "c_v_per_m3", m.c_v);
  m.validate();
  return m;
}

TemperatureModel temperature_from_json(const json& root) {
  TemperatureModel t;
  if (!root.contains("temperature")) return t;
  const json& jt = root["temperature"];
  const std::string p = "temperature";
  const std::string kind = jt.value("kind", std::string("constant"));
  if (kind == "constant")
    t.kind = TemperatureKind::constant;
  else if (kind == "sinusoidal")
    t.kind = TemperatureKind::sinusoidal;
  else if (kind == "tabulated")
    t.kind = TemperatureKind::tabulated;
  else
    bad_field(p + ".kind", "must be constant, sinusoidal or tabulated");
  t.T0 = get_num(jt, p, "T0_K", t.T0);
  t.amplitude = get_num(jt, p, "amplitude_K", t.amplitude);
  t.angular_rate = get_num(jt, p, "angular_rate_rad_per_s", t.angular_rate);
  if (jt.contains("table")) {
    if (!jt["table"].is_array()) bad_field(p + ".table", "must be an array of [t, T] pairs");
    for (const auto& row : jt["table"]) {
      if (!row.is_array() || row.size() != 2) bad_field(p + ".table", "entries must be [t, T]");
      t.table.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
  }
  t.validate();
  return t;
}

RandomTreeSpec random_tree_from_json(const json& jr) {
  RandomTreeSpec s;
  const std::string p = "random_tree";
  s.n_segments = get_int(jr, p, "n_segments", s.n_segments);
  s.length_min = get_num(jr, p, "length_min_m", s.length_min);
  s.length_max = get_num(jr, p, "length_max_m", s.length_max);
  s.j_min = get_num(jr, p, "j_min_A_per_m2", s.j_min);
  s.j_max = get_num(jr, p, "j_max_A_per_m2", s.j_max);
  if (jr.contains("width_set_m")) {
    if (!jr["width_set_m"].is_array()) bad_field(p + ".width_set_m", "must be an array");
    s.width_set.clear();
    for (const auto& w : jr["width_set_m"]) s.width_set.push_back(w.get<double>());
  }
  s.seed = static_cast<std::uint64_t>(get_num(jr, p, "seed", 1.0));
  s.branching = jr.value("branching", false);
  s.validate();
  return s;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) fail(Errc::parse_error, "config is not valid JSON");
  if (!root.is_object()) fail(Errc::parse_error, "config root must be an object");

  RunConfig cfg;
  cfg.config_hash = fnv1a(root.dump());

  if (root.contains("random_tree")) {
    cfg.random_tree = random_tree_from_json(root["random_tree"]);
    cfg.tree = generate_random_tree(*cfg.random_tree);
  } else {
    cfg.tree = tree_from_json(root);
  }
  cfg.material = material_from_json(root);
  cfg.temperature = temperature_from_json(root);

  if (root.contains("scaling")) {
    const json& js = root["scaling"];
    cfg.scaling.omega_x = get_num(js, "scaling", "omega_x", cfg.scaling.omega_x);
    cfg.scaling.omega_t = get_num(js, "scaling", "omega_t", cfg.scaling.omega_t);
    cfg.scaling.omega_sigma = get_num(js, "scaling", "omega_sigma", cfg.scaling.omega_sigma);
    cfg.scaling.validate();
  }

  if (root.contains("trial")) {
    const json& jt = root["trial"];
    cfg.trial.n_gauss = get_int(jt, "trial", "n_gauss", cfg.trial.n_gauss);
    cfg.trial.n_reflections = get_int(jt, "trial", "n_reflections", cfg.trial.n_reflections);
    cfg.trial.erfc_tolerance = get_num(jt, "trial", "erfc_tolerance", cfg.trial.erfc_tolerance);
    cfg.trial.validate();
  }

  cfg.training.t_steady = 1e8;  // SI default at this level
  if (root.contains("training")) {
    const json& jt = root["training"];
    const std::string p = "training";
    cfg.training.n_c = get_int(jt, p, "n_c", cfg.training.n_c);
    cfg.training.t_steady = get_num(jt, p, "t_steady_s", cfg.training.t_steady);
    cfg.training.max_iters = get_int(jt, p, "max_iters", cfg.training.max_iters);
    cfg.training.lbfgs_memory = get_int(jt, p, "lbfgs_memory", cfg.training.lbfgs_memory);
    cfg.training.wolfe_c1 = get_num(jt, p, "wolfe_c1", cfg.training.wolfe_c1);
    cfg.training.wolfe_c2 = get_num(jt, p, "wolfe_c2", cfg.training.wolfe_c2);
    cfg.training.grad_tolerance = get_num(jt, p, "grad_tolerance", cfg.training.grad_tolerance);
    cfg.training.loss_tolerance = get_num(jt, p, "loss_tolerance", cfg.training.loss_tolerance);
    cfg.training.initial_step = get_num(jt, p, "initial_step", cfg.training.initial_step);
    cfg.training.hidden_layers = get_int(jt, p, "hidden_layers", cfg.training.hidden_layers);
    cfg.training.hidden_width = get_int(jt, p, "hidden_width", cfg.training.hidden_width);
    cfg.training.seed = static_cast<std::uint64_t>(get_num(jt, p, "seed", 1.0));
    cfg.training.extended_inputs = jt.value("extended_inputs", false);
    const std::string mode = jt.value("mode", std::string("per_case"));
    if (mode == "per_case")
      cfg.training.mode = TrainMode::per_case;
    else if (mode == "parameterized")
      cfg.training.mode = TrainMode::parameterized;
    else
      bad_field("training.mode", "must be per_case or parameterized");
    cfg.param_cases = get_int(jt, p, "param_cases", cfg.param_cases);
    cfg.training.validate();
  }

  if (root.contains("fdm")) {
    const json& jf = root["fdm"];
    const std::string p = "fdm";
    cfg.fdm.dx_target = get_num(jf, p, "dx_target_m", cfg.fdm.dx_target);
    cfg.fdm.dt_initial = get_num(jf, p, "dt_initial_s", cfg.fdm.dt_initial);
    cfg.fdm.dt_growth = get_num(jf, p, "dt_growth", cfg.fdm.dt_growth);
    cfg.fdm.dt_max = get_num(jf, p, "dt_max_s", cfg.fdm.dt_max);
    cfg.fdm.t_end = get_num(jf, p, "t_end_s", cfg.fdm.t_end);
    cfg.fdm.validate();
  }

  cfg.probes.times = default_probe_times();
  cfg.probes.fractions = default_probe_fractions();
  if (root.contains("probes")) {
    const json& jp = root["probes"];
    if (jp.contains("times_s")) {
      if (!jp["times_s"].is_array()) bad_field("probes.times_s", "must be an array");
      cfg.probes.times.clear();
      for (const auto& t : jp["times_s"]) cfg.probes.times.push_back(t.get<double>());
    }
    if (jp.contains("fractions")) {
      if (!jp["fractions"].is_array()) bad_field("probes.fractions", "must be an array");
      cfg.probes.fractions.clear();
      for (const auto& f : jp["fractions"]) cfg.probes.fractions.push_back(f.get<double>());
    }
  }
  for (double t : cfg.probes.times)
    if (!(t > 0.0) || t > cfg.training.t_steady * (1.0 + 1e-12) || t > cfg.fdm.t_end * (1.0 + 1e-12))
      bad_field("probes.times_s", "probe t=" + std::to_string(t) +
                                      " must lie in (0, min(t_steady, fdm.t_end)]");
  for (double f : cfg.probes.fractions)
    if (!(f >= 0.0 && f <= 1.0)) bad_field("probes.fractions", "fractions must lie in [0, 1]");

  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str());
}

std::string describe(const InterconnectTree& tree) {
  const int s = static_cast<int>(tree.segments.size());
  const int j = tree.n_junctions();
  const int t = tree.n_terminals();
  std::ostringstream os;
  os << s << " segment" << (s == 1 ? "" : "s") << ", " << j << " junction" << (j == 1 ? "" : "s")
     << ", " << t << " terminal" << (t == 1 ? "" : "s");
  return os.str();
}

Problem::Problem(RunConfig cfg) : cfg_(std::move(cfg)) {
  ctx_si_ = node_contexts(cfg_.tree, cfg_.material, cfg_.temperature.T0);
  ctx_scaled_ = scale_problem(ctx_si_, cfg_.scaling);
  if (dynamic_temperature()) {
    const double kappa0 = diffusivity(cfg_.temperature.T0, cfg_.material);
    const double horizon = std::max(cfg_.fdm.t_end, cfg_.training.t_steady) * 1.000001;
    time_map_ = std::make_unique<EffectiveTimeMap>(cfg_.temperature, cfg_.material, kappa0,
                                                   horizon);
  }
}

bool Problem::dynamic_temperature() const {
  return cfg_.temperature.kind != TemperatureKind::constant;
}

double Problem::scaled_time(double t_si) const {
  const double t_eff = time_map_ ? (*time_map_)(t_si) : t_si;
  return cfg_.scaling.scale_t(t_eff);
}

MlpModel Problem::make_model(std::uint64_t seed) const {
  return init_xavier(mlp_layer_sizes(cfg_.training), seed);
}

TrainReport Problem::train_model(MlpModel& model) const {
  TrainingConfig tc = cfg_.training;
  tc.t_steady = scaled_time(cfg_.training.t_steady);
  if (tc.mode == TrainMode::parameterized) {
    RandomTreeSpec spec = cfg_.random_tree ? *cfg_.random_tree : RandomTreeSpec{};
    auto [trained, report] = train_parameterized(std::move(model), spec, cfg_.param_cases,
                                                 cfg_.material, cfg_.temperature.T0, cfg_.scaling,
                                                 cfg_.trial, tc);
    model = std::move(trained);
    return report;
  }
  auto [trained, report] = train(std::move(model), ctx_scaled_, cfg_.trial, tc);
  model = std::move(trained);
  return report;
}

StressField Problem::infer(const MlpModel& model) const {
  const bool extended = model.input_dim() == mlp_input_dim(true);
  StressEvaluator eval(ctx_scaled_, model, cfg_.trial, extended);
  StressField field;
  field.source = FieldSource::trial;
  for (double t : cfg_.probes.times) {
    const double ts = scaled_time(t);
    for (const auto& seg : ctx_si_.segments) {
      const double Ls = ctx_scaled_.segments[seg.segment_id].L;
      for (double f : cfg_.probes.fractions) {
        const double sigma = cfg_.scaling.unscale_sigma(eval(seg.segment_id, f * Ls, ts));
        field.samples.push_back({seg.segment_id, f * seg.L, t, sigma});
      }
    }
  }
  return field;
}

double Problem::infer_at(const MlpModel& model, int segment_id, double fraction,
                         double t_si) const {
  if (!(fraction >= 0.0 && fraction <= 1.0)) fail(Errc::out_of_range, "fraction outside [0, 1]");
  const bool extended = model.input_dim() == mlp_input_dim(true);
  StressEvaluator eval(ctx_scaled_, model, cfg_.trial, extended);
  const double Ls = ctx_scaled_.segments.at(segment_id).L;
  return cfg_.scaling.unscale_sigma(eval(segment_id, fraction * Ls, scaled_time(t_si)));
}

FdmRun Problem::oracle() const {
  std::function<double(double)> kappa_of_t;
  if (dynamic_temperature()) {
    const MaterialParams material = cfg_.material;
    const TemperatureModel temp = cfg_.temperature;
    kappa_of_t = [material, temp](double t) { return diffusivity(temperature(t, temp), material); };
  }
  FdmConfig fc = cfg_.fdm;
  for (double t : cfg_.probes.times) fc.t_end = std::max(fc.t_end, t);
  return fdm_solve(cfg_.tree, ctx_si_, fc, cfg_.probes.times, cfg_.probes.fractions, kappa_of_t);
}

NucleationResult Problem::nucleation(const MlpModel& model) const {
  const bool extended = model.input_dim() == mlp_input_dim(true);
  StressEvaluator eval(ctx_scaled_, model, cfg_.trial, extended);
  const auto max_sigma = [&](double t_si) {
    return cfg_.scaling.unscale_sigma(
        eval.max_over_fractions(scaled_time(t_si), cfg_.probes.fractions));
  };
  const double lo = *std::min_element(cfg_.probes.times.begin(), cfg_.probes.times.end());
  const double hi = *std::max_element(cfg_.probes.times.begin(), cfg_.probes.times.end());
  return nucleation_time(max_sigma, lo, hi, cfg_.material.sigma_crit);
}

}  // namespace em
