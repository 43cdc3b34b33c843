#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "em/fdm.hpp"
#include "em/trial.hpp"
#include "test_trees.hpp"

using namespace em;

namespace {

const MaterialParams kCopper;

FdmConfig tight_config(double t_end) {
  FdmConfig cfg;
  cfg.dx_target = 1e-7;
  cfg.dt_initial = 5.0;
  cfg.dt_growth = 1.05;
  cfg.dt_max = 1e6;
  cfg.t_end = t_end;
  return cfg;
}

}  // namespace

TEST_CASE("zero current gives identically zero stress") {
  const InterconnectTree tree = make_chain({2e-5, 3e-5}, {0.0, 0.0});
  const TreeContexts ctx = node_contexts(tree, kCopper);
  const FdmRun run = fdm_solve(tree, ctx, tight_config(1e7), {1e5, 1e6, 1e7}, {0.0, 0.5, 1.0});
  REQUIRE(!run.field.samples.empty());
  for (const auto& s : run.field.samples) CHECK(s.sigma == 0.0);
}

TEST_CASE("blocked single wire relaxes to the linear steady state within 0.1%") {
  const double L = 2e-5;
  const InterconnectTree tree = make_chain({L}, {4e9});
  const TreeContexts ctx = node_contexts(tree, kCopper);
  const double G = ctx.segments[0].G;
  const double t_end = 5.0 * L * L / ctx.segments[0].kappa;  // far past the transient

  FdmConfig cfg = tight_config(t_end);
  cfg.dx_target = L / 200.0;
  const std::vector<double> fractions{0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};
  const FdmRun run = fdm_solve(tree, ctx, cfg, {t_end}, fractions);
  REQUIRE(run.field.samples.size() == fractions.size());
  for (const auto& s : run.field.samples) {
    const double want = G * (L / 2.0 - s.x);
    CHECK(std::abs(s.sigma - want) <= 1e-3 * G * L / 2.0);
  }
}

TEST_CASE("halving dx and dt reduces the transient error at least 2x") {
  // Compare against the zero-flux analytic series at a mid-transient time.
  const double L = 2e-5;
  const InterconnectTree tree = make_chain({L}, {4e9});
  const TreeContexts ctx = node_contexts(tree, kCopper);
  const double G = ctx.segments[0].G;
  const double kappa = ctx.segments[0].kappa;
  const double t_probe = 0.2 * L * L / kappa;

  // sigma(x,t) = G(L/2 - x) - sum_n (4GL/(pi^2 (2k+1)^2)) cos((2k+1) pi x/L) e^{-...}
  const auto exact = [&](double x, double t) {
    double s = G * (L / 2.0 - x);
    for (int k = 0; k < 400; ++k) {
      const int n = 2 * k + 1;
      const double lam = n * M_PI / L;
      s -= 4.0 * G * L / (M_PI * M_PI * n * n) * std::cos(lam * x) *
           std::exp(-kappa * lam * lam * t);
    }
    return s;
  };

  const auto solve_err = [&](double refine) {
    FdmConfig cfg = tight_config(t_probe);
    cfg.dx_target = L / (50.0 * refine);
    cfg.dt_initial = 4e4 / refine;
    cfg.dt_growth = 1.0;  // uniform steps isolate the first-order dt error
    cfg.dt_max = 4e4 / refine;
    const std::vector<double> fractions{0.0, 0.25, 0.5, 0.75, 1.0};
    const FdmRun run = fdm_solve(tree, ctx, cfg, {t_probe}, fractions);
    double worst = 0.0;
    for (const auto& s : run.field.samples)
      worst = std::max(worst, std::abs(s.sigma - exact(s.x, s.t)));
    return worst;
  };

  const double coarse = solve_err(1.0);
  const double fine = solve_err(2.0);
  CHECK(fine * 2.0 <= coarse);
}

TEST_CASE("atom count stays balanced with all terminals blocked") {
  const InterconnectTree tree = make_chain({1e-5, 2e-5, 1e-5, 1e-5}, {4e9, -1e9, -4e9, -1e9},
                                           {1e-7, 2e-7, 2e-7, 1e-7});
  const TreeContexts ctx = node_contexts(tree, kCopper);
  FdmConfig cfg = tight_config(1e8);
  cfg.dx_target = 1e-7;
  const FdmRun run = fdm_solve(tree, ctx, cfg, {1e8}, {0.0, 0.5, 1.0});
  REQUIRE(!run.mass_residual.empty());
  // The one-sided junction rows conserve to O(h^2) of the resolved profile;
  // below ~10 cells per diffusion length the relative measure is dominated
  // by unresolved startup layers, so gate on resolution.
  const double kappa = ctx.segments[0].kappa;
  int checked = 0;
  for (std::size_t i = 0; i < run.step_times.size(); ++i) {
    if (std::sqrt(kappa * run.step_times[i]) < 10.0 * cfg.dx_target) continue;
    CHECK(run.mass_residual[i] <= 1e-3);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("junction flux balance residual stays at solver precision") {
  const InterconnectTree tree = make_cross();
  const TreeContexts ctx = node_contexts(tree, kCopper);
  FdmConfig cfg = tight_config(1e8);
  cfg.dx_target = 2e-7;
  const FdmRun run = fdm_solve(tree, ctx, cfg, {1e8}, {0.0, 1.0});
  REQUIRE(!run.flux_residual.empty());
  for (double r : run.flux_residual) CHECK(r <= 1e-10);
}

TEST_CASE("oracle and constant-gradient trial agree on one blocked segment") {
  const double L = 2e-5;
  const InterconnectTree tree = make_chain({L}, {4e9});
  const TreeContexts ctx = node_contexts(tree, kCopper);
  const double G = ctx.segments[0].G;

  FdmConfig cfg = tight_config(1e8);
  cfg.dx_target = L / 200.0;
  std::vector<double> times;
  for (int i = 0; i < 10; ++i) times.push_back(1e5 * std::pow(1e3, i / 9.0));
  const std::vector<double> fractions{0.0, 0.25, 0.5, 0.75, 1.0};
  const FdmRun run = fdm_solve(tree, ctx, cfg, times, fractions);

  GradientSpec grads{-G, -G, nullptr, nullptr};
  const TrialConfig trial_cfg;
  double num = 0.0, den = 0.0;
  for (const auto& s : run.field.samples) {
    const double t = trial_eval(s.x, s.t, ctx.segments[0], grads, trial_cfg);
    num += (t - s.sigma) * (t - s.sigma);
    den += s.sigma * s.sigma;
  }
  CHECK(std::sqrt(num / den) <= 0.005);
}

TEST_CASE("relative error basics") {
  StressField ref;
  ref.samples = {{0, 0.0, 1.0, 2.0}, {0, 0.5, 1.0, -1.0}, {1, 0.0, 2.0, 4.0}};
  StressField same = ref;
  same.source = FieldSource::trial;
  CHECK(relative_error(same, ref).global == 0.0);

  StressField scaled = ref;
  for (auto& s : scaled.samples) s.sigma *= 1.01;
  CHECK(relative_error(scaled, ref).global == doctest::Approx(0.01).epsilon(1e-12));

  StressField missing = ref;
  missing.samples[1].x = 0.75;
  CHECK_THROWS_WITH_AS(relative_error(missing, ref), doctest::Contains("KeyMismatch"), Error);

  StressField zero_ref = ref;
  for (auto& s : zero_ref.samples) s.sigma = 0.0;
  const ErrorReport rep = relative_error(ref, zero_ref);
  CHECK(rep.zero_reference);
  CHECK(rep.global == doctest::Approx(std::sqrt(4.0 + 1.0 + 16.0)));
}

TEST_CASE("relative error reports a per-time breakdown") {
  StressField ref;
  ref.samples = {{0, 0.0, 1.0, 2.0}, {0, 0.5, 1.0, 2.0}, {0, 0.0, 5.0, 10.0}};
  StressField pred = ref;
  pred.samples[2].sigma = 10.5;  // only the t=5 slice is off
  const ErrorReport rep = relative_error(pred, ref);
  REQUIRE(rep.per_time.size() == 2);
  CHECK(rep.per_time[0].first == 1.0);
  CHECK(rep.per_time[0].second == 0.0);
  CHECK(rep.per_time[1].first == 5.0);
  CHECK(rep.per_time[1].second == doctest::Approx(0.05));
}

TEST_CASE("nucleation search against a dense scan") {
  // max stress grows like 2 G sqrt(kt/pi) on a blocked wire before
  // saturation; use the trial function itself as the evaluator.
  const double L = 2e-5;
  const InterconnectTree tree = make_chain({L}, {4e9});
  const TreeContexts ctx = node_contexts(tree, kCopper);
  const double G = ctx.segments[0].G;
  const double sigma_crit = G * L / 4.0;  // half the steady cathode stress
  GradientSpec grads{-G, -G, nullptr, nullptr};
  const TrialConfig tc;
  const auto max_sigma = [&](double t) { return trial_eval(0.0, t, ctx.segments[0], grads, tc); };

  const NucleationResult fast = nucleation_time(max_sigma, 1e4, 1e8, sigma_crit);
  REQUIRE(fast.found);
  CHECK(!fast.monotone_warning);

  double dense_t = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = 1e4 * std::pow(1e4, i / 999.0);
    if (max_sigma(t) >= sigma_crit) {
      dense_t = t;
      break;
    }
  }
  REQUIRE(dense_t > 0.0);
  CHECK(std::abs(fast.t - dense_t) <= 0.02 * dense_t);
}

TEST_CASE("nucleation returns none when the threshold is out of reach") {
  const auto max_sigma = [](double t) { return std::sqrt(t); };
  const NucleationResult res = nucleation_time(max_sigma, 1.0, 100.0, 1e6);
  CHECK(!res.found);
}

TEST_CASE("raising the threshold never lowers the nucleation time") {
  const auto max_sigma = [](double t) { return 2.0 * std::sqrt(t); };
  double prev = 0.0;
  for (double crit : {2.0, 4.0, 8.0, 16.0}) {
    const NucleationResult res = nucleation_time(max_sigma, 0.1, 1e3, crit);
    REQUIRE(res.found);
    CHECK(res.t >= prev);
    prev = res.t;
  }
}

TEST_CASE("field-based nucleation interpolates between stored times") {
  StressField f;
  for (double t : {1.0, 2.0, 3.0})
    for (double x : {0.0, 0.5}) f.samples.push_back({0, x, t, t * 10.0});
  const NucleationResult res = nucleation_time(f, 25.0);
  REQUIRE(res.found);
  CHECK(res.t == doctest::Approx(2.5).epsilon(1e-12));
  const NucleationResult none = nucleation_time(f, 500.0);
  CHECK(!none.found);
}

TEST_CASE("probe times beyond t_end are rejected") {
  const InterconnectTree tree = make_chain({2e-5}, {4e9});
  const TreeContexts ctx = node_contexts(tree, kCopper);
  CHECK_THROWS_AS(fdm_solve(tree, ctx, tight_config(1e6), {1e7}, {0.5}), Error);
}
