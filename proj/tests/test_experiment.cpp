#include <cmath>
#include <random>

#include "doctest.h"
#include "svmrob/experiment.hpp"
#include "svmrob/rng.hpp"

using namespace svmrob;

namespace {

DiscreteMeasure regression_base() {
  return DiscreteMeasure({{{-1.0}, -0.8}, {{0.0}, 0.4}, {{1.0}, 1.2}, {{2.0}, 0.1}},
                         {0.25, 0.25, 0.25, 0.25});
}

ExperimentConfig continuity_config() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Continuity;
  cfg.base_measure = regression_base();
  cfg.loss = make_logistic();
  cfg.kernel = make_rbf(1.0);
  cfg.lambda = {0.1, 0.0};
  cfg.jitter_schedule = {0.5, 0.25, 0.125, 0.0625};
  cfg.replicates = 10;
  cfg.base_seed = 7;
  return cfg;
}

bool same_cells(const ExperimentReport& a, const ExperimentReport& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const CellRecord &x = a.cells[i], &y = b.cells[i];
    if (x.family != y.family || x.n != y.n || x.delta != y.delta || x.lambda != y.lambda ||
        x.d_pro_h != y.d_pro_h || x.d_pro_probe != y.d_pro_probe ||
        x.med_h_dist != y.med_h_dist || x.med_sup_dist != y.med_sup_dist ||
        x.risk_gap != y.risk_gap || x.certified_frac != y.certified_frac ||
        x.q_freq != y.q_freq || x.mean_h_norm != y.mean_h_norm ||
        x.diagnostic != y.diagnostic)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("lambda schedule evaluates scale times n to the exponent") {
  LambdaSchedule fixed{0.3, 0.0};
  CHECK(fixed.fixed());
  CHECK(fixed.at(1) == 0.3);
  CHECK(fixed.at(1000) == 0.3);
  LambdaSchedule decay{2.0, -0.5};
  CHECK_FALSE(decay.fixed());
  CHECK(decay.at(4) == 1.0);
  CHECK(decay.at(100) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK_THROWS_AS(decay.at(0), ConfigError);
}

TEST_CASE("experiment kinds round-trip through their names") {
  for (ExperimentKind k :
       {ExperimentKind::Continuity, ExperimentKind::QualitativeRobustness,
        ExperimentKind::LambdaDecay, ExperimentKind::Consistency})
    CHECK(parse_kind(kind_name(k)) == k);
  CHECK_THROWS_AS(parse_kind("weak-convergence"), ConfigError);
}

TEST_CASE("risk functional: interpolation, shift, regularization, minimality") {
  auto kernel = make_rbf(1.0);
  auto loss = make_absolute();
  DiscreteMeasure P({{{0.0}, 0.5}, {{2.0}, -0.25}}, {0.5, 0.5});

  // A function interpolating every atom has zero unshifted risk.
  const Eigen::MatrixXd K = gram(*kernel, {{0.0}, {2.0}});
  const Eigen::Vector2d alpha = K.fullPivLu().solve(Eigen::Vector2d(0.5, -0.25));
  RkhsFunction interp(kernel, {{0.0}, {2.0}}, {alpha[0], alpha[1]});
  CHECK(risk(interp, P, *loss, false) <= 1e-12);

  // The zero function has zero shifted risk by construction.
  RkhsFunction zero(kernel, {}, {});
  CHECK(risk(zero, P, *loss, true) == 0.0);
  CHECK(risk(zero, P, *loss, true, 0.7) == 0.0);

  // Shifted + regularized matches the solver-side helpers exactly.
  RkhsFunction f(kernel, {{0.0}}, {0.3});
  CHECK(risk(f, P, *loss, true) == shifted_risk(f, P, *loss));
  CHECK(risk(f, P, *loss, true, 0.7) == regularized_shifted_risk(f, P, *loss, 0.7));
  CHECK(risk(f, P, *loss, false) >= 0.0);

  // The trained model beats 100 random candidates on the same support.
  auto model = train(P, loss, kernel, 0.2);
  const double best = risk(model.function, P, *loss, true, 0.2);
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 100; ++rep) {
    RkhsFunction cand(kernel, {{0.0}, {2.0}}, {uniform(gen, -3.0, 3.0), uniform(gen, -3.0, 3.0)});
    CHECK(best <= risk(cand, P, *loss, true, 0.2) + 1e-9);
  }
}

TEST_CASE("config validation names the offending field") {
  ExperimentConfig cfg = continuity_config();
  CHECK_NOTHROW(cfg.validate());

  auto expect_reject = [](ExperimentConfig bad) { CHECK_THROWS_AS(bad.validate(), ConfigError); };

  { ExperimentConfig c = continuity_config(); c.base_measure.reset(); expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.loss = nullptr; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.kernel = nullptr; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.replicates = 0; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.jobs = 0; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.lambda.scale = 0.0; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.lambda.exponent = -0.5; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.n_grid = {10, 10}; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.n_grid = {10, 5}; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.n_grid = {0}; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.jitter_schedule = {0.1, 0.2}; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.jitter_schedule = {0.1, 0.0}; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.jitter_schedule.clear(); expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.probe_x = Point{0.0, 1.0}; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.probe_xs = {{0.0, 1.0}}; expect_reject(c); }
  { ExperimentConfig c = continuity_config(); c.tolerance_factor = 0.0; expect_reject(c); }

  ExperimentConfig qr = continuity_config();
  qr.kind = ExperimentKind::QualitativeRobustness;
  qr.jitter_schedule.clear();
  qr.n_grid = {10, 20};
  qr.deltas = {0.0, 0.1};
  CHECK_NOTHROW(qr.validate());
  { ExperimentConfig c = qr; c.deltas = {0.1, 0.0}; expect_reject(c); }
  { ExperimentConfig c = qr; c.deltas = {0.5, 1.0}; expect_reject(c); }
  { ExperimentConfig c = qr; c.deltas = {-0.1}; expect_reject(c); }
  { ExperimentConfig c = qr; c.deltas.clear(); expect_reject(c); }
  { ExperimentConfig c = qr; c.n_grid.clear(); expect_reject(c); }

  ExperimentConfig ld;
  ld.kind = ExperimentKind::LambdaDecay;
  ld.base_measure = DiscreteMeasure::dirac({0.0}, 0.0);
  ld.contaminant = DiscreteMeasure::dirac({1.0}, 1.0);
  ld.loss = make_absolute();
  ld.kernel = make_rbf(1.0);
  ld.lambda = {1.0, -0.5};
  ld.n_grid = {10, 100};
  ld.deltas = {0.4};
  ld.gamma = 0.5;
  CHECK_NOTHROW(ld.validate());
  { ExperimentConfig c = ld; c.lambda.exponent = 0.0; expect_reject(c); }
  { ExperimentConfig c = ld; c.gamma = 1.0; expect_reject(c); }
  { ExperimentConfig c = ld; c.gamma = 0.0; expect_reject(c); }
  { ExperimentConfig c = ld; c.deltas = {0.0, 0.4}; expect_reject(c); }
  { ExperimentConfig c = ld; c.contaminant.reset(); expect_reject(c); }
  { ExperimentConfig c = ld; c.base_measure = regression_base(); expect_reject(c); }
  { ExperimentConfig c = ld; c.contaminant = DiscreteMeasure::dirac({0.0}, 1.0); expect_reject(c); }
  // Contaminant on which the loss vanishes at t = 0 defeats the construction.
  { ExperimentConfig c = ld; c.contaminant = DiscreteMeasure::dirac({1.0}, 0.0); expect_reject(c); }

  ExperimentConfig cs = continuity_config();
  cs.kind = ExperimentKind::Consistency;
  cs.jitter_schedule.clear();
  cs.n_grid = {10, 40};
  CHECK_NOTHROW(cs.validate());
  { ExperimentConfig c = cs; c.n_grid = {10}; expect_reject(c); }

  // Runners reject a config written for a different kind.
  CHECK_THROWS_AS(run_continuity(qr), ConfigError);
  CHECK_THROWS_AS(run_consistency(qr), ConfigError);
}

TEST_CASE("continuity on a dirac base is exactly trivial") {
  // Every resample of a point mass is the point mass itself, so all
  // distances vanish identically and the report passes.
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Continuity;
  cfg.base_measure = DiscreteMeasure::dirac({0.5}, 1.0);
  cfg.loss = make_logistic();
  cfg.kernel = make_rbf(1.0);
  cfg.lambda = {0.1, 0.0};
  cfg.n_grid = {2, 8};
  cfg.replicates = 4;
  const auto rep = run_continuity(cfg);
  REQUIRE(rep.cells.size() == 2);
  for (const auto& c : rep.cells) {
    CHECK(c.family == "sample");
    CHECK(c.med_h_dist == 0.0);
    CHECK(c.med_sup_dist == 0.0);
    CHECK(c.d_pro_h == 0.0);
    CHECK(c.d_pro_probe == 0.0);
    CHECK(c.certified_frac == 1.0);
  }
  CHECK(rep.pass());
}

TEST_CASE("continuity report on a shrinking jitter schedule") {
  const auto rep = run_continuity(continuity_config());
  REQUIRE(rep.cells.size() == 4);
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    const auto& c = rep.cells[i];
    CHECK(c.family == "jitter");
    CHECK(c.n == static_cast<int>(i + 1));
    CHECK(c.delta == continuity_config().jitter_schedule[i]);
    CHECK(c.certified_frac == 1.0);
    CHECK(c.diagnostic.empty());
    CHECK(c.d_pro_h >= 0.0);
    CHECK(c.d_pro_h <= 1.0);
    CHECK(c.d_pro_probe <= 1.0);
    CHECK(c.med_h_dist >= 0.0);
    // Embedding inequality on the aggregated medians.
    CHECK(c.med_sup_dist <= rep.constants.at("kernel_sup_norm") * c.med_h_dist + 1e-9);
  }
  // Halving the jitter amplitude shrinks the median H-distance every step.
  for (std::size_t i = 1; i < rep.cells.size(); ++i)
    CHECK(rep.cells[i].med_h_dist < rep.cells[i - 1].med_h_dist);
  CHECK(rep.constants.at("h_norm_bound") == doctest::Approx(10.0));
  CHECK(rep.constants.at("h_distance_tolerance") == doctest::Approx(0.5));
  for (const auto& p : rep.predicates) {
    CAPTURE(p.name);
    CAPTURE(p.detail);
    CHECK(p.pass);
  }
  CHECK(rep.pass());
  CHECK(rep.verdict == "pass");
}

TEST_CASE("experiment reports are deterministic and thread-count invariant") {
  ExperimentConfig cfg = continuity_config();
  cfg.jitter_schedule = {0.4, 0.2};
  cfg.replicates = 6;
  const auto a = run_continuity(cfg);
  const auto b = run_continuity(cfg);
  CHECK(same_cells(a, b));
  CHECK(a.constants == b.constants);
  ExperimentConfig threaded = cfg;
  threaded.jobs = 3;
  const auto c = run_continuity(threaded);
  CHECK(same_cells(a, c));
  ExperimentConfig reseeded = cfg;
  reseeded.base_seed = 8;
  const auto d = run_continuity(reseeded);
  CHECK_FALSE(same_cells(a, d));
  // Dispatch produces the same report as the direct runner.
  const auto e = run_experiment(cfg);
  CHECK(same_cells(a, e));
}

TEST_CASE("qualitative robustness: contamination separates ensembles monotonically") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::QualitativeRobustness;
  cfg.base_measure =
      DiscreteMeasure({{{-1.0}, -1.0}, {{1.0}, 1.0}}, {0.5, 0.5});
  cfg.contaminant = DiscreteMeasure::dirac({1.0}, -1.0);
  cfg.loss = make_hinge();
  cfg.kernel = make_rbf(1.0);
  cfg.lambda = {1.0, 0.0};
  cfg.n_grid = {20, 40};
  cfg.deltas = {0.0, 0.3};
  cfg.replicates = 20;
  cfg.base_seed = 3;
  const auto rep = run_qualitative_robustness(cfg);
  REQUIRE(rep.cells.size() == 4);
  const double mc = rep.constants.at("mc_tolerance");
  CHECK(mc == doctest::Approx(1.36 / std::sqrt(20.0)).epsilon(1e-14));
  CHECK(rep.constants.at("mc_budget") == doctest::Approx(2.0 * mc).epsilon(1e-14));
  for (const auto& c : rep.cells) {
    CHECK(c.family == "mixture");
    CHECK(c.certified_frac == 1.0);
    CHECK(c.d_pro_h >= 0.0);
    CHECK(c.d_pro_h <= 1.0);
    CHECK(c.d_pro_probe <= 1.0);
    CHECK(c.mean_h_norm <= rep.constants.at("h_norm_bound") + 1e-9);
  }
  CHECK(rep.constants.count("sup_dpro_probe_delta_0") == 1);
  CHECK(rep.constants.count("sup_dpro_probe_delta_0.3") == 1);
  // A thirty percent label flip at x = 1 must separate the laws more than
  // sampling noise does.
  CHECK(rep.constants.at("sup_dpro_probe_delta_0") <
        rep.constants.at("sup_dpro_probe_delta_0.3"));
  for (const auto& p : rep.predicates) {
    CAPTURE(p.name);
    CAPTURE(p.detail);
    CHECK(p.pass);
  }
  CHECK(rep.pass());
}

TEST_CASE("lambda decay reproduces the non-robustness counterexample in miniature") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::LambdaDecay;
  cfg.base_measure = DiscreteMeasure::dirac({0.0}, 0.0);
  cfg.contaminant = DiscreteMeasure::dirac({1.0}, 1.0);
  cfg.loss = make_absolute();
  cfg.kernel = make_rbf(4.0);
  cfg.lambda = {1.0, -0.5};
  cfg.gamma = 0.5;
  cfg.n_grid = {4, 150};
  cfg.deltas = {0.4};
  cfg.replicates = 10;
  cfg.base_seed = 5;
  const auto rep = run_lambda_decay(cfg);
  REQUIRE(rep.cells.size() == 2);

  CHECK(rep.constants.at("c") == 0.5);
  CHECK(rep.constants.at("c_half") == 0.25);
  // Witness norm for rbf(4): 1 / (1 - exp(-8)).
  CHECK(rep.constants.at("witness_norm_sq") ==
        doctest::Approx(1.0 / (1.0 - std::exp(-8.0))).epsilon(1e-12));
  // n* = (|f~|^2 / ((delta/2) L(x1,1,gamma)))^2 for the square-root decay.
  const double nstar = std::pow(rep.constants.at("witness_norm_sq") / (0.2 * 0.5), 2.0);
  CHECK(rep.constants.at("n_star_delta_0.4") == doctest::Approx(nstar).epsilon(1e-12));
  CHECK(rep.constants.at("d_pro_inputs_delta_0.4") == doctest::Approx(0.4).epsilon(1e-12));

  const auto& small = rep.cells[0];
  const auto& large = rep.cells[1];
  CHECK(small.n == 4);
  CHECK(large.n == 150);
  CHECK(small.lambda == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(large.lambda == doctest::Approx(1.0 / std::sqrt(150.0)).epsilon(1e-14));
  // Past n* the contaminated branch produces large models at least half the
  // time; well before n* it does not.
  CHECK(small.q_freq < 0.5);
  CHECK(large.q_freq >= 0.5);
  CHECK(large.d_pro_h >= 0.25);
  for (const auto& p : rep.predicates) {
    CAPTURE(p.name);
    CAPTURE(p.detail);
    CHECK(p.pass);
  }
  CHECK(rep.pass());
}

TEST_CASE("consistency gaps vanish along nested sample paths") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Consistency;
  cfg.base_measure = regression_base();
  cfg.loss = make_logistic();
  cfg.kernel = make_rbf(1.0);
  cfg.lambda = {0.5, 0.0};
  cfg.n_grid = {10, 40, 160, 640};
  cfg.replicates = 10;
  cfg.base_seed = 2;
  const auto rep = run_consistency(cfg);
  REQUIRE(rep.cells.size() == 4);
  for (const auto& c : rep.cells) {
    CHECK(c.family == "path");
    CHECK(c.certified_frac == 1.0);
    CHECK(c.d_pro_h >= 0.0);
    CHECK(c.d_pro_h <= 1.0);
  }
  // Median H-distance shrinks as the nested samples grow.
  CHECK(rep.cells.back().med_h_dist < rep.cells.front().med_h_dist);
  for (const auto& p : rep.predicates) {
    CAPTURE(p.name);
    CAPTURE(p.detail);
    CHECK(p.pass);
  }
  CHECK(rep.pass());
}
