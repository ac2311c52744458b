#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svmrob/measure.hpp"
#include "svmrob/prokhorov.hpp"
#include "svmrob/solver.hpp"

namespace svmrob {

/// The four Monte Carlo harnesses. Each one trains ensembles of models on
/// seeded resamples of a finitely supported base measure and reduces them to
/// per-cell records plus pass/fail predicates.
enum class ExperimentKind { Continuity, QualitativeRobustness, LambdaDecay, Consistency };

std::string kind_name(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& name);

/// lambda(n) = scale * n^exponent. exponent = 0 is a fixed lambda; the decay
/// experiment requires exponent < 0.
struct LambdaSchedule {
  double scale = 1.0;
  double exponent = 0.0;
  double at(int n) const;
  bool fixed() const { return exponent == 0.0; }
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Continuity;
  std::optional<DiscreteMeasure> base_measure;
  /// Mixture contaminant Q. When absent, contamination falls back to
  /// coordinate jitter of amplitude delta.
  std::optional<DiscreteMeasure> contaminant;
  LossPtr loss;
  KernelPtr kernel;
  LambdaSchedule lambda;
  /// Ascending sample sizes. Continuity uses them for the empirical family,
  /// the other experiments for every cell.
  std::vector<int> n_grid;
  /// Datasets per cell; the consistency experiment reads it as the number of
  /// independent nested sample paths.
  int replicates = 200;
  /// Contamination levels, ascending, in [0,1).
  std::vector<double> deltas;
  /// Shrinking jitter amplitudes for the continuity experiment's second
  /// family of weakly convergent sequences.
  std::vector<double> jitter_schedule;
  /// Threshold parameter of the decay counterexample, in (0,1).
  double gamma = 0.5;
  /// Continuity acceptance: final median H-distance must fall below
  /// tolerance_factor * |L|_1 |k|_inf / lambda.
  double tolerance_factor = 0.05;
  /// Probe point for 1-D pushforwards. Defaults to the contaminant input for
  /// the decay experiment and to the weighted mean input otherwise.
  std::optional<Point> probe_x;
  /// Sup-distance grid; defaults to the atom inputs of base and contaminant.
  std::vector<Point> probe_xs;
  std::uint64_t base_seed = 1;
  /// Worker threads for cell execution; results are identical for any value.
  int jobs = 1;
  SolverOptions solver;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// One (n, delta) cell (or one jitter step, or one sample size of the
/// consistency path), reduced over replicates.
struct CellRecord {
  /// "sample", "jitter", "mixture" or "path".
  std::string family;
  int n = 0;
  double delta = 0.0;
  double lambda = 0.0;
  double d_pro_h = 0.0;
  double d_pro_probe = 0.0;
  double med_h_dist = 0.0;
  double med_sup_dist = 0.0;
  double risk_gap = 0.0;
  /// Fraction of attempted trainings that returned a certified model; the
  /// predicates only consume cells at 1.
  double certified_frac = 0.0;
  /// Decay experiment: frequency of |f|_H >= c among certified models.
  double q_freq = 0.0;
  double mean_h_norm = 0.0;
  /// First solver failure message, empty when the cell is clean.
  std::string diagnostic;
  /// Wall clock; excluded from the determinism guarantee.
  double wall_ms = 0.0;
};

struct Predicate {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  ExperimentConfig config;
  /// Theoretical constants in play, keyed by name (|L|_1, |k|_inf, bounds,
  /// Monte Carlo tolerances, counterexample thresholds).
  std::map<std::string, double> constants;
  std::vector<CellRecord> cells;
  std::vector<Predicate> predicates;
  /// "pass", "fail" or "insufficient data".
  std::string verdict;
  /// Wall clock; excluded from the determinism guarantee.
  double total_ms = 0.0;
  bool pass() const { return verdict == "pass"; }
};

/// sum_i w_i L(x_i, y_i, f(x_i)), optionally shifted by L(x_i, y_i, 0) and
/// optionally regularized by lambda |f|^2_H.
double risk(const RkhsFunction& f, const DiscreteMeasure& P, const Loss& loss, bool shifted,
            std::optional<double> lambda = std::nullopt);

/// Trains along two weakly convergent families (empirical resamples of
/// growing size, jitters of shrinking amplitude) and checks that the trained
/// functions converge to the base model in H-norm and sup-norm.
ExperimentReport run_continuity(const ExperimentConfig& config);

/// At fixed lambda, compares model ensembles drawn from the base measure and
/// from its delta-contamination: the pushforward Prokhorov distance must stay
/// uniformly small over the sample-size grid as delta decreases.
ExperimentReport run_qualitative_robustness(const ExperimentConfig& config);

/// The decaying-lambda counterexample: training on samples of the dirac base
/// measure always yields the zero model, while under delta-contamination the
/// model norm exceeds c = min(gamma / |k|_inf, 1) with frequency >= 1/2 once
/// n is large, forcing a pushforward distance >= c/2 between laws whose
/// inputs are only delta apart.
ExperimentReport run_lambda_decay(const ExperimentConfig& config);

/// Nested sample paths at fixed lambda: H-distance, sup-distance and both
/// risk gaps against the base model must vanish along almost every path.
ExperimentReport run_consistency(const ExperimentConfig& config);

/// Dispatch on config.kind.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace svmrob
