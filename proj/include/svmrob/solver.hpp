#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svmrob/kernel.hpp"
#include "svmrob/loss.hpp"
#include "svmrob/measure.hpp"

namespace svmrob {

struct SolverOptions {
  /// Cap on accepted steps per smoothing stage.
  int max_iterations = 500;
  /// Certificate target; defaults to 1e-6 for differentiable losses and
  /// 1e-3 otherwise.
  std::optional<double> tolerance;
  /// Strictly decreasing smoothing widths for nondifferentiable losses;
  /// empty selects {1e-1, 1e-2, 1e-3, 1e-4} * |L|_1.
  std::vector<double> smoothing_schedule;
  /// Added to the Gram diagonal inside the step equation only; norms,
  /// objectives and certificates always use the exact Gram matrix.
  double gram_jitter = 0.0;
  /// 0 starts from the zero function; any other value draws a small random
  /// warm start (training is deterministic given the seed either way).
  std::uint64_t seed = 0;
  /// Admits losses that fail the contract (unbounded growth); their norm
  /// guarantees are then void and not enforced.
  bool allow_contract_violations = false;
};

struct SvmModel {
  RkhsFunction function;
  double lambda = 0.0;
  LossPtr loss;
  /// Regularized shifted risk at the trained function.
  double objective = 0.0;
  double certificate_residual = 0.0;
  /// Accepted steps across all smoothing stages.
  int iterations = 0;
  /// Interval widening the certificate used (0 for differentiable losses).
  double kink_tolerance = 0.0;
  /// Objective after each accepted step, one list per smoothing stage;
  /// non-increasing within a stage.
  std::vector<std::vector<double>> stage_trace;
};

/// Minimizes sum_i w_i L(x_i, y_i, f(x_i)) + lambda |f|^2_H over the span of
/// feature maps at the support inputs (where the minimizer provably lives).
/// Shifting the loss by its value at t = 0 changes the objective by a
/// constant only, so one trainer serves both the raw and the shifted problem.
/// Throws SolverError instead of returning an uncertified model.
SvmModel train(const DiscreteMeasure& measure, const LossPtr& loss, const KernelPtr& kernel,
               double lambda, const SolverOptions& opts = {});

/// Smallest achievable |f + (1/2 lambda) sum_i w_i h_i Phi(x_i)|_H over
/// per-atom selections h_i from the subgradient interval of the loss at
/// f(x_i), widened by kink_tolerance on both sides. Zero iff first-order
/// optimality holds exactly (at kink_tolerance = 0).
double certificate_residual(const SvmModel& model, const DiscreteMeasure& measure,
                            double kink_tolerance = 0.0);

struct BoundLine {
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct NormBoundReport {
  BoundLine h_norm;            // |f|_H           vs |L|_1 |k|_inf / lambda
  BoundLine sup_norm;          // max |f| on grid vs |L|_1 |k|_inf^2 / lambda
  BoundLine shifted_loss_sup;  // max |L*_f|      vs |L|_1^2 |k|_inf^2 / lambda
  bool pass() const { return h_norm.pass && sup_norm.pass && shifted_loss_sup.pass; }
  std::string summary() const;
};

/// Evaluates the a priori norm bounds on a trained model over a probe grid
/// (sup norms are grid maxima, the H-norm is exact).
NormBoundReport check_norm_bounds(const SvmModel& model, const std::vector<Point>& probe_xs,
                                  const std::vector<double>& probe_ys);

/// sum_i weights_i h_i Phi(x_i): the embedding of the signed measure h dP
/// into H. h has one entry per atom of the measure, in order.
RkhsFunction mean_embedding(const std::vector<double>& h, const DiscreteMeasure& measure,
                            const KernelPtr& kernel);

struct StabilityReport {
  double lhs = 0.0;  // |f_P - f_P0|_H
  double rhs = 0.0;  // (1/lambda) |int h Phi dP - int h Phi dP0|_H
  bool pass = false;
};

/// Verifies the trained-function stability bound: the distance between the
/// minimizers for P and P0 is at most lambda^{-1} times the distance of the
/// mean embeddings of h, where h is the loss derivative along f_{P0}.
/// Requires a differentiable loss (h must be single-valued).
StabilityReport stability_bound_check(const DiscreteMeasure& P, const DiscreteMeasure& P0,
                                      const LossPtr& loss, const KernelPtr& kernel,
                                      double lambda, const SolverOptions& opts = {});

/// sum_i w_i (L(x_i, y_i, f(x_i)) - L(x_i, y_i, 0)).
double shifted_risk(const RkhsFunction& f, const DiscreteMeasure& P, const Loss& loss);

/// shifted_risk + lambda |f|^2_H.
double regularized_shifted_risk(const RkhsFunction& f, const DiscreteMeasure& P,
                                const Loss& loss, double lambda);

}  // namespace svmrob
