#pragma once

// Independent reference implementations used only by the tests. Each one
// recomputes a quantity the library claims, by a visibly different route, so
// a shared bug would have to be made twice.

#include <Eigen/Dense>
#include <vector>

#include "svmrob/common.hpp"
#include "svmrob/loss.hpp"

namespace svmrob::testing {

/// Exact Prokhorov distance straight from the definition. For every nonempty
/// subset B of P's support, the smallest eps with P(B) <= Q(B^eps) + eps is
/// found by scanning the step function eps -> Q(B^eps); the distance is the
/// largest of those per-subset thresholds. Exponential in |P|, so supports
/// must stay small. dist is the square union matrix (P atoms first).
double prokhorov_subset_oracle(const std::vector<double>& p_weights,
                               const std::vector<double>& q_weights,
                               const Eigen::MatrixXd& dist);

/// Regularized shifted-risk objective of a coefficient vector, recomputed
/// without any solver plumbing.
double representer_objective(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& K,
                             const std::vector<Point>& xs, const std::vector<double>& ys,
                             const std::vector<double>& ws, const Loss& loss, double lambda);

struct GridSearchResult {
  Eigen::VectorXd alpha;
  double objective = 0.0;
};

/// Coarse-to-fine exhaustive minimization over alpha in [-box, box]^dim,
/// refining the winning cell until the grid step is <= final_step. The
/// objective is convex, so a generous window around each level's argmin keeps
/// the global optimum inside the refined region.
GridSearchResult grid_minimize(const Eigen::MatrixXd& K, const std::vector<Point>& xs,
                               const std::vector<double>& ys, const std::vector<double>& ws,
                               const Loss& loss, double lambda, double box, double final_step);

/// Single-level exhaustive search at a fixed step. Affordable only on small
/// boxes; validates grid_minimize.
GridSearchResult grid_minimize_literal(const Eigen::MatrixXd& K, const std::vector<Point>& xs,
                                       const std::vector<double>& ys,
                                       const std::vector<double>& ws, const Loss& loss,
                                       double lambda, double box, double step);

/// Random metric on n points: symmetric uniform draws completed to a metric
/// by all-pairs shortest paths.
Eigen::MatrixXd random_metric(int n, std::uint64_t seed);

}  // namespace svmrob::testing
