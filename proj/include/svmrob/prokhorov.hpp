#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "svmrob/kernel.hpp"
#include "svmrob/measure.hpp"

namespace svmrob {

/// Exact Prokhorov distance between two finitely supported probability
/// measures, with a two-sided certificate.
///
/// epsilon is the infimum of { eps >= 0 : P(B) <= Q(B^eps) + eps for all B },
/// computed exactly over the finite candidate set; it is always <= 1.
struct ProkhorovResult {
  double epsilon = 0.0;

  struct CouplingEntry {
    std::size_t p_index = 0;
    std::size_t q_index = 0;
    double mass = 0.0;
  };
  /// Sub-coupling moving mass only along pairs with dist <= epsilon and
  /// leaving deficiency <= epsilon (the Strassen feasibility certificate).
  std::vector<CouplingEntry> coupling;
  /// Unmatched P mass under that coupling.
  double deficiency = 0.0;

  /// When epsilon > 0: a set A of P-atom indices with
  /// P(A) > Q(A^r) + r at r = infeasible_below, the largest candidate
  /// strictly below epsilon. Empty when epsilon == 0.
  std::vector<std::size_t> violating_set;
  double infeasible_below = 0.0;
};

/// Exact Prokhorov distance given the metric on the union of supports.
///
/// dist is square of size (|P| + |Q|); index i < |P| refers to P's atom i and
/// index |P| + j to Q's atom j. Symmetry, zero diagonal and the triangle
/// inequality are spot-checked; violations throw ConfigError. Feasibility at
/// each candidate radius is decided by a max-flow coupling check.
ProkhorovResult prokhorov_finite(const std::vector<double>& p_weights,
                                 const std::vector<double>& q_weights,
                                 const Eigen::MatrixXd& dist);

/// Convenience overload on data-space measures using the l2 metric on the
/// concatenated (x, y) vector.
ProkhorovResult prokhorov_finite(const DiscreteMeasure& P, const DiscreteMeasure& Q);

/// Exact Prokhorov distance between the empirical distributions of two real
/// samples. Independent implementation: feasibility at a radius is decided by
/// an order-preserving greedy mass sweep over the sorted merged supports, not
/// by a flow computation. Agrees with prokhorov_finite on the same supports.
double prokhorov_1d(const std::vector<double>& samples_a,
                    const std::vector<double>& samples_b);

enum class PushforwardMode { HNorm, Probe };

/// Prokhorov distance between the Monte Carlo pushforward distributions of
/// two model ensembles (uniform weight per replicate).
///
/// HNorm: exact Prokhorov over the ensembles with the RKHS metric, computed
/// through a Euclidean embedding of the shared span so the triangle
/// inequality holds exactly. Probe: prokhorov_1d of the evaluations at the
/// probe point.
double pushforward_distance(const std::vector<RkhsFunction>& models_a,
                            const std::vector<RkhsFunction>& models_b,
                            PushforwardMode mode, const Point& probe = {});

}  // namespace svmrob
