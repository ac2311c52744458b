#pragma once

#include <cstdint>
#include <vector>

#include "svmrob/common.hpp"

namespace svmrob {

struct Atom {
  Point x;
  double y = 0.0;
};

using Dataset = std::vector<Atom>;

/// Finitely supported probability measure on X x Y. Immutable; weights are
/// validated to be nonnegative and to sum to 1 within 1e-12 at construction.
class DiscreteMeasure {
public:
  DiscreteMeasure(std::vector<Atom> atoms, std::vector<double> weights);

  static DiscreteMeasure dirac(Point x, double y);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  std::size_t dim() const { return atoms_.empty() ? 0 : atoms_[0].x.size(); }

  /// Combines atoms with exactly equal (x, y), summing their weights.
  DiscreteMeasure merged() const;

private:
  std::vector<Atom> atoms_;
  std::vector<double> weights_;
};

/// Uniform weights 1/n over the observations; duplicates kept as-is.
DiscreteMeasure empirical_from(const Dataset& dataset);

/// The mixture (1 - delta) P + delta Q as a concatenated atom list.
DiscreteMeasure contaminate(const DiscreteMeasure& P, const DiscreteMeasure& Q, double delta);

/// Perturbs every coordinate of every atom (x and y) by independent uniform
/// noise in [-scale, scale]; weights unchanged; deterministic per seed.
DiscreteMeasure jitter(const DiscreteMeasure& P, double scale, std::uint64_t seed);

/// n i.i.d. draws from the categorical distribution over atoms;
/// deterministic per seed.
Dataset sample(const DiscreteMeasure& P, std::size_t n, std::uint64_t seed);

/// l2 distance on the concatenated (x, y) vector, the metric used for the
/// Prokhorov distance on data space.
double atom_distance(const Atom& a, const Atom& b);

}  // namespace svmrob
