#include "svmrob/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "svmrob/detail/numfmt.hpp"
#include "svmrob/rng.hpp"

namespace svmrob {

namespace {

double kahan_sum(const std::vector<double>& v) {
  double s = 0.0, c = 0.0;
  for (double x : v) {
    const double t = x - c;
    const double u = s + t;
    c = (u - s) - t;
    s = u;
  }
  return s;
}

void validate_atoms(const std::vector<Atom>& atoms) {
  for (const auto& a : atoms) {
    if (a.x.size() != atoms[0].x.size())
      throw ConfigError("measure: atoms of mixed input dimension");
    for (double v : a.x)
      if (!std::isfinite(v)) throw ConfigError("measure: non-finite input coordinate");
    if (!std::isfinite(a.y)) throw ConfigError("measure: non-finite output value");
  }
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw ConfigError("measure: empty atom list");
  if (atoms_.size() != weights_.size())
    throw ConfigError("measure: atom and weight counts differ (" +
                      std::to_string(atoms_.size()) + " vs " +
                      std::to_string(weights_.size()) + ")");
  validate_atoms(atoms_);
  for (double w : weights_)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ConfigError("measure: negative or non-finite weight " +
                        detail::shortest_double_string(w));
  const double total = kahan_sum(weights_);
  if (std::abs(total - 1.0) > 1e-12)
    throw ConfigError("measure: weights sum to " + detail::shortest_double_string(total) +
                      ", expected 1");
}

DiscreteMeasure DiscreteMeasure::dirac(Point x, double y) {
  return DiscreteMeasure({{std::move(x), y}}, {1.0});
}

DiscreteMeasure DiscreteMeasure::merged() const {
  std::map<std::pair<Point, double>, double> acc;
  std::vector<std::pair<Point, double>> order;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const std::pair<Point, double> key{atoms_[i].x, atoms_[i].y};
    auto [it, fresh] = acc.try_emplace(key, 0.0);
    if (fresh) order.push_back(key);
    it->second += weights_[i];
  }
  std::vector<Atom> atoms;
  std::vector<double> weights;
  atoms.reserve(order.size());
  weights.reserve(order.size());
  for (const auto& key : order) {
    atoms.push_back({key.first, key.second});
    weights.push_back(acc.at(key));
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure empirical_from(const Dataset& dataset) {
  if (dataset.empty()) throw ConfigError("empirical measure: empty dataset");
  return DiscreteMeasure(dataset,
                         std::vector<double>(dataset.size(), 1.0 / dataset.size()));
}

DiscreteMeasure contaminate(const DiscreteMeasure& P, const DiscreteMeasure& Q, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw ConfigError("contaminate: delta must be in [0,1], got " +
                      detail::shortest_double_string(delta));
  if (delta == 0.0) return P;
  if (delta == 1.0) return Q;
  if (P.dim() != Q.dim())
    throw ConfigError("contaminate: measures have different input dimensions");
  std::vector<Atom> atoms = P.atoms();
  atoms.insert(atoms.end(), Q.atoms().begin(), Q.atoms().end());
  std::vector<double> weights;
  weights.reserve(atoms.size());
  for (double w : P.weights()) weights.push_back((1.0 - delta) * w);
  for (double w : Q.weights()) weights.push_back(delta * w);
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure jitter(const DiscreteMeasure& P, double scale, std::uint64_t seed) {
  if (!(scale >= 0.0) || !std::isfinite(scale))
    throw ConfigError("jitter: scale must be >= 0, got " +
                      detail::shortest_double_string(scale));
  if (scale == 0.0) return P;
  std::mt19937_64 gen(seed);
  std::vector<Atom> atoms = P.atoms();
  for (auto& a : atoms) {
    for (double& v : a.x) v += uniform(gen, -scale, scale);
    a.y += uniform(gen, -scale, scale);
  }
  return DiscreteMeasure(std::move(atoms), P.weights());
}

Dataset sample(const DiscreteMeasure& P, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("sample: n must be >= 1");
  std::vector<double> cum(P.size());
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    s += P.weights()[i];
    cum[i] = s;
  }
  cum.back() = 1.0;
  std::mt19937_64 gen(seed);
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform01(gen);
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto idx = std::min<std::size_t>(it - cum.begin(), P.size() - 1);
    out.push_back(P.atoms()[idx]);
  }
  return out;
}

double atom_distance(const Atom& a, const Atom& b) {
  if (a.x.size() != b.x.size())
    throw ConfigError("atom_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    const double d = a.x[i] - b.x[i];
    s += d * d;
  }
  const double dy = a.y - b.y;
  return std::sqrt(s + dy * dy);
}

}  // namespace svmrob
