#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "svmrob/rng.hpp"

namespace svmrob::testing {

double prokhorov_subset_oracle(const std::vector<double>& p_weights,
                               const std::vector<double>& q_weights,
                               const Eigen::MatrixXd& dist) {
  const int m = static_cast<int>(p_weights.size());
  const int n = static_cast<int>(q_weights.size());
  const double inf = std::numeric_limits<double>::infinity();
  double best = 0.0;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    double pb = 0.0;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) pb += p_weights[i];

    // Distance from the set B to each Q atom, grouped by radius.
    std::vector<std::pair<double, double>> steps(n);
    for (int j = 0; j < n; ++j) {
      double d = inf;
      for (int i = 0; i < m; ++i)
        if (mask & (1u << i)) d = std::min(d, dist(i, m + j));
      steps[j] = {d, q_weights[j]};
    }
    std::sort(steps.begin(), steps.end());

    // Scan eps upward; on each interval between consecutive radii the
    // deficiency pb - Q(B^eps) is constant, so the smallest feasible eps in
    // the interval is max(left endpoint, deficiency).
    double eps_b = inf;
    double a = 0.0;
    double cum = 0.0;
    std::size_t t = 0;
    while (true) {
      double b = inf;
      if (t < steps.size()) b = steps[t].first;
      if (a < b) {
        const double c = pb - cum;
        const double cand = std::max(a, c);
        if (cand < b) {
          eps_b = cand;
          break;
        }
      }
      if (t >= steps.size()) break;
      const double r = steps[t].first;
      while (t < steps.size() && steps[t].first == r) cum += steps[t++].second;
      a = r;
    }
    best = std::max(best, eps_b);
  }
  return best;
}

double representer_objective(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& K,
                             const std::vector<Point>& xs, const std::vector<double>& ys,
                             const std::vector<double>& ws, const Loss& loss, double lambda) {
  const Eigen::VectorXd f = K * alpha;
  double obj = lambda * alpha.dot(f);
  for (Eigen::Index i = 0; i < alpha.size(); ++i)
    obj += ws[i] * (loss.eval(xs[i], ys[i], f[i]) - loss.eval(xs[i], ys[i], 0.0));
  return obj;
}

namespace {

GridSearchResult sweep(const Eigen::VectorXd& center, double half_width, int points_per_axis,
                       const Eigen::MatrixXd& K, const std::vector<Point>& xs,
                       const std::vector<double>& ys, const std::vector<double>& ws,
                       const Loss& loss, double lambda) {
  const auto dim = center.size();
  const double step = 2.0 * half_width / (points_per_axis - 1);
  std::vector<int> idx(dim, 0);
  Eigen::VectorXd a(dim);
  GridSearchResult best;
  best.objective = std::numeric_limits<double>::infinity();
  while (true) {
    for (Eigen::Index d = 0; d < dim; ++d) a[d] = center[d] - half_width + idx[d] * step;
    const double obj = representer_objective(a, K, xs, ys, ws, loss, lambda);
    if (obj < best.objective) {
      best.objective = obj;
      best.alpha = a;
    }
    Eigen::Index d = 0;
    while (d < dim && ++idx[d] == points_per_axis) idx[d++] = 0;
    if (d == dim) break;
  }
  return best;
}

}  // namespace

GridSearchResult grid_minimize(const Eigen::MatrixXd& K, const std::vector<Point>& xs,
                               const std::vector<double>& ys, const std::vector<double>& ws,
                               const Loss& loss, double lambda, double box, double final_step) {
  const auto dim = K.rows();
  const int points = 17;
  Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
  double half_width = box;
  GridSearchResult best;
  while (true) {
    best = sweep(center, half_width, points, K, xs, ys, ws, loss, lambda);
    const double step = 2.0 * half_width / (points - 1);
    if (step <= final_step) return best;
    center = best.alpha;
    // Window of four cells on each side around the winning point; each level
    // halves the step. The literal-grid comparison test backs this policy.
    half_width = 4.0 * step;
  }
}

GridSearchResult grid_minimize_literal(const Eigen::MatrixXd& K, const std::vector<Point>& xs,
                                       const std::vector<double>& ys,
                                       const std::vector<double>& ws, const Loss& loss,
                                       double lambda, double box, double step) {
  const int points = static_cast<int>(std::lround(2.0 * box / step)) + 1;
  return sweep(Eigen::VectorXd::Zero(K.rows()), box, points, K, xs, ys, ws, loss, lambda);
}

Eigen::MatrixXd random_metric(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      d(i, j) = uniform(gen, 0.2, 1.5);
      d(j, i) = d(i, j);
    }
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

}  // namespace svmrob::testing
