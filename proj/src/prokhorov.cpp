#include "svmrob/prokhorov.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>

#include "svmrob/detail/numfmt.hpp"

namespace svmrob {

namespace {

constexpr double kFlowEps = 1e-12;

/// Dinic max-flow on double capacities. Graph sizes here are small
/// (hundreds of nodes), so exact augmenting behavior matters more than speed.
class MaxFlow {
public:
  explicit MaxFlow(int n) : g_(n) {}

  std::pair<int, int> add_edge(int u, int v, double cap) {
    g_[u].push_back({v, cap, static_cast<int>(g_[v].size())});
    g_[v].push_back({u, 0.0, static_cast<int>(g_[u].size()) - 1});
    return {u, static_cast<int>(g_[u].size()) - 1};
  }

  double run(int s, int t) {
    double total = 0.0;
    while (bfs(s, t)) {
      iter_.assign(g_.size(), 0);
      while (true) {
        const double f = dfs(s, t, std::numeric_limits<double>::infinity());
        if (f <= kFlowEps) break;
        total += f;
      }
    }
    return total;
  }

  double residual(std::pair<int, int> edge) const { return g_[edge.first][edge.second].cap; }

  /// Residual-reachable set from s after run(); the source side of a min cut.
  std::vector<char> reachable(int s) const {
    std::vector<char> seen(g_.size(), 0);
    std::queue<int> q;
    seen[s] = 1;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const auto& e : g_[u])
        if (e.cap > kFlowEps && !seen[e.to]) {
          seen[e.to] = 1;
          q.push(e.to);
        }
    }
    return seen;
  }

private:
  struct Edge {
    int to;
    double cap;
    int rev;
  };

  bool bfs(int s, int t) {
    level_.assign(g_.size(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const auto& e : g_[u])
        if (e.cap > kFlowEps && level_[e.to] < 0) {
          level_[e.to] = level_[u] + 1;
          q.push(e.to);
        }
    }
    return level_[t] >= 0;
  }

  double dfs(int u, int t, double f) {
    if (u == t) return f;
    for (int& i = iter_[u]; i < static_cast<int>(g_[u].size()); ++i) {
      Edge& e = g_[u][i];
      if (e.cap > kFlowEps && level_[e.to] == level_[u] + 1) {
        const double d = dfs(e.to, t, std::min(f, e.cap));
        if (d > kFlowEps) {
          e.cap -= d;
          g_[e.to][e.rev].cap += d;
          return d;
        }
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Edge>> g_;
  std::vector<int> level_, iter_;
};

void check_metric(const Eigen::MatrixXd& dist) {
  const auto n = dist.rows();
  if (dist.cols() != n) throw ConfigError("prokhorov: distance matrix is not square");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(dist(i, i)) > 1e-12)
      throw ConfigError("prokhorov: non-metric distance matrix (nonzero diagonal at " +
                        std::to_string(i) + ")");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (!std::isfinite(dist(i, j)) || dist(i, j) < 0.0)
        throw ConfigError("prokhorov: non-metric distance matrix (negative or non-finite entry)");
      if (std::abs(dist(i, j) - dist(j, i)) > 1e-12)
        throw ConfigError("prokhorov: non-metric distance matrix (asymmetric at (" +
                          std::to_string(i) + "," + std::to_string(j) + "))");
    }
  }
  const double tol = 1e-9 * std::max(1.0, dist.maxCoeff());
  auto check_triple = [&](Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    if (dist(i, k) > dist(i, j) + dist(j, k) + tol)
      throw ConfigError("prokhorov: non-metric distance matrix (triangle inequality fails at (" +
                        std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) +
                        "))");
  };
  if (n <= 40) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) check_triple(i, j, k);
  } else {
    std::mt19937_64 gen(9001);
    for (int trial = 0; trial < 20000; ++trial) {
      const auto i = static_cast<Eigen::Index>(gen() % n);
      const auto j = static_cast<Eigen::Index>(gen() % n);
      const auto k = static_cast<Eigen::Index>(gen() % n);
      check_triple(i, j, k);
    }
  }
}

struct FlowOutcome {
  double deficiency = 0.0;
  std::vector<ProkhorovResult::CouplingEntry> coupling;
  std::vector<std::size_t> cut;
};

/// max over B of P(B) - Q(B^eps) via the Strassen max-flow check; the cut is
/// a maximizing B.
FlowOutcome deficiency_at(double eps, const std::vector<double>& pw,
                          const std::vector<double>& qw, const Eigen::MatrixXd& dist,
                          bool want_witness) {
  const int m = static_cast<int>(pw.size());
  const int n = static_cast<int>(qw.size());
  const int s = m + n, t = m + n + 1;
  MaxFlow mf(m + n + 2);
  double total_p = 0.0;
  for (int i = 0; i < m; ++i) {
    mf.add_edge(s, i, pw[i]);
    total_p += pw[i];
  }
  for (int j = 0; j < n; ++j) mf.add_edge(m + j, t, qw[j]);
  struct PairEdge {
    std::pair<int, int> loc;
    std::size_t i, j;
  };
  std::vector<PairEdge> pairs;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (dist(i, m + j) <= eps)
        pairs.push_back({mf.add_edge(i, m + j, 2.0), static_cast<std::size_t>(i),
                         static_cast<std::size_t>(j)});
  const double flow = mf.run(s, t);
  FlowOutcome out;
  out.deficiency = std::max(0.0, total_p - flow);
  if (want_witness) {
    for (const auto& pe : pairs) {
      const double carried = 2.0 - mf.residual(pe.loc);
      if (carried > 1e-15) out.coupling.push_back({pe.i, pe.j, carried});
    }
    const auto side = mf.reachable(s);
    for (int i = 0; i < m; ++i)
      if (side[i]) out.cut.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

void check_mass(const std::vector<double>& w, const char* which) {
  if (w.empty()) throw ConfigError(std::string("prokhorov: empty ") + which + " weight list");
  double s = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError(std::string("prokhorov: negative or non-finite ") + which + " weight");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9)
    throw ConfigError(std::string("prokhorov: ") + which + " weights sum to " +
                      detail::shortest_double_string(s) + ", expected 1");
}

}  // namespace

ProkhorovResult prokhorov_finite(const std::vector<double>& p_weights,
                                 const std::vector<double>& q_weights,
                                 const Eigen::MatrixXd& dist) {
  check_mass(p_weights, "P");
  check_mass(q_weights, "Q");
  const auto m = static_cast<Eigen::Index>(p_weights.size());
  const auto n = static_cast<Eigen::Index>(q_weights.size());
  if (dist.rows() != m + n)
    throw ConfigError("prokhorov: distance matrix size " + std::to_string(dist.rows()) +
                      " does not match |P| + |Q| = " + std::to_string(m + n));
  check_metric(dist);

  std::vector<double> radii{0.0};
  radii.reserve(1 + static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) radii.push_back(dist(i, m + j));
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  const int K = static_cast<int>(radii.size());

  std::vector<double> mcache(radii.size(), -1.0);
  auto deficiency = [&](int j) {
    if (mcache[j] < 0.0)
      mcache[j] = deficiency_at(radii[j], p_weights, q_weights, dist, false).deficiency;
    return mcache[j];
  };
  auto feasible = [&](int j) { return deficiency(j) <= radii[j]; };

  ProkhorovResult result;
  result.infeasible_below = -1.0;

  double eps_star = 0.0;
  int j_prev = -1;  // index of the largest infeasible candidate below eps_star
  if (feasible(0)) {
    eps_star = 0.0;
  } else if (!feasible(K - 1)) {
    // Only reachable through floating residue when every pairwise distance is
    // tiny; the exact deficiency at the largest radius is 0.
    eps_star = std::min(1.0, std::max(deficiency(K - 1), radii[K - 1]));
    j_prev = K - 1;
  } else {
    int lo = 0, hi = K - 1;  // infeasible at lo, feasible at hi
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      (feasible(mid) ? hi : lo) = mid;
    }
    const double m_prev = deficiency(lo);
    // On [radii[lo], radii[hi]) the deficiency is constant at m_prev, so the
    // crossing with the line eps happens at m_prev when it lands inside.
    eps_star = m_prev < radii[hi] ? m_prev : radii[hi];
    j_prev = lo;
  }
  result.epsilon = std::min(eps_star, 1.0);

  auto witness = deficiency_at(result.epsilon, p_weights, q_weights, dist, true);
  result.coupling = std::move(witness.coupling);
  result.deficiency = witness.deficiency;
  if (j_prev >= 0 && radii[j_prev] < result.epsilon) {
    result.infeasible_below = radii[j_prev];
    result.violating_set =
        deficiency_at(radii[j_prev], p_weights, q_weights, dist, true).cut;
  }
  return result;
}

ProkhorovResult prokhorov_finite(const DiscreteMeasure& P, const DiscreteMeasure& Q) {
  const auto m = static_cast<Eigen::Index>(P.size());
  const auto n = static_cast<Eigen::Index>(Q.size());
  Eigen::MatrixXd dist(m + n, m + n);
  auto atom = [&](Eigen::Index idx) -> const Atom& {
    return idx < m ? P.atoms()[idx] : Q.atoms()[idx - m];
  };
  for (Eigen::Index i = 0; i < m + n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < m + n; ++j) {
      dist(i, j) = atom_distance(atom(i), atom(j));
      dist(j, i) = dist(i, j);
    }
  }
  return prokhorov_finite(P.weights(), Q.weights(), dist);
}

double prokhorov_1d(const std::vector<double>& samples_a, const std::vector<double>& samples_b) {
  if (samples_a.empty() || samples_b.empty())
    throw ConfigError("prokhorov_1d: empty sample list");
  for (double v : samples_a)
    if (!std::isfinite(v)) throw ConfigError("prokhorov_1d: non-finite sample");
  for (double v : samples_b)
    if (!std::isfinite(v)) throw ConfigError("prokhorov_1d: non-finite sample");

  // Merged empirical supports: sorted unique values with multiplicity weights.
  auto merge = [](std::vector<double> s) {
    std::sort(s.begin(), s.end());
    std::vector<double> vals, w;
    const double unit = 1.0 / static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size();) {
      std::size_t j = i;
      while (j < s.size() && s[j] == s[i]) ++j;
      vals.push_back(s[i]);
      w.push_back(static_cast<double>(j - i) * unit);
      i = j;
    }
    return std::pair{vals, w};
  };
  const auto [av, aw] = merge(samples_a);
  const auto [bv, bw] = merge(samples_b);

  // Largest mass matchable when value pairs within eps may be coupled. The
  // eps-windows around the sorted values are equal-width intervals, so an
  // order-preserving sweep attains the maximum.
  auto deficiency = [&](double eps) {
    std::vector<double> ra = aw, rb = bw;
    double matched = 0.0;
    std::size_t i = 0, j = 0;
    while (i < av.size() && j < bv.size()) {
      if (std::abs(av[i] - bv[j]) <= eps) {
        const double m = std::min(ra[i], rb[j]);
        matched += m;
        ra[i] -= m;
        rb[j] -= m;
        const bool a_done = ra[i] == 0.0;
        const bool b_done = rb[j] == 0.0;
        if (a_done) ++i;  // at least one side is exhausted, so this makes progress
        if (b_done) ++j;
      } else if (bv[j] < av[i]) {
        ++j;  // this Q value is left of every remaining window
      } else {
        ++i;  // this P value can never be matched by the remaining Q values
      }
    }
    double total = 0.0;
    for (double w : aw) total += w;
    return std::max(0.0, total - matched);
  };

  std::vector<double> radii{0.0};
  radii.reserve(1 + av.size() * bv.size());
  for (double a : av)
    for (double b : bv) radii.push_back(std::abs(a - b));
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  const int K = static_cast<int>(radii.size());

  std::vector<double> cache(radii.size(), -1.0);
  auto def_at = [&](int j) {
    if (cache[j] < 0.0) cache[j] = deficiency(radii[j]);
    return cache[j];
  };

  if (def_at(0) <= radii[0]) return 0.0;
  if (def_at(K - 1) > radii[K - 1])
    return std::min(1.0, std::max(def_at(K - 1), radii[K - 1]));
  int lo = 0, hi = K - 1;
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (def_at(mid) <= radii[mid] ? hi : lo) = mid;
  }
  const double m_prev = def_at(lo);
  return std::min(m_prev < radii[hi] ? m_prev : radii[hi], 1.0);
}

double pushforward_distance(const std::vector<RkhsFunction>& models_a,
                            const std::vector<RkhsFunction>& models_b,
                            PushforwardMode mode, const Point& probe) {
  if (models_a.empty() || models_b.empty())
    throw ConfigError("pushforward_distance: empty model list");
  const Kernel& k0 = *models_a.front().kernel();
  for (const auto* list : {&models_a, &models_b})
    for (const auto& f : *list)
      if (!same_kernel(*f.kernel(), k0))
        throw ConfigError("pushforward_distance: kernel mismatch across models");

  if (mode == PushforwardMode::Probe) {
    if (probe.empty())
      throw ConfigError("pushforward_distance: probe mode requires a probe point");
    std::vector<double> va, vb;
    va.reserve(models_a.size());
    vb.reserve(models_b.size());
    for (const auto& f : models_a) va.push_back(f.eval(probe));
    for (const auto& f : models_b) vb.push_back(f.eval(probe));
    return prokhorov_1d(va, vb);
  }

  // Shared basis: union of all support points. Embedding each model through
  // the eigendecomposition of the union Gram matrix turns RKHS distances into
  // Euclidean ones, so the triangle inequality holds exactly.
  std::map<Point, Eigen::Index> index;
  for (const auto* list : {&models_a, &models_b})
    for (const auto& f : *list)
      for (const auto& x : f.support()) index.try_emplace(x, 0);
  if (index.empty()) {
    Eigen::MatrixXd zero =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(models_a.size() + models_b.size()),
                              static_cast<Eigen::Index>(models_a.size() + models_b.size()));
    return prokhorov_finite(
               std::vector<double>(models_a.size(), 1.0 / models_a.size()),
               std::vector<double>(models_b.size(), 1.0 / models_b.size()), zero)
        .epsilon;
  }
  std::vector<Point> basis;
  basis.reserve(index.size());
  for (auto& [pt, idx] : index) {
    idx = static_cast<Eigen::Index>(basis.size());
    basis.push_back(pt);
  }
  const auto u = static_cast<Eigen::Index>(basis.size());
  const Eigen::MatrixXd G = gram(k0, basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const Eigen::VectorXd scale = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();

  const auto total = static_cast<Eigen::Index>(models_a.size() + models_b.size());
  Eigen::MatrixXd Z(total, u);
  Eigen::Index row = 0;
  for (const auto* list : {&models_a, &models_b})
    for (const auto& f : *list) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(u);
      for (std::size_t j = 0; j < f.support().size(); ++j)
        v[index.at(f.support()[j])] += f.coeffs()[j];
      Z.row(row++) = (scale.asDiagonal() * (es.eigenvectors().transpose() * v)).transpose();
    }

  Eigen::MatrixXd dist(total, total);
  for (Eigen::Index i = 0; i < total; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < total; ++j) {
      dist(i, j) = (Z.row(i) - Z.row(j)).norm();
      dist(j, i) = dist(i, j);
    }
  }
  return prokhorov_finite(std::vector<double>(models_a.size(), 1.0 / models_a.size()),
                          std::vector<double>(models_b.size(), 1.0 / models_b.size()), dist)
      .epsilon;
}

}  // namespace svmrob
