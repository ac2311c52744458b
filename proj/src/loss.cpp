#include "svmrob/loss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "svmrob/detail/numfmt.hpp"

namespace svmrob {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// log(cosh(a)) without overflow for large |a|.
double log_cosh(double a) {
  const double abs_a = std::abs(a);
  return abs_a + std::log1p(std::exp(-2.0 * abs_a)) - 0.6931471805599453094172321215;
}

[[noreturn]] void bad_y(const std::string& loss, double y) {
  throw ConfigError(loss + " loss requires y in {-1, +1}, got y = " +
                    detail::shortest_double_string(y));
}

}  // namespace

bool Loss::admissible_y(double y) const { return std::isfinite(y); }

LossDerivatives Loss::smoothed(std::span<const double> x, double y, double t, double mu) const {
  if (mu <= 0.0) {
    if (!differentiable())
      throw SolverError("smoothed(mu=0) requires a differentiable loss", 0, 0.0);
    const auto g = subgradient(x, y, t);
    const double h = 1e-5 * std::max(1.0, std::abs(t));
    const double d2 = (subgradient(x, y, t + h).lo - subgradient(x, y, t - h).hi) / (2.0 * h);
    return {eval(x, y, t), 0.5 * (g.lo + g.hi), std::max(0.0, d2)};
  }
  const double p = prox(x, y, t, mu);
  const double d1 = (t - p) / mu;
  const double h = std::max(1e-7, 1e-9 * std::abs(t));
  const double dp = std::clamp((prox(x, y, t + h, mu) - p) / h, 0.0, 1.0);
  return {eval(x, y, p) + (p - t) * (p - t) / (2.0 * mu), d1,
          std::clamp((1.0 - dp) / mu, 0.0, 1.0 / mu)};
}

double Loss::prox(std::span<const double> x, double y, double t, double mu) const {
  // prox never moves further than mu * |L|_1 for a Lipschitz loss.
  double lo = t - mu * lipschitz() - 1e-12;
  double hi = t + mu * lipschitz() + 1e-12;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(t)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto g = subgradient(x, y, mid);
    if (mid + mu * g.hi < t)
      lo = mid;
    else if (mid + mu * g.lo > t)
      hi = mid;
    else
      return mid;  // t in [mid + mu g.lo, mid + mu g.hi]: mid is the prox
  }
  return 0.5 * (lo + hi);
}

// --- built-in variants -------------------------------------------------------

namespace {

class HingeLoss final : public Loss {
public:
  double eval(std::span<const double>, double y, double t) const override {
    check(y);
    return std::max(0.0, 1.0 - y * t);
  }
  SubgradientInterval subgradient(std::span<const double>, double y, double t) const override {
    check(y);
    const double w = y * t;
    if (w < 1.0) return {-y, -y};
    if (w > 1.0) return {0.0, 0.0};
    return {std::min(-y, 0.0), std::max(-y, 0.0)};
  }
  double lipschitz() const override { return 1.0; }
  bool differentiable() const override { return false; }
  bool admissible_y(double y) const override {
    return std::abs(y - 1.0) <= 1e-12 || std::abs(y + 1.0) <= 1e-12;
  }
  std::string spec_string() const override { return "hinge"; }
  LossDerivatives smoothed(std::span<const double>, double y, double t, double mu) const override {
    check(y);
    const double w = y * t;
    if (mu <= 0.0) throw SolverError("hinge loss is not differentiable", 0, 0.0);
    if (w >= 1.0) return {0.0, 0.0, 0.0};
    if (w <= 1.0 - mu) return {1.0 - w - 0.5 * mu, -y, 0.0};
    const double v = 1.0 - w;
    return {v * v / (2.0 * mu), -y * v / mu, 1.0 / mu};
  }
  double prox(std::span<const double>, double y, double t, double mu) const override {
    check(y);
    const double w = y * t;
    if (w >= 1.0) return t;
    if (w <= 1.0 - mu) return t + mu * y;
    return y;  // the kink w = 1
  }

private:
  static void check(double y) {
    if (std::abs(y - 1.0) > 1e-12 && std::abs(y + 1.0) > 1e-12) bad_y("hinge", y);
  }
};

/// Symmetric logistic loss on the residual: L(y,t) = 2 log cosh((y-t)/2).
class LogisticLoss final : public Loss {
public:
  double eval(std::span<const double>, double y, double t) const override {
    return 2.0 * log_cosh(0.5 * (y - t));
  }
  SubgradientInterval subgradient(std::span<const double>, double y, double t) const override {
    const double g = -std::tanh(0.5 * (y - t));
    return {g, g};
  }
  double lipschitz() const override { return 1.0; }
  bool differentiable() const override { return true; }
  std::string spec_string() const override { return "logistic"; }
  LossDerivatives smoothed(std::span<const double>, double y, double t, double) const override {
    const double r = 0.5 * (y - t);
    const double c = std::cosh(r);
    const double d2 = std::isinf(c) ? 0.0 : 0.5 / (c * c);
    return {2.0 * log_cosh(r), -std::tanh(r), d2};
  }
};

class AbsoluteLoss final : public Loss {
public:
  double eval(std::span<const double>, double y, double t) const override {
    return std::abs(y - t);
  }
  SubgradientInterval subgradient(std::span<const double>, double y, double t) const override {
    if (t > y) return {1.0, 1.0};
    if (t < y) return {-1.0, -1.0};
    return {-1.0, 1.0};
  }
  double lipschitz() const override { return 1.0; }
  bool differentiable() const override { return false; }
  std::string spec_string() const override { return "absolute"; }
  LossDerivatives smoothed(std::span<const double>, double y, double t, double mu) const override {
    if (mu <= 0.0) throw SolverError("absolute loss is not differentiable", 0, 0.0);
    const double u = t - y;
    if (std::abs(u) <= mu) return {u * u / (2.0 * mu), u / mu, 1.0 / mu};
    return {std::abs(u) - 0.5 * mu, sign(u), 0.0};
  }
  double prox(std::span<const double>, double y, double t, double mu) const override {
    const double u = t - y;
    if (std::abs(u) <= mu) return y;
    return t - mu * sign(u);
  }
};

class EpsInsensitiveLoss final : public Loss {
public:
  explicit EpsInsensitiveLoss(double eps) : eps_(eps) {
    if (!(eps >= 0.0) || !std::isfinite(eps))
      throw ConfigError("eps_insensitive loss requires epsilon >= 0, got " +
                        detail::shortest_double_string(eps));
  }
  double eval(std::span<const double>, double y, double t) const override {
    return std::max(std::abs(y - t) - eps_, 0.0);
  }
  SubgradientInterval subgradient(std::span<const double>, double y, double t) const override {
    const double u = t - y;
    if (u > eps_) return {1.0, 1.0};
    if (u < -eps_) return {-1.0, -1.0};
    if (u == eps_) return {0.0, 1.0};
    if (u == -eps_) return {-1.0, 0.0};
    return {0.0, 0.0};
  }
  double lipschitz() const override { return 1.0; }
  bool differentiable() const override { return false; }
  std::string spec_string() const override {
    return "eps_insensitive:" + detail::shortest_double_string(eps_);
  }
  LossDerivatives smoothed(std::span<const double>, double y, double t, double mu) const override {
    if (mu <= 0.0) throw SolverError("eps_insensitive loss is not differentiable", 0, 0.0);
    const double u = t - y;
    const double z = std::abs(u) - eps_;
    if (z <= 0.0) return {0.0, 0.0, 0.0};
    if (z <= mu) return {z * z / (2.0 * mu), sign(u) * z / mu, 1.0 / mu};
    return {z - 0.5 * mu, sign(u), 0.0};
  }
  double prox(std::span<const double>, double y, double t, double mu) const override {
    const double u = t - y;
    const double z = std::abs(u) - eps_;
    if (z <= 0.0) return t;
    if (z <= mu) return y + sign(u) * eps_;
    return t - mu * sign(u);
  }

private:
  double eps_;
};

class HuberLoss final : public Loss {
public:
  explicit HuberLoss(double delta) : delta_(delta) {
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw ConfigError("huber loss requires delta > 0, got " +
                        detail::shortest_double_string(delta));
  }
  double eval(std::span<const double>, double y, double t) const override {
    const double u = std::abs(y - t);
    return u <= delta_ ? 0.5 * u * u : delta_ * (u - 0.5 * delta_);
  }
  SubgradientInterval subgradient(std::span<const double>, double y, double t) const override {
    const double u = t - y;
    const double g = std::abs(u) <= delta_ ? u : delta_ * sign(u);
    return {g, g};
  }
  double lipschitz() const override { return delta_; }
  bool differentiable() const override { return true; }
  std::string spec_string() const override {
    return "huber:" + detail::shortest_double_string(delta_);
  }
  LossDerivatives smoothed(std::span<const double>, double y, double t, double) const override {
    const double u = t - y;
    if (std::abs(u) <= delta_) return {0.5 * u * u, u, 1.0};
    return {delta_ * (std::abs(u) - 0.5 * delta_), delta_ * sign(u), 0.0};
  }

private:
  double delta_;
};

class PinballLoss final : public Loss {
public:
  explicit PinballLoss(double tau) : tau_(tau) {
    if (!(tau > 0.0 && tau < 1.0))
      throw ConfigError("pinball loss requires tau in (0,1), got " +
                        detail::shortest_double_string(tau));
  }
  double eval(std::span<const double>, double y, double t) const override {
    const double u = t - y;
    return u >= 0.0 ? (1.0 - tau_) * u : -tau_ * u;
  }
  SubgradientInterval subgradient(std::span<const double>, double y, double t) const override {
    const double u = t - y;
    if (u > 0.0) return {1.0 - tau_, 1.0 - tau_};
    if (u < 0.0) return {-tau_, -tau_};
    return {-tau_, 1.0 - tau_};
  }
  double lipschitz() const override { return std::max(tau_, 1.0 - tau_); }
  bool differentiable() const override { return false; }
  std::string spec_string() const override {
    return "pinball:" + detail::shortest_double_string(tau_);
  }
  LossDerivatives smoothed(std::span<const double>, double y, double t, double mu) const override {
    if (mu <= 0.0) throw SolverError("pinball loss is not differentiable", 0, 0.0);
    const double u = t - y;
    if (u <= -tau_ * mu) return {-tau_ * u - 0.5 * tau_ * tau_ * mu, -tau_, 0.0};
    if (u >= (1.0 - tau_) * mu) {
      const double a = 1.0 - tau_;
      return {a * u - 0.5 * a * a * mu, a, 0.0};
    }
    return {u * u / (2.0 * mu), u / mu, 1.0 / mu};
  }
  double prox(std::span<const double>, double y, double t, double mu) const override {
    const double u = t - y;
    if (u <= -tau_ * mu) return t + tau_ * mu;
    if (u >= (1.0 - tau_) * mu) return t - (1.0 - tau_) * mu;
    return y;
  }

private:
  double tau_;
};

class LeastSquaresLoss final : public Loss {
public:
  double eval(std::span<const double>, double y, double t) const override {
    return (y - t) * (y - t);
  }
  SubgradientInterval subgradient(std::span<const double>, double y, double t) const override {
    const double g = 2.0 * (t - y);
    return {g, g};
  }
  // There is no valid uniform Lipschitz constant; the declared placeholder 1 is
  // what verify_loss_contract flags.
  double lipschitz() const override { return 1.0; }
  bool differentiable() const override { return true; }
  bool satisfies_contract() const override { return false; }
  std::string spec_string() const override { return "least_squares"; }
  LossDerivatives smoothed(std::span<const double>, double y, double t, double) const override {
    const double u = t - y;
    return {u * u, 2.0 * u, 2.0};
  }
  double prox(std::span<const double>, double y, double t, double mu) const override {
    return (t + 2.0 * mu * y) / (1.0 + 2.0 * mu);
  }
};

}  // namespace

LossPtr make_hinge() { return std::make_shared<HingeLoss>(); }
LossPtr make_logistic() { return std::make_shared<LogisticLoss>(); }
LossPtr make_absolute() { return std::make_shared<AbsoluteLoss>(); }
LossPtr make_eps_insensitive(double epsilon) {
  return std::make_shared<EpsInsensitiveLoss>(epsilon);
}
LossPtr make_huber(double delta) { return std::make_shared<HuberLoss>(delta); }
LossPtr make_pinball(double tau) { return std::make_shared<PinballLoss>(tau); }
LossPtr make_least_squares() { return std::make_shared<LeastSquaresLoss>(); }

LossPtr parse_loss(const std::string& spec) {
  std::string name = spec;
  std::vector<double> args;
  if (auto colon = spec.find(':'); colon != std::string::npos) {
    name = spec.substr(0, colon);
    std::string rest = spec.substr(colon + 1);
    std::istringstream ss(rest);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
      double v = 0.0;
      if (!detail::parse_double(tok, v))
        throw ConfigError("loss \"" + spec + "\": bad numeric parameter \"" + tok + "\"");
      args.push_back(v);
    }
    if (args.empty()) throw ConfigError("loss \"" + spec + "\": missing parameter");
  }
  auto want = [&](std::size_t n) {
    if (args.size() != n)
      throw ConfigError("loss \"" + spec + "\": expected " + std::to_string(n) +
                        " parameter(s), got " + std::to_string(args.size()));
  };
  if (name == "hinge") { want(0); return make_hinge(); }
  if (name == "logistic") { want(0); return make_logistic(); }
  if (name == "absolute") { want(0); return make_absolute(); }
  if (name == "eps_insensitive") { want(1); return make_eps_insensitive(args[0]); }
  if (name == "huber") { want(1); return make_huber(args[0]); }
  if (name == "pinball") { want(1); return make_pinball(args[0]); }
  if (name == "least_squares") { want(0); return make_least_squares(); }
  throw ConfigError("unknown loss \"" + spec +
                    "\" (supported: hinge, logistic, absolute, eps_insensitive:E, huber:D, "
                    "pinball:T, least_squares)");
}

// --- contract verification ---------------------------------------------------

LossGrid LossGrid::default_for(const Loss& loss) {
  LossGrid g;
  if (loss.admissible_y(0.5)) {
    for (int i = 0; i < 9; ++i) g.ys.push_back(-10.0 + 2.5 * i);
  } else {
    g.ys = {-1.0, 1.0};
  }
  return g;
}

std::vector<double> LossGrid::t_values() const {
  std::vector<double> ts(t_count);
  for (int i = 0; i < t_count; ++i)
    ts[i] = t_lo + (t_hi - t_lo) * static_cast<double>(i) / (t_count - 1);
  return ts;
}

std::size_t LossGrid::triple_count() const {
  const std::size_t pairs = static_cast<std::size_t>(t_count) * (t_count - 1) / 2;
  return ys.size() * pairs;
}

bool LossContractReport::pass() const {
  return nonnegative.pass && diagonal_zero.pass && convex.pass && lipschitz.pass;
}

std::string LossContractReport::summary(const std::string& loss_name) const {
  auto line = [](const std::string& clause, const ClauseReport& r) {
    std::string s = (r.pass ? "  [pass] " : "  [FAIL] ") + clause +
                    "  worst violation " + detail::shortest_double_string(r.worst);
    if (!r.detail.empty()) s += "  (" + r.detail + ")";
    return s + "\n";
  };
  std::string out = "loss contract: " + loss_name + (pass() ? "  -- PASS\n" : "  -- FAIL\n");
  out += line("nonnegative   L >= 0", nonnegative);
  out += line("diagonal zero L(x,y,y) = 0", diagonal_zero);
  out += line("convex in t   (midpoint)", convex);
  out += line("Lipschitz     |L|_1 = declared", lipschitz);
  return out;
}

LossContractReport verify_loss_contract(const Loss& loss, const LossGrid& grid) {
  if (grid.ys.empty() || grid.t_count < 2 || !(grid.t_hi > grid.t_lo))
    throw ConfigError("loss grid: needs at least one y and two t values with t_hi > t_lo");
  if (grid.triple_count() < 100)
    throw ConfigError("loss grid: needs at least 100 (y,t,t') triples, got " +
                      std::to_string(grid.triple_count()));

  LossContractReport rep;
  const std::span<const double> x{};
  const auto ts = grid.t_values();
  const double lip = loss.lipschitz();

  for (double y : grid.ys) {
    if (!loss.admissible_y(y)) continue;
    {
      const double d = std::abs(loss.eval(x, y, y));
      rep.diagonal_zero.worst = std::max(rep.diagonal_zero.worst, d);
    }
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double li = loss.eval(x, y, ts[i]);
      rep.nonnegative.worst = std::max(rep.nonnegative.worst, -std::min(li, 0.0));
      for (std::size_t j = i + 1; j < ts.size(); ++j) {
        const double lj = loss.eval(x, y, ts[j]);
        const double mid = loss.eval(x, y, 0.5 * (ts[i] + ts[j]));
        const double scale = std::max(1.0, std::abs(li) + std::abs(lj));
        rep.convex.worst =
            std::max(rep.convex.worst, (mid - 0.5 * (li + lj)) / scale);
        const double quot = std::abs(li - lj) / (ts[j] - ts[i]);
        if (quot - lip > rep.lipschitz.worst) {
          rep.lipschitz.worst = quot - lip;
          rep.lipschitz.detail = "quotient " + detail::shortest_double_string(quot) + " at y=" +
                                 detail::shortest_double_string(y) + ", t=" +
                                 detail::shortest_double_string(ts[i]) + ", t'=" +
                                 detail::shortest_double_string(ts[j]);
        }
      }
    }
  }
  rep.nonnegative.pass = rep.nonnegative.worst <= 1e-12;
  rep.diagonal_zero.pass = rep.diagonal_zero.worst <= 1e-12;
  rep.convex.pass = rep.convex.worst <= 1e-10;
  rep.lipschitz.pass = rep.lipschitz.worst <= 1e-9 * std::max(1.0, lip);
  return rep;
}

LossContractReport verify_loss_contract(const Loss& loss) {
  return verify_loss_contract(loss, LossGrid::default_for(loss));
}

}  // namespace svmrob
