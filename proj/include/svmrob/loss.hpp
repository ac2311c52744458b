#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "svmrob/common.hpp"

namespace svmrob {

/// Closed interval of Clarke subgradients of t -> L(x,y,t).
struct SubgradientInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double g, double tol = 0.0) const { return g >= lo - tol && g <= hi + tol; }
};

/// Value and first/second derivative of a (possibly smoothed) loss in t.
struct LossDerivatives {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// A supervised loss L(x, y, t), convex and uniformly Lipschitz in the
/// prediction t, vanishing on the diagonal t = y. The built-in variants ignore
/// x; the argument is kept so user-defined losses may depend on it.
class Loss {
public:
  virtual ~Loss() = default;

  virtual double eval(std::span<const double> x, double y, double t) const = 0;
  virtual SubgradientInterval subgradient(std::span<const double> x, double y, double t) const = 0;

  /// Uniform Lipschitz constant |L|_1 of t -> L(x,y,t).
  virtual double lipschitz() const = 0;
  /// Whether dL/dt exists and is continuous everywhere.
  virtual bool differentiable() const = 0;
  /// False for the deliberately contract-violating least-squares variant.
  virtual bool satisfies_contract() const { return true; }
  virtual bool admissible_y(double y) const;
  virtual std::string spec_string() const = 0;

  /// The shifted loss L*(x,y,t) = L(x,y,t) - L(x,y,0).
  double eval_shifted(std::span<const double> x, double y, double t) const {
    return eval(x, y, t) - eval(x, y, 0.0);
  }

  /// Value/derivatives of the Moreau envelope
  /// L_mu(t) = min_s L(x,y,s) + (s-t)^2 / (2 mu), or of any smooth surrogate
  /// within the envelope bracket [L - mu |L|_1^2 / 2, L]; the already
  /// differentiable variants simply return the loss itself. With mu == 0 the
  /// loss must be differentiable and is returned exactly. d2 is a nonnegative
  /// curvature proxy, a derivative of d1 almost everywhere.
  virtual LossDerivatives smoothed(std::span<const double> x, double y, double t, double mu) const;

  /// prox_{mu L}(t) = argmin_s L(x,y,s) + (s-t)^2 / (2 mu). The base
  /// implementation bisects on the subgradient; built-ins use closed forms.
  virtual double prox(std::span<const double> x, double y, double t, double mu) const;
};

using LossPtr = std::shared_ptr<const Loss>;

LossPtr make_hinge();
LossPtr make_logistic();
LossPtr make_absolute();
LossPtr make_eps_insensitive(double epsilon);
LossPtr make_huber(double delta);
LossPtr make_pinball(double tau);
/// (y-t)^2; not uniformly Lipschitz, so it violates the loss contract.
LossPtr make_least_squares();

/// Parses "hinge", "logistic", "absolute", "eps_insensitive:0.1", "huber:1.35",
/// "pinball:0.5", "least_squares". Throws ConfigError otherwise.
LossPtr parse_loss(const std::string& spec);

// --- contract verification --------------------------------------------------

/// Sampling plan for verify_loss_contract: all (y, t, t') with y in ys and
/// t, t' on a uniform grid of t_count points over [t_lo, t_hi].
struct LossGrid {
  std::vector<double> ys;
  double t_lo = -10.0;
  double t_hi = 10.0;
  int t_count = 21;

  static LossGrid default_for(const Loss& loss);
  std::vector<double> t_values() const;
  std::size_t triple_count() const;
};

struct ClauseReport {
  bool pass = true;
  double worst = 0.0;  ///< worst violation magnitude seen on the grid
  std::string detail;
};

struct LossContractReport {
  ClauseReport nonnegative;    ///< L >= 0
  ClauseReport diagonal_zero;  ///< L(x,y,y) = 0
  ClauseReport convex;         ///< midpoint convexity in t
  ClauseReport lipschitz;      ///< |L(t)-L(t')| <= |L|_1 |t-t'|
  bool pass() const;
  std::string summary(const std::string& loss_name) const;
};

/// Checks the loss contract clause by clause over the grid. Failures are
/// reported, never thrown. Requires at least 100 (y,t,t') triples.
LossContractReport verify_loss_contract(const Loss& loss, const LossGrid& grid);
LossContractReport verify_loss_contract(const Loss& loss);

}  // namespace svmrob
