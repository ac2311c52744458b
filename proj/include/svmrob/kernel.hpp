#pragma once

#include <Eigen/Dense>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "svmrob/common.hpp"

namespace svmrob {

/// Bounded continuous kernel on R^d. Immutable and shareable across threads.
///
/// Boundedness: gaussian rbf is always bounded; linear, polynomial and
/// exponential kernels are bounded only on a bounded input domain, so those
/// variants require a domain_bound radius R (inputs must satisfy |x| <= R)
/// before sup_norm() is defined.
class Kernel {
public:
  virtual ~Kernel() = default;

  /// k(x, x'). Throws ConfigError on dimension mismatch or when a point
  /// falls outside a declared domain_bound.
  double eval(std::span<const double> a, std::span<const double> b) const;

  /// |k|_inf = sup_x sqrt(k(x,x)). Throws ConfigError when the kernel is
  /// unbounded and no domain_bound was declared.
  virtual double sup_norm() const = 0;

  virtual bool bounded() const = 0;
  virtual std::string spec_string() const = 0;

  std::optional<double> domain_bound() const { return domain_bound_; }

protected:
  virtual double eval_checked(std::span<const double> a, std::span<const double> b) const = 0;
  std::optional<double> domain_bound_;
};

using KernelPtr = std::shared_ptr<const Kernel>;

KernelPtr make_rbf(double gamma);
KernelPtr make_linear(std::optional<double> domain_bound = std::nullopt);
KernelPtr make_polynomial(int degree, double offset,
                          std::optional<double> domain_bound = std::nullopt);
KernelPtr make_exponential(std::optional<double> domain_bound = std::nullopt);

/// Parses "rbf:G", "linear", "poly:D:C", "exp".
KernelPtr parse_kernel(const std::string& spec,
                       std::optional<double> domain_bound = std::nullopt);

bool same_kernel(const Kernel& a, const Kernel& b);

/// K_ij = k(points[i], points[j]).
Eigen::MatrixXd gram(const Kernel& k, const std::vector<Point>& points);

/// Finite kernel expansion f = sum_j coeffs[j] k(., support[j]).
///
/// Immutable after construction; the support Gram matrix is computed once on
/// first use behind a once_flag shared by all copies, so instances may be
/// read from many threads.
class RkhsFunction {
public:
  RkhsFunction(KernelPtr kernel, std::vector<Point> support, std::vector<double> coeffs);

  static RkhsFunction zero(KernelPtr kernel);
  /// The feature map Phi(x) = k(., x).
  static RkhsFunction feature(KernelPtr kernel, Point x);

  double eval(std::span<const double> x) const;
  double operator()(const Point& x) const { return eval(x); }

  double squared_norm() const;
  double norm() const;

  const KernelPtr& kernel() const { return kernel_; }
  const std::vector<Point>& support() const { return support_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const Eigen::MatrixXd& support_gram() const;

private:
  KernelPtr kernel_;
  std::vector<Point> support_;
  std::vector<double> coeffs_;
  struct Cache {
    std::once_flag once;
    Eigen::MatrixXd gram;
  };
  std::shared_ptr<Cache> cache_;
};

/// <f, g>_H via the cross Gram matrix. Throws ConfigError on kernel mismatch.
double rkhs_inner(const RkhsFunction& f, const RkhsFunction& g);

/// |f - g|_H, clamped at 0 against floating error.
double rkhs_distance(const RkhsFunction& f, const RkhsFunction& g);

/// max over probes of |f(x) - g(x)|. Throws ConfigError on an empty grid.
double sup_distance(const RkhsFunction& f, const RkhsFunction& g,
                    const std::vector<Point>& probes);

}  // namespace svmrob
