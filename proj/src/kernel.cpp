#include "svmrob/kernel.hpp"

#include <cmath>
#include <sstream>

#include "svmrob/detail/numfmt.hpp"

namespace svmrob {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double ipow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

double Kernel::eval(std::span<const double> a, std::span<const double> b) const {
  if (a.size() != b.size())
    throw ConfigError("kernel eval: dimension mismatch (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + ")");
  if (domain_bound_) {
    const double r2 = *domain_bound_ * *domain_bound_ * (1.0 + 1e-9) + 1e-12;
    if (dot(a, a) > r2 || dot(b, b) > r2)
      throw ConfigError("kernel eval: point outside declared domain bound |x| <= " +
                        detail::shortest_double_string(*domain_bound_));
  }
  return eval_checked(a, b);
}

namespace {

class RbfKernel final : public Kernel {
public:
  explicit RbfKernel(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw ConfigError("rbf kernel requires gamma > 0, got " +
                        detail::shortest_double_string(gamma));
  }
  double sup_norm() const override { return 1.0; }
  bool bounded() const override { return true; }
  std::string spec_string() const override {
    return "rbf:" + detail::shortest_double_string(gamma_);
  }

protected:
  double eval_checked(std::span<const double> a, std::span<const double> b) const override {
    return std::exp(-gamma_ * sq_dist(a, b));
  }

private:
  double gamma_;
};

class UnboundedBase : public Kernel {
public:
  explicit UnboundedBase(std::optional<double> bound) {
    if (bound && (!(*bound > 0.0) || !std::isfinite(*bound)))
      throw ConfigError("domain_bound must be a positive finite radius, got " +
                        detail::shortest_double_string(*bound));
    domain_bound_ = bound;
  }
  bool bounded() const override { return domain_bound_.has_value(); }
  double sup_norm() const override {
    if (!domain_bound_)
      throw ConfigError("kernel \"" + spec_string() +
                        "\" is unbounded; set domain_bound to use it");
    return sup_norm_at(*domain_bound_);
  }

protected:
  virtual double sup_norm_at(double radius) const = 0;
};

class LinearKernel final : public UnboundedBase {
public:
  using UnboundedBase::UnboundedBase;
  std::string spec_string() const override { return "linear"; }

protected:
  double eval_checked(std::span<const double> a, std::span<const double> b) const override {
    return dot(a, b);
  }
  double sup_norm_at(double radius) const override { return radius; }
};

class PolynomialKernel final : public UnboundedBase {
public:
  PolynomialKernel(int degree, double offset, std::optional<double> bound)
      : UnboundedBase(bound), degree_(degree), offset_(offset) {
    if (degree < 1)
      throw ConfigError("polynomial kernel requires degree >= 1, got " +
                        std::to_string(degree));
    if (!(offset >= 0.0) || !std::isfinite(offset))
      throw ConfigError("polynomial kernel requires offset >= 0, got " +
                        detail::shortest_double_string(offset));
  }
  std::string spec_string() const override {
    return "poly:" + std::to_string(degree_) + ":" + detail::shortest_double_string(offset_);
  }

protected:
  double eval_checked(std::span<const double> a, std::span<const double> b) const override {
    return ipow(dot(a, b) + offset_, degree_);
  }
  double sup_norm_at(double radius) const override {
    return std::pow(radius * radius + offset_, 0.5 * degree_);
  }

private:
  int degree_;
  double offset_;
};

class ExponentialKernel final : public UnboundedBase {
public:
  using UnboundedBase::UnboundedBase;
  std::string spec_string() const override { return "exp"; }

protected:
  double eval_checked(std::span<const double> a, std::span<const double> b) const override {
    return std::exp(dot(a, b));
  }
  double sup_norm_at(double radius) const override { return std::exp(0.5 * radius * radius); }
};

}  // namespace

KernelPtr make_rbf(double gamma) { return std::make_shared<RbfKernel>(gamma); }
KernelPtr make_linear(std::optional<double> domain_bound) {
  return std::make_shared<LinearKernel>(domain_bound);
}
KernelPtr make_polynomial(int degree, double offset, std::optional<double> domain_bound) {
  return std::make_shared<PolynomialKernel>(degree, offset, domain_bound);
}
KernelPtr make_exponential(std::optional<double> domain_bound) {
  return std::make_shared<ExponentialKernel>(domain_bound);
}

KernelPtr parse_kernel(const std::string& spec, std::optional<double> domain_bound) {
  std::string name = spec;
  std::vector<std::string> args;
  if (auto colon = spec.find(':'); colon != std::string::npos) {
    name = spec.substr(0, colon);
    std::istringstream ss(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ':')) args.push_back(tok);
  }
  auto want = [&](std::size_t n) {
    if (args.size() != n)
      throw ConfigError("kernel \"" + spec + "\": expected " + std::to_string(n) +
                        " parameter(s), got " + std::to_string(args.size()));
  };
  auto num = [&](const std::string& tok) {
    double v = 0.0;
    if (!detail::parse_double(tok, v))
      throw ConfigError("kernel \"" + spec + "\": bad numeric parameter \"" + tok + "\"");
    return v;
  };
  if (name == "rbf") {
    want(1);
    return make_rbf(num(args[0]));
  }
  if (name == "linear") {
    want(0);
    return make_linear(domain_bound);
  }
  if (name == "poly") {
    want(2);
    const double d = num(args[0]);
    const int degree = static_cast<int>(d);
    if (degree != d)
      throw ConfigError("kernel \"" + spec + "\": degree must be an integer");
    return make_polynomial(degree, num(args[1]), domain_bound);
  }
  if (name == "exp") {
    want(0);
    return make_exponential(domain_bound);
  }
  throw ConfigError("unknown kernel \"" + spec +
                    "\" (supported: rbf:G, linear, poly:D:C, exp)");
}

bool same_kernel(const Kernel& a, const Kernel& b) {
  return a.spec_string() == b.spec_string() && a.domain_bound() == b.domain_bound();
}

Eigen::MatrixXd gram(const Kernel& k, const std::vector<Point>& points) {
  if (points.empty()) throw ConfigError("gram: empty point list");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = k.eval(points[i], points[i]);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      K(i, j) = k.eval(points[i], points[j]);
      K(j, i) = K(i, j);
    }
  }
  return K;
}

RkhsFunction::RkhsFunction(KernelPtr kernel, std::vector<Point> support,
                           std::vector<double> coeffs)
    : kernel_(std::move(kernel)),
      support_(std::move(support)),
      coeffs_(std::move(coeffs)),
      cache_(std::make_shared<Cache>()) {
  if (!kernel_) throw ConfigError("RkhsFunction: null kernel");
  if (support_.size() != coeffs_.size())
    throw ConfigError("RkhsFunction: support and coefficient counts differ (" +
                      std::to_string(support_.size()) + " vs " +
                      std::to_string(coeffs_.size()) + ")");
  for (std::size_t j = 1; j < support_.size(); ++j)
    if (support_[j].size() != support_[0].size())
      throw ConfigError("RkhsFunction: support points of mixed dimension");
}

RkhsFunction RkhsFunction::zero(KernelPtr kernel) {
  return RkhsFunction(std::move(kernel), {}, {});
}

RkhsFunction RkhsFunction::feature(KernelPtr kernel, Point x) {
  return RkhsFunction(std::move(kernel), {std::move(x)}, {1.0});
}

double RkhsFunction::eval(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < support_.size(); ++j)
    s += coeffs_[j] * kernel_->eval(x, support_[j]);
  return s;
}

const Eigen::MatrixXd& RkhsFunction::support_gram() const {
  std::call_once(cache_->once, [this] {
    cache_->gram = support_.empty() ? Eigen::MatrixXd(0, 0) : gram(*kernel_, support_);
  });
  return cache_->gram;
}

double RkhsFunction::squared_norm() const {
  if (support_.empty()) return 0.0;
  const Eigen::Map<const Eigen::VectorXd> a(coeffs_.data(),
                                            static_cast<Eigen::Index>(coeffs_.size()));
  const double q = a.dot(support_gram() * a);
  return std::max(q, 0.0);
}

double RkhsFunction::norm() const { return std::sqrt(squared_norm()); }

double rkhs_inner(const RkhsFunction& f, const RkhsFunction& g) {
  if (!same_kernel(*f.kernel(), *g.kernel()))
    throw ConfigError("rkhs_inner: kernel mismatch (" + f.kernel()->spec_string() + " vs " +
                      g.kernel()->spec_string() + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < f.support().size(); ++i)
    for (std::size_t j = 0; j < g.support().size(); ++j)
      s += f.coeffs()[i] * g.coeffs()[j] * f.kernel()->eval(f.support()[i], g.support()[j]);
  return s;
}

double rkhs_distance(const RkhsFunction& f, const RkhsFunction& g) {
  const double q = f.squared_norm() - 2.0 * rkhs_inner(f, g) + g.squared_norm();
  return std::sqrt(std::max(q, 0.0));
}

double sup_distance(const RkhsFunction& f, const RkhsFunction& g,
                    const std::vector<Point>& probes) {
  if (probes.empty()) throw ConfigError("sup_distance: empty probe grid");
  double m = 0.0;
  for (const auto& x : probes) m = std::max(m, std::abs(f.eval(x) - g.eval(x)));
  return m;
}

}  // namespace svmrob
