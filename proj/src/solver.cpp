#include "svmrob/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "svmrob/detail/numfmt.hpp"
#include "svmrob/rng.hpp"

namespace svmrob {

namespace {

struct TrainingAtoms {
  std::vector<Point> xs;
  std::vector<double> ys;
  std::vector<double> ws;
};

/// Duplicate (x, y) atoms are combined and zero-weight atoms dropped; the
/// minimization only sees the resulting distinct weighted observations.
TrainingAtoms prepare(const DiscreteMeasure& measure) {
  const DiscreteMeasure merged = measure.merged();
  TrainingAtoms out;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (merged.weights()[i] == 0.0) continue;
    out.xs.push_back(merged.atoms()[i].x);
    out.ys.push_back(merged.atoms()[i].y);
    out.ws.push_back(merged.weights()[i]);
  }
  if (out.xs.empty()) throw ConfigError("train: measure carries no mass");
  return out;
}

/// Least norm of f + (1/2 lambda) sum_i w_i h_i Phi(x_i) over box-constrained
/// selections h, as a coordinate-descent quadratic program in h. Intervals
/// are the loss subgradients at f(x_i), widened by nu on both sides of the
/// argument.
double box_qp_residual(const Eigen::MatrixXd& K, const Eigen::VectorXd& alpha,
                       const TrainingAtoms& atoms, const Loss& loss, double lambda,
                       double nu) {
  const auto n = alpha.size();
  const Eigen::VectorXd f = K * alpha;
  std::vector<double> lo(n), hi(n), h(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (nu > 0.0) {
      lo[i] = loss.subgradient(atoms.xs[i], atoms.ys[i], f[i] - nu).lo;
      hi[i] = loss.subgradient(atoms.xs[i], atoms.ys[i], f[i] + nu).hi;
    } else {
      const auto s = loss.subgradient(atoms.xs[i], atoms.ys[i], f[i]);
      lo[i] = s.lo;
      hi[i] = s.hi;
    }
    h[i] = 0.5 * (lo[i] + hi[i]);
  }
  Eigen::VectorXd v = alpha;
  for (Eigen::Index i = 0; i < n; ++i) v[i] += atoms.ws[i] * h[i] / (2.0 * lambda);
  Eigen::VectorXd Kv = K * v;
  const double tol = 1e-13 * std::max(1.0, loss.lipschitz());
  for (int sweep = 0; sweep < 500; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (K(i, i) <= 0.0) continue;  // feature map is the zero vector
      const double target =
          std::clamp(h[i] - 2.0 * lambda * Kv[i] / (K(i, i) * atoms.ws[i]), lo[i], hi[i]);
      const double delta = target - h[i];
      if (delta == 0.0) continue;
      h[i] = target;
      const double dv = atoms.ws[i] * delta / (2.0 * lambda);
      v[i] += dv;
      Kv += K.col(i) * dv;
      moved = std::max(moved, std::abs(delta));
    }
    if (moved <= tol) break;
  }
  const double q = v.dot(K * v);
  return std::sqrt(std::max(q, 0.0));
}

std::string stage_label(double mu) {
  return mu == 0.0 ? std::string("exact stage")
                   : "smoothing stage mu=" + detail::shortest_double_string(mu);
}

}  // namespace

SvmModel train(const DiscreteMeasure& measure, const LossPtr& loss, const KernelPtr& kernel,
               double lambda, const SolverOptions& opts) {
  if (!loss) throw ConfigError("train: null loss");
  if (!kernel) throw ConfigError("train: null kernel");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ConfigError("train: lambda must be positive, got " +
                      detail::shortest_double_string(lambda));
  if (opts.max_iterations < 1) throw ConfigError("train: max_iterations must be >= 1");
  if (!(opts.gram_jitter >= 0.0)) throw ConfigError("train: gram_jitter must be >= 0");
  if (opts.tolerance && !(*opts.tolerance > 0.0))
    throw ConfigError("train: tolerance must be positive");

  if (!loss->satisfies_contract()) {
    if (!opts.allow_contract_violations)
      throw ConfigError("train: loss \"" + loss->spec_string() +
                        "\" does not satisfy the loss contract (no uniform Lipschitz "
                        "constant); pass allow_contract_violations to train anyway");
  } else {
    const auto report = verify_loss_contract(*loss);
    if (!report.pass())
      throw ConfigError("train: loss fails its contract\n" +
                        report.summary(loss->spec_string()));
  }
  const double knorm = kernel->sup_norm();  // throws for unbounded kernels
  const double lip = loss->lipschitz();

  const TrainingAtoms atoms = prepare(measure);
  const auto n = static_cast<Eigen::Index>(atoms.xs.size());
  for (Eigen::Index i = 0; i < n; ++i)
    if (!loss->admissible_y(atoms.ys[i]))
      throw ConfigError("train: output value " + detail::shortest_double_string(atoms.ys[i]) +
                        " is not admissible for loss \"" + loss->spec_string() + "\"");

  const double tol = opts.tolerance.value_or(loss->differentiable() ? 1e-6 : 1e-3);
  std::vector<double> stages;
  if (loss->differentiable()) {
    stages = {0.0};
  } else {
    stages = opts.smoothing_schedule.empty()
                 ? std::vector<double>{1e-1 * lip, 1e-2 * lip, 1e-3 * lip, 1e-4 * lip}
                 : opts.smoothing_schedule;
    for (std::size_t s = 0; s < stages.size(); ++s) {
      if (!(stages[s] > 0.0))
        throw ConfigError("train: smoothing widths must be positive");
      if (s > 0 && !(stages[s] < stages[s - 1]))
        throw ConfigError("train: smoothing schedule must be strictly decreasing");
    }
    if (!(stages.back() < tol))
      throw ConfigError("train: smoothing schedule must end below the tolerance " +
                        detail::shortest_double_string(tol));
  }

  const Eigen::MatrixXd K = gram(*kernel, atoms.xs);
  Eigen::MatrixXd K_sys = K;
  if (opts.gram_jitter > 0.0)
    K_sys.diagonal().array() += opts.gram_jitter;

  std::vector<double> zero_vals(n);
  for (Eigen::Index i = 0; i < n; ++i)
    zero_vals[i] = loss->eval(atoms.xs[i], atoms.ys[i], 0.0);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  if (opts.seed != 0) {
    std::mt19937_64 gen(opts.seed);
    const double span = 0.5 * lip / (2.0 * lambda * static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) alpha[i] = uniform(gen, -span, span);
  }

  const double stage_target = 0.5 * tol;
  int total_iterations = 0;
  std::vector<std::vector<double>> stage_trace;

  for (double mu : stages) {
    Eigen::VectorXd f = K * alpha;
    auto objective_at = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& fa) {
      double obj = lambda * a.dot(fa);
      for (Eigen::Index i = 0; i < n; ++i)
        obj += atoms.ws[i] *
               (loss->smoothed(atoms.xs[i], atoms.ys[i], fa[i], mu).value - zero_vals[i]);
      return obj;
    };
    double obj = objective_at(alpha, f);
    std::vector<double> trace{obj};
    bool converged = false;
    double residual = 0.0;

    for (int it = 0; it < opts.max_iterations; ++it) {
      Eigen::VectorXd g(n), curv(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto d = loss->smoothed(atoms.xs[i], atoms.ys[i], f[i], mu);
        g[i] = atoms.ws[i] * d.d1;
        curv[i] = atoms.ws[i] * d.d2;
      }
      const Eigen::VectorXd psi = 2.0 * lambda * alpha + g;
      const Eigen::VectorXd Kpsi = K * psi;
      residual = std::sqrt(std::max(0.0, psi.dot(Kpsi))) / (2.0 * lambda);
      if (residual <= stage_target) {
        converged = true;
        break;
      }

      Eigen::MatrixXd M = curv.asDiagonal() * K_sys;
      M.diagonal().array() += 2.0 * lambda;
      Eigen::VectorXd step = M.partialPivLu().solve(-psi);
      double slope = step.dot(Kpsi);
      if (!step.allFinite() || slope >= 0.0) {
        step = -psi / (2.0 * lambda);
        slope = -psi.dot(Kpsi) / (2.0 * lambda);
      }
      if (slope >= 0.0) {
        // Stationary along every usable direction; the residual above is the
        // honest answer.
        break;
      }

      const Eigen::VectorXd Kstep = K * step;
      double t = 1.0;
      bool accepted = false;
      for (int half = 0; half < 60; ++half) {
        const Eigen::VectorXd a_new = alpha + t * step;
        const Eigen::VectorXd f_new = f + t * Kstep;
        const double obj_new = objective_at(a_new, f_new);
        if (obj_new <= obj + 1e-4 * t * slope) {
          alpha = a_new;
          f = f_new;
          obj = obj_new;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted)
        throw SolverError("train: line search failed in " + stage_label(mu) +
                              " (residual " + detail::shortest_double_string(residual) + ")",
                          total_iterations, residual);
      ++total_iterations;
      trace.push_back(obj);
    }
    stage_trace.push_back(std::move(trace));
    if (!converged)
      throw SolverError("train: no convergence in " + stage_label(mu) + " within " +
                            std::to_string(opts.max_iterations) + " iterations (residual " +
                            detail::shortest_double_string(residual) + ", target " +
                            detail::shortest_double_string(stage_target) + ")",
                        total_iterations, residual);
  }

  const double nu = loss->differentiable() ? 0.0 : stages.back() * lip;
  const double cert = box_qp_residual(K, alpha, atoms, *loss, lambda, nu);
  if (!(cert <= tol))
    throw SolverError("train: certificate residual " + detail::shortest_double_string(cert) +
                          " exceeds tolerance " + detail::shortest_double_string(tol),
                      total_iterations, cert);

  const Eigen::VectorXd f = K * alpha;
  double objective = lambda * alpha.dot(f);
  for (Eigen::Index i = 0; i < n; ++i)
    objective += atoms.ws[i] * (loss->eval(atoms.xs[i], atoms.ys[i], f[i]) - zero_vals[i]);

  if (loss->satisfies_contract()) {
    const double h_norm = std::sqrt(std::max(0.0, alpha.dot(f)));
    const double h_bound = lip * knorm / lambda;
    if (h_norm > h_bound + 1e-9)
      throw SolverError("train: trained function violates its norm bound (" +
                            detail::shortest_double_string(h_norm) + " > " +
                            detail::shortest_double_string(h_bound) + ")",
                        total_iterations, cert);
  }

  SvmModel model{
      RkhsFunction(kernel, atoms.xs, std::vector<double>(alpha.data(), alpha.data() + n)),
      lambda,
      loss,
      objective,
      cert,
      total_iterations,
      nu,
      std::move(stage_trace)};
  return model;
}

double certificate_residual(const SvmModel& model, const DiscreteMeasure& measure,
                            double kink_tolerance) {
  if (!(kink_tolerance >= 0.0))
    throw ConfigError("certificate_residual: kink_tolerance must be >= 0");
  const TrainingAtoms atoms = prepare(measure);
  const auto& support = model.function.support();
  if (support.size() != atoms.xs.size())
    throw ConfigError("certificate_residual: model support does not match the measure (" +
                      std::to_string(support.size()) + " vs " +
                      std::to_string(atoms.xs.size()) + " atoms after merging)");
  for (std::size_t i = 0; i < support.size(); ++i)
    if (support[i] != atoms.xs[i])
      throw ConfigError("certificate_residual: model support does not match the measure "
                        "(input mismatch at atom " +
                        std::to_string(i) + ")");
  const auto n = static_cast<Eigen::Index>(support.size());
  const Eigen::Map<const Eigen::VectorXd> alpha(model.function.coeffs().data(), n);
  return box_qp_residual(model.function.support_gram(), alpha, atoms, *model.loss,
                         model.lambda, kink_tolerance);
}

std::string NormBoundReport::summary() const {
  auto line = [](const char* name, const BoundLine& b) {
    return std::string(b.pass ? "  [pass] " : "  [FAIL] ") + name + "  " +
           detail::shortest_double_string(b.value) + " <= " +
           detail::shortest_double_string(b.bound) + "\n";
  };
  std::string out = pass() ? "norm bounds: PASS\n" : "norm bounds: FAIL\n";
  out += line("H-norm        ", h_norm);
  out += line("sup-norm      ", sup_norm);
  out += line("shifted loss  ", shifted_loss_sup);
  return out;
}

NormBoundReport check_norm_bounds(const SvmModel& model, const std::vector<Point>& probe_xs,
                                  const std::vector<double>& probe_ys) {
  if (probe_xs.empty()) throw ConfigError("check_norm_bounds: empty probe grid");
  const double lip = model.loss->lipschitz();
  const double knorm = model.function.kernel()->sup_norm();
  const double lambda = model.lambda;

  NormBoundReport rep;
  rep.h_norm.value = model.function.norm();
  rep.h_norm.bound = lip * knorm / lambda;

  double fmax = 0.0;
  double shifted_max = 0.0;
  for (const auto& x : probe_xs) {
    const double fx = model.function.eval(x);
    fmax = std::max(fmax, std::abs(fx));
    for (double y : probe_ys) {
      if (!model.loss->admissible_y(y)) continue;
      shifted_max = std::max(shifted_max, std::abs(model.loss->eval_shifted(x, y, fx)));
    }
  }
  rep.sup_norm.value = fmax;
  rep.sup_norm.bound = lip * knorm * knorm / lambda;
  rep.shifted_loss_sup.value = shifted_max;
  rep.shifted_loss_sup.bound = lip * lip * knorm * knorm / lambda;

  for (BoundLine* b : {&rep.h_norm, &rep.sup_norm, &rep.shifted_loss_sup})
    b->pass = b->value <= b->bound + 1e-9;
  return rep;
}

RkhsFunction mean_embedding(const std::vector<double>& h, const DiscreteMeasure& measure,
                            const KernelPtr& kernel) {
  if (h.size() != measure.size())
    throw ConfigError("mean_embedding: " + std::to_string(h.size()) + " values for " +
                      std::to_string(measure.size()) + " atoms");
  std::vector<Point> support;
  std::vector<double> coeffs;
  support.reserve(measure.size());
  coeffs.reserve(measure.size());
  for (std::size_t i = 0; i < measure.size(); ++i) {
    support.push_back(measure.atoms()[i].x);
    coeffs.push_back(measure.weights()[i] * h[i]);
  }
  return RkhsFunction(kernel, std::move(support), std::move(coeffs));
}

StabilityReport stability_bound_check(const DiscreteMeasure& P, const DiscreteMeasure& P0,
                                      const LossPtr& loss, const KernelPtr& kernel,
                                      double lambda, const SolverOptions& opts) {
  if (!loss || !loss->differentiable())
    throw ConfigError("stability_bound_check: requires a differentiable loss (the derivative "
                      "along the base minimizer must be single-valued)");
  const SvmModel model0 = train(P0, loss, kernel, lambda, opts);
  const SvmModel modelP = train(P, loss, kernel, lambda, opts);

  auto h_along_f0 = [&](const DiscreteMeasure& m) {
    std::vector<double> h(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto& a = m.atoms()[i];
      const auto s = model0.function.eval(a.x);
      h[i] = loss->subgradient(a.x, a.y, s).lo;
    }
    return h;
  };
  const RkhsFunction embP = mean_embedding(h_along_f0(P), P, kernel);
  const RkhsFunction embP0 = mean_embedding(h_along_f0(P0), P0, kernel);

  StabilityReport rep;
  rep.lhs = rkhs_distance(modelP.function, model0.function);
  rep.rhs = rkhs_distance(embP, embP0) / lambda;
  rep.pass = rep.lhs <= rep.rhs + 1e-9;
  return rep;
}

double shifted_risk(const RkhsFunction& f, const DiscreteMeasure& P, const Loss& loss) {
  double r = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const auto& a = P.atoms()[i];
    r += P.weights()[i] * loss.eval_shifted(a.x, a.y, f.eval(a.x));
  }
  return r;
}

double regularized_shifted_risk(const RkhsFunction& f, const DiscreteMeasure& P,
                                const Loss& loss, double lambda) {
  return shifted_risk(f, P, loss) + lambda * f.squared_norm();
}

}  // namespace svmrob
