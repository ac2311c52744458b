#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svmrob/detail/numfmt.hpp"
#include "svmrob/io.hpp"
#include "svmrob/loss.hpp"
#include "svmrob/prokhorov.hpp"
#include "svmrob/solver.hpp"

namespace {

using namespace svmrob;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

int run_train(const std::string& data_path, const std::string& loss_spec,
              const std::string& kernel_spec, std::optional<double> domain_bound, double lambda,
              std::uint64_t seed, bool allow_violations, const std::string& out_path) {
  const DiscreteMeasure P = empirical_from(ingest_csv(data_path));
  SolverOptions opts;
  opts.seed = seed;
  opts.allow_contract_violations = allow_violations;
  const SvmModel model =
      train(P, parse_loss(loss_spec), parse_kernel(kernel_spec, domain_bound), lambda, opts);
  save_model(model, out_path);
  std::cout << "{\"out\":\"" << out_path << "\",\"support_size\":" << model.function.support().size()
            << ",\"objective\":" << detail::double17(model.objective)
            << ",\"certificate_residual\":" << detail::double17(model.certificate_residual)
            << ",\"iterations\":" << model.iterations << "}\n";
  return kExitOk;
}

// Projects the joint (x, y) atoms of both measures onto a common line and
// expands rational weights into repeated samples, so the sweep-based 1-D
// route can serve as an independent cross-check of the flow-based one.
std::pair<std::vector<double>, std::vector<double>> project_to_line(const DiscreteMeasure& A,
                                                                    const DiscreteMeasure& B) {
  std::vector<Point> joints;
  auto add_joints = [&joints](const DiscreteMeasure& M) {
    for (const auto& a : M.atoms()) {
      Point p = a.x;
      p.push_back(a.y);
      joints.push_back(std::move(p));
    }
  };
  add_joints(A);
  add_joints(B);

  const std::size_t dim = joints.front().size();
  Point origin = joints.front();
  Point dir(dim, 0.0);
  double dir_norm = 0.0;
  for (const auto& p : joints) {
    double n2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) n2 += (p[k] - origin[k]) * (p[k] - origin[k]);
    if (n2 > dir_norm * dir_norm) {
      dir_norm = std::sqrt(n2);
      for (std::size_t k = 0; k < dim; ++k) dir[k] = p[k] - origin[k];
    }
  }
  std::vector<double> ts(joints.size(), 0.0);
  if (dir_norm > 0.0) {
    for (std::size_t k = 0; k < dim; ++k) dir[k] /= dir_norm;
    for (std::size_t i = 0; i < joints.size(); ++i) {
      double t = 0.0, off2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) t += (joints[i][k] - origin[k]) * dir[k];
      for (std::size_t k = 0; k < dim; ++k) {
        const double r = joints[i][k] - origin[k] - t * dir[k];
        off2 += r * r;
      }
      if (std::sqrt(off2) > 1e-9 * std::max(1.0, std::abs(t)))
        throw ConfigError(
            "mode 1d needs all atoms of both measures on one line in the joint "
            "(x, y) space; use --mode finite instead");
      ts[i] = t;
    }
  }

  auto expand = [](const DiscreteMeasure& M, const double* t_begin) {
    int denom = 0;
    for (int k = 1; k <= 20000; ++k) {
      bool ok = true;
      for (double w : M.weights()) {
        const double scaled = w * k;
        if (std::abs(scaled - std::round(scaled)) > 1e-9 * k) {
          ok = false;
          break;
        }
      }
      if (ok) {
        denom = k;
        break;
      }
    }
    if (denom == 0)
      throw ConfigError("mode 1d needs weights expressible as k/N with N <= 20000");
    std::vector<double> samples;
    for (std::size_t i = 0; i < M.weights().size(); ++i) {
      const int copies = static_cast<int>(std::llround(M.weights()[i] * denom));
      samples.insert(samples.end(), copies, t_begin[i]);
    }
    return samples;
  };
  return {expand(A, ts.data()), expand(B, ts.data() + A.atoms().size())};
}

int run_prokhorov(const std::string& a_path, const std::string& b_path, const std::string& mode) {
  const DiscreteMeasure A = load_measure(a_path);
  const DiscreteMeasure B = load_measure(b_path);
  double epsilon = 0.0;
  if (mode == "finite") {
    epsilon = prokhorov_finite(A, B).epsilon;
  } else {
    const auto [sa, sb] = project_to_line(A, B);
    epsilon = prokhorov_1d(sa, sb);
  }
  std::cout << "{\"mode\":\"" << mode << "\",\"epsilon\":" << detail::double17(epsilon) << "}\n";
  return kExitOk;
}

int run_experiment_cmd(const std::string& config_path, const std::string& out_path,
                       const std::optional<std::string>& csv_path, std::optional<int> jobs,
                       std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = parse_config(config_path);
  if (jobs) cfg.jobs = *jobs;
  if (seed) cfg.base_seed = *seed;
  cfg.validate();
  const ExperimentReport report = run_experiment(cfg);
  emit_report(report, out_path, csv_path);
  std::cout << "{\"out\":\"" << out_path << "\",\"cells\":" << report.cells.size()
            << ",\"verdict\":\"" << report.verdict << "\"}\n";
  return kExitOk;
}

int run_verify_loss(const std::string& loss_spec) {
  const LossPtr loss = parse_loss(loss_spec);
  const LossContractReport report = verify_loss_contract(*loss);
  std::cout << report.summary(loss_spec);
  return report.pass() ? kExitOk : kExitConfig;
}

int run_report(const std::string& in_path, const std::string& format) {
  if (format != "csv")
    throw ConfigError("unsupported --format \"" + format + "\"; only csv is available");
  std::cout << report_to_csv(parse_report(in_path));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Support vector machines on finitely supported measures, with "
      "Prokhorov-metric robustness experiments"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "Train one model from a dataset CSV");
  std::string data_path, loss_spec, kernel_spec, out_path;
  double lambda = 0.0;
  std::uint64_t train_seed = 0;
  std::optional<double> domain_bound;
  bool allow_violations = false;
  train_cmd->add_option("--data", data_path, "dataset CSV with header x_1,...,x_d,y")->required();
  train_cmd->add_option("--loss", loss_spec, "loss spec, e.g. hinge or pinball:0.5")->required();
  train_cmd->add_option("--kernel", kernel_spec, "kernel spec, e.g. rbf:1.0 or linear")
      ->required();
  train_cmd->add_option("--domain-bound", domain_bound,
                        "input radius bound for linear/poly/exp kernels");
  train_cmd->add_option("--lambda", lambda, "regularization weight, > 0")->required();
  train_cmd->add_option("--seed", train_seed, "solver warm-start seed (0 = zero start)");
  train_cmd->add_flag("--allow-contract-violations", allow_violations,
                      "permit losses that fail the Lipschitz contract, e.g. least_squares");
  train_cmd->add_option("--out", out_path, "output model JSON path")->required();

  auto* prok_cmd =
      app.add_subcommand("prokhorov", "Exact Prokhorov distance between two measure files");
  std::string a_path, b_path, mode = "finite";
  prok_cmd->add_option("--a", a_path, "first measure JSON")->required();
  prok_cmd->add_option("--b", b_path, "second measure JSON")->required();
  prok_cmd->add_option("--mode", mode, "finite (flow certificate) or 1d (sweep cross-check)")
      ->check(CLI::IsMember({"finite", "1d"}));

  auto* exp_cmd = app.add_subcommand("experiment", "Run a robustness experiment from a config");
  std::string config_path, report_out;
  std::optional<std::string> csv_out;
  std::optional<int> jobs_override;
  std::optional<std::uint64_t> seed_override;
  exp_cmd->add_option("--config", config_path, "experiment config JSON")->required();
  exp_cmd->add_option("--out", report_out, "output report JSON path")->required();
  exp_cmd->add_option("--csv", csv_out, "optional per-cell CSV path");
  exp_cmd->add_option("--jobs", jobs_override, "worker threads (overrides config)");
  exp_cmd->add_option("--seed", seed_override, "base seed (overrides config)");

  auto* verify_cmd =
      app.add_subcommand("verify-loss", "Check the loss contract clause by clause");
  std::string verify_spec;
  verify_cmd->add_option("--loss", verify_spec, "loss spec to check")->required();

  auto* report_cmd = app.add_subcommand("report", "Re-emit a stored report");
  std::string report_in, report_format;
  report_cmd->add_option("--in", report_in, "report JSON produced by `svm experiment`")
      ->required();
  report_cmd->add_option("--format", report_format, "output format (csv)")->required();

  try {
    app.parse(argc, argv);
    if (*train_cmd)
      return run_train(data_path, loss_spec, kernel_spec, domain_bound, lambda, train_seed,
                       allow_violations, out_path);
    if (*prok_cmd) return run_prokhorov(a_path, b_path, mode);
    if (*exp_cmd)
      return run_experiment_cmd(config_path, report_out, csv_out, jobs_override, seed_override);
    if (*verify_cmd) return run_verify_loss(verify_spec);
    if (*report_cmd) return run_report(report_in, report_format);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}
