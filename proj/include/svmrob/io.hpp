#pragma once

#include <optional>
#include <string>

#include "svmrob/experiment.hpp"
#include "svmrob/measure.hpp"
#include "svmrob/solver.hpp"

namespace svmrob {

/// Reads a whole file. Throws IoError when the file cannot be opened.
std::string read_file(const std::string& path);

/// Writes content atomically enough for this tool (truncate + write).
/// Throws IoError when the path is unwritable.
void write_file(const std::string& path, const std::string& content);

/// Parses a dataset CSV with mandatory header x_1,...,x_d,y. Every cell must
/// be a finite number; ragged rows and non-numeric cells are rejected with a
/// row and column diagnostic. A trailing blank line is tolerated.
Dataset ingest_csv(const std::string& path);
Dataset ingest_csv_text(const std::string& text, const std::string& origin);

/// Measure JSON: {"atoms": [[x..., y], ...], "weights": [...]}.
DiscreteMeasure load_measure(const std::string& path);
std::string measure_to_json(const DiscreteMeasure& P);

/// Parses and fully validates an experiment configuration document.
/// Unknown keys are hard errors naming the key path. Exactly one of
/// "lambda" (fixed) or "lambda_schedule" {scale, exponent} is required.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// Canonical configuration echo: fixed key order, defaults filled, numbers
/// at 17 significant digits. parse(config_to_json(parse(text))) is identity.
std::string config_to_json(const ExperimentConfig& cfg);

/// Model persistence: {kernel, domain_bound?, lambda, loss, support, coeffs,
/// objective, certificate_residual}.
std::string model_to_json(const SvmModel& model);
void save_model(const SvmModel& model, const std::string& path);
SvmModel load_model(const std::string& path);

/// Report emission. JSON keys in order: config, constants, cells,
/// predicates, verdict, timing; timing comes last and is the only part
/// excluded from the determinism guarantee. The optional CSV has one row per
/// cell with columns n, delta, d_pro_h, d_pro_probe, med_h_dist,
/// med_sup_dist, risk_gap, certified_frac.
std::string report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);
void emit_report(const ExperimentReport& report, const std::string& json_path,
                 const std::optional<std::string>& csv_path = std::nullopt);

/// Re-parses an emitted report; inverse of report_to_json.
ExperimentReport parse_report(const std::string& path);
ExperimentReport parse_report_text(const std::string& text, const std::string& origin);

}  // namespace svmrob
