#include "svmrob/io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "svmrob/detail/numfmt.hpp"

namespace svmrob {
namespace {

using nlohmann::json;

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out;
}

std::string jstr(const std::string& s) { return "\"" + json_escape(s) + "\""; }

// All numeric emission goes through 17 significant digits so that every
// double round-trips bit-faithfully through the text form.
std::string jnum(double v) {
  if (!std::isfinite(v)) throw IoError("refusing to serialize a non-finite number");
  return detail::double17(v);
}

std::string jint(long long v) { return std::to_string(v); }
std::string juint(std::uint64_t v) { return std::to_string(v); }

std::string jnum_list(const std::vector<double>& vs) {
  std::string out = "[";
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ",";
    out += jnum(vs[i]);
  }
  return out + "]";
}

std::string jint_list(const std::vector<int>& vs) {
  std::string out = "[";
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ",";
    out += jint(vs[i]);
  }
  return out + "]";
}

std::string jpoint_list(const std::vector<Point>& ps) {
  std::string out = "[";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ",";
    out += jnum_list(ps[i]);
  }
  return out + "]";
}

// Assembles one JSON object with the caller's key order preserved.
class ObjectWriter {
public:
  void field(const std::string& key, const std::string& rendered_value) {
    if (!first_) body_ += ",";
    first_ = false;
    body_ += jstr(key) + ":" + rendered_value;
  }
  std::string str() const { return "{" + body_ + "}"; }

private:
  std::string body_;
  bool first_ = true;
};

// ---- parse helpers ------------------------------------------------------

[[noreturn]] void bad(const std::string& origin, const std::string& msg) {
  throw ConfigError(origin + ": " + msg);
}

void check_keys(const json& obj, const std::string& origin, const std::string& prefix,
                const std::set<std::string>& allowed) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      bad(origin, "unknown key: " + (prefix.empty() ? item.key() : prefix + "." + item.key()));
}

double get_num(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_number()) bad(origin, path + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(origin, path + " must be finite");
  return d;
}

int get_int(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_number_integer()) bad(origin, path + " must be an integer");
  return v.get<int>();
}

std::uint64_t get_seed(const json& v, const std::string& origin, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  bad(origin, path + " must be a non-negative integer");
}

bool get_bool(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_boolean()) bad(origin, path + " must be true or false");
  return v.get<bool>();
}

std::string get_str(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_string()) bad(origin, path + " must be a string");
  return v.get<std::string>();
}

std::vector<double> get_num_list(const json& v, const std::string& origin,
                                 const std::string& path) {
  // A bare number is accepted as a one-element list.
  if (v.is_number()) return {get_num(v, origin, path)};
  if (!v.is_array()) bad(origin, path + " must be a number or an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(get_num(e, origin, path));
  return out;
}

Point get_point(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_array() || v.empty()) bad(origin, path + " must be a non-empty array of numbers");
  Point p;
  p.reserve(v.size());
  for (const auto& e : v) p.push_back(get_num(e, origin, path));
  return p;
}

DiscreteMeasure get_measure(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_object()) bad(origin, path + " must be an object {atoms, weights}");
  check_keys(v, origin, path, {"atoms", "weights"});
  if (!v.contains("atoms") || !v.contains("weights"))
    bad(origin, path + " needs both atoms and weights");
  if (!v["atoms"].is_array()) bad(origin, path + ".atoms must be an array");
  std::vector<Atom> atoms;
  for (const auto& row : v["atoms"]) {
    const Point flat = get_point(row, origin, path + ".atoms");
    if (flat.size() < 2) bad(origin, path + ".atoms rows need at least [x, y]");
    Atom a;
    a.x.assign(flat.begin(), flat.end() - 1);
    a.y = flat.back();
    atoms.push_back(std::move(a));
  }
  const std::vector<double> weights = get_num_list(v["weights"], origin, path + ".weights");
  try {
    return DiscreteMeasure(std::move(atoms), weights);
  } catch (const ConfigError& e) {
    bad(origin, path + ": " + e.what());
  }
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann's message carries line and column info.
    throw ConfigError(origin + ": " + e.what());
  }
}

ExperimentConfig config_from_json(const json& j, const std::string& origin) {
  if (!j.is_object()) bad(origin, "config root must be an object");
  check_keys(j, origin, "",
             {"kind", "base_measure", "contamination", "loss", "kernel", "domain_bound",
              "lambda", "lambda_schedule", "n_grid", "replicates", "gamma", "tolerance_factor",
              "probes", "base_seed", "jobs", "solver"});

  ExperimentConfig cfg;
  if (!j.contains("kind")) bad(origin, "kind is required");
  cfg.kind = parse_kind(get_str(j["kind"], origin, "kind"));

  if (!j.contains("base_measure")) bad(origin, "base_measure is required");
  cfg.base_measure = get_measure(j["base_measure"], origin, "base_measure");

  if (!j.contains("loss")) bad(origin, "loss is required");
  cfg.loss = parse_loss(get_str(j["loss"], origin, "loss"));

  std::optional<double> domain_bound;
  if (j.contains("domain_bound"))
    domain_bound = get_num(j["domain_bound"], origin, "domain_bound");
  if (!j.contains("kernel")) bad(origin, "kernel is required");
  cfg.kernel = parse_kernel(get_str(j["kernel"], origin, "kernel"), domain_bound);

  const bool has_fixed = j.contains("lambda");
  const bool has_schedule = j.contains("lambda_schedule");
  if (has_fixed && has_schedule)
    bad(origin, "lambda and lambda_schedule are mutually exclusive");
  if (!has_fixed && !has_schedule)
    bad(origin, "one of lambda or lambda_schedule is required");
  if (has_fixed) {
    cfg.lambda = {get_num(j["lambda"], origin, "lambda"), 0.0};
  } else {
    const json& s = j["lambda_schedule"];
    if (!s.is_object()) bad(origin, "lambda_schedule must be an object {scale, exponent}");
    check_keys(s, origin, "lambda_schedule", {"scale", "exponent"});
    if (!s.contains("scale") || !s.contains("exponent"))
      bad(origin, "lambda_schedule needs both scale and exponent");
    cfg.lambda = {get_num(s["scale"], origin, "lambda_schedule.scale"),
                  get_num(s["exponent"], origin, "lambda_schedule.exponent")};
  }

  if (j.contains("n_grid")) {
    if (!j["n_grid"].is_array()) bad(origin, "n_grid must be an array of integers");
    for (const auto& e : j["n_grid"]) cfg.n_grid.push_back(get_int(e, origin, "n_grid"));
  }
  if (j.contains("replicates")) cfg.replicates = get_int(j["replicates"], origin, "replicates");
  if (j.contains("gamma")) cfg.gamma = get_num(j["gamma"], origin, "gamma");
  if (j.contains("tolerance_factor"))
    cfg.tolerance_factor = get_num(j["tolerance_factor"], origin, "tolerance_factor");
  if (j.contains("base_seed")) cfg.base_seed = get_seed(j["base_seed"], origin, "base_seed");
  if (j.contains("jobs")) cfg.jobs = get_int(j["jobs"], origin, "jobs");

  if (j.contains("contamination")) {
    const json& c = j["contamination"];
    if (!c.is_object()) bad(origin, "contamination must be an object");
    check_keys(c, origin, "contamination", {"delta", "contaminant", "jitter"});
    if (c.contains("delta")) {
      cfg.deltas = get_num_list(c["delta"], origin, "contamination.delta");
      for (double d : cfg.deltas)
        if (!(d >= 0.0 && d < 1.0)) bad(origin, "contamination.delta out of [0,1)");
    }
    if (c.contains("jitter"))
      cfg.jitter_schedule = get_num_list(c["jitter"], origin, "contamination.jitter");
    if (c.contains("contaminant"))
      cfg.contaminant = get_measure(c["contaminant"], origin, "contamination.contaminant");
  }

  if (j.contains("probes")) {
    const json& p = j["probes"];
    if (!p.is_object()) bad(origin, "probes must be an object");
    check_keys(p, origin, "probes", {"x", "grid"});
    if (p.contains("x")) cfg.probe_x = get_point(p["x"], origin, "probes.x");
    if (p.contains("grid")) {
      if (!p["grid"].is_array()) bad(origin, "probes.grid must be an array of points");
      for (const auto& e : p["grid"]) cfg.probe_xs.push_back(get_point(e, origin, "probes.grid"));
    }
  }

  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (!s.is_object()) bad(origin, "solver must be an object");
    check_keys(s, origin, "solver",
               {"max_iterations", "tolerance", "smoothing_schedule", "gram_jitter", "seed",
                "allow_contract_violations"});
    if (s.contains("max_iterations"))
      cfg.solver.max_iterations = get_int(s["max_iterations"], origin, "solver.max_iterations");
    if (s.contains("tolerance"))
      cfg.solver.tolerance = get_num(s["tolerance"], origin, "solver.tolerance");
    if (s.contains("smoothing_schedule"))
      cfg.solver.smoothing_schedule =
          get_num_list(s["smoothing_schedule"], origin, "solver.smoothing_schedule");
    if (s.contains("gram_jitter"))
      cfg.solver.gram_jitter = get_num(s["gram_jitter"], origin, "solver.gram_jitter");
    if (s.contains("seed")) cfg.solver.seed = get_seed(s["seed"], origin, "solver.seed");
    if (s.contains("allow_contract_violations"))
      cfg.solver.allow_contract_violations =
          get_bool(s["allow_contract_violations"], origin, "solver.allow_contract_violations");
  }

  cfg.validate();
  return cfg;
}

std::string measure_json(const DiscreteMeasure& P) {
  std::string atoms = "[";
  std::string weights = "[";
  for (std::size_t i = 0; i < P.atoms().size(); ++i) {
    if (i) {
      atoms += ",";
      weights += ",";
    }
    Point flat = P.atoms()[i].x;
    flat.push_back(P.atoms()[i].y);
    atoms += jnum_list(flat);
    weights += jnum(P.weights()[i]);
  }
  ObjectWriter w;
  w.field("atoms", atoms + "]");
  w.field("weights", weights + "]");
  return w.str();
}

std::string cell_json(const CellRecord& c) {
  ObjectWriter w;
  w.field("family", jstr(c.family));
  w.field("n", jint(c.n));
  w.field("delta", jnum(c.delta));
  w.field("lambda", jnum(c.lambda));
  w.field("d_pro_h", jnum(c.d_pro_h));
  w.field("d_pro_probe", jnum(c.d_pro_probe));
  w.field("med_h_dist", jnum(c.med_h_dist));
  w.field("med_sup_dist", jnum(c.med_sup_dist));
  w.field("risk_gap", jnum(c.risk_gap));
  w.field("certified_frac", jnum(c.certified_frac));
  w.field("q_freq", jnum(c.q_freq));
  w.field("mean_h_norm", jnum(c.mean_h_norm));
  w.field("diagnostic", jstr(c.diagnostic));
  return w.str();
}

CellRecord cell_from_json(const json& v, const std::string& origin) {
  if (!v.is_object()) bad(origin, "cells entries must be objects");
  check_keys(v, origin, "cells",
             {"family", "n", "delta", "lambda", "d_pro_h", "d_pro_probe", "med_h_dist",
              "med_sup_dist", "risk_gap", "certified_frac", "q_freq", "mean_h_norm",
              "diagnostic"});
  CellRecord c;
  c.family = get_str(v.at("family"), origin, "cells.family");
  c.n = get_int(v.at("n"), origin, "cells.n");
  c.delta = get_num(v.at("delta"), origin, "cells.delta");
  c.lambda = get_num(v.at("lambda"), origin, "cells.lambda");
  c.d_pro_h = get_num(v.at("d_pro_h"), origin, "cells.d_pro_h");
  c.d_pro_probe = get_num(v.at("d_pro_probe"), origin, "cells.d_pro_probe");
  c.med_h_dist = get_num(v.at("med_h_dist"), origin, "cells.med_h_dist");
  c.med_sup_dist = get_num(v.at("med_sup_dist"), origin, "cells.med_sup_dist");
  c.risk_gap = get_num(v.at("risk_gap"), origin, "cells.risk_gap");
  c.certified_frac = get_num(v.at("certified_frac"), origin, "cells.certified_frac");
  c.q_freq = get_num(v.at("q_freq"), origin, "cells.q_freq");
  c.mean_h_norm = get_num(v.at("mean_h_norm"), origin, "cells.mean_h_norm");
  c.diagnostic = get_str(v.at("diagnostic"), origin, "cells.diagnostic");
  return c;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("cannot write " + path);
}

Dataset ingest_csv(const std::string& path) { return ingest_csv_text(read_file(path), path); }

Dataset ingest_csv_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  auto trim = [](const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  };
  auto split = [&trim](const std::string& s) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        cells.push_back(trim(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    cells.push_back(trim(cur));
    return cells;
  };

  if (!std::getline(in, line)) throw IoError(origin + ": empty file, header x_1,...,x_d,y required");
  const std::vector<std::string> header = split(line);
  if (header.size() < 2 || header.back() != "y")
    throw IoError(origin + ": header must end with a y column");
  const std::size_t d = header.size() - 1;
  for (std::size_t i = 0; i < d; ++i) {
    const std::string want = "x_" + std::to_string(i + 1);
    if (header[i] != want)
      throw IoError(origin + ": header column " + std::to_string(i + 1) + " must be " + want +
                    ", got \"" + header[i] + "\"");
  }

  Dataset data;
  int row = 1;
  bool saw_blank = false;
  while (std::getline(in, line)) {
    ++row;
    const std::vector<std::string> cells = split(line);
    const bool blank = cells.size() == 1 && cells[0].empty();
    if (blank) {
      saw_blank = true;
      continue;
    }
    if (saw_blank)
      throw IoError(origin + ": row " + std::to_string(row) + ": data after a blank line");
    if (cells.size() != d + 1)
      throw IoError(origin + ": row " + std::to_string(row) + ": expected " +
                    std::to_string(d + 1) + " cells, got " + std::to_string(cells.size()));
    Atom a;
    a.x.resize(d);
    for (std::size_t c = 0; c <= d; ++c) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v) || !std::isfinite(v))
        throw IoError(origin + ": row " + std::to_string(row) + ", column " +
                      std::to_string(c + 1) + " (" + header[c] + "): not a finite number: \"" +
                      cells[c] + "\"");
      if (c < d)
        a.x[c] = v;
      else
        a.y = v;
    }
    data.push_back(std::move(a));
  }
  if (data.empty()) throw IoError(origin + ": no data rows");
  return data;
}

DiscreteMeasure load_measure(const std::string& path) {
  const json j = parse_json(read_file(path), path);
  return get_measure(j, path, "measure");
}

std::string measure_to_json(const DiscreteMeasure& P) { return measure_json(P); }

ExperimentConfig parse_config(const std::string& path) {
  return parse_config_text(read_file(path), path);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  return config_from_json(parse_json(text, origin), origin);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ObjectWriter w;
  w.field("kind", jstr(kind_name(cfg.kind)));
  w.field("base_measure", measure_json(*cfg.base_measure));
  if (!cfg.deltas.empty() || !cfg.jitter_schedule.empty() || cfg.contaminant) {
    ObjectWriter c;
    if (!cfg.deltas.empty()) c.field("delta", jnum_list(cfg.deltas));
    if (cfg.contaminant) c.field("contaminant", measure_json(*cfg.contaminant));
    if (!cfg.jitter_schedule.empty()) c.field("jitter", jnum_list(cfg.jitter_schedule));
    w.field("contamination", c.str());
  }
  w.field("loss", jstr(cfg.loss->spec_string()));
  w.field("kernel", jstr(cfg.kernel->spec_string()));
  if (cfg.kernel->domain_bound()) w.field("domain_bound", jnum(*cfg.kernel->domain_bound()));
  if (cfg.lambda.fixed()) {
    w.field("lambda", jnum(cfg.lambda.scale));
  } else {
    ObjectWriter s;
    s.field("scale", jnum(cfg.lambda.scale));
    s.field("exponent", jnum(cfg.lambda.exponent));
    w.field("lambda_schedule", s.str());
  }
  w.field("n_grid", jint_list(cfg.n_grid));
  w.field("replicates", jint(cfg.replicates));
  w.field("gamma", jnum(cfg.gamma));
  w.field("tolerance_factor", jnum(cfg.tolerance_factor));
  if (cfg.probe_x || !cfg.probe_xs.empty()) {
    ObjectWriter p;
    if (cfg.probe_x) p.field("x", jnum_list(*cfg.probe_x));
    if (!cfg.probe_xs.empty()) p.field("grid", jpoint_list(cfg.probe_xs));
    w.field("probes", p.str());
  }
  w.field("base_seed", juint(cfg.base_seed));
  w.field("jobs", jint(cfg.jobs));
  {
    ObjectWriter s;
    s.field("max_iterations", jint(cfg.solver.max_iterations));
    if (cfg.solver.tolerance) s.field("tolerance", jnum(*cfg.solver.tolerance));
    s.field("smoothing_schedule", jnum_list(cfg.solver.smoothing_schedule));
    s.field("gram_jitter", jnum(cfg.solver.gram_jitter));
    s.field("seed", juint(cfg.solver.seed));
    s.field("allow_contract_violations",
            cfg.solver.allow_contract_violations ? "true" : "false");
    w.field("solver", s.str());
  }
  return w.str();
}

std::string model_to_json(const SvmModel& model) {
  ObjectWriter w;
  w.field("kernel", jstr(model.function.kernel()->spec_string()));
  if (model.function.kernel()->domain_bound())
    w.field("domain_bound", jnum(*model.function.kernel()->domain_bound()));
  w.field("lambda", jnum(model.lambda));
  w.field("loss", jstr(model.loss->spec_string()));
  w.field("support", jpoint_list(model.function.support()));
  w.field("coeffs", jnum_list(model.function.coeffs()));
  w.field("objective", jnum(model.objective));
  w.field("certificate_residual", jnum(model.certificate_residual));
  return w.str();
}

void save_model(const SvmModel& model, const std::string& path) {
  write_file(path, model_to_json(model) + "\n");
}

SvmModel load_model(const std::string& path) {
  const json j = parse_json(read_file(path), path);
  if (!j.is_object()) bad(path, "model root must be an object");
  check_keys(j, path, "",
             {"kernel", "domain_bound", "lambda", "loss", "support", "coeffs", "objective",
              "certificate_residual"});
  for (const char* key :
       {"kernel", "lambda", "loss", "support", "coeffs", "objective", "certificate_residual"})
    if (!j.contains(key)) bad(path, std::string(key) + " is required");
  std::optional<double> domain_bound;
  if (j.contains("domain_bound")) domain_bound = get_num(j["domain_bound"], path, "domain_bound");
  KernelPtr kernel = parse_kernel(get_str(j["kernel"], path, "kernel"), domain_bound);
  if (!j["support"].is_array()) bad(path, "support must be an array of points");
  std::vector<Point> support;
  for (const auto& e : j["support"]) support.push_back(get_point(e, path, "support"));
  const std::vector<double> coeffs = get_num_list(j["coeffs"], path, "coeffs");
  if (support.size() != coeffs.size()) bad(path, "support and coeffs must match in length");
  SvmModel model{RkhsFunction(std::move(kernel), std::move(support), coeffs),
                 get_num(j["lambda"], path, "lambda"),
                 parse_loss(get_str(j["loss"], path, "loss")),
                 get_num(j["objective"], path, "objective"),
                 get_num(j["certificate_residual"], path, "certificate_residual"),
                 0,
                 0.0,
                 {}};
  if (model.lambda <= 0.0) bad(path, "lambda must be positive");
  return model;
}

std::string report_to_json(const ExperimentReport& report) {
  ObjectWriter w;
  w.field("config", config_to_json(report.config));
  {
    ObjectWriter c;
    for (const auto& [k, v] : report.constants) c.field(k, jnum(v));
    w.field("constants", c.str());
  }
  {
    std::string cells = "[";
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
      if (i) cells += ",";
      cells += cell_json(report.cells[i]);
    }
    w.field("cells", cells + "]");
  }
  {
    std::string preds = "[";
    for (std::size_t i = 0; i < report.predicates.size(); ++i) {
      if (i) preds += ",";
      ObjectWriter p;
      p.field("name", jstr(report.predicates[i].name));
      p.field("pass", report.predicates[i].pass ? "true" : "false");
      p.field("detail", jstr(report.predicates[i].detail));
      preds += p.str();
    }
    w.field("predicates", preds + "]");
  }
  w.field("verdict", jstr(report.verdict));
  // Wall-clock data stays in one trailing key so that everything before it
  // is byte-identical across reruns of the same config.
  {
    ObjectWriter t;
    t.field("total_ms", jnum(report.total_ms));
    std::string cell_ms = "[";
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
      if (i) cell_ms += ",";
      cell_ms += jnum(report.cells[i].wall_ms);
    }
    t.field("cell_wall_ms", cell_ms + "]");
    w.field("timing", t.str());
  }
  return w.str();
}

std::string report_to_csv(const ExperimentReport& report) {
  std::string out = "n,delta,d_pro_h,d_pro_probe,med_h_dist,med_sup_dist,risk_gap,certified_frac\n";
  for (const auto& c : report.cells) {
    out += std::to_string(c.n);
    for (double v : {c.delta, c.d_pro_h, c.d_pro_probe, c.med_h_dist, c.med_sup_dist, c.risk_gap,
                     c.certified_frac})
      out += "," + detail::shortest_double_string(v);
    out += "\n";
  }
  return out;
}

void emit_report(const ExperimentReport& report, const std::string& json_path,
                 const std::optional<std::string>& csv_path) {
  write_file(json_path, report_to_json(report) + "\n");
  if (csv_path) write_file(*csv_path, report_to_csv(report));
}

ExperimentReport parse_report(const std::string& path) {
  return parse_report_text(read_file(path), path);
}

ExperimentReport parse_report_text(const std::string& text, const std::string& origin) {
  const json j = parse_json(text, origin);
  if (!j.is_object()) bad(origin, "report root must be an object");
  check_keys(j, origin, "", {"config", "constants", "cells", "predicates", "verdict", "timing"});
  for (const char* key : {"config", "constants", "cells", "predicates", "verdict", "timing"})
    if (!j.contains(key)) bad(origin, std::string(key) + " is required");

  ExperimentReport rep;
  rep.config = config_from_json(j["config"], origin);
  if (!j["constants"].is_object()) bad(origin, "constants must be an object");
  for (const auto& item : j["constants"].items())
    rep.constants[item.key()] = get_num(item.value(), origin, "constants." + item.key());
  if (!j["cells"].is_array()) bad(origin, "cells must be an array");
  for (const auto& e : j["cells"]) rep.cells.push_back(cell_from_json(e, origin));
  if (!j["predicates"].is_array()) bad(origin, "predicates must be an array");
  for (const auto& e : j["predicates"]) {
    if (!e.is_object()) bad(origin, "predicates entries must be objects");
    check_keys(e, origin, "predicates", {"name", "pass", "detail"});
    Predicate p;
    p.name = get_str(e.at("name"), origin, "predicates.name");
    p.pass = get_bool(e.at("pass"), origin, "predicates.pass");
    p.detail = get_str(e.at("detail"), origin, "predicates.detail");
    rep.predicates.push_back(std::move(p));
  }
  rep.verdict = get_str(j["verdict"], origin, "verdict");

  const json& t = j["timing"];
  if (!t.is_object()) bad(origin, "timing must be an object");
  check_keys(t, origin, "timing", {"total_ms", "cell_wall_ms"});
  if (t.contains("total_ms")) rep.total_ms = get_num(t["total_ms"], origin, "timing.total_ms");
  if (t.contains("cell_wall_ms")) {
    const std::vector<double> ms = get_num_list(t["cell_wall_ms"], origin, "timing.cell_wall_ms");
    if (ms.size() != rep.cells.size()) bad(origin, "timing.cell_wall_ms length mismatch");
    for (std::size_t i = 0; i < ms.size(); ++i) rep.cells[i].wall_ms = ms[i];
  }
  return rep;
}

}  // namespace svmrob
