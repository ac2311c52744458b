#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "svmrob/io.hpp"

using namespace svmrob;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CmdResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err_path = dir / "stderr.txt";
  const std::string cmd = std::string(SVM_BINARY) + " " + args + " 2>" + err_path.string();
  CmdResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_file(err_path.string());
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("svmrob_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

const char* kContinuityConfig = R"({
  "kind": "continuity",
  "base_measure": {"atoms": [[-1.0, -0.8], [0.0, 0.4], [1.0, 1.2]], "weights": [0.25, 0.25, 0.5]},
  "loss": "logistic",
  "kernel": "rbf:1.0",
  "lambda": 0.1,
  "contamination": {"jitter": [0.5, 0.25]},
  "replicates": 6
})";

}  // namespace

TEST_CASE("cli train writes a reloadable model deterministically") {
  TempDir dir;
  write_file(dir.file("data.csv"), "x_1,y\n-1,-0.8\n0,0.4\n1,1.2\n2,0.1\n");
  const std::string args = "train --data " + dir.file("data.csv") +
                           " --loss logistic --kernel rbf:1.0 --lambda 0.1 --out " +
                           dir.file("model.json");
  const CmdResult r = run_cli(args, dir.path);
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("\"objective\":") != std::string::npos);
  CHECK(r.out.find("\"support_size\":4") != std::string::npos);

  const SvmModel model = load_model(dir.file("model.json"));
  CHECK(model.function.support().size() == 4);
  CHECK(model.lambda == 0.1);

  const std::string first = read_file(dir.file("model.json"));
  const CmdResult again = run_cli(args, dir.path);
  REQUIRE(again.exit_code == 0);
  CHECK(read_file(dir.file("model.json")) == first);
  CHECK(again.out == r.out);
}

TEST_CASE("cli train maps contract and data failures to exit codes") {
  TempDir dir;
  write_file(dir.file("data.csv"), "x_1,y\n0,1\n1,-1\n");
  CmdResult r = run_cli("train --data " + dir.file("data.csv") +
                            " --loss least_squares --kernel rbf:1 --lambda 1 --out " +
                            dir.file("m.json"),
                        dir.path);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("loss contract") != std::string::npos);

  r = run_cli("train --data " + dir.file("data.csv") +
                  " --loss least_squares --kernel rbf:1 --lambda 1 "
                  "--allow-contract-violations --out " +
                  dir.file("m.json"),
              dir.path);
  CHECK(r.exit_code == 0);

  r = run_cli("train --data " + dir.file("absent.csv") +
                  " --loss hinge --kernel rbf:1 --lambda 1 --out " + dir.file("m.json"),
              dir.path);
  CHECK(r.exit_code == 4);

  write_file(dir.file("bad.csv"), "x_1,y\n0,NaN\n");
  r = run_cli("train --data " + dir.file("bad.csv") + " --loss hinge --kernel rbf:1 --lambda 1 "
                  "--out " + dir.file("m.json"),
              dir.path);
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("row 2") != std::string::npos);

  r = run_cli("train --data " + dir.file("data.csv") +
                  " --loss hinge --kernel linear --lambda 1 --out " + dir.file("m.json"),
              dir.path);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("domain_bound") != std::string::npos);
}

TEST_CASE("cli prokhorov agrees across its two modes") {
  TempDir dir;
  write_file(dir.file("a.json"), R"({"atoms": [[0.0, 0.0]], "weights": [1.0]})");
  write_file(dir.file("b.json"), R"({"atoms": [[0.3, 0.0]], "weights": [1.0]})");
  const CmdResult fin =
      run_cli("prokhorov --a " + dir.file("a.json") + " --b " + dir.file("b.json"), dir.path);
  REQUIRE(fin.exit_code == 0);
  CHECK(fin.out == "{\"mode\":\"finite\",\"epsilon\":0.29999999999999999}\n");
  const CmdResult sweep = run_cli("prokhorov --a " + dir.file("a.json") + " --b " +
                                      dir.file("b.json") + " --mode 1d",
                                  dir.path);
  REQUIRE(sweep.exit_code == 0);
  CHECK(sweep.out == "{\"mode\":\"1d\",\"epsilon\":0.29999999999999999}\n");

  // Uniform five-atom empirical pair, still collinear.
  write_file(dir.file("c.json"),
             R"({"atoms": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]],)"
             R"( "weights": [0.2, 0.2, 0.2, 0.2, 0.2]})");
  write_file(dir.file("d.json"),
             R"({"atoms": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [9.0, 0.0]],)"
             R"( "weights": [0.2, 0.2, 0.2, 0.2, 0.2]})");
  const CmdResult f2 =
      run_cli("prokhorov --a " + dir.file("c.json") + " --b " + dir.file("d.json"), dir.path);
  const CmdResult s2 = run_cli(
      "prokhorov --a " + dir.file("c.json") + " --b " + dir.file("d.json") + " --mode 1d",
      dir.path);
  REQUIRE(f2.exit_code == 0);
  REQUIRE(s2.exit_code == 0);
  const auto epsilon_of = [](const std::string& line) {
    const std::size_t pos = line.find("\"epsilon\":");
    return line.substr(pos + 10, line.find('}') - pos - 10);
  };
  CHECK(epsilon_of(f2.out) == epsilon_of(s2.out));

  // The sweep route demands collinear joint supports.
  write_file(dir.file("plane.json"),
             R"({"atoms": [[0.0, 0.0], [1.0, 1.0], [1.0, -1.0]],)"
             R"( "weights": [0.4, 0.3, 0.3]})");
  const CmdResult rej = run_cli("prokhorov --a " + dir.file("plane.json") + " --b " +
                                    dir.file("a.json") + " --mode 1d",
                                dir.path);
  CHECK(rej.exit_code == 2);
  CHECK(rej.err.find("one line") != std::string::npos);
}

TEST_CASE("cli experiment emits reports with override flags") {
  TempDir dir;
  write_file(dir.file("cont.json"), kContinuityConfig);
  const std::string base_args = "experiment --config " + dir.file("cont.json") + " --out " +
                                dir.file("rep.json") + " --csv " + dir.file("rep.csv");
  const CmdResult r = run_cli(base_args, dir.path);
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("\"cells\":2") != std::string::npos);
  CHECK(r.out.find("\"verdict\":\"pass\"") != std::string::npos);

  const ExperimentReport rep = parse_report(dir.file("rep.json"));
  CHECK(rep.cells.size() == 2);
  CHECK(rep.verdict == "pass");
  CHECK(read_file(dir.file("rep.csv")) == report_to_csv(rep));

  // Identical invocation: byte-identical document before the timing key.
  const std::string first = read_file(dir.file("rep.json"));
  run_cli(base_args, dir.path);
  const std::string second = read_file(dir.file("rep.json"));
  CHECK(first.substr(0, first.find("\"timing\"")) ==
        second.substr(0, second.find("\"timing\"")));

  // A worker-count override must not change the records (it is echoed in the
  // config and so differs there); a seed override must change them.
  run_cli(base_args + " --jobs 3", dir.path);
  const std::string threaded = read_file(dir.file("rep.json"));
  auto records_part = [](const std::string& doc) {
    return doc.substr(doc.find("\"constants\""),
                      doc.find("\"timing\"") - doc.find("\"constants\""));
  };
  CHECK(records_part(threaded) == records_part(first));
  run_cli(base_args + " --seed 99", dir.path);
  const ExperimentReport reseeded = parse_report(dir.file("rep.json"));
  CHECK(reseeded.config.base_seed == 99);
  CHECK(reseeded.cells[0].med_h_dist != rep.cells[0].med_h_dist);

  // The report verb re-emits the stored cells as CSV on stdout.
  run_cli(base_args, dir.path);
  const CmdResult csv = run_cli("report --in " + dir.file("rep.json") + " --format csv", dir.path);
  REQUIRE(csv.exit_code == 0);
  CHECK(csv.out == read_file(dir.file("rep.csv")));
  const CmdResult bad_fmt =
      run_cli("report --in " + dir.file("rep.json") + " --format json", dir.path);
  CHECK(bad_fmt.exit_code == 2);
  CHECK(bad_fmt.err.find("unsupported") != std::string::npos);
}

TEST_CASE("cli experiment surfaces config and solver failures") {
  TempDir dir;
  std::string bad = kContinuityConfig;
  bad.insert(bad.rfind('}'), R"(, "contamination_extra": 1)");
  write_file(dir.file("bad.json"), bad);
  CmdResult r = run_cli("experiment --config " + dir.file("bad.json") + " --out " +
                            dir.file("rep.json"),
                        dir.path);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("unknown key: contamination_extra") != std::string::npos);

  // An impossible iteration budget on the base training aborts the run.
  std::string starved = kContinuityConfig;
  starved.insert(starved.rfind('}'),
                 R"(, "solver": {"max_iterations": 1, "tolerance": 1e-13})");
  write_file(dir.file("starved.json"), starved);
  r = run_cli("experiment --config " + dir.file("starved.json") + " --out " +
                  dir.file("rep.json"),
              dir.path);
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("solver error") != std::string::npos);
}

TEST_CASE("cli verify-loss reports the contract verdict in the exit code") {
  TempDir dir;
  CmdResult r = run_cli("verify-loss --loss hinge", dir.path);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);

  r = run_cli("verify-loss --loss least_squares", dir.path);
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("FAIL") != std::string::npos);
  CHECK(r.out.find("quotient 39 at y=-10, t=9, t'=10") != std::string::npos);

  r = run_cli("verify-loss --loss pinball:1.5", dir.path);
  CHECK(r.exit_code == 2);

  r = run_cli("verify-loss", dir.path);
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli rejects unknown verbs and flags") {
  TempDir dir;
  CHECK(run_cli("bogus", dir.path).exit_code == 2);
  CHECK(run_cli("", dir.path).exit_code == 2);
  CHECK(run_cli("prokhorov --a x --b y --mode euclid", dir.path).exit_code == 2);
  CHECK(run_cli("--help", dir.path).exit_code == 0);
  CHECK(run_cli("train --help", dir.path).exit_code == 0);
}
