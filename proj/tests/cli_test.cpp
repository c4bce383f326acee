// End-to-end tests that drive the installed command-line binary (path baked
// in via DAMS_CLI_BIN) through std::system.
#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dams/json_io.hpp"
#include "dams/table.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("dams_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with the given arguments; stdout/stderr land in the named
// files under dir.  Returns the exit code.
int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = std::string(DAMS_CLI_BIN) + " " + args + " > " +
                          (dir / "stdout.txt").string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char ch : text) n += ch == '\n';
  return n;
}

}  // namespace

TEST_CASE("generate writes the expected table and is seed-deterministic") {
  const fs::path dir = scratch_dir("generate");
  REQUIRE(run_cli(dir, "generate --scenario redundant --n 120 --seed 7 --out-dir " +
                           (dir / "a").string()) == 0);
  const std::string clean = slurp(dir / "a" / "clean.csv");
  CHECK(count_lines(clean) == 121);  // header + rows
  CHECK(clean.rfind("x1,x2,y\n", 0) == 0);
  CHECK(!fs::exists(dir / "a" / "corrupted.csv"));

  // Re-running with the same seed reproduces the file byte for byte;
  // a different seed does not.
  REQUIRE(run_cli(dir, "generate --scenario redundant --n 120 --seed 7 --out-dir " +
                           (dir / "b").string()) == 0);
  CHECK(slurp(dir / "b" / "clean.csv") == clean);
  REQUIRE(run_cli(dir, "generate --scenario redundant --n 120 --seed 8 --out-dir " +
                           (dir / "c").string()) == 0);
  CHECK(slurp(dir / "c" / "clean.csv") != clean);

  // Masking adds corrupted.csv; rate 1 on the first column wipes it.
  REQUIRE(run_cli(dir,
                  "generate --scenario confounded --n 50 --seed 1 --mask 1.0,0.0 "
                  "--out-dir " +
                      (dir / "m").string()) == 0);
  dams::LabeledTable corrupted =
      dams::read_labeled_csv((dir / "m" / "corrupted.csv").string(), "y");
  CHECK(corrupted.x.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(corrupted.x.col(1).cwiseAbs().maxCoeff() > 0.0);

  CHECK(run_cli(dir, "generate --scenario nope --n 10") == 2);
  CHECK(run_cli(dir, "generate") == 2);  // --scenario is required
  fs::remove_all(dir);
}

TEST_CASE("dist corrupt matches the two-point worked example") {
  const fs::path dir = scratch_dir("dist_corrupt");
  write_file(dir / "bern.json",
             R"({"d": 1, "points": [{"x": [0], "y": 0, "p": 0.5},
                                    {"x": [1], "y": 1, "p": 0.5}]})");
  REQUIRE(run_cli(dir, "dist corrupt " + (dir / "bern.json").string() +
                           " --m 0.5 --out " + (dir / "out.json").string()) == 0);
  nlohmann::json out = dams::read_json_file((dir / "out.json").string());
  dams::DiscreteJoint dist = dams::discrete_joint_from_json(out);
  // Nonzero mass halves to 0.25; the other 0.25 joins x = 0 with its label.
  REQUIRE(dist.atoms.size() == 3);
  double mass_one = 0, mass_zero_y1 = 0, mass_zero_y0 = 0;
  for (const auto& atom : dist.atoms) {
    if (atom.x[0] == 1.0) mass_one += atom.p;
    else if (atom.y == 1.0) mass_zero_y1 += atom.p;
    else mass_zero_y0 += atom.p;
  }
  CHECK(mass_one == doctest::Approx(0.25));
  CHECK(mass_zero_y1 == doctest::Approx(0.25));
  CHECK(mass_zero_y0 == doctest::Approx(0.5));
  fs::remove_all(dir);
}

TEST_CASE("dist corrupt-then-recover reproduces the input file") {
  const fs::path dir = scratch_dir("dist_roundtrip");
  write_file(dir / "in.json",
             R"({"d": 2, "points": [{"x": [0, 0], "y": 0, "p": 0.15},
                                    {"x": [1, 0], "y": 1, "p": 0.35},
                                    {"x": [2, 1], "y": 0, "p": 0.3},
                                    {"x": [1, 1], "y": 1, "p": 0.2}]})");
  REQUIRE(run_cli(dir, "dist corrupt " + (dir / "in.json").string() +
                           " --m 0.4,0.25 --out " + (dir / "mid.json").string()) ==
          0);
  REQUIRE(run_cli(dir, "dist recover " + (dir / "mid.json").string() +
                           " --m 0.4,0.25 --out " + (dir / "back.json").string()) ==
          0);
  dams::DiscreteJoint original = dams::discrete_joint_from_json(
      dams::read_json_file((dir / "in.json").string()));
  dams::DiscreteJoint back = dams::discrete_joint_from_json(
      dams::read_json_file((dir / "back.json").string()));
  REQUIRE(back.atoms.size() == original.atoms.size());
  dams::sort_canonical(original);
  dams::sort_canonical(back);
  for (std::size_t i = 0; i < back.atoms.size(); ++i) {
    CHECK(back.atoms[i].p == doctest::Approx(original.atoms[i].p).epsilon(1e-10));
    CHECK((back.atoms[i].x.array() == original.atoms[i].x.array()).all());
  }
  fs::remove_all(dir);
}

TEST_CASE("dist recover with m = 0 is the identity") {
  const fs::path dir = scratch_dir("dist_identity");
  write_file(dir / "in.json",
             R"({"d": 1, "points": [{"x": [2], "y": 1, "p": 0.6},
                                    {"x": [0], "y": 0, "p": 0.4}]})");
  REQUIRE(run_cli(dir, "dist recover " + (dir / "in.json").string() +
                           " --m 0 --out " + (dir / "out.json").string()) == 0);
  dams::DiscreteJoint out = dams::discrete_joint_from_json(
      dams::read_json_file((dir / "out.json").string()));
  REQUIRE(out.atoms.size() == 2);
  CHECK(out.atoms[0].p == 0.6);  // canonical order: fewer zeros first
  CHECK(out.atoms[1].p == 0.4);
  fs::remove_all(dir);
}

TEST_CASE("dist failure exit codes") {
  const fs::path dir = scratch_dir("dist_errors");
  write_file(dir / "bern.json",
             R"({"d": 1, "points": [{"x": [0], "y": 0, "p": 0.5},
                                    {"x": [1], "y": 1, "p": 0.5}]})");
  // Full masking is not invertible.
  CHECK(run_cli(dir, "dist recover " + (dir / "bern.json").string() + " --m 1") ==
        5);
  // A distribution whose masses do not sum to one is invalid input.
  write_file(dir / "short.json", R"({"d": 1, "points": [{"x": [1], "y": 0, "p": 0.4}]})");
  CHECK(run_cli(dir, "dist corrupt " + (dir / "short.json").string() + " --m 0") == 5);
  // Junk bytes in place of a distribution are invalid input too.
  write_file(dir / "junk.json", "not json at all");
  CHECK(run_cli(dir, "dist corrupt " + (dir / "junk.json").string() + " --m 0") == 5);
  // Missing required rate flag is a usage error.
  CHECK(run_cli(dir, "dist corrupt " + (dir / "bern.json").string()) == 2);
  // Wrong rate width is a usage error.
  CHECK(run_cli(dir, "dist corrupt " + (dir / "bern.json").string() +
                         " --m 0.1,0.2,0.3") == 2);
  fs::remove_all(dir);
}

TEST_CASE("adapt writes model and diagnostic report") {
  const fs::path dir = scratch_dir("adapt");
  // Shared-feature scenario at eps = 0.1: source masks feature 1 heavily,
  // target masks feature 2 heavily.
  REQUIRE(run_cli(dir,
                  "generate --scenario example1 --sigma-y 0.5 --n 6000 --seed 3 "
                  "--mask 0.9,0.1 --out-dir " +
                      (dir / "src").string()) == 0);
  REQUIRE(run_cli(dir,
                  "generate --scenario example1 --sigma-y 0.5 --n 6000 --seed 4 "
                  "--mask 0.1,0.9 --out-dir " +
                      (dir / "tgt").string()) == 0);

  REQUIRE(run_cli(dir, "adapt --source " + (dir / "src" / "corrupted.csv").string() +
                           " --target " + (dir / "tgt" / "corrupted.csv").string() +
                           " --method closed_form --out-dir " +
                           (dir / "out").string()) == 0);

  nlohmann::json model = dams::read_json_file((dir / "out" / "model.json").string());
  CHECK(model.at("method") == "closed_form");
  // Appendix closed form at eps = 0.1: beta ~ [0.989, 0.110].
  const double b0 = model.at("beta")[0].get<double>();
  const double b1 = model.at("beta")[1].get<double>();
  CHECK(b0 == doctest::Approx(0.989).epsilon(0.10));
  CHECK(b1 == doctest::Approx(0.110).epsilon(0.75));

  nlohmann::json report = dams::read_json_file((dir / "out" / "report.json").string());
  CHECK(report.at("delta") == 0.05);
  CHECK(report.at("n_source") == 6000);
  CHECK(report.at("q_source").size() == 2);
  CHECK(report.at("q_target").size() == 2);
  CHECK(report.at("r_hat").size() == 2);
  CHECK(report.at("half_width").size() == 2);
  CHECK(report.at("dropped").is_array());
  // The source masks feature 1 more than the target: relative missingness
  // has a negative component, so the filter-based method would refuse.
  CHECK(report.at("applicable") == false);
  CHECK(report.at("r_hat")[0].get<double>() < 0);
  fs::remove_all(dir);
}

TEST_CASE("adapt matched domains approximates plain source regression") {
  const fs::path dir = scratch_dir("adapt_matched");
  REQUIRE(run_cli(dir, "generate --scenario example2 --n 4000 --seed 5 --out-dir " +
                           (dir / "src").string()) == 0);
  REQUIRE(run_cli(dir, "generate --scenario example2 --n 4000 --seed 6 --out-dir " +
                           (dir / "tgt").string()) == 0);
  REQUIRE(run_cli(dir, "adapt --source " + (dir / "src" / "clean.csv").string() +
                           " --target " + (dir / "tgt" / "clean.csv").string() +
                           " --method closed_form --out-dir " +
                           (dir / "cf").string()) == 0);
  REQUIRE(run_cli(dir, "adapt --source " + (dir / "src" / "clean.csv").string() +
                           " --target " + (dir / "tgt" / "clean.csv").string() +
                           " --method source --out-dir " + (dir / "ols").string()) ==
          0);

  nlohmann::json cf = dams::read_json_file((dir / "cf" / "model.json").string());
  nlohmann::json ols = dams::read_json_file((dir / "ols" / "model.json").string());
  // Continuous covariates: r-hat is exactly zero, so the closed form only
  // differs from source OLS through the second-moment pooling.
  nlohmann::json report = dams::read_json_file((dir / "cf" / "report.json").string());
  CHECK(report.at("r_hat")[0] == 0.0);
  CHECK(report.at("r_hat")[1] == 0.0);
  CHECK(report.at("applicable") == true);
  CHECK(report.at("verdict") == "applicable");
  for (int j = 0; j < 2; ++j) {
    const double diff = cf.at("beta")[j].get<double>() -
                        ols.at("beta")[j].get<double>();
    CHECK(std::abs(diff) < 0.06);
  }

  // The non-parametric method runs here (nothing to filter out).
  REQUIRE(run_cli(dir, "adapt --source " + (dir / "src" / "clean.csv").string() +
                           " --target " + (dir / "tgt" / "clean.csv").string() +
                           " --method nonparam --seed 9 --out-dir " +
                           (dir / "np").string()) == 0);
  nlohmann::json np = dams::read_json_file((dir / "np" / "model.json").string());
  CHECK(np.at("method") == "nonparam");
  CHECK(np.at("beta")[0].get<double>() == ols.at("beta")[0].get<double>());
  fs::remove_all(dir);
}

TEST_CASE("adapt refuses nonparam on reversed missingness with exit 4") {
  const fs::path dir = scratch_dir("adapt_refuse");
  REQUIRE(run_cli(dir,
                  "generate --scenario example2 --n 2000 --seed 5 --mask 0.6,0.0 "
                  "--out-dir " +
                      (dir / "src").string()) == 0);
  REQUIRE(run_cli(dir,
                  "generate --scenario example2 --n 2000 --seed 6 --mask 0.1,0.0 "
                  "--out-dir " +
                      (dir / "tgt").string()) == 0);
  const int code =
      run_cli(dir, "adapt --source " + (dir / "src" / "corrupted.csv").string() +
                       " --target " + (dir / "tgt" / "corrupted.csv").string() +
                       " --method nonparam --out-dir " + (dir / "out").string());
  CHECK(code == 4);
  const std::string err = slurp(dir / "stderr.txt");
  CHECK(err.find("this algorithm is not applicable") != std::string::npos);
  // The diagnostic report is written even on refusal; the model is not.
  CHECK(fs::exists(dir / "out" / "report.json"));
  CHECK(!fs::exists(dir / "out" / "model.json"));
  nlohmann::json report = dams::read_json_file((dir / "out" / "report.json").string());
  CHECK(report.at("verdict") == "this algorithm is not applicable");
  fs::remove_all(dir);
}

TEST_CASE("adapt reports numerical failure with exit 3") {
  const fs::path dir = scratch_dir("adapt_numfail");
  // The second source column is entirely zero while the target column is
  // not: relative missingness is not estimable.
  write_file(dir / "src.csv", "x1,x2,y\n1,0,1\n2,0,2\n3,0,3\n4,0,4\n");
  write_file(dir / "tgt.csv", "x1,x2\n1,1\n2,1\n3,2\n4,2\n");
  CHECK(run_cli(dir, "adapt --source " + (dir / "src.csv").string() + " --target " +
                         (dir / "tgt.csv").string() + " --method closed_form") == 3);
  fs::remove_all(dir);
}

TEST_CASE("experiment command writes results and rejects bad configs") {
  const fs::path dir = scratch_dir("experiment");
  write_file(dir / "cfg.json",
             R"({"scenario": "example2", "n": 600, "epsilon_grid": [0.3],
                 "trials": 2, "seed": 13, "bootstrap": 100,
                 "methods": ["oracle", "source", "closed_form"]})");
  REQUIRE(run_cli(dir, "experiment --config " + (dir / "cfg.json").string() +
                           " --out-dir " + (dir / "out1").string()) == 0);
  CHECK(fs::exists(dir / "out1" / "results.json"));
  CHECK(fs::exists(dir / "out1" / "results.csv"));
  CHECK(fs::exists(dir / "out1" / "sweep.csv"));
  const std::string stdout_text = slurp(dir / "stdout.txt");
  CHECK(stdout_text.rfind("method,mean,ci_lo,ci_hi,n_trials\n", 0) == 0);

  // Same config and seed: byte-identical outputs.
  REQUIRE(run_cli(dir, "experiment --config " + (dir / "cfg.json").string() +
                           " --out-dir " + (dir / "out2").string()) == 0);
  CHECK(slurp(dir / "out1" / "results.json") == slurp(dir / "out2" / "results.json"));
  CHECK(slurp(dir / "out1" / "results.csv") == slurp(dir / "out2" / "results.csv"));
  CHECK(slurp(dir / "out1" / "sweep.csv") == slurp(dir / "out2" / "sweep.csv"));

  // Malformed JSON and invalid configurations exit 2.
  write_file(dir / "broken.json", "{oops");
  CHECK(run_cli(dir, "experiment --config " + (dir / "broken.json").string()) == 2);
  write_file(dir / "badkey.json", R"({"scenario": "example2", "typo_key": 1})");
  CHECK(run_cli(dir, "experiment --config " + (dir / "badkey.json").string()) == 2);
  CHECK(run_cli(dir, "experiment --config " + (dir / "absent.json").string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("preprocess command encodes a raw csv") {
  const fs::path dir = scratch_dir("preprocess");
  write_file(dir / "raw.csv",
             "age,job,income\n"
             "25,clerk,lo\n38,engineer,hi\n29,clerk,lo\n41,engineer,hi\n"
             "33,?,lo\n52,engineer,hi\n47,clerk,hi\n");
  REQUIRE(run_cli(dir, "preprocess --in " + (dir / "raw.csv").string() +
                           " --label income --out-dir " + (dir / "out").string()) ==
          0);
  dams::LabeledTable table =
      dams::read_labeled_csv((dir / "out" / "preprocessed.csv").string(), "income");
  CHECK(table.rows() == 6);  // the "?" row is dropped
  CHECK(table.columns ==
        std::vector<std::string>{"age", "job=clerk", "job=engineer"});
  nlohmann::json report =
      dams::read_json_file((dir / "out" / "preprocess_report.json").string());
  CHECK(report.at("rows_dropped_missing") == 1);
  fs::remove_all(dir);
}
