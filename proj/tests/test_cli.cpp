#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coldstart/serialization.hpp"
#include "doctest.h"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string err;
};

Result run(const std::string& args, const fs::path& scratch) {
  const auto err_file = scratch / "stderr.txt";
  const std::string cmd = std::string(COLDSTART_CLI_PATH) + " " + args + " > " + (scratch / "stdout.txt").string() +
                          " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  std::ifstream f(err_file);
  std::stringstream s;
  s << f.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("synth writes five files and is repeatable") {
  const auto dir = testing::scratch_dir("cli_synth");
  REQUIRE(run("synth --seed 42 --series 50 --out " + (dir / "a").string(), dir).code == 0);
  REQUIRE(run("synth --seed 42 --series 50 --out " + (dir / "b").string(), dir).code == 0);
  for (const char* name : {"episodes.csv", "credits.csv", "genres.csv", "platform.csv", "ground_truth.json"}) {
    CHECK(fs::exists(dir / "a" / name));
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
}

TEST_CASE("exit codes: usage, data and invariant errors") {
  const auto dir = testing::scratch_dir("cli_codes");
  auto bad_fraction = run("synth --cold-start-fraction 2 --out " + (dir / "x").string(), dir);
  CHECK(bad_fraction.code == 2);
  CHECK(bad_fraction.err.find("--cold-start-fraction") != std::string::npos);
  CHECK(run("frobnicate", dir).code == 2);
  CHECK(run("train --n-iter notanumber", dir).code == 2);

  auto missing = run("train --data " + (dir / "nowhere").string() + " --out " + (dir / "o").string(), dir);
  CHECK(missing.code == 3);

  // A small end-to-end run, then a tampered report fails verification.
  const auto data = dir / "data";
  REQUIRE(run("synth --seed 3 --series 12 --out " + data.string(), dir).code == 0);
  const auto run_dir = dir / "run";
  const std::string train = "train --data " + data.string() + " --out " + run_dir.string() +
                            " --families ridge,lasso,decision_tree --n-iter 2 --folds 3 --importance-repeats 1";
  REQUIRE(run(train, dir).code == 0);
  const std::string verify = "verify --data " + data.string() + " --bundle " + (run_dir / "bundle.json").string();
  CHECK(run(verify + " --report " + (run_dir / "training_report.json").string(), dir).code == 0);

  auto report = coldstart::Json::parse(slurp(run_dir / "training_report.json"));
  report["ensemble"]["validation"]["smape"] = 1.0;
  std::ofstream(dir / "tampered.json") << report.dump();
  const auto tampered = run(verify + " --report " + (dir / "tampered.json").string(), dir);
  CHECK(tampered.code == 4);
  CHECK(tampered.err.find("smape") != std::string::npos);

  CHECK(run("predict --data " + data.string() + " --bundle " + (run_dir / "bundle.json").string() + " --out " +
                (dir / "pred").string(),
            dir)
            .code == 0);
  CHECK(fs::exists(dir / "pred" / "predictions.csv"));
}

TEST_CASE("config file supplies defaults and flags override it") {
  const auto dir = testing::scratch_dir("cli_config");
  const auto data = dir / "data";
  REQUIRE(run("synth --seed 5 --series 10 --out " + data.string(), dir).code == 0);
  coldstart::Json config = {{"inputs",
                             {{"episodes", (data / "episodes.csv").string()},
                              {"credits", (data / "credits.csv").string()},
                              {"genres", (data / "genres.csv").string()},
                              {"platform", (data / "platform.csv").string()}}},
                            {"families", {"ridge"}},
                            {"n_iter", 1},
                            {"k", 3},
                            {"seed", 1},
                            {"importance_repeats", 1},
                            {"output_dir", (dir / "from_config").string()}};
  std::ofstream(dir / "config.json") << config.dump();
  REQUIRE(run("train --config " + (dir / "config.json").string() + " --seed 9", dir).code == 0);
  const auto report = coldstart::Json::parse(slurp(dir / "from_config" / "training_report.json"));
  CHECK(report.at("seed") == 9);
  CHECK(report.at("models").size() == 1);

  std::ofstream(dir / "bad.json") << R"({"n_iter": "many"})";
  CHECK(run("train --config " + (dir / "bad.json").string(), dir).code == 2);
}
