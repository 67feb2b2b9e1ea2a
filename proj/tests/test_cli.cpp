// Copyright 2026 The balopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("balopt_cli_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BALOPT_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("design command produces the optimal split and is deterministic") {
  TempDir dir;
  write_file(dir.file("x.csv"), "x\n1\n2\n3\n4\n");
  write_file(dir.file("cfg.json"), R"({
    "m": 2,
    "design": {"type": "pure_optimal",
               "structure": {"type": "rkhs", "kernel": {"kind": "linear"}}}
  })");

  const std::string invocation =
      "design --covariates " + dir.file("x.csv") + " --config " +
      dir.file("cfg.json") + " --seed 7 --out-assignment " +
      dir.file("w.csv") + " --out-report " + dir.file("r.json");
  REQUIRE(run_cli(invocation) == 0);

  Json report = Json::parse(read_file(dir.file("r.json")));
  CHECK(report["metrics"]["m_p_squared"].get<double>() ==
        doctest::Approx(0.0));

  const std::string assignment = read_file(dir.file("w.csv"));
  // Subjects 1 and 4 share a group.
  std::istringstream lines(assignment);
  std::string header, l1, l2, l3, l4;
  std::getline(lines, header);
  std::getline(lines, l1);
  std::getline(lines, l2);
  std::getline(lines, l3);
  std::getline(lines, l4);
  CHECK(l1.back() == l4.back());
  CHECK(l2.back() == l3.back());
  CHECK(l1.back() != l2.back());

  // Same seed, byte-identical outputs.
  const std::string first_assignment = assignment;
  const std::string first_report = read_file(dir.file("r.json"));
  REQUIRE(run_cli(invocation) == 0);
  CHECK(read_file(dir.file("w.csv")) == first_assignment);
  CHECK(read_file(dir.file("r.json")) == first_report);
}

TEST_CASE("missing covariate file exits 2 with an error payload") {
  TempDir dir;
  write_file(dir.file("cfg.json"),
             R"({"m": 2, "design": {"type": "complete_randomization"}})");
  const int code = run_cli(
      "design --covariates " + dir.file("nope.csv") + " --config " +
      dir.file("cfg.json") + " --seed 1 --out-assignment " +
      dir.file("w.csv") + " --out-report " + dir.file("r.json") + " > " +
      dir.file("stdout.json"));
  CHECK(code == 2);
  Json error = Json::parse(read_file(dir.file("stdout.json")));
  CHECK(error.contains("error"));
  CHECK(error["error"]["code"] == "input_error");
}

TEST_CASE("design output round-trips through evaluate and test") {
  TempDir dir;
  write_file(dir.file("x.csv"), "1\n2\n3\n4\n5\n6\n7\n8\n");
  write_file(dir.file("cfg.json"), R"({
    "m": 2,
    "design": {"type": "pure_optimal",
               "structure": {"type": "rkhs", "kernel": {"kind": "linear"}}}
  })");
  REQUIRE(run_cli("design --covariates " + dir.file("x.csv") + " --config " +
                  dir.file("cfg.json") + " --seed 3 --out-assignment " +
                  dir.file("w.csv") + " --out-report " + dir.file("r.json")) ==
          0);

  // evaluate: same structure, explicit assignment.
  write_file(dir.file("eval.json"), R"({
    "m": 2,
    "structure": {"type": "rkhs", "kernel": {"kind": "linear"}}
  })");
  REQUIRE(run_cli("evaluate --covariates " + dir.file("x.csv") +
                  " --assignment " + dir.file("w.csv") + " --config " +
                  dir.file("eval.json") + " --out " + dir.file("m.json")) ==
          0);
  Json metrics = Json::parse(read_file(dir.file("m.json")));
  Json report = Json::parse(read_file(dir.file("r.json")));
  CHECK(metrics["m_p_squared"].get<double>() ==
        doctest::Approx(report["metrics"]["m_p_squared"].get<double>()));

  // test: outcomes derived from the assignment file.
  std::istringstream lines(read_file(dir.file("w.csv")));
  std::string header;
  std::getline(lines, header);
  std::ostringstream outcomes;
  outcomes << "subject_id,treatment,outcome\n";
  std::string line;
  int i = 0;
  while (std::getline(lines, line)) {
    outcomes << line << "," << (0.1 * ++i) << "\n";
  }
  write_file(dir.file("y.csv"), outcomes.str());
  write_file(dir.file("test.json"), R"({
    "m": 2,
    "design": {"type": "pure_optimal",
               "structure": {"type": "rkhs", "kernel": {"kind": "linear"}}},
    "test": {"type": "bootstrap", "T": 19, "alpha": 0.05}
  })");
  REQUIRE(run_cli("test --covariates " + dir.file("x.csv") + " --outcomes " +
                  dir.file("y.csv") + " --config " + dir.file("test.json") +
                  " --seed 11 --out " + dir.file("t.json")) == 0);
  Json result = Json::parse(read_file(dir.file("t.json")));
  CHECK(result["p_value"].get<double>() >= 0.05 - 1e-12);
  CHECK(result["T"].get<int>() == 19);
}

TEST_CASE("test command formula edges") {
  TempDir dir;
  write_file(dir.file("x.csv"), "1\n2\n3\n4\n");
  // Constant outcomes: tau_hat = 0, every replicate ties, p = 1.
  write_file(dir.file("y.csv"),
             "subject_id,treatment,outcome\n1,1,2\n2,2,2\n3,1,2\n4,2,2\n");
  write_file(dir.file("cfg.json"), R"({
    "m": 2,
    "design": {"type": "complete_randomization"},
    "test": {"type": "randomization", "T": 19, "alpha": 0.05}
  })");
  REQUIRE(run_cli("test --covariates " + dir.file("x.csv") + " --outcomes " +
                  dir.file("y.csv") + " --config " + dir.file("cfg.json") +
                  " --seed 5 --out " + dir.file("t.json")) == 0);
  Json result = Json::parse(read_file(dir.file("t.json")));
  CHECK(result["estimate"].get<double>() == doctest::Approx(0.0));
  CHECK(result["p_value"].get<double>() == doctest::Approx(1.0));
  CHECK_FALSE(result["reject"].get<bool>());
}

TEST_CASE("simulate rem emits a monotone mean column") {
  TempDir dir;
  write_file(dir.file("cfg.json"),
             R"({"d": 1, "s": 1, "q": 2, "p_min": 4, "p_max": 6, "reps": 25})");
  REQUIRE(run_cli("simulate --experiment rem --config " + dir.file("cfg.json") +
                  " --seed 13 --out " + dir.file("rem.csv")) == 0);
  std::istringstream csv(read_file(dir.file("rem.csv")));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "experiment,design,n,d,value,stderr,reps,seed");
  std::vector<double> means;
  std::string line;
  while (std::getline(csv, line)) {
    std::istringstream fields(line);
    std::string field;
    for (int f = 0; f < 5; ++f) std::getline(fields, field, ',');
    means.push_back(std::stod(field));
  }
  REQUIRE(means.size() == 3);
  CHECK(means[1] < means[0]);
  CHECK(means[2] < means[1]);
}

TEST_CASE("simulate example1 emits the five design rows") {
  TempDir dir;
  write_file(dir.file("cfg.json"), R"({"b": 3, "reps": 20000})");
  REQUIRE(run_cli("simulate --experiment example1 --config " +
                  dir.file("cfg.json") + " --seed 2 --out " +
                  dir.file("e1.csv")) == 0);
  std::istringstream csv(read_file(dir.file("e1.csv")));
  std::string line;
  std::getline(csv, line);  // header
  int rows = 0;
  bool has_cr = false, has_blocking = false, has_matching = false,
       has_rerand = false, has_opt = false;
  while (std::getline(csv, line)) {
    ++rows;
    has_cr = has_cr || line.find("complete_randomization") != std::string::npos;
    has_blocking = has_blocking || line.find("blocking") != std::string::npos;
    has_matching =
        has_matching || line.find("pairwise_matching") != std::string::npos;
    has_rerand = has_rerand || line.find("rerandomization") != std::string::npos;
    has_opt = has_opt || line.find("mahalanobis_pure_opt") != std::string::npos;
  }
  CHECK(rows == 5);
  CHECK(has_cr);
  CHECK(has_blocking);
  CHECK(has_matching);
  CHECK(has_rerand);
  CHECK(has_opt);
}

TEST_CASE("simulate example2 orders kernel designs below randomization") {
  TempDir dir;
  write_file(dir.file("cfg.json"),
             R"({"kind": "linear", "d": 2, "n": 8, "reps": 250})");
  REQUIRE(run_cli("simulate --experiment example2 --config " +
                  dir.file("cfg.json") + " --seed 3 --out " +
                  dir.file("e2.csv")) == 0);
  std::istringstream csv(read_file(dir.file("e2.csv")));
  std::string line;
  std::getline(csv, line);
  double cr_value = -1, cr_se = 0, kernel_value = -1, kernel_se = 0;
  while (std::getline(csv, line)) {
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 8);
    if (cells[1] == "complete_randomization") {
      cr_value = std::stod(cells[4]);
      cr_se = std::stod(cells[5]);
    }
    if (cells[1].find("pure_optimal(rkhs:linear)") != std::string::npos) {
      kernel_value = std::stod(cells[4]);
      kernel_se = std::stod(cells[5]);
    }
  }
  REQUIRE(cr_value >= 0);
  REQUIRE(kernel_value >= 0);
  // Linear conditional expectation: the linear-kernel optimum dominates.
  CHECK(cr_value >= kernel_value - 3 * (cr_se + kernel_se));
}

TEST_CASE("simulate rejects unknown experiments") {
  TempDir dir;
  CHECK(run_cli("simulate --experiment example9 --seed 1 --out " +
                dir.file("x.csv") + " > /dev/null") == 2);
}

TEST_CASE("bench writes timing rows") {
  TempDir dir;
  REQUIRE(run_cli("bench --out " + dir.file("bench.csv")) == 0);
  const std::string csv = read_file(dir.file("bench.csv"));
  CHECK(csv.find("branch_and_bound") != std::string::npos);
  CHECK(csv.find("blossom_matching") != std::string::npos);
}
