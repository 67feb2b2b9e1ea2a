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

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include "balopt/io.hpp"
#include "balopt/sim.hpp"

namespace {

using balopt::Json;

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw balopt::Error(balopt::ErrorCode::kInput, "cli",
                        "cannot open config file: " + path);
  }
  Json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw balopt::Error(balopt::ErrorCode::kInput, "cli",
                        "cannot write " + path);
  }
  out << text;
}

balopt::DesignSpec design_spec_from_config(const Json& config,
                                           std::uint64_t seed) {
  balopt::DesignSpec spec;
  spec.variant = balopt::design_variant_from_json(config.at("design"));
  spec.m = config.value("m", 2);
  spec.seed = seed;
  return spec;
}

int run_design(const std::string& covariates_path,
               const std::string& config_path, std::uint64_t seed,
               const std::string& out_assignment,
               const std::string& out_report) {
  const Json config = load_json(config_path);
  balopt::CovariateMatrix x = balopt::load_covariates_csv(covariates_path);
  balopt::DesignSpec spec = design_spec_from_config(config, seed);
  balopt::DesignDistribution design = balopt::build_design(spec, x);
  balopt::Rng rng = balopt::make_rng(seed, 1);
  balopt::Assignment w = design.sample(rng);
  balopt::write_assignment_csv(out_assignment, w);

  balopt::ImbalanceReport report;
  if (const auto* pure =
          std::get_if<balopt::PureOptimalSpec>(&spec.variant)) {
    report = balopt::evaluate_pure(pure->structure, w, x);
  } else if (const auto* mixed =
                 std::get_if<balopt::MixedOptimalSpec>(&spec.variant)) {
    report = balopt::evaluate_mixed_rkhs(mixed->kernel, x,
                                         balopt::p_matrix_of_design(design),
                                         spec.m);
  } else if (config.contains("report_structure")) {
    report = balopt::evaluate_pure(
        balopt::structure_from_json(config.at("report_structure")), w, x);
  } else {
    report = balopt::evaluate_pure(balopt::MahalanobisLinearSpec{}, w, x);
  }

  Json out;
  out["design"] = balopt::design_to_json(design)["meta"];
  out["metrics"] = balopt::imbalance_report_to_json(report);
  write_text(out_report, out.dump(2) + "\n");
  return 0;
}

int run_evaluate(const std::string& covariates_path,
                 const std::string& assignment_path,
                 const std::string& config_path, const std::string& out_path) {
  const Json config = load_json(config_path);
  balopt::CovariateMatrix x = balopt::load_covariates_csv(covariates_path);
  const int m = config.value("m", 2);
  balopt::Assignment w = balopt::load_assignment_csv(assignment_path, m);
  balopt::ImbalanceReport report = balopt::evaluate_pure(
      balopt::structure_from_json(config.at("structure")), w, x);
  write_text(out_path,
             balopt::imbalance_report_to_json(report).dump(2) + "\n");
  return 0;
}

int run_test(const std::string& covariates_path,
             const std::string& outcomes_path, const std::string& config_path,
             std::uint64_t seed, const std::string& out_path) {
  const Json config = load_json(config_path);
  balopt::CovariateMatrix x = balopt::load_covariates_csv(covariates_path);
  const int m = config.value("m", 2);
  auto [assignment, observed] = balopt::load_outcomes_csv(outcomes_path, m);
  if (assignment.n() != x.n()) {
    throw balopt::Error(balopt::ErrorCode::kInput, "cli",
                        "outcomes and covariates disagree on n");
  }
  balopt::OutcomeTable outcomes{assignment, observed};
  const Json& test = config.at("test");
  const std::string type = test.at("type").get<std::string>();
  const int t = test.value("T", 99);
  const double alpha = test.value("alpha", 0.05);
  balopt::DesignSpec spec = design_spec_from_config(config, seed);
  balopt::Rng rng = balopt::make_rng(seed, 2);

  balopt::TestResult result;
  if (type == "bootstrap") {
    result = balopt::bootstrap_test(x, spec, outcomes, t, alpha, rng);
  } else if (type == "randomization") {
    balopt::DesignDistribution design = balopt::build_design(spec, x);
    result = balopt::randomization_test(design, outcomes, t, alpha, rng);
  } else if (type == "exact") {
    balopt::DesignDistribution design = balopt::build_design(spec, x);
    result = balopt::exact_permutation_test(design, outcomes, alpha);
  } else {
    throw balopt::Error(balopt::ErrorCode::kInput, "cli",
                        "unknown test type: " + type);
  }
  write_text(out_path, balopt::test_result_to_json(result).dump(2) + "\n");
  return 0;
}

std::vector<balopt::DesignSpec> example_design_suite(std::uint64_t seed) {
  using namespace balopt;
  std::vector<DesignSpec> designs;
  designs.push_back({CompleteRandomizationSpec{}, 2, seed});
  designs.push_back({BlockingSpec{}, 2, seed});
  designs.push_back({RerandomizationSpec{0.01, 1000}, 2, seed});
  designs.push_back(
      {PairwiseMatchingSpec{DistanceMetric::mahalanobis()}, 2, seed});
  designs.push_back({PureOptimalSpec{RkhsSpec{Kernel::linear()}}, 2, seed});
  designs.push_back(
      {PureOptimalSpec{RkhsSpec{Kernel::polynomial(2)}}, 2, seed});
  MixedOptimalSpec gaussian{Kernel::gaussian()};
  gaussian.t = 4;
  designs.push_back({gaussian, 2, seed});
  MixedOptimalSpec exponential{Kernel::exponential()};
  exponential.t = 4;
  designs.push_back({exponential, 2, seed});
  return designs;
}

int run_simulate(const std::string& experiment, const std::string& config_path,
                 std::uint64_t seed, const std::string& out_path,
                 int threads) {
  using balopt::ExperimentRow;
  Json config = config_path.empty() ? Json::object() : load_json(config_path);
  std::vector<ExperimentRow> rows;

  if (experiment == "example1") {
    const int b = config.value("b", 4);
    const int reps = config.value("reps", 100000);
    auto results = balopt::example1_experiment(b, reps, seed);
    for (const auto& [name, est] : results) {
      rows.push_back({experiment, name, 1 << b, 1, est.value, est.std_err,
                      est.reps, seed});
    }
  } else if (experiment == "example2") {
    const int d = config.value("d", 2);
    const int n = config.value("n", 8);
    const int reps = config.value("reps", 1000);
    const double tau = config.value("tau", 1.0);
    const double noise = config.value("noise_sd", 0.0);
    const auto kind =
        balopt::cef_from_string(config.value("kind", std::string("linear")));
    auto designs = example_design_suite(seed);
    auto results = balopt::example2_experiment(kind, d, n, designs, tau, noise,
                                               reps, seed, threads);
    for (const auto& r : results) {
      rows.push_back({experiment + ":" + balopt::cef_name(kind), r.design, n,
                      d, r.variance_minus_vn, r.std_err, r.reps, seed});
    }
  } else if (experiment == "example3") {
    const std::string data = config.value("data", std::string("data/diabetes.tab"));
    const int n = config.value("n", 32);
    const int reps = config.value("reps", 2000);
    const double tau = config.value("tau", 10.0);
    const int d = config.value("d", 4);
    auto [pool, outcomes] = balopt::diabetes_load(data);
    balopt::CovariateMatrix active =
        d == 4 ? balopt::diabetes_top4(pool) : pool;
    std::vector<balopt::DesignSpec> designs;
    designs.push_back({balopt::CompleteRandomizationSpec{}, 2, seed});
    designs.push_back({balopt::RerandomizationSpec{0.01, 1000}, 2, seed});
    designs.push_back(
        {balopt::PureOptimalSpec{balopt::RkhsSpec{balopt::Kernel::linear()}},
         2, seed});
    auto results = balopt::relative_variance_experiment(
        active, outcomes, designs, n, tau, reps, seed, threads);
    for (const auto& r : results) {
      rows.push_back({experiment, r.design, n, d, r.ratio, r.ratio_se, r.reps,
                      seed});
    }
  } else if (experiment == "example4") {
    const int n = config.value("n", 16);
    const int sims = config.value("sims", 500);
    const int t = config.value("T", 99);
    const double tau = config.value("tau", 0.15);
    const double alpha = config.value("alpha", 0.05);
    const auto kind = balopt::cef_from_string(
        config.value("kind", std::string("quadratic")));
    std::vector<balopt::DesignSpec> designs;
    designs.push_back({balopt::CompleteRandomizationSpec{}, 2, seed});
    designs.push_back(
        {balopt::PureOptimalSpec{
             balopt::RkhsSpec{balopt::Kernel::polynomial(2)}},
         2, seed});
    for (const auto& spec : designs) {
      auto r = balopt::example4_power(spec, kind, tau, n, 2, sims, t, alpha,
                                      seed, threads);
      rows.push_back({experiment, r.design + ":" + r.test, n, 2,
                      r.rejection_rate, r.std_err, r.sims, seed});
    }
  } else if (experiment == "rem") {
    const int d = config.value("d", 1);
    const int s = config.value("s", 1);
    const double q = config.contains("q") && config.at("q").is_string()
                         ? std::numeric_limits<double>::infinity()
                         : config.value("q", 2.0);
    const int m = config.value("m", 2);
    const int p_min = config.value("p_min", 4);
    const int p_max = config.value("p_max", 10);
    const int reps = config.value("reps", 200);
    auto results =
        balopt::rem_convergence(d, s, q, m, p_min, p_max, reps, seed, threads);
    std::ostringstream name;
    name << "monomials(d=" << d << ",s=" << s << "),q=" << q << ",m=" << m;
    for (const auto& r : results) {
      rows.push_back({experiment, name.str(), m * r.p, d, r.mean, r.std_err,
                      reps, seed});
    }
  } else {
    throw balopt::Error(balopt::ErrorCode::kInput, "cli",
                        "unknown experiment: " + experiment);
  }
  balopt::write_experiment_csv(out_path, rows);
  return 0;
}

int run_bench(const std::string& out_path, std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  std::vector<balopt::ExperimentRow> rows;
  balopt::Rng rng = balopt::make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int n : {12, 16, 20, 24}) {
    balopt::Matrix b(n, 4);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 4; ++j) b(i, j) = normal(rng);
    }
    balopt::SymMatrix k{balopt::Matrix(b * b.transpose())};
    const auto start = Clock::now();
    auto result = balopt::bb_partition_quadratic(k);
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    rows.push_back({"bench", "branch_and_bound", n, 4, secs,
                    static_cast<double>(result.nodes), 1, seed});
  }
  for (int n : {32, 64, 96}) {
    balopt::Matrix pts(n, 3);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) pts(i, j) = normal(rng);
    }
    balopt::SymMatrix d = balopt::pairwise_distances(
        balopt::DistanceMetric::euclidean(), balopt::CovariateMatrix(pts));
    const auto start = Clock::now();
    auto match = balopt::blossom_matching(d);
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    rows.push_back({"bench", "blossom_matching", n, 3, secs, match.weight, 1,
                    seed});
  }
  balopt::write_experiment_csv(out_path, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "balopt: minimax-balanced treatment assignment, imbalance metrics, "
      "and randomization inference"};
  app.require_subcommand(1);

  std::string covariates, config, assignment, outcomes, out, out_report;
  std::string experiment;
  std::uint64_t seed = 0;
  int threads = 1;

  auto* design = app.add_subcommand("design", "draw a balanced assignment");
  design->add_option("--covariates", covariates)->required();
  design->add_option("--config", config)->required();
  design->add_option("--seed", seed)->required();
  design->add_option("--out-assignment", assignment)->required();
  design->add_option("--out-report", out_report)->required();

  auto* evaluate =
      app.add_subcommand("evaluate", "imbalance metrics of an assignment");
  evaluate->add_option("--covariates", covariates)->required();
  evaluate->add_option("--assignment", assignment)->required();
  evaluate->add_option("--config", config)->required();
  evaluate->add_option("--out", out)->required();

  auto* simulate =
      app.add_subcommand("simulate", "reproduce a numerical study");
  simulate->add_option("--experiment", experiment)->required();
  simulate->add_option("--config", config);
  simulate->add_option("--seed", seed)->required();
  simulate->add_option("--out", out)->required();
  simulate->add_option("--threads", threads);

  auto* test = app.add_subcommand("test", "hypothesis test on outcomes");
  test->add_option("--covariates", covariates)->required();
  test->add_option("--outcomes", outcomes)->required();
  test->add_option("--config", config)->required();
  test->add_option("--seed", seed)->required();
  test->add_option("--out", out)->required();

  auto* bench = app.add_subcommand("bench", "time the exact solvers");
  bench->add_option("--out", out)->required();
  bench->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (design->parsed()) {
      return run_design(covariates, config, seed, assignment, out_report);
    }
    if (evaluate->parsed()) {
      return run_evaluate(covariates, assignment, config, out);
    }
    if (simulate->parsed()) {
      return run_simulate(experiment, config, seed, out, threads);
    }
    if (test->parsed()) {
      return run_test(covariates, outcomes, config, seed, out);
    }
    if (bench->parsed()) {
      return run_bench(out, seed);
    }
  } catch (const balopt::Error& e) {
    std::cout << balopt::error_to_json(e).dump(2) << std::endl;
    return e.code() == balopt::ErrorCode::kBudget ? 1 : 2;
  } catch (const std::exception& e) {
    Json j;
    j["error"] = {{"code", "internal"}, {"message", e.what()}, {"module", "cli"}};
    std::cout << j.dump(2) << std::endl;
    return 2;
  }
  return 0;
}
