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

#ifndef BALOPT_IO_HPP
#define BALOPT_IO_HPP

#include <json.hpp>

#include <string>
#include <vector>

#include "balopt/designs.hpp"
#include "balopt/imbalance.hpp"
#include "balopt/inference.hpp"

namespace balopt {

using Json = nlohmann::ordered_json;

// --- CSV -------------------------------------------------------------------

// One row per subject, one numeric column per covariate; an optional header
// row is skipped. Commas, tabs, and spaces all delimit.
CovariateMatrix load_covariates_csv(const std::string& path);

// n x n numeric matrix; validated as a distance matrix on use.
SymMatrix load_matrix_csv(const std::string& path);

void write_assignment_csv(const std::string& path, const Assignment& w);

// subject_id,treatment rows (header optional).
Assignment load_assignment_csv(const std::string& path, int m);

// subject_id,treatment,outcome rows (header optional).
std::pair<Assignment, Vector> load_outcomes_csv(const std::string& path,
                                                int m);

struct ExperimentRow {
  std::string experiment;
  std::string design;
  int n = 0;
  int d = 0;
  double value = 0.0;
  double std_err = 0.0;
  long reps = 0;
  std::uint64_t seed = 0;
};

void write_experiment_csv(const std::string& path,
                          const std::vector<ExperimentRow>& rows);

// --- JSON ------------------------------------------------------------------

Kernel kernel_from_json(const Json& j);
Json kernel_to_json(const Kernel& k);

DistanceMetric metric_from_json(const Json& j);

StructureSpec structure_from_json(const Json& j);

DesignVariant design_variant_from_json(const Json& j);

Json imbalance_report_to_json(const ImbalanceReport& report);
Json test_result_to_json(const TestResult& result);
Json design_to_json(const DesignDistribution& design);
Json error_to_json(const Error& error);

}  // namespace balopt

#endif  // BALOPT_IO_HPP
