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

#include "balopt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace balopt {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string token;
  for (char c : text) {
    if (c == ',' || c == '\t' || c == ' ' || c == '\r' || c == ';') {
      if (!token.empty()) tokens.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) tokens.push_back(token);
  return tokens;
}

bool numeric_token(const std::string& t) {
  char* end = nullptr;
  std::strtod(t.c_str(), &end);
  return end != t.c_str() && *end == '\0';
}

std::vector<std::vector<double>> load_numeric_table(const std::string& path,
                                                    const char* what) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kInput, "io",
                std::string("cannot open ") + what + " file: " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    bool all_numeric = true;
    for (const auto& t : tokens) all_numeric = all_numeric && numeric_token(t);
    if (!all_numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw Error(ErrorCode::kFormat, "io",
                  std::string("non-numeric row in ") + what + ": " + line);
    }
    first = false;
    std::vector<double> row;
    row.reserve(tokens.size());
    for (const auto& t : tokens) row.push_back(std::strtod(t.c_str(), nullptr));
    if (!rows.empty() && rows.front().size() != row.size()) {
      throw Error(ErrorCode::kFormat, "io",
                  std::string("ragged rows in ") + what + " file");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw Error(ErrorCode::kFormat, "io",
                std::string("no data rows in ") + what + " file: " + path);
  }
  return rows;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CovariateMatrix load_covariates_csv(const std::string& path) {
  auto rows = load_numeric_table(path, "covariate");
  Matrix x(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return CovariateMatrix(x);
}

SymMatrix load_matrix_csv(const std::string& path) {
  auto rows = load_numeric_table(path, "matrix");
  if (rows.size() != rows.front().size()) {
    throw Error(ErrorCode::kFormat, "io", "matrix file must be square");
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return SymMatrix(m);
}

void write_assignment_csv(const std::string& path, const Assignment& w) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kInput, "io", "cannot write " + path);
  }
  out << "subject_id,treatment\n";
  for (int i = 0; i < w.n(); ++i) {
    out << (i + 1) << "," << w.label(i) << "\n";
  }
}

Assignment load_assignment_csv(const std::string& path, int m) {
  auto rows = load_numeric_table(path, "assignment");
  if (rows.front().size() != 2) {
    throw Error(ErrorCode::kFormat, "io",
                "assignment file needs columns subject_id,treatment");
  }
  const int n = static_cast<int>(rows.size());
  std::vector<int> labels(static_cast<size_t>(n), 0);
  std::vector<bool> seen(static_cast<size_t>(n), false);
  for (const auto& row : rows) {
    const int id = static_cast<int>(row[0]);
    if (id < 1 || id > n || seen[static_cast<size_t>(id - 1)]) {
      throw Error(ErrorCode::kFormat, "io",
                  "subject ids must be 1..n with one row each");
    }
    seen[static_cast<size_t>(id - 1)] = true;
    labels[static_cast<size_t>(id - 1)] = static_cast<int>(row[1]);
  }
  return Assignment(std::move(labels), m);
}

std::pair<Assignment, Vector> load_outcomes_csv(const std::string& path,
                                                int m) {
  auto rows = load_numeric_table(path, "outcome");
  if (rows.front().size() != 3) {
    throw Error(ErrorCode::kFormat, "io",
                "outcome file needs columns subject_id,treatment,outcome");
  }
  const int n = static_cast<int>(rows.size());
  std::vector<int> labels(static_cast<size_t>(n), 0);
  Vector observed(n);
  std::vector<bool> seen(static_cast<size_t>(n), false);
  for (const auto& row : rows) {
    const int id = static_cast<int>(row[0]);
    if (id < 1 || id > n) {
      throw Error(ErrorCode::kFormat, "io",
                  "subject ids must be 1..n with one row each");
    }
    if (seen[static_cast<size_t>(id - 1)]) {
      throw Error(ErrorCode::kFormat, "io", "duplicate subject id");
    }
    seen[static_cast<size_t>(id - 1)] = true;
    labels[static_cast<size_t>(id - 1)] = static_cast<int>(row[1]);
    observed(id - 1) = row[2];
  }
  return {Assignment(std::move(labels), m), observed};
}

void write_experiment_csv(const std::string& path,
                          const std::vector<ExperimentRow>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kInput, "io", "cannot write " + path);
  }
  auto field = [](std::string text) {
    for (char& c : text) {
      if (c == ',') c = ';';
    }
    return text;
  };
  out << "experiment,design,n,d,value,stderr,reps,seed\n";
  for (const auto& r : rows) {
    out << field(r.experiment) << "," << field(r.design) << "," << r.n << ","
        << r.d << "," << format_double(r.value) << ","
        << format_double(r.std_err) << "," << r.reps << "," << r.seed
        << "\n";
  }
}

Kernel kernel_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") return Kernel::linear();
  if (kind == "polynomial") return Kernel::polynomial(j.at("degree").get<int>());
  if (kind == "gaussian") return Kernel::gaussian(j.value("bandwidth", 1.0));
  if (kind == "exponential") return Kernel::exponential(j.value("scale", 1.0));
  throw Error(ErrorCode::kInput, "io", "unknown kernel kind: " + kind);
}

Json kernel_to_json(const Kernel& k) {
  Json j;
  switch (k.kind) {
    case Kernel::Kind::kLinear:
      j["kind"] = "linear";
      break;
    case Kernel::Kind::kPolynomial:
      j["kind"] = "polynomial";
      j["degree"] = k.degree;
      break;
    case Kernel::Kind::kGaussian:
      j["kind"] = "gaussian";
      j["bandwidth"] = k.bandwidth;
      break;
    case Kernel::Kind::kExponential:
      j["kind"] = "exponential";
      j["scale"] = k.scale;
      break;
  }
  return j;
}

DistanceMetric metric_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "euclidean") return DistanceMetric::euclidean();
  if (kind == "mahalanobis") return DistanceMetric::mahalanobis();
  if (kind == "custom") {
    return DistanceMetric::custom(
        load_matrix_csv(j.at("path").get<std::string>()));
  }
  throw Error(ErrorCode::kInput, "io", "unknown metric kind: " + kind);
}

namespace {

double q_from_json(const Json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "infinity") {
      return std::numeric_limits<double>::infinity();
    }
    throw Error(ErrorCode::kInput, "io", "q must be 1, 2, or \"inf\"");
  }
  return j.get<double>();
}

BasisSet basis_from_json(const Json& j, int d) {
  const std::string kind = j.value("kind", std::string("monomials"));
  if (kind != "monomials") {
    throw Error(ErrorCode::kInput, "io", "unknown basis kind: " + kind);
  }
  return BasisSet::monomials(d, j.at("degree").get<int>(),
                             j.value("scale", 1.0));
}

}  // namespace

StructureSpec structure_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "rkhs") return RkhsSpec{kernel_from_json(j.at("kernel"))};
  if (type == "lipschitz") {
    LipschitzSpec s;
    if (j.contains("metric")) s.metric = metric_from_json(j.at("metric"));
    return s;
  }
  if (type == "lipschitz_capped") {
    LipschitzCappedSpec s;
    if (j.contains("metric")) s.metric = metric_from_json(j.at("metric"));
    s.delta0 = j.at("delta0").get<double>();
    return s;
  }
  if (type == "linf") return LInfinitySpec{};
  if (type == "finite_dim_q") {
    FiniteDimQSpec s{basis_from_json(j.at("basis"), j.at("d").get<int>()),
                     q_from_json(j.at("q"))};
    return s;
  }
  if (type == "mahalanobis_linear") return MahalanobisLinearSpec{};
  throw Error(ErrorCode::kInput, "io", "unknown structure type: " + type);
}

DesignVariant design_variant_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "complete_randomization") return CompleteRandomizationSpec{};
  if (type == "blocking") return BlockingSpec{};
  if (type == "pairwise_matching") {
    PairwiseMatchingSpec s;
    if (j.contains("metric")) s.metric = metric_from_json(j.at("metric"));
    return s;
  }
  if (type == "rerandomization") {
    RerandomizationSpec s;
    s.acceptance_prob = j.value("acceptance_prob", 0.01);
    s.mc_draws = j.value("mc_draws", 1000);
    return s;
  }
  if (type == "pure_optimal") {
    PureOptimalSpec s{structure_from_json(j.at("structure"))};
    s.exhaustive_limit = j.value("exhaustive_limit", std::uint64_t{2000});
    if (j.contains("node_limit")) s.solve.node_limit = j.at("node_limit").get<std::uint64_t>();
    if (j.contains("time_limit_seconds")) {
      s.solve.time_limit_seconds = j.at("time_limit_seconds").get<double>();
    }
    return s;
  }
  if (type == "mixed_optimal") {
    MixedOptimalSpec s{kernel_from_json(j.at("kernel"))};
    s.t = j.value("T", 5);
    if (j.contains("rho") && !j.at("rho").is_null()) {
      s.rho = j.at("rho").get<double>();
    }
    if (j.contains("iterations")) s.mixed.max_iterations = j.at("iterations").get<int>();
    return s;
  }
  throw Error(ErrorCode::kInput, "io", "unknown design type: " + type);
}

Json imbalance_report_to_json(const ImbalanceReport& report) {
  Json j;
  j["structure"] = report.structure;
  if (report.mixed) {
    j["m_m_squared"] = report.value_squared;
  } else {
    j["m_p_squared"] = report.value_squared;
    j["m_p"] = report.value_unsquared();
  }
  Json cert;
  cert["kind"] = report.certificate_kind;
  std::vector<double> values(report.certificate.data(),
                             report.certificate.data() + report.certificate.size());
  cert["values"] = values;
  j["certificate"] = cert;
  return j;
}

Json test_result_to_json(const TestResult& result) {
  Json j;
  j["estimate"] = result.estimate;
  j["p_value"] = result.p_value;
  j["T"] = result.replicates;
  j["alpha"] = result.alpha;
  j["reject"] = result.reject;
  return j;
}

Json design_to_json(const DesignDistribution& design) {
  Json j;
  Json meta;
  meta["name"] = design.meta().name;
  meta["n"] = design.n();
  meta["m"] = design.m();
  if (!std::isnan(design.meta().rerand_threshold)) {
    meta["rerand_threshold"] = design.meta().rerand_threshold;
  }
  if (!design.meta().notes.empty()) meta["notes"] = design.meta().notes;
  j["meta"] = meta;
  if (design.has_explicit_support()) {
    Json support = Json::array();
    for (const auto& [w, weight] : design.support()) {
      Json atom;
      atom["labels"] = w.labels();
      atom["weight"] = weight;
      support.push_back(atom);
    }
    j["support"] = support;
  } else {
    j["support"] = nullptr;
    j["generative"] = true;
  }
  return j;
}

Json error_to_json(const Error& error) {
  Json j;
  Json inner;
  inner["code"] = error.code_name();
  inner["message"] = error.what();
  inner["module"] = error.module();
  j["error"] = inner;
  return j;
}

}  // namespace balopt
