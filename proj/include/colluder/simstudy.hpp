#pragma once

#include "colluder/estimate.hpp"
#include "colluder/law.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace colluder {

/// n i.i.d. observed records (columns as observed_columns) by inverse-CDF
/// draws from the full joint followed by proxy masking.
std::vector<std::vector<int>> sample_records(const CategoricalLaw& law, std::size_t n, std::uint64_t seed);
/// Same draws as sample_records, aggregated on the fly.
Dataset sample_dataset(const CategoricalLaw& law, std::size_t n, std::uint64_t seed);

struct SimScenario {
  std::string name = "ccm";
  int m = 2;
  int q = 2;
  std::vector<long> sample_sizes{1000, 10000, 100000};
  int replications = 200;
  std::uint64_t seed = 1;
  SimConstraints constraints = default_constraints(2);
  int restarts = 5;
  int max_iterations = 10000;
  int threads = 1;
  double max_failure_rate = 0.02;

  /// p(RX=1) = 0.8, p(RY=1 | .) in [0.7, 0.9], and a dependency profile
  /// for p(X) and p(Y | X): rows at least 0.5 apart in total variation with
  /// entries >= 0.1 for m = 2; 0.4 and 0.05 otherwise (0.5 is unreachable by
  /// rejection for four quaternary rows).
  static SimConstraints default_constraints(int m);
  void validate() const;
};

enum class ParameterGroup { Colluder, Other };
std::string_view to_string(ParameterGroup g);

struct ParameterSummary {
  std::string label;
  ParameterGroup group = ParameterGroup::Other;
  double mean_bias = 0;
  double rmse = 0;
};

struct GroupSummary {
  ParameterGroup group = ParameterGroup::Other;
  std::string description;  // "p(RY=1 | X, RX)"
  double min_bias = 0;
  double max_bias = 0;
  double mean_rmse = 0;
  double max_rmse = 0;
  double mean_abs_bias = 0;
};

struct SampleSizeReport {
  long n = 0;
  int used = 0;
  int failures = 0;
  std::vector<ParameterSummary> parameters;
  GroupSummary colluder;
  GroupSummary other;
};

struct SimReport {
  SimScenario scenario;
  std::vector<SampleSizeReport> sizes;
  /// Some sample size lost more than max_failure_rate of its replications.
  bool failed = false;
};

/// Colluder group: CPT blocks of indicators that have a colluder.
std::vector<ParameterGroup> parameter_groups(const MissingDataGraph& g, const ParameterLayout& layout);

SimReport run_scenario(const SimScenario& s);

/// CCM(3,3) law shaped like the graduate-survey fit: about 15% of X and 8%
/// of Y missing.
CategoricalLaw survey_lookalike_law();

/// Fixed-width text table with one row per (group, n).
std::string format_report(const SimReport& r);

}  // namespace colluder
