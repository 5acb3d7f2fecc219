#pragma once

#include "colluder/graph.hpp"
#include "colluder/law.hpp"
#include "colluder/numeric.hpp"
#include "colluder/table.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace colluder {

/// Record that violates "proxy is NA iff its indicator is 0", or has a level
/// out of range. `record` is the zero-based position in the input.
class InconsistentRecord : public std::invalid_argument {
 public:
  InconsistentRecord(std::size_t record, const std::string& what)
      : std::invalid_argument(what), record_(record) {}
  std::size_t record() const { return record_; }

 private:
  std::size_t record_;
};

/// Observed variables of g in law-vertex order: fully observed vertices and
/// indicators as is, true variables replaced by their proxies (NA = levels).
std::vector<TableVariable> observed_columns(const MissingDataGraph& g);

/// Empty when the record is consistent, otherwise the reason.
std::optional<std::string> record_problem(const MissingDataGraph& g, std::span<const int> record);

/// All full configurations (over g.law_vertices()) agreeing with the record.
std::vector<std::vector<int>> completion_set(const MissingDataGraph& g, std::span<const int> record);

/// Observed records aggregated into distinct patterns with counts.
class Dataset {
 public:
  static Dataset from_records(std::shared_ptr<const MissingDataGraph> graph,
                              const std::vector<std::vector<int>>& records);
  /// Expected counts n * p(pattern) for every pattern with positive mass.
  static Dataset from_observed_law(std::shared_ptr<const MissingDataGraph> graph,
                                   const ProbabilityTable<double>& observed, double n = 1.0);
  /// Patterns and counts given directly; counts must be positive.
  static Dataset from_patterns(std::shared_ptr<const MissingDataGraph> graph, std::vector<std::vector<int>> patterns,
                               std::vector<double> counts);

  const MissingDataGraph& graph() const { return *graph_; }
  const std::shared_ptr<const MissingDataGraph>& graph_ptr() const { return graph_; }
  const std::vector<TableVariable>& columns() const { return columns_; }
  const std::vector<std::vector<int>>& patterns() const { return patterns_; }
  const std::vector<double>& counts() const { return counts_; }
  double n() const { return n_; }
  bool empty() const { return patterns_.empty(); }

 private:
  std::shared_ptr<const MissingDataGraph> graph_;
  std::vector<TableVariable> columns_;
  std::vector<std::vector<int>> patterns_;
  std::vector<double> counts_;
  double n_ = 0;
};

/// One CPT in the softmax parameterization. Row r, level l > 0 has the
/// unconstrained coordinate theta[offset + r * (levels - 1) + l - 1]; level 0
/// is the reference with coordinate pinned at 0.
struct ParameterBlock {
  int vertex = -1;
  std::string name;
  std::vector<int> parents;  // graph vertices
  std::vector<int> parent_levels;
  int levels = 2;
  int rows = 1;
  int offset = 0;
  int cell_offset = 0;  // into the probability vector (rows * levels cells)

  int dimension() const { return rows * (levels - 1); }
};

class ParameterLayout {
 public:
  /// DAG-only: graphs with bidirected edges are rejected.
  static ParameterLayout from_graph(const MissingDataGraph& g);

  const std::vector<ParameterBlock>& blocks() const { return blocks_; }
  int dimension() const { return dimension_; }
  int cells() const { return cells_; }

  /// Block of a law vertex (position in g.law_vertices()).
  const ParameterBlock& block(int law_position) const { return blocks_.at(static_cast<std::size_t>(law_position)); }

  /// All CPT cells, block by block, row-major.
  Vector<double> probabilities(const Vector<double>& theta) const;
  /// Reported probabilities: the non-reference cells, aligned with theta.
  Vector<double> reported(const Vector<double>& theta) const;
  Vector<double> theta_from_probabilities(const Vector<double>& cells) const;
  Vector<double> theta_from_law(const CategoricalLaw& law) const;
  CategoricalLaw law(std::shared_ptr<const MissingDataGraph> graph, const Vector<double>& theta) const;

  /// Cell index of coordinate k.
  int cell_of(int coordinate) const;
  /// "p(RY=1 | X=0, RX=1)". `base` shifts the levels of non-indicator
  /// variables (1 for one-based data).
  std::string label(const MissingDataGraph& g, int coordinate, int base = 0) const;
  /// (block, row, level) of coordinate k.
  struct Coordinate {
    int block;
    int row;
    int level;
  };
  Coordinate coordinate(int k) const;
  /// Parent values of a block row, in parent order.
  std::vector<int> parent_values(const ParameterBlock& b, int row) const;

 private:
  std::vector<ParameterBlock> blocks_;
  int dimension_ = 0;
  int cells_ = 0;
};

/// Completions of every pattern compiled to lists of CPT cell indices.
class LikelihoodModel {
 public:
  explicit LikelihoodModel(const Dataset& data);

  const ParameterLayout& layout() const { return layout_; }
  double n() const { return n_; }
  int patterns() const { return static_cast<int>(counts_.size()); }

  /// Total log-likelihood; -inf when some pattern has probability 0.
  double log_likelihood(const Vector<double>& theta) const;
  /// Total log-likelihood and its gradient. Throws NonFiniteLikelihood when
  /// the likelihood is not finite.
  double log_likelihood(const Vector<double>& theta, Vector<double>& gradient) const;
  /// Hessian of the total log-likelihood.
  Eigen::MatrixXd hessian(const Vector<double>& theta) const;

 private:
  ParameterLayout layout_;
  std::vector<std::vector<std::vector<int>>> completions_;  // pattern -> completion -> cells
  std::vector<double> counts_;
  std::vector<int> cell_block_;
  double n_ = 0;
};

class NonFiniteLikelihood : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double log_likelihood(const Vector<double>& theta, const Dataset& data);
Vector<double> grad_log_likelihood(const Vector<double>& theta, const Dataset& data);

struct FitConfig {
  int restarts = 5;
  int max_iterations = 10000;
  /// On the gradient of the per-record average log-likelihood.
  double gradient_tolerance = 1e-8;
  int memory = 10;
  /// Newton steps on the analytic Hessian after L-BFGS converges.
  int polish_steps = 8;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
  /// Information eigenvalues below singular_ratio * largest are near-singular.
  double singular_ratio = 1e-8;
  double boundary_eps = 1e-6;
  /// Fit even when the graph is not identifiable.
  bool allow_nonidentifiable = false;
  int threads = 1;
  /// Extra starting point tried before the random restarts.
  std::optional<Vector<double>> initial;
};

struct ParameterEstimate {
  std::string label;
  int block = -1;
  int row = 0;
  int level = 1;
  double estimate = 0;
  double standard_error = 0;
  std::optional<double> lower, upper;
  bool boundary = false;
  /// Information is near-singular in the direction of this probability.
  bool unreliable = false;
};

enum class FitStatus { Converged, MaxIterations, LineSearchFailed };
std::string_view to_string(FitStatus s);

struct RestartSummary {
  int index = 0;
  double log_likelihood = 0;
  double gradient_norm = 0;
  int iterations = 0;
  FitStatus status = FitStatus::Converged;
};

struct FitResult {
  Vector<double> theta;
  std::vector<ParameterEstimate> estimates;
  Vector<double> probabilities;
  double log_likelihood = 0;
  double gradient_norm = 0;
  int iterations = 0;
  FitStatus status = FitStatus::Converged;
  int best_restart = 0;
  std::vector<RestartSummary> restarts;
  double n = 0;
  std::vector<double> information_eigenvalues;

  bool converged() const { return status == FitStatus::Converged; }
};

class NotIdentifiableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Multi-start L-BFGS maximum likelihood with Wald intervals. `label_base`
/// only affects labels.
FitResult fit(const Dataset& data, const FitConfig& config = {}, int label_base = 0);

/// Lower-level entry: one L-BFGS run from theta0, then Newton polishing.
RestartSummary maximize(const LikelihoodModel& model, Vector<double>& theta, const FitConfig& config);

/// Quantile of the standard normal for a two-sided interval.
double normal_critical_value(double level);

}  // namespace colluder
