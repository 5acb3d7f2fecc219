#pragma once

#include "colluder/graph.hpp"
#include "colluder/numeric.hpp"
#include "colluder/table.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace colluder {

class LawError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A variable of the full law: a non-proxy graph vertex, or a latent
/// confounder standing in for one bidirected edge (vertex == -1).
struct LawVariable {
  std::string name;
  int levels = 2;
  int vertex = -1;

  bool latent() const { return vertex < 0; }
};

/// Conditional probability table p(V | parents); rows are parent
/// configurations in row-major order (first parent slowest), columns levels.
template <typename Scalar>
struct Cpt {
  int variable = -1;
  std::vector<int> parents;
  std::vector<int> parent_levels;
  RowMatrix<Scalar> table;

  /// Row for a configuration over *all* law variables.
  Eigen::Index row_of(std::span<const int> law_config) const {
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      row = row * parent_levels[k] + law_config[static_cast<std::size_t>(parents[k])];
    }
    return row;
  }
};

/// Variables and CPT parent sets induced by a missing-data graph. Each
/// bidirected edge becomes a latent root parent of both endpoints.
struct LawLayout {
  std::vector<LawVariable> variables;
  std::vector<std::vector<int>> parents;
  int visible = 0;

  static LawLayout from_graph(const MissingDataGraph& g, int latent_levels = 2);
  int find(std::string_view name) const;
};

/// CPT-factored categorical full law p(O, X(1), R) of a missing-data graph.
template <typename Scalar>
class BasicLaw {
 public:
  /// `tables[i]` is the CPT of layout variable i. Rows must sum to one
  /// (exactly for rationals, within 1e-12 for doubles).
  BasicLaw(std::shared_ptr<const MissingDataGraph> graph, std::vector<RowMatrix<Scalar>> tables,
           int latent_levels = 2);

  const MissingDataGraph& graph() const { return *graph_; }
  const std::shared_ptr<const MissingDataGraph>& graph_ptr() const { return graph_; }
  const LawLayout& layout() const { return layout_; }
  const std::vector<Cpt<Scalar>>& cpts() const { return cpts_; }
  const Cpt<Scalar>& cpt(std::string_view name) const { return cpts_.at(layout_.find(name)); }
  int latent_levels() const { return latent_levels_; }

  /// Variables of full-configuration assignments (visible law variables).
  std::vector<TableVariable> visible_variables() const;

  /// Product of CPT entries, latent confounders summed out. `config` covers
  /// the visible law variables in layout order.
  Scalar joint_probability(std::span<const int> config) const;

  ProbabilityTable<Scalar> full_table() const;
  /// p(O, X, R) with each true variable replaced by its proxy (NA = last level).
  ProbabilityTable<Scalar> observed_table() const;

  bool strictly_positive(double eps_pos = 1e-12) const;

  template <typename To>
  BasicLaw<To> cast() const {
    std::vector<RowMatrix<To>> tables;
    for (const auto& c : cpts_) {
      RowMatrix<To> t(c.table.rows(), c.table.cols());
      for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = scalar_cast<To>(c.table(i, j));
      if constexpr (is_exact_v<To> && !is_exact_v<Scalar>) {
        // Exact rows: the last level absorbs the rounding of the others.
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
          To rest = 1;
          for (Eigen::Index j = 0; j + 1 < t.cols(); ++j) rest -= t(i, j);
          t(i, t.cols() - 1) = rest;
        }
      }
      tables.push_back(std::move(t));
    }
    return BasicLaw<To>(graph_, std::move(tables), latent_levels_);
  }

 private:
  std::shared_ptr<const MissingDataGraph> graph_;
  LawLayout layout_;
  std::vector<Cpt<Scalar>> cpts_;
  int latent_levels_ = 2;
};

using CategoricalLaw = BasicLaw<double>;
using RationalLaw = BasicLaw<Rational>;

extern template class BasicLaw<double>;
extern template class BasicLaw<Rational>;

/// Builds a law from named CPTs, e.g. {{"X", {{0.3, 0.7}}}, ...}.
template <typename Scalar>
BasicLaw<Scalar> make_law(std::shared_ptr<const MissingDataGraph> graph,
                          const std::map<std::string, RowMatrix<Scalar>>& tables, int latent_levels = 2);

/// Maps a table over substantive variables and indicators to the table over
/// proxies: each true variable whose indicator is present becomes its proxy.
template <typename Scalar>
ProbabilityTable<Scalar> observed_from_full(const MissingDataGraph& g, const ProbabilityTable<Scalar>& full);

/// Observed configuration (proxy values, NA = levels) of a full
/// configuration over `vertices` (graph indices, typically law_vertices()).
std::vector<int> observe(const MissingDataGraph& g, std::span<const int> vertices, std::span<const int> config);

struct SimConstraints {
  /// p(R = 1) for indicators without parents, by name; others are drawn from
  /// [response_low, response_high].
  std::map<std::string, double> fixed_response;
  double response_low = 0.7;
  double response_high = 0.9;
  /// Minimum pairwise gap between p(R = 1 | pa) across parent configurations.
  double response_gap = 1e-3;
  /// Minimum total-variation distance between any two rows of p(V | pa) for
  /// substantive vertices with parents.
  double dependency_gap = 0.1;
  double min_probability = 0.0;
  int latent_levels = 2;
  int max_attempts = 100000;
};

class InfeasibleConstraints : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random law: substantive rows uniform on the simplex with rejection until
/// the dependency gap holds; indicator rows uniform on the response interval.
CategoricalLaw random_law(std::shared_ptr<const MissingDataGraph> graph, const SimConstraints& constraints,
                          std::uint64_t seed);

/// Total-variation distance between two probability rows.
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace colluder
