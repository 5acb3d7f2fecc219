#pragma once

#include "colluder/graph.hpp"
#include "colluder/law.hpp"
#include "colluder/numeric.hpp"
#include "colluder/table.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace colluder {

struct IdentifyOptions {
  /// Singular values at or below rank_tol * sigma_max count as zero.
  double rank_tol = 1e-10;
  double eps_pos = 1e-12;
};

enum class FindingKind {
  SelfCensoring,
  ConditionalIndependence,
  StructuralRank,
  RankDeficient,
  Positivity,
  DependencyAssumption,
  MissingLevels,
};

std::string_view to_string(FindingKind kind);

class IdentificationError : public std::runtime_error {
 public:
  IdentificationError(FindingKind kind, const std::string& what, std::vector<double> singular_values = {})
      : std::runtime_error(what), kind_(kind), singular_values_(std::move(singular_values)) {}

  FindingKind kind() const { return kind_; }
  const std::vector<double>& singular_values() const { return singular_values_; }

 private:
  FindingKind kind_;
  std::vector<double> singular_values_;
};

/// Assignment of the conditioning set Z of a colluder: fully observed
/// variables and the true variables other than X and Y, by vertex name. The
/// remaining response indicators are implicitly fixed at 1.
using Stratum = Evidence;

std::string to_string(const Stratum& z);

/// Variables of Z in graph order (true variables carry their own names).
std::vector<TableVariable> stratum_variables(const MissingDataGraph& g, const Colluder& col);
/// Cartesian product of the Z levels, first variable slowest.
std::vector<Stratum> colluder_strata(const MissingDataGraph& g, const Colluder& col);

/// Open walk witnessing R_X and Y dependent given everything else, where Y is
/// the variable of the target indicator; nullopt when the independence holds.
std::optional<Walk> colluder_independence_violation(const MissingDataGraph& g, const Colluder& col);

/// A_r s_r = b_r for one stratum. A does not depend on r: its R_X = 0 entries
/// are replaced by their R_X = 1 counterparts.
template <typename Scalar>
struct ColluderSystem {
  Colluder colluder;
  Stratum z;
  int r = 0;
  RowMatrix<Scalar> A;  // q x m
  Vector<Scalar> b;     // q
  std::optional<Vector<Scalar>> s;
};

/// Builds the system from an observed-law table (proxy variables, NA last).
template <typename Scalar>
ColluderSystem<Scalar> build_colluder_system(const ProbabilityTable<Scalar>& obs, const MissingDataGraph& g,
                                             const Colluder& col, const Stratum& z, int r,
                                             const IdentifyOptions& opts = {});

struct RankReport {
  int rank = 0;
  std::vector<double> singular_values;
};

/// Numerical rank for doubles; exact rank for rationals. Singular values are
/// always reported in double precision.
template <typename Scalar>
RankReport rank_test(const ColluderSystem<Scalar>& sys, double tol = 1e-10);

template <typename Scalar>
struct ColluderSolution {
  Vector<Scalar> s;
  double residual = 0;         // max |A s - b|
  bool outside_unit = false;   // some entry outside [0, 1] by more than 1e-8
};

/// Moore-Penrose solution; stores it in `sys.s`. Throws RankDeficient.
template <typename Scalar>
ColluderSolution<Scalar> solve_colluder(ColluderSystem<Scalar>& sys, double tol = 1e-10);

/// p(R_X = r | Z, X = x, R_Y = 1, other indicators = 1) for every stratum, as a
/// table over (Z..., X, R_X). Throws on the first stratum that fails.
template <typename Scalar>
ProbabilityTable<Scalar> colluder_mechanism(const ProbabilityTable<Scalar>& obs, const MissingDataGraph& g,
                                            const Colluder& col, const IdentifyOptions& opts = {});

template <typename Scalar>
struct BinaryColluderQuantities {
  Scalar a;  // p(R_X = 0)
  Scalar b;  // p(X = 0 | R_X = 1)
  Scalar c;  // p(Y = 0 | X = 0, R_X = 1, R_Y = 1)
  Scalar h;  // p(Y = 0 | X = 1, R_X = 1, R_Y = 1)
  Scalar r;  // p(Y = 0, R_X = 0, R_Y = 1)
  Scalar s;  // p(Y = 1, R_X = 0, R_Y = 1)
};

/// Reads the quantities off the observed law of a binary two-variable colluder model.
template <typename Scalar>
BinaryColluderQuantities<Scalar> binary_quantities(const ProbabilityTable<Scalar>& obs, const MissingDataGraph& g,
                                                   const Colluder& col, double eps_pos = 1e-12);

/// (p(R_Y = 1 | X = 0, R_X = 0), p(R_Y = 1 | X = 1, R_X = 0)).
template <typename Scalar>
std::array<Scalar, 2> binary_closed_form(const BinaryColluderQuantities<Scalar>& q);
/// Same target through the 2x2 system.
template <typename Scalar>
std::array<Scalar, 2> binary_matrix_form(const BinaryColluderQuantities<Scalar>& q);

/// Max |p(R | O, X) - OR-factorized form| over all configurations.
/// `ordering` lists every response indicator once.
template <typename Scalar>
double or_factorization_check(const BasicLaw<Scalar>& law, const std::vector<std::string>& ordering,
                              double eps_pos = 1e-12);

enum class Decision { Identifiable, NotIdentifiable };

struct Finding {
  FindingKind kind;
  std::optional<Colluder> colluder;
  std::string detail;
  std::vector<double> singular_values;
};

struct IdentifiabilityVerdict {
  Decision decision = Decision::Identifiable;
  std::vector<Finding> reasons;
  /// Identifiable only if rank(A_r) = m at every stratum of some law.
  bool rank_condition_pending = false;
};

std::string_view to_string(Decision d);

/// Structural decision from the graph and level counts. Throws
/// IdentificationError(MissingLevels) for continuous colluder variables.
IdentifiabilityVerdict decide_full_law(const MissingDataGraph& g);

}  // namespace colluder
