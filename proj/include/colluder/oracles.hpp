#pragma once

#include "colluder/graph.hpp"
#include "colluder/law.hpp"
#include "colluder/numeric.hpp"
#include "colluder/table.hpp"

#include <vector>

namespace colluder::oracles {

/// Binary colluder model with X -> Y. p(R_X = 0) = a, p(X = 0) = b,
/// p(Y = 0 | X = 0) = c, p(Y = 0 | X = 1) = h, and p(R_Y = 0 | R_X, X) equal to
/// d (0,0), e (1,0), f (0,1), g (1,1).
template <typename Scalar>
struct AppendixAParams {
  Scalar a, b, c, d, e, f, g, h;
};

template <typename Scalar>
BasicLaw<Scalar> appendix_a_law(const AppendixAParams<Scalar>& p);

enum class PairClaim { AgreeObservedDisagreeFull, AgreeBoth };

template <typename Scalar>
struct ConstructionPair {
  BasicLaw<Scalar> law1;
  BasicLaw<Scalar> law2;
  PairClaim claim;
  /// Full-law configurations (law variable order) where the laws differ.
  std::vector<std::vector<int>> witness_cells;
};

/// Ternary X, binary Y. p(X) = (b, c, b) with b = (1 - c) / 2,
/// p(Y = 0 | X) = (n, e, n), p(R_X = 0) = a and p(R_Y = 0 | R_X, X) equal to
/// g (0,0), h (1,0), i (0,1), j (1,1), k (0,2), l (1,2). Model 2 swaps g and k.
template <typename Scalar>
struct AppendixBParams {
  Scalar a, c, e, g, h, i, j, k, l, n;
};

template <typename Scalar>
ConstructionPair<Scalar> appendix_b_pair(const AppendixBParams<Scalar>& p);

/// Binary cross-censoring model (colluder plus Y -> R_X and X -> Y).
/// p(R_X = 0 | Y = 0) = a, p(R_X = 0 | Y = 1) = i; other letters as in
/// AppendixAParams.
template <typename Scalar>
struct AppendixCParams {
  Scalar a, b, c, d, e, f, g, h, i;
};

template <typename Scalar>
BasicLaw<Scalar> cross_censoring_law(const AppendixCParams<Scalar>& p);

/// The fixed rational pair with identical observed laws.
ConstructionPair<Rational> appendix_c_pair();
AppendixCParams<Rational> appendix_c_model(int which);

struct PairCheck {
  bool observed_agree = false;
  bool full_agree = false;
  double max_observed_gap = 0;
  double max_full_gap = 0;
  /// The computed agreement pattern matches `claim`.
  bool holds = false;
};

/// Exact comparison for rationals, 1e-12 for doubles.
template <typename Scalar>
PairCheck verify(const ConstructionPair<Scalar>& pair);

struct ParameterCount {
  int full_law = 0;
  int observed_bound = 0;
  int deficit = 0;
};

/// Counting argument for the cross-censoring CCM(m, q).
ParameterCount parameter_count(bool with_xy_edge, int m, int q);
/// Same, reading m, q and the X -> Y edge off a cross-censoring graph.
/// Throws std::invalid_argument on any other graph.
ParameterCount parameter_count(const MissingDataGraph& g);

/// Number of free CPT entries of the graph's categorical law.
int free_parameters(const MissingDataGraph& g);

/// The 2m + 2q - 1 observed-law parameters of the cross-censoring model
/// without X -> Y, in the order
///   p(R_X=0, Y=y_i | R_Y=1), p(Y=y_i | R_Y=1)    i < q-1
///   p(R_X=0)
///   p(R_Y=0, X=x_j | R_X=1), p(X=x_j | R_X=1)    j < m-1
///   p(R_Y=0 | R_X=0), p(R_Y=0 | R_X=1).
template <typename Scalar>
std::vector<Scalar> cross_censoring_observed_parameters(const ProbabilityTable<Scalar>& obs,
                                                        const MissingDataGraph& g);

/// Rebuilds the observed law from those parameters.
template <typename Scalar>
ProbabilityTable<Scalar> cross_censoring_observed_law(const std::vector<Scalar>& params, const MissingDataGraph& g);

}  // namespace colluder::oracles
