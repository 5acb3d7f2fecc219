#include "colluder/oracles.hpp"

#include "colluder/fixtures.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>

namespace colluder::oracles {

namespace {

template <typename Scalar>
void require_open_unit(const Scalar& v, const char* name) {
  if (!(v > 0 && v < 1)) throw std::invalid_argument(std::string("parameter ") + name + " must lie in (0, 1)");
}

template <typename Scalar>
RowMatrix<Scalar> rows(std::initializer_list<std::initializer_list<Scalar>> values) {
  RowMatrix<Scalar> t(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : values) {
    Eigen::Index c = 0;
    for (const auto& v : row) t(r, c++) = v;
    ++r;
  }
  return t;
}

template <typename Scalar>
RowMatrix<Scalar> binary_rows(std::initializer_list<Scalar> first_level) {
  RowMatrix<Scalar> t(static_cast<Eigen::Index>(first_level.size()), 2);
  Eigen::Index r = 0;
  for (const auto& v : first_level) {
    t(r, 0) = v;
    t(r, 1) = 1 - v;
    ++r;
  }
  return t;
}

bool nearly_equal(double gap, bool exact) { return exact ? gap == 0 : gap <= 1e-12; }

template <typename Scalar>
ConstructionPair<Scalar> make_pair(BasicLaw<Scalar> law1, BasicLaw<Scalar> law2) {
  const auto full1 = law1.full_table();
  const auto full2 = law2.full_table();
  const bool exact = is_exact_v<Scalar>;
  std::vector<std::vector<int>> witnesses;
  for (std::size_t i = 0; i < full1.size(); ++i) {
    const double gap = std::abs(to_double(Scalar(full1[i] - full2[i])));
    if (exact ? full1[i] != full2[i] : gap > 1e-12) witnesses.push_back(full1.config(i));
  }
  const double observed_gap = max_abs_difference(law1.observed_table(), law2.observed_table());
  const PairClaim claim =
      witnesses.empty() || !nearly_equal(observed_gap, exact) ? PairClaim::AgreeBoth : PairClaim::AgreeObservedDisagreeFull;
  return ConstructionPair<Scalar>{std::move(law1), std::move(law2), claim, std::move(witnesses)};
}

}  // namespace

template <typename Scalar>
BasicLaw<Scalar> appendix_a_law(const AppendixAParams<Scalar>& p) {
  require_open_unit(p.a, "a");
  require_open_unit(p.b, "b");
  require_open_unit(p.c, "c");
  require_open_unit(p.d, "d");
  require_open_unit(p.e, "e");
  require_open_unit(p.f, "f");
  require_open_unit(p.g, "g");
  require_open_unit(p.h, "h");
  if (p.c == p.h) throw std::invalid_argument("parameters c and h must differ");
  auto graph = std::make_shared<const MissingDataGraph>(fixtures::colluder_with_dependency(2, 2));
  // R_Y rows follow its parents (X, R_X): (0,0), (0,1), (1,0), (1,1).
  std::map<std::string, RowMatrix<Scalar>> cpts{
      {"X", binary_rows<Scalar>({p.b})},
      {"Y", binary_rows<Scalar>({p.c, p.h})},
      {"RX", binary_rows<Scalar>({p.a})},
      {"RY", binary_rows<Scalar>({p.d, p.e, p.f, p.g})},
  };
  return make_law<Scalar>(std::move(graph), cpts);
}

template <typename Scalar>
ConstructionPair<Scalar> appendix_b_pair(const AppendixBParams<Scalar>& p) {
  require_open_unit(p.a, "a");
  require_open_unit(p.c, "c");
  require_open_unit(p.e, "e");
  require_open_unit(p.g, "g");
  require_open_unit(p.h, "h");
  require_open_unit(p.i, "i");
  require_open_unit(p.j, "j");
  require_open_unit(p.k, "k");
  require_open_unit(p.l, "l");
  require_open_unit(p.n, "n");
  auto graph = std::make_shared<const MissingDataGraph>(fixtures::colluder_with_dependency(3, 2));
  const Scalar b = (1 - p.c) / 2;
  auto build = [&](const Scalar& g, const Scalar& k) {
    std::map<std::string, RowMatrix<Scalar>> cpts{
        {"X", rows<Scalar>({{b, p.c, b}})},
        {"Y", binary_rows<Scalar>({p.n, p.e, p.n})},
        {"RX", binary_rows<Scalar>({p.a})},
        {"RY", binary_rows<Scalar>({g, p.h, p.i, p.j, k, p.l})},
    };
    return make_law<Scalar>(graph, cpts);
  };
  return make_pair(build(p.g, p.k), build(p.k, p.g));
}

template <typename Scalar>
BasicLaw<Scalar> cross_censoring_law(const AppendixCParams<Scalar>& p) {
  auto graph = std::make_shared<const MissingDataGraph>(fixtures::cross_censoring(2, 2, true));
  std::map<std::string, RowMatrix<Scalar>> cpts{
      {"X", binary_rows<Scalar>({p.b})},
      {"Y", binary_rows<Scalar>({p.c, p.h})},
      {"RX", binary_rows<Scalar>({p.a, p.i})},
      {"RY", binary_rows<Scalar>({p.d, p.e, p.f, p.g})},
  };
  return make_law<Scalar>(std::move(graph), cpts);
}

AppendixCParams<Rational> appendix_c_model(int which) {
  using R = Rational;
  if (which == 1) {
    return {R(229, 400), R(59, 114), R(40, 59), R(1028, 1145), R(1, 3), R(7373, 11450), R(2, 5), R(80, 99), R(1, 10)};
  }
  if (which == 2) {
    return {R(283, 492), R(108, 209), R(41, 60), R(1074, 1415), R(1, 3), R(10949, 14150), R(2, 5), R(82, 101),
            R(1, 12)};
  }
  throw std::invalid_argument("the cross-censoring pair has models 1 and 2");
}

ConstructionPair<Rational> appendix_c_pair() {
  return make_pair(cross_censoring_law(appendix_c_model(1)), cross_censoring_law(appendix_c_model(2)));
}

template <typename Scalar>
PairCheck verify(const ConstructionPair<Scalar>& pair) {
  PairCheck out;
  out.max_observed_gap = max_abs_difference(pair.law1.observed_table(), pair.law2.observed_table());
  out.max_full_gap = max_abs_difference(pair.law1.full_table(), pair.law2.full_table());
  if constexpr (is_exact_v<Scalar>) {
    out.observed_agree = pair.law1.observed_table() == pair.law2.observed_table();
    out.full_agree = pair.law1.full_table() == pair.law2.full_table();
  } else {
    out.observed_agree = out.max_observed_gap <= 1e-12;
    out.full_agree = out.max_full_gap <= 1e-12;
  }
  out.holds = pair.claim == PairClaim::AgreeObservedDisagreeFull
                  ? out.observed_agree && !out.full_agree && !pair.witness_cells.empty()
                  : out.full_agree;
  return out;
}

ParameterCount parameter_count(bool with_xy_edge, int m, int q) {
  if (m < 1 || q < 1) throw std::invalid_argument("level counts must be positive");
  ParameterCount out;
  if (with_xy_edge) {
    out.full_law = m * q + 2 * m + q - 1;
    out.observed_bound = m * q + m + q;
  } else {
    out.full_law = 3 * m + 2 * q - 2;
    out.observed_bound = 2 * m + 2 * q - 1;
  }
  out.deficit = m - 1;
  return out;
}

namespace {

struct CrossCensoringShape {
  int x, y, rx, ry;
  bool with_xy_edge;
};

CrossCensoringShape cross_censoring_shape(const MissingDataGraph& g) {
  const auto unsupported = [] { return std::invalid_argument("unsupported fixture: expected the cross-censoring model"); };
  const auto colluders = find_colluders(g);
  if (colluders.size() != 1 || g.law_vertices().size() != 4) throw unsupported();
  const auto& col = colluders.front();
  const auto y = g.true_of_indicator(col.target_indicator);
  if (!y) throw unsupported();
  CrossCensoringShape s{col.true_variable, *y, col.response_of_true, col.target_indicator, g.has_directed(col.true_variable, *y)};
  if (!g.has_directed(s.y, s.rx)) throw unsupported();
  int edges = 0;
  for (const auto& e : g.edges()) {
    if (e.type == EdgeType::Bidirected) throw unsupported();
    if (g.vertex(e.to).role != VertexRole::Proxy) ++edges;
  }
  if (edges != (s.with_xy_edge ? 4 : 3)) throw unsupported();
  return s;
}

}  // namespace

ParameterCount parameter_count(const MissingDataGraph& g) {
  const auto s = cross_censoring_shape(g);
  return parameter_count(s.with_xy_edge, g.vertex(s.x).levels, g.vertex(s.y).levels);
}

int free_parameters(const MissingDataGraph& g) {
  const auto layout = LawLayout::from_graph(g);
  int total = 0;
  for (std::size_t i = 0; i < layout.variables.size(); ++i) {
    int rows = 1;
    for (int p : layout.parents[i]) rows *= layout.variables[p].levels;
    total += rows * (layout.variables[i].levels - 1);
  }
  return total;
}

namespace {

struct CrossPositions {
  int x, y, rx, ry, m, q;
};

template <typename Scalar>
CrossPositions cross_positions(const ProbabilityTable<Scalar>& obs, const MissingDataGraph& g) {
  const auto s = cross_censoring_shape(g);
  if (s.with_xy_edge) throw std::invalid_argument("the observed parameterization needs the model without X -> Y");
  return {obs.position(g.name(*g.proxy_of(s.x))), obs.position(g.name(*g.proxy_of(s.y))), obs.position(g.name(s.rx)),
          obs.position(g.name(s.ry)), g.vertex(s.x).levels, g.vertex(s.y).levels};
}

}  // namespace

template <typename Scalar>
std::vector<Scalar> cross_censoring_observed_parameters(const ProbabilityTable<Scalar>& obs,
                                                        const MissingDataGraph& g) {
  const auto p = cross_positions(obs, g);
  auto prob = [&](auto&& pred) {
    Scalar total = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto c = obs.config(i);
      if (pred(c)) total += obs[i];
    }
    return total;
  };
  const Scalar ry1 = prob([&](const auto& c) { return c[p.ry] == 1; });
  const Scalar rx0 = prob([&](const auto& c) { return c[p.rx] == 0; });
  const Scalar rx1 = 1 - rx0;
  std::vector<Scalar> out;
  for (int i = 0; i + 1 < p.q; ++i)
    out.push_back(prob([&](const auto& c) { return c[p.ry] == 1 && c[p.rx] == 0 && c[p.y] == i; }) / ry1);
  for (int i = 0; i + 1 < p.q; ++i) out.push_back(prob([&](const auto& c) { return c[p.ry] == 1 && c[p.y] == i; }) / ry1);
  out.push_back(rx0);
  for (int j = 0; j + 1 < p.m; ++j)
    out.push_back(prob([&](const auto& c) { return c[p.rx] == 1 && c[p.ry] == 0 && c[p.x] == j; }) / rx1);
  for (int j = 0; j + 1 < p.m; ++j) out.push_back(prob([&](const auto& c) { return c[p.rx] == 1 && c[p.x] == j; }) / rx1);
  out.push_back(prob([&](const auto& c) { return c[p.rx] == 0 && c[p.ry] == 0; }) / rx0);
  out.push_back(prob([&](const auto& c) { return c[p.rx] == 1 && c[p.ry] == 0; }) / rx1);
  return out;
}

template <typename Scalar>
ProbabilityTable<Scalar> cross_censoring_observed_law(const std::vector<Scalar>& params, const MissingDataGraph& g) {
  std::vector<TableVariable> vars;
  for (int v : g.law_vertices()) {
    const auto& vx = g.vertex(v);
    if (vx.role == VertexRole::TrueVariable) {
      vars.push_back({g.name(*g.proxy_of(v)), vx.levels + 1});
    } else {
      vars.push_back({vx.name, vx.levels});
    }
  }
  auto out = ProbabilityTable<Scalar>::zeros(vars);
  const auto p = cross_positions(out, g);
  const int m = p.m, q = p.q;
  if (static_cast<int>(params.size()) != 2 * m + 2 * q - 1) throw std::invalid_argument("expected 2m + 2q - 1 parameters");

  std::size_t k = 0;
  std::vector<Scalar> rx0_y(q), y_given(q), ry0_x(m), x_given(m);
  for (int i = 0; i + 1 < q; ++i) rx0_y[i] = params[k++];
  for (int i = 0; i + 1 < q; ++i) y_given[i] = params[k++];
  const Scalar rx0 = params[k++];
  for (int j = 0; j + 1 < m; ++j) ry0_x[j] = params[k++];
  for (int j = 0; j + 1 < m; ++j) x_given[j] = params[k++];
  const Scalar ry0_rx0 = params[k++];
  const Scalar ry0_rx1 = params[k++];

  const Scalar rx1 = 1 - rx0;
  const Scalar ry1 = (1 - ry0_rx0) * rx0 + (1 - ry0_rx1) * rx1;
  const Scalar rx0_given_ry1 = (1 - ry0_rx0) * rx0 / ry1;
  auto complete = [](std::vector<Scalar>& v, const Scalar& total) {
    Scalar rest = total;
    for (std::size_t t = 0; t + 1 < v.size(); ++t) rest -= v[t];
    v.back() = rest;
  };
  complete(rx0_y, rx0_given_ry1);
  complete(y_given, Scalar(1));
  complete(ry0_x, ry0_rx1);
  complete(x_given, Scalar(1));

  std::vector<int> cfg(vars.size(), 0);
  auto set = [&](int x, int y, int rx, int ry, const Scalar& v) {
    cfg[p.x] = x;
    cfg[p.y] = y;
    cfg[p.rx] = rx;
    cfg[p.ry] = ry;
    out.at(cfg) = v;
  };
  set(m, q, 0, 0, ry0_rx0 * rx0);
  for (int j = 0; j < m; ++j) set(j, q, 1, 0, ry0_x[j] * rx1);
  for (int i = 0; i < q; ++i) set(m, i, 0, 1, rx0_y[i] * ry1);
  for (int i = 0; i < q; ++i) {
    // p(Y | R_X = 1, R_Y = 1), using Y independent of X given R_X, R_Y.
    const Scalar y_rr = (y_given[i] - rx0_y[i]) / (1 - rx0_given_ry1);
    for (int j = 0; j < m; ++j) set(j, i, 1, 1, y_rr * (x_given[j] - ry0_x[j]) * rx1);
  }
  return out;
}

template BasicLaw<double> appendix_a_law(const AppendixAParams<double>&);
template BasicLaw<Rational> appendix_a_law(const AppendixAParams<Rational>&);
template ConstructionPair<double> appendix_b_pair(const AppendixBParams<double>&);
template ConstructionPair<Rational> appendix_b_pair(const AppendixBParams<Rational>&);
template BasicLaw<double> cross_censoring_law(const AppendixCParams<double>&);
template BasicLaw<Rational> cross_censoring_law(const AppendixCParams<Rational>&);
template PairCheck verify(const ConstructionPair<double>&);
template PairCheck verify(const ConstructionPair<Rational>&);
template std::vector<double> cross_censoring_observed_parameters(const ProbabilityTable<double>&, const MissingDataGraph&);
template std::vector<Rational> cross_censoring_observed_parameters(const ProbabilityTable<Rational>&,
                                                                   const MissingDataGraph&);
template ProbabilityTable<double> cross_censoring_observed_law(const std::vector<double>&, const MissingDataGraph&);
template ProbabilityTable<Rational> cross_censoring_observed_law(const std::vector<Rational>&, const MissingDataGraph&);

}  // namespace colluder::oracles
