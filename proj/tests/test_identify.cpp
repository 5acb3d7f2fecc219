#include <doctest.h>

#include "colluder/fixtures.hpp"
#include "colluder/identify.hpp"
#include "colluder/oracles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

using namespace colluder;

namespace {

std::shared_ptr<const MissingDataGraph> share(MissingDataGraph g) {
  return std::make_shared<const MissingDataGraph>(std::move(g));
}

Colluder colluder_of(const MissingDataGraph& g, const std::string& target) {
  for (const auto& c : find_colluders(g))
    if (g.name(c.target_indicator) == target) return c;
  FAIL("no colluder of " << target);
  return {};
}

// p(R_X = r | everything else, R_Y = 1, other indicators = 1) straight from the
// full law, keyed by the full configuration with R_X dropped.
std::map<std::vector<int>, std::array<double, 2>> oracle_mechanism(const CategoricalLaw& law, const Colluder& col) {
  const auto& g = law.graph();
  const auto full = law.full_table();
  const int rx = full.position(g.name(col.response_of_true));
  std::vector<int> fixed_ones;
  for (int p = 0; p < full.arity(); ++p) {
    const int v = g.index(full.variables()[p].name);
    if (g.vertex(v).role == VertexRole::ResponseIndicator && p != rx) fixed_ones.push_back(p);
  }
  std::map<std::vector<int>, std::array<double, 2>> mass;
  for (std::size_t i = 0; i < full.size(); ++i) {
    auto cfg = full.config(i);
    if (!std::all_of(fixed_ones.begin(), fixed_ones.end(), [&](int p) { return cfg[p] == 1; })) continue;
    const int r = cfg[rx];
    cfg.erase(cfg.begin() + rx);
    auto& slot = mass.try_emplace(cfg, std::array<double, 2>{0, 0}).first->second;
    slot[r] += full[i];
  }
  for (auto& [key, m] : mass) {
    const double total = m[0] + m[1];
    m[0] /= total;
    m[1] /= total;
  }
  return mass;
}

// Max gap between colluder_mechanism and the full-law oracle over every
// configuration, including every value of Y.
double mechanism_gap(const CategoricalLaw& law, const Colluder& col) {
  const auto& g = law.graph();
  const auto mech = colluder_mechanism(law.observed_table(), g, col);
  const auto oracle = oracle_mechanism(law, col);
  const auto vars = law.visible_variables();
  std::vector<std::string> names;
  for (const auto& v : vars)
    if (v.name != g.name(col.response_of_true)) names.push_back(v.name);
  double worst = 0;
  for (const auto& [key, p] : oracle) {
    std::vector<int> cfg;
    for (const auto& mv : mech.variables()) {
      if (mv.name == g.name(col.response_of_true)) {
        cfg.push_back(0);
        continue;
      }
      const auto at = std::find(names.begin(), names.end(), mv.name) - names.begin();
      cfg.push_back(key[static_cast<std::size_t>(at)]);
    }
    for (int r = 0; r < 2; ++r) {
      cfg.back() = r;
      worst = std::max(worst, std::abs(mech.at(cfg) - p[r]));
    }
  }
  return worst;
}

SimConstraints simulation_like() {
  SimConstraints sc;
  sc.fixed_response["RX"] = 0.8;
  return sc;
}

}  // namespace

TEST_CASE("colluder system of the binary model") {
  const double a = 0.3, b = 0.6, c = 0.2, d = 0.35, e = 0.15, f = 0.55, g = 0.4, h = 0.7;
  const auto law = oracles::appendix_a_law<double>({a, b, c, d, e, f, g, h});
  const auto& graph = law.graph();
  const auto obs = law.observed_table();
  const auto col = colluder_of(graph, "RY");
  const double ry1 = a * (b * (1 - d) + (1 - b) * (1 - f)) + (1 - a) * (b * (1 - e) + (1 - b) * (1 - g));

  auto sys = build_colluder_system(obs, graph, col, {}, 0);
  REQUIRE(sys.A.rows() == 2);
  REQUIRE(sys.A.cols() == 2);
  CHECK(sys.A(0, 0) == doctest::Approx(c * ry1));
  CHECK(sys.A(0, 1) == doctest::Approx(h * ry1));
  CHECK(sys.A(1, 0) == doctest::Approx((1 - c) * ry1));
  CHECK(sys.A(1, 1) == doctest::Approx((1 - h) * ry1));
  const double r = a * (b * c * (1 - d) + (1 - b) * h * (1 - f));
  const double s = a * (b * (1 - c) * (1 - d) + (1 - b) * (1 - h) * (1 - f));
  CHECK(sys.b[0] == doctest::Approx(r));
  CHECK(sys.b[1] == doctest::Approx(s));

  const auto sol = solve_colluder(sys);
  // s_0 = p(R_X = 0, X = x | R_Y = 1): the closed-form unknowns rescaled by a b / p(R_Y = 1).
  CHECK(std::abs(sol.s[0] - a * b * (1 - d) / ry1) <= 1e-12);
  CHECK(std::abs(sol.s[1] - a * (1 - b) * (1 - f) / ry1) <= 1e-12);
  CHECK(sol.residual <= 1e-12);
  CHECK_FALSE(sol.outside_unit);
  CHECK(sys.s.has_value());

  CHECK(rank_test(sys).rank == 2);
  // det = p(R_Y=1)^2 (c - h) in this normalization.
  const Eigen::Matrix2d A = sys.A;
  CHECK(A.determinant() == doctest::Approx(ry1 * ry1 * (c - h)));

  auto sys1 = build_colluder_system(obs, graph, col, {}, 1);
  CHECK(sys1.A == sys.A);
  const auto sol1 = solve_colluder(sys1);
  CHECK(std::abs(sol1.s[0] - (1 - a) * b * (1 - e) / ry1) <= 1e-12);
  CHECK(std::abs(sol1.s[1] - (1 - a) * (1 - b) * (1 - g) / ry1) <= 1e-12);
}

TEST_CASE("solutions reproduce p(R_X, X | R_Y = 1) from the full law") {
  auto g = share(fixtures::colluder_with_dependency(3, 3));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto law = random_law(g, simulation_like(), seed);
    const auto full = law.full_table();
    const auto col = colluder_of(*g, "RY");
    for (int r = 0; r < 2; ++r) {
      auto sys = build_colluder_system(law.observed_table(), *g, col, {}, r);
      const auto sol = solve_colluder(sys);
      const auto target = conditional(full, {"RX", "X"}, {{"RY", 1}});
      for (int j = 0; j < 3; ++j) CHECK(std::abs(sol.s[j] - target.at(std::vector<int>{r, j})) <= 1e-10);
      // Square case: Moore-Penrose equals the inverse.
      const Eigen::MatrixXd A = sys.A;
      const Eigen::VectorXd direct = A.inverse() * sys.b;
      CHECK((direct - sol.s).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("constant X gives a single-column system") {
  auto g = share(fixtures::colluder_with_dependency(1, 3));
  const auto law = random_law(g, simulation_like(), 4);
  const auto col = colluder_of(*g, "RY");
  const auto full = law.full_table();
  for (int r = 0; r < 2; ++r) {
    auto sys = build_colluder_system(law.observed_table(), *g, col, {}, r);
    CHECK(sys.A.rows() == 3);
    CHECK(sys.A.cols() == 1);
    const auto sol = solve_colluder(sys);
    CHECK(std::abs(sol.s[0] - conditional(full, {"RX"}, {{"RY", 1}})[r]) <= 1e-12);
  }
}

TEST_CASE("overdetermined consistent systems solve exactly") {
  auto g = share(fixtures::colluder_with_dependency(2, 4));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto law = random_law(g, simulation_like(), seed);
    auto sys = build_colluder_system(law.observed_table(), *g, colluder_of(*g, "RY"), {}, 0);
    CHECK(sys.A.rows() == 4);
    CHECK(sys.A.cols() == 2);
    CHECK(solve_colluder(sys).residual <= 1e-10);
  }
  // Rational arithmetic: residual exactly zero.
  const auto exact = random_law(g, simulation_like(), 1).cast<Rational>();
  auto rsys = build_colluder_system(exact.observed_table(), *g, colluder_of(*g, "RY"), {}, 1);
  const auto rsol = solve_colluder(rsys);
  CHECK(rsol.residual == 0.0);
  CHECK(Vector<Rational>(rsys.A * rsol.s - rsys.b).isZero(Rational(0)));
}

TEST_CASE("fewer Y levels than X levels cannot reach full rank") {
  auto g = share(fixtures::colluder_with_dependency(3, 2));
  const auto law = random_law(g, simulation_like(), 8);
  const auto col = colluder_of(*g, "RY");
  auto sys = build_colluder_system(law.observed_table(), *g, col, {}, 0);
  CHECK(sys.A.rows() == 2);
  CHECK(sys.A.cols() == 3);
  const auto rank = rank_test(sys);
  CHECK(rank.rank <= 2);
  CHECK(rank.singular_values.size() == 2);
  try {
    solve_colluder(sys);
    FAIL("expected a rank error");
  } catch (const IdentificationError& e) {
    CHECK(e.kind() == FindingKind::RankDeficient);
    CHECK(std::string(e.what()).find("rank(A) = 2 < m = 3") != std::string::npos);
  }
}

TEST_CASE("duplicated columns are rank deficient: the ternary construction") {
  using R = Rational;
  const oracles::AppendixBParams<R> p{R(3, 10), R(1, 2), R(7, 10), R(1, 5), R(2, 5), R(3, 10), R(1, 4), R(3, 5),
                                      R(9, 20), R(1, 5)};
  const auto pair = oracles::appendix_b_pair(p);
  const auto& g = pair.law1.graph();
  const auto col = colluder_of(g, "RY");
  std::vector<std::string> messages;
  for (const auto* law : {&pair.law1, &pair.law2}) {
    auto sys = build_colluder_system(law->observed_table(), g, col, {}, 0);
    CHECK(rank_test(sys).rank == 2);
    auto dsys = build_colluder_system(law->cast<double>().observed_table(), g, col, {}, 0);
    CHECK(rank_test(dsys).rank < 3);
    CHECK_THROWS_AS(solve_colluder(sys), IdentificationError);
    try {
      colluder_mechanism(law->observed_table(), g, col);
      FAIL("expected failure");
    } catch (const IdentificationError& e) {
      CHECK(e.kind() == FindingKind::RankDeficient);
      messages.push_back(e.what());
    }
  }
  REQUIRE(messages.size() == 2);
  CHECK(messages[0] == messages[1]);
}

TEST_CASE("constant p(Y | X) makes the mechanism unidentifiable") {
  auto g = share(fixtures::colluder_with_dependency(2, 2));
  RowMatrix<double> x(1, 2), y(2, 2), rx(1, 2), ry(4, 2);
  x << 0.4, 0.6;
  y << 0.3, 0.7, 0.3, 0.7;
  rx << 0.2, 0.8;
  ry << 0.25, 0.75, 0.25, 0.75, 0.25, 0.75, 0.25, 0.75;
  const auto law = make_law<double>(g, {{"X", x}, {"Y", y}, {"RX", rx}, {"RY", ry}});
  const auto col = colluder_of(*g, "RY");
  CHECK_THROWS_AS(colluder_mechanism(law.observed_table(), *g, col), IdentificationError);
  auto sys = build_colluder_system(law.observed_table(), *g, col, {}, 0);
  CHECK(rank_test(sys).rank == 1);
}

TEST_CASE("positivity failures name the stratum") {
  auto g = share(fixtures::colluder_with_dependency(2, 2));
  RowMatrix<double> x(1, 2), y(2, 2), rx(1, 2), ry(4, 2);
  x << 1.0, 0.0;
  y << 0.3, 0.7, 0.6, 0.4;
  rx << 0.2, 0.8;
  ry.setConstant(0.5);
  const auto law = make_law<double>(g, {{"X", x}, {"Y", y}, {"RX", rx}, {"RY", ry}});
  try {
    build_colluder_system(law.observed_table(), *g, colluder_of(*g, "RY"), {}, 0);
    FAIL("expected a positivity error");
  } catch (const IdentificationError& e) {
    CHECK(e.kind() == FindingKind::Positivity);
    CHECK(std::string(e.what()).find("stratum {}") != std::string::npos);
  }

  // Example (f) law with a null Z stratum.
  auto gf = share(fixtures::example_graph('f', 2));
  auto lf = random_law(gf, SimConstraints{}, 1);
  std::map<std::string, RowMatrix<double>> cpts;
  for (const auto& v : lf.layout().variables) cpts[v.name] = lf.cpt(v.name).table;
  cpts["Z"].col(0).setOnes();
  cpts["Z"].col(1).setZero();
  const auto degenerate = make_law<double>(gf, cpts);
  try {
    colluder_mechanism(degenerate.observed_table(), *gf, colluder_of(*gf, "RY"));
    FAIL("expected a positivity error");
  } catch (const IdentificationError& e) {
    CHECK(e.kind() == FindingKind::Positivity);
    CHECK(std::string(e.what()).find("{Z=1}") != std::string::npos);
  }
}

TEST_CASE("colluder mechanism matches the full law (soundness)") {
  struct Case {
    MissingDataGraph graph;
    int draws;
  };
  std::vector<Case> cases;
  cases.push_back({fixtures::colluder_with_dependency(2, 2), 10});
  cases.push_back({fixtures::colluder_with_dependency(3, 3), 10});
  for (char c : std::string("abdef")) cases.push_back({fixtures::example_graph(c, 2), 5});
  cases.push_back({fixtures::example_graph('f', 3), 3});
  cases.push_back({fixtures::example_graph('d', 3), 3});
  std::uint64_t seed = 100;
  for (auto& cs : cases) {
    auto g = share(cs.graph);
    for (int t = 0; t < cs.draws; ++t) {
      const auto law = random_law(g, SimConstraints{}, seed++);
      for (const auto& col : find_colluders(*g)) {
        CAPTURE(describe(*g, col));
        CHECK(mechanism_gap(law, col) <= 1e-8);
      }
    }
  }
}

TEST_CASE("mechanism tables sum to one over R_X and list Z first") {
  auto g = share(fixtures::example_graph('f', 3));
  const auto law = random_law(g, SimConstraints{}, 42);
  const auto col = colluder_of(*g, "RY");
  const auto mech = colluder_mechanism(law.observed_table(), *g, col);
  REQUIRE(mech.arity() == 3);
  CHECK(mech.variables()[0].name == "Z");
  CHECK(mech.variables()[1].name == "X");
  CHECK(mech.variables()[2].name == "RX");
  for (int z = 0; z < 3; ++z)
    for (int x = 0; x < 3; ++x)
      CHECK(std::abs(mech.at(std::vector<int>{z, x, 0}) + mech.at(std::vector<int>{z, x, 1}) - 1.0) <= 1e-8);
  CHECK(colluder_strata(*g, col).size() == 3);
}

TEST_CASE("binary closed form") {
  using R = Rational;
  const oracles::AppendixAParams<R> p{R(3, 10), R(3, 5), R(1, 5), R(7, 20), R(3, 20), R(11, 20), R(2, 5), R(7, 10)};
  const auto law = oracles::appendix_a_law(p);
  const auto& g = law.graph();
  const auto col = colluder_of(g, "RY");
  const auto q = binary_quantities(law.observed_table(), g, col);
  CHECK(q.a == p.a);
  CHECK(q.b == p.b);
  CHECK(q.c == p.c);
  CHECK(q.h == p.h);
  const auto closed = binary_closed_form(q);
  CHECK(closed[0] == 1 - p.d);
  CHECK(closed[1] == 1 - p.f);
  const auto matrix = binary_matrix_form(q);
  CHECK(matrix[0] == closed[0]);
  CHECK(matrix[1] == closed[1]);

  SUBCASE("symmetric d = f") {
    const auto sym = oracles::appendix_a_law<double>({0.3, 0.6, 0.2, 0.45, 0.15, 0.45, 0.4, 0.7});
    const auto qs = binary_quantities(sym.observed_table(), sym.graph(), col);
    const auto out = binary_closed_form(qs);
    CHECK(out[0] == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(0.55).epsilon(1e-12));
  }
  SUBCASE("random quantities agree with the matrix form") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int t = 0; t < 200; ++t) {
      BinaryColluderQuantities<double> qd{u(rng), u(rng), u(rng), u(rng), 0, 0};
      if (std::abs(qd.c - qd.h) < 0.05) continue;
      // r, s from a consistent law.
      const double t0 = u(rng), t1 = u(rng);
      qd.r = qd.a * (qd.b * qd.c * t0 + (1 - qd.b) * qd.h * t1);
      qd.s = qd.a * (qd.b * (1 - qd.c) * t0 + (1 - qd.b) * (1 - qd.h) * t1);
      const auto cf = binary_closed_form(qd);
      const auto mf = binary_matrix_form(qd);
      CHECK(std::abs(cf[0] - mf[0]) <= 1e-12);
      CHECK(std::abs(cf[1] - mf[1]) <= 1e-12);
      CHECK(std::abs(cf[0] - t0) <= 1e-12);
      CHECK(std::abs(cf[1] - t1) <= 1e-12);
    }
  }
  SUBCASE("c = h violates the dependency assumption") {
    BinaryColluderQuantities<double> qd{0.3, 0.4, 0.5, 0.5, 0.1, 0.1};
    CHECK_THROWS_AS(binary_closed_form(qd), IdentificationError);
  }
}

TEST_CASE("closed form and colluder mechanism rebuild the same full law") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int t = 0; t < 20; ++t) {
    oracles::AppendixAParams<double> p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    if (std::abs(p.c - p.h) < 0.05) continue;
    const auto law = oracles::appendix_a_law(p);
    const auto& g = law.graph();
    const auto obs = law.observed_table();
    const auto col = colluder_of(g, "RY");
    auto o = [&](int x, int y, int rx, int ry) { return obs.at(std::vector<int>{x, y, rx, ry}); };
    const int NA = 2;

    // Route 1: the closed form for R_Y's mechanism plus the directly identified pieces.
    const auto q = binary_quantities(obs, g, col);
    const auto cf = binary_closed_form(q);
    const double e = o(0, NA, 1, 0) / ((1 - q.a) * q.b);
    const double gg = o(1, NA, 1, 0) / ((1 - q.a) * (1 - q.b));
    const auto route1 = oracles::appendix_a_law<double>({q.a, q.b, q.c, 1 - cf[0], e, 1 - cf[1], gg, q.h}).full_table();

    // Route 2: p(R_X | X, Y, R_Y = 1) from the colluder system, then the chain rule.
    const auto mech = colluder_mechanism(obs, g, col);
    const double rx1 = 1 - q.a;
    auto route2 = ProbabilityTable<double>::zeros(law.visible_variables());
    for (int x = 0; x < 2; ++x) {
      const double odds = mech.at(std::vector<int>{x, 0}) / mech.at(std::vector<int>{x, 1});
      const double ry1 = o(x, 0, 1, 1) + o(x, 1, 1, 1);
      const double ry1_given = ry1 / (ry1 + o(x, NA, 1, 0));
      for (int y = 0; y < 2; ++y) {
        const double y_given = o(x, y, 1, 1) / ry1;
        const double target = o(x, y, 1, 1) / (rx1 * ry1_given);
        route2.at(std::vector<int>{x, y, 1, 1}) = o(x, y, 1, 1);
        route2.at(std::vector<int>{x, y, 1, 0}) = o(x, NA, 1, 0) * y_given;
        route2.at(std::vector<int>{x, y, 0, 1}) = odds * o(x, y, 1, 1);
        route2.at(std::vector<int>{x, y, 0, 0}) = target - o(x, y, 1, 1) - o(x, NA, 1, 0) * y_given - odds * o(x, y, 1, 1);
      }
    }
    CHECK(max_abs_difference(route1, route2) <= 1e-8);
    CHECK(max_abs_difference(route1, law.full_table()) <= 1e-8);
  }
}

TEST_CASE("odds-ratio factorization is an identity") {
  SUBCASE("binary colluder model") {
    auto g = share(fixtures::colluder_with_dependency(2, 2));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto law = random_law(g, SimConstraints{}, seed);
      CHECK(or_factorization_check(law, {"RX", "RY"}) <= 1e-10);
      CHECK(or_factorization_check(law, {"RY", "RX"}) <= 1e-10);
    }
    const auto exact = random_law(g, SimConstraints{}, 3).cast<Rational>();
    CHECK(or_factorization_check(exact, {"RX", "RY"}) == 0.0);
  }
  SUBCASE("three indicators under every ordering") {
    auto g = share(fixtures::example_graph('d', 2));
    std::vector<std::string> order{"RX", "RY", "RZ"};
    std::sort(order.begin(), order.end());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto law = random_law(g, SimConstraints{}, seed);
      auto perm = order;
      do {
        CHECK(or_factorization_check(law, perm) <= 1e-10);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }
  SUBCASE("single indicator") {
    auto g = share(MissingDataGraph::Builder()
                       .vertex("O", VertexRole::FullyObserved, 3)
                       .vertex("X", VertexRole::TrueVariable)
                       .vertex("RX", VertexRole::ResponseIndicator)
                       .pair("X", "RX")
                       .directed("O", "X")
                       .directed("O", "RX")
                       .build());
    const auto law = random_law(g, SimConstraints{}, 2);
    CHECK(or_factorization_check(law, {"RX"}) <= 1e-15);
  }
  SUBCASE("bad orderings and positivity") {
    auto g = share(fixtures::example_graph('d', 2));
    const auto law = random_law(g, SimConstraints{}, 0);
    CHECK_THROWS_AS(or_factorization_check(law, {"RX", "RY"}), std::invalid_argument);
    CHECK_THROWS_AS(or_factorization_check(law, {"RX", "RX", "RZ"}), std::invalid_argument);
    CHECK_THROWS_AS(or_factorization_check(law, {"RX", "Y", "RZ"}), std::invalid_argument);
    auto g2 = share(fixtures::colluder_with_dependency());
    RowMatrix<double> x(1, 2), y(2, 2), rx(1, 2), ry(4, 2);
    x << 1, 0;
    y << 0.5, 0.5, 0.5, 0.5;
    rx << 0.5, 0.5;
    ry.setConstant(0.5);
    const auto degenerate = make_law<double>(g2, {{"X", x}, {"Y", y}, {"RX", rx}, {"RY", ry}});
    CHECK_THROWS_AS(or_factorization_check(degenerate, {"RX", "RY"}), IdentificationError);
  }
}

TEST_CASE("structural verdicts") {
  for (char c : std::string("abdef")) {
    for (int levels : {2, 3}) {
      const auto v = decide_full_law(fixtures::example_graph(c, levels));
      CAPTURE(c);
      CHECK(v.decision == Decision::Identifiable);
      CHECK(v.rank_condition_pending);
      CHECK(v.reasons.empty());
    }
  }
  const auto c = decide_full_law(fixtures::example_graph('c', 2));
  CHECK(c.decision == Decision::NotIdentifiable);
  REQUIRE(c.reasons.size() == 1);
  CHECK(c.reasons[0].kind == FindingKind::ConditionalIndependence);
  CHECK(c.reasons[0].detail.find("RX -> RY <-> X <-> Y") != std::string::npos);

  const auto q_lt_m = decide_full_law(fixtures::colluder_with_dependency(3, 2));
  CHECK(q_lt_m.decision == Decision::NotIdentifiable);
  REQUIRE(q_lt_m.reasons.size() == 1);
  CHECK(q_lt_m.reasons[0].kind == FindingKind::StructuralRank);
  CHECK_FALSE(q_lt_m.rank_condition_pending);

  const auto cross = decide_full_law(fixtures::cross_censoring(2, 2, true));
  CHECK(cross.decision == Decision::NotIdentifiable);
  CHECK(cross.reasons.at(0).kind == FindingKind::ConditionalIndependence);

  const auto self = MissingDataGraph::Builder()
                        .vertex("X", VertexRole::TrueVariable)
                        .vertex("RX", VertexRole::ResponseIndicator)
                        .pair("X", "RX")
                        .directed("X", "RX")
                        .build();
  const auto vs = decide_full_law(self);
  CHECK(vs.decision == Decision::NotIdentifiable);
  CHECK(vs.reasons.at(0).kind == FindingKind::SelfCensoring);

  const auto no_colluder = MissingDataGraph::Builder()
                               .vertex("X", VertexRole::TrueVariable)
                               .vertex("RX", VertexRole::ResponseIndicator)
                               .pair("X", "RX")
                               .build();
  const auto vn = decide_full_law(no_colluder);
  CHECK(vn.decision == Decision::Identifiable);
  CHECK_FALSE(vn.rank_condition_pending);

  const auto continuous = MissingDataGraph::Builder()
                              .vertex("X", VertexRole::TrueVariable, kContinuous)
                              .vertex("Y", VertexRole::TrueVariable)
                              .vertex("RX", VertexRole::ResponseIndicator)
                              .vertex("RY", VertexRole::ResponseIndicator)
                              .pair("X", "RX")
                              .pair("Y", "RY")
                              .directed("X", "RY")
                              .directed("RX", "RY")
                              .build();
  CHECK_THROWS_AS(decide_full_law(continuous), IdentificationError);
}

TEST_CASE("laws with the same observed law get the same answer") {
  const auto pair = oracles::appendix_c_pair();
  const auto& g = pair.law1.graph();
  const auto col = colluder_of(g, "RY");
  std::vector<std::string> errors;
  for (const auto* law : {&pair.law1, &pair.law2}) {
    try {
      colluder_mechanism(law->observed_table(), g, col);
      FAIL("expected failure");
    } catch (const IdentificationError& e) {
      CHECK(e.kind() == FindingKind::ConditionalIndependence);
      errors.push_back(e.what());
    }
  }
  REQUIRE(errors.size() == 2);
  CHECK(errors[0] == errors[1]);
}
