#include <doctest.h>

#include "colluder/fixtures.hpp"
#include "colluder/graph.hpp"
#include "support/path_oracle.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

using namespace colluder;

namespace {

oracle::MixedGraph to_oracle(const MissingDataGraph& g) {
  oracle::MixedGraph out;
  out.n = g.size();
  for (const auto& e : g.edges()) {
    if (e.type == EdgeType::Directed) {
      out.directed.emplace_back(e.from, e.to);
    } else {
      out.bidirected.emplace_back(e.from, e.to);
    }
  }
  return out;
}

// Random graph over fully observed vertices; vertex order is a topological order.
MissingDataGraph random_mixed_graph(std::mt19937_64& rng, int n, double p_dir, double p_bi) {
  std::uniform_real_distribution<double> u(0, 1);
  MissingDataGraph::Builder b;
  for (int i = 0; i < n; ++i) b.vertex("V" + std::to_string(i), VertexRole::FullyObserved);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (u(rng) < p_dir) b.directed("V" + std::to_string(i), "V" + std::to_string(j));
      if (u(rng) < p_bi) b.bidirected("V" + std::to_string(i), "V" + std::to_string(j));
    }
  return b.build();
}

}  // namespace

TEST_CASE("example graphs are legal missing-data graphs") {
  CHECK(validate_graph(fixtures::colluder_only()).valid());
  CHECK(validate_graph(fixtures::colluder_with_dependency()).valid());
  for (char c : std::string("abcdef")) {
    CAPTURE(c);
    CHECK(validate_graph(fixtures::example_graph(c, 3)).valid());
  }
}

TEST_CASE("validate_graph reports structural violations") {
  SUBCASE("indicator parenting its true variable") {
    auto g = MissingDataGraph::Builder()
                 .vertex("X", VertexRole::TrueVariable)
                 .vertex("RX", VertexRole::ResponseIndicator)
                 .pair("X", "RX")
                 .directed("RX", "X")
                 .build();
    const auto report = validate_graph(g);
    CHECK(report.contains(ViolationKind::IndicatorParentsSubstantive));
  }
  SUBCASE("explicit proxy with an extra parent") {
    auto g = MissingDataGraph::Builder()
                 .vertex("X", VertexRole::TrueVariable)
                 .vertex("Y", VertexRole::TrueVariable)
                 .vertex("RX", VertexRole::ResponseIndicator)
                 .vertex("RY", VertexRole::ResponseIndicator)
                 .vertex("Xp", VertexRole::Proxy, 3)
                 .pair("X", "RX", "Xp")
                 .pair("Y", "RY")
                 .directed("X", "Xp")
                 .directed("RX", "Xp")
                 .directed("Y", "Xp")
                 .build();
    const auto report = validate_graph(g);
    REQUIRE_FALSE(report.valid());
    CHECK(report.contains(ViolationKind::ProxyParentSet));
  }
  SUBCASE("cycle, proxy children, proxy levels, unpaired vertices") {
    auto g = MissingDataGraph::Builder()
                 .vertex("A", VertexRole::FullyObserved)
                 .vertex("B", VertexRole::FullyObserved)
                 .vertex("X", VertexRole::TrueVariable, 3)
                 .vertex("RX", VertexRole::ResponseIndicator)
                 .vertex("Xp", VertexRole::Proxy, 3)
                 .vertex("W", VertexRole::TrueVariable)
                 .vertex("RQ", VertexRole::ResponseIndicator, 3)
                 .pair("X", "RX", "Xp")
                 .directed("A", "B")
                 .directed("B", "A")
                 .directed("X", "Xp")
                 .directed("RX", "Xp")
                 .directed("Xp", "A")
                 .build();
    const auto report = validate_graph(g);
    CHECK(report.contains(ViolationKind::Cycle));
    CHECK(report.contains(ViolationKind::ProxyHasChildren));
    CHECK(report.contains(ViolationKind::ProxyLevels));
    CHECK(report.contains(ViolationKind::UnpairedTrueVariable));
    CHECK(report.contains(ViolationKind::UnpairedIndicator));
    CHECK(report.contains(ViolationKind::IndicatorNotBinary));
  }
  SUBCASE("name errors are rejected at build time") {
    CHECK_THROWS_AS(MissingDataGraph::Builder().vertex("A", VertexRole::FullyObserved).directed("A", "B").build(),
                    GraphError);
    CHECK_THROWS_AS(MissingDataGraph::Builder()
                        .vertex("A", VertexRole::FullyObserved)
                        .vertex("A", VertexRole::FullyObserved)
                        .build(),
                    GraphError);
  }
}

TEST_CASE("generated proxies carry the NA level and deterministic edges") {
  const auto g = fixtures::colluder_with_dependency(3, 2);
  const int xp = g.index("X*");
  CHECK(g.vertex(xp).role == VertexRole::Proxy);
  CHECK(g.vertex(xp).levels == 4);
  CHECK(g.has_directed(g.index("X"), xp));
  CHECK(g.has_directed(g.index("RX"), xp));
  CHECK(*g.proxy_of(g.index("Y")) == g.index("Y*"));
}

TEST_CASE("m-separation on the example graphs") {
  const auto fig1b = fixtures::colluder_with_dependency();
  CHECK(m_separated(fig1b, {"RX"}, {"Y"}, {"X", "RY"}));
  // Conditioning on R_Y alone leaves R_X -> R_Y <- X -> Y open.
  CHECK_FALSE(m_separated(fig1b, {"RX"}, {"Y"}, {"RY"}));

  const auto fig2c = fixtures::example_graph('c');
  CHECK_FALSE(m_separated(fig2c, {"RX"}, {"Y"}, {"X", "RY"}));
  {
    const std::vector<int> a{fig2c.index("RX")}, b{fig2c.index("Y")}, z{fig2c.index("X"), fig2c.index("RY")};
    const auto walk = m_connecting_walk(fig2c, a, b, z);
    REQUIRE(walk.has_value());
    CHECK(to_string(fig2c, *walk) == "RX -> RY <-> X <-> Y");
  }
  CHECK(m_separated(fixtures::example_graph('a'), {"RX"}, {"Y"}, {"X", "RY"}));
  CHECK(m_separated(fixtures::example_graph('b'), {"RX"}, {"Y"}, {"X", "RY"}));

  const auto disconnected = MissingDataGraph::Builder()
                                .vertex("A", VertexRole::FullyObserved)
                                .vertex("B", VertexRole::FullyObserved)
                                .build();
  CHECK(m_separated(disconnected, {"A"}, {"B"}, {}));

  CHECK_THROWS_AS(m_separated(fig1b, {"RX"}, {"Q"}, {}), GraphError);
  CHECK_THROWS_AS(m_separated(fig1b, {"RX"}, {"Y"}, {"RX"}), std::invalid_argument);
}

TEST_CASE("m-separation agrees with brute-force path enumeration") {
  std::mt19937_64 rng(20240611);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);  // up to 7 vertices
    const bool with_bidirected = trial % 4 == 3;
    const auto g = random_mixed_graph(rng, n, 0.4, with_bidirected ? 0.25 : 0.0);
    const auto og = to_oracle(g);
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<int> a, b, z;
      for (int v = 0; v < n; ++v) {
        switch (rng() % 4) {
          case 0: a.push_back(v); break;
          case 1: b.push_back(v); break;
          case 2: z.push_back(v); break;
          default: break;
        }
      }
      if (a.empty() || b.empty()) continue;
      const bool fast = m_separated(g, a, b, z);
      CAPTURE(trial);
      CHECK(fast == oracle::separated_by_paths(og, a, b, z));
      CHECK(fast == m_separated(g, b, a, z));
      if (!fast) {
        // The reported walk must start in A, end in B and only use real edges.
        const auto walk = *m_connecting_walk(g, a, b, z);
        CHECK(std::count(a.begin(), a.end(), walk.vertices.front()) == 1);
        CHECK(std::count(b.begin(), b.end(), walk.vertices.back()) == 1);
        for (std::size_t k = 0; k + 1 < walk.vertices.size(); ++k) {
          const int u = walk.vertices[k], w = walk.vertices[k + 1];
          switch (walk.links[k]) {
            case WalkLink::Forward: CHECK(g.has_directed(u, w)); break;
            case WalkLink::Backward: CHECK(g.has_directed(w, u)); break;
            case WalkLink::Bidirected: CHECK(g.has_bidirected(u, w)); break;
          }
        }
      }
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("colluder detection") {
  const auto fig1a = fixtures::colluder_only();
  const auto found = find_colluders(fig1a);
  REQUIRE(found.size() == 1);
  CHECK(describe(fig1a, found[0]) == "{X, RX} of RY");

  const auto fig2d = fixtures::example_graph('d');
  const auto seq = find_colluders(fig2d);
  REQUIRE(seq.size() == 2);
  std::set<std::string> names;
  for (const auto& c : seq) names.insert(describe(fig2d, c));
  CHECK(names == std::set<std::string>{"{X, RX} of RY", "{Y, RY} of RZ"});

  CHECK(find_colluders(fixtures::example_graph('e')).size() == 2);
  CHECK(find_colluders(fixtures::example_graph('f')).size() == 2);

  const auto mcar = MissingDataGraph::Builder()
                        .vertex("X", VertexRole::TrueVariable)
                        .vertex("Y", VertexRole::TrueVariable)
                        .vertex("RX", VertexRole::ResponseIndicator)
                        .vertex("RY", VertexRole::ResponseIndicator)
                        .pair("X", "RX")
                        .pair("Y", "RY")
                        .directed("X", "Y")
                        .build();
  CHECK(find_colluders(mcar).empty());
}

TEST_CASE("self-censoring detection") {
  for (char c : std::string("abcdef")) CHECK(find_self_censoring(fixtures::example_graph(c)).empty());

  auto base = [] {
    MissingDataGraph::Builder b;
    b.vertex("X", VertexRole::TrueVariable)
        .vertex("Y", VertexRole::TrueVariable)
        .vertex("RX", VertexRole::ResponseIndicator)
        .vertex("RY", VertexRole::ResponseIndicator)
        .pair("X", "RX")
        .pair("Y", "RY");
    return b;
  };
  const auto self = base().directed("Y", "RY").build();
  const auto sc = find_self_censoring(self);
  REQUIRE(sc.size() == 1);
  CHECK(sc[0] == Edge{self.index("Y"), self.index("RY"), EdgeType::Directed});

  CHECK(find_self_censoring(base().directed("Y", "RX").build()).empty());
}

TEST_CASE("colluder and self-censoring sets are equivariant under relabeling") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 3);
    // Edges among true variables (index order), true -> indicator, indicator -> indicator.
    std::vector<std::tuple<int, int>> edges;  // in "role space": 0..k-1 true, k..2k-1 indicators
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        if (i < j && u(rng) < 0.4) edges.emplace_back(i, j);
        if (u(rng) < 0.35) edges.emplace_back(i, k + j);
        if (i < j && u(rng) < 0.35) edges.emplace_back(k + i, k + j);
      }
    std::vector<int> perm(2 * k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    auto build = [&](bool relabeled, const std::vector<int>& order) {
      auto label = [relabeled, &perm, k](int v) {
        const int id = relabeled ? perm[v] : v;
        return std::string(v < k ? "T" : "R") + std::to_string(id);
      };
      MissingDataGraph::Builder b;
      for (int v : order) b.vertex(label(v), v < k ? VertexRole::TrueVariable : VertexRole::ResponseIndicator);
      for (int i = 0; i < k; ++i) b.pair(label(i), label(k + i));
      for (auto [f, t] : edges) b.directed(label(f), label(t));
      return std::make_pair(b.build(), label);
    };
    std::vector<int> identity(2 * k), shuffled(2 * k);
    std::iota(identity.begin(), identity.end(), 0);
    std::iota(shuffled.begin(), shuffled.end(), 0);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto [g1, label1] = build(false, identity);
    auto [g2, label2] = build(true, shuffled);

    auto summary = [](const MissingDataGraph& g, auto&& canon) {
      std::set<std::string> out;
      for (const auto& c : find_colluders(g))
        out.insert("C:" + canon(g.name(c.true_variable)) + "," + canon(g.name(c.response_of_true)) + "," +
                   canon(g.name(c.target_indicator)));
      for (const auto& e : find_self_censoring(g)) out.insert("S:" + canon(g.name(e.from)) + "," + canon(g.name(e.to)));
      return out;
    };
    // Map relabeled names back to role-space ids.
    std::map<std::string, std::string> back;
    for (int v = 0; v < 2 * k; ++v) back[label2(v)] = label1(v);
    const auto s1 = summary(g1, [](const std::string& s) { return s; });
    const auto s2 = summary(g2, [&back](const std::string& s) { return back.at(s); });
    std::string d1, d2;
    for (auto& x : s1) d1 += x + " ";
    for (auto& x : s2) d2 += x + " ";
    CHECK(d1 == d2);
  }
}
