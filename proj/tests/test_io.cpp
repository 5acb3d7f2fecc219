#include <doctest.h>

#include "colluder/fixtures.hpp"
#include "colluder/io.hpp"
#include "colluder/oracles.hpp"
#include "colluder/simstudy.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace colluder;
using namespace colluder::io;

namespace {

std::shared_ptr<const MissingDataGraph> ccm(int m, int q) {
  return std::make_shared<const MissingDataGraph>(fixtures::colluder_with_dependency(m, q));
}

int error_line(const std::string& text) {
  try {
    parse_graph(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

const char* kGraph = R"({
  "vertices": [
    {"name": "X", "role": "X1", "levels": 3},
    {"name": "Y", "role": "X1", "levels": 2},
    {"name": "RX", "role": "R"},
    {"name": "RY", "role": "R"}
  ],
  "edges": [
    {"from": "X", "to": "Y"},
    {"from": "X", "to": "RY"},
    {"from": "RX", "to": "RY"}
  ],
  "pairs": [
    {"true": "X", "indicator": "RX"},
    {"true": "Y", "indicator": "RY"}
  ]
})";

bool same_graph(const MissingDataGraph& a, const MissingDataGraph& b) {
  if (a.size() != b.size() || a.pairs().size() != b.pairs().size()) return false;
  for (int v = 0; v < a.size(); ++v) {
    if (a.name(v) != b.name(v) || a.vertex(v).role != b.vertex(v).role || a.vertex(v).levels != b.vertex(v).levels)
      return false;
  }
  return a.edges() == b.edges();
}

}  // namespace

TEST_CASE("graph JSON parses and round-trips") {
  const auto g = parse_graph(kGraph);
  CHECK(g.index("X*") >= 0);
  CHECK(g.vertex(g.index("X*")).levels == 4);
  CHECK(g.has_directed(g.index("X"), g.index("Y")));
  CHECK(g.has_directed(g.index("RX"), g.index("X*")));
  const auto again = parse_graph(graph_to_json(g).dump(2));
  CHECK(same_graph(g, again));

  for (char c : std::string("abcdef")) {
    const auto fig = fixtures::example_graph(c);
    CHECK(same_graph(fig, parse_graph(graph_to_json(fig).dump())));
  }
  const auto cc = fixtures::cross_censoring(2, 3);
  CHECK(same_graph(cc, parse_graph(graph_to_json(cc).dump())));
}

TEST_CASE("explicit proxy names survive a round trip") {
  const auto g = parse_graph(R"({"vertices": [{"name": "X", "role": "X1"}, {"name": "RX", "role": "R"}],
    "pairs": [{"true": "X", "indicator": "RX", "proxy": "Xobs"}]})");
  CHECK(g.find("Xobs"));
  const auto j = graph_to_json(g);
  CHECK(j["pairs"][0]["proxy"] == "Xobs");
  CHECK(same_graph(g, parse_graph(j.dump())));
}

TEST_CASE("graph errors carry the line") {
  CHECK(error_line("{\n  \"vertices\": [],\n  \"colour\": 1\n}") == 3);
  CHECK(error_line("{\n \"vertices\": [\n  {\"name\": \"X\", \"role\": \"X1\", \"levels\": 1}\n ]\n}") == 3);
  CHECK(error_line("{\n \"vertices\": [\n  {\"name\": \"X\", \"role\": \"Q\"}\n ]\n}") == 3);
  CHECK(error_line("{\n \"vertices\": [{\"name\": \"X\", \"role\": \"O\"}],\n \"edges\": [\n"
                   "  {\"from\": \"X\", \"to\": \"Z\"}\n ]\n}") == 4);
  // malformed JSON
  CHECK(error_line("{\n \"vertices\": [\n\n  {\"name\": }\n ]\n}") == 4);
  CHECK(error_line("{\n \"vertices\": [ {\"name\": \"X\", \"role\": \"O\", \"levels\": \"many\"} ]}") == 2);
  CHECK_THROWS_AS(parse_graph("{\"vertices\": [{\"name\": \"X\", \"role\": \"X1\"}]}"), ParseError);  // unpaired
  try {
    parse_graph("{\n\"vertices\": [],\n\"bogus\": true}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()) == "line 3: unknown key 'bogus'");
  }
}

TEST_CASE("law JSON round-trips in doubles and rationals") {
  const auto law = random_law(ccm(3, 2), SimConstraints{}, 4);
  const auto j = law_to_json(law);
  const auto again = parse_law<double>(j.dump(1));
  for (std::size_t i = 0; i < law.cpts().size(); ++i) {
    CHECK(again.cpts()[i].table.isApprox(law.cpts()[i].table, 1e-15));
  }

  const auto exact = oracles::appendix_c_pair().law1;
  const auto back = parse_law<Rational>(law_to_json(exact).dump());
  const auto a = exact.observed_table(), b = back.observed_table();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("law JSON accepts fractions and a graph path") {
  const auto dir = std::filesystem::temp_directory_path() / "colluder_io_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "g.json") << graph_to_json(fixtures::colluder_only(2, 2)).dump();
    std::ofstream(dir / "law.json") << R"({
      "graph": "g.json",
      "cpts": {
        "X": {"parents": [], "table": ["1/3", "2/3"]},
        "Y": {"parents": [], "table": [0.5, 0.5]},
        "RX": {"parents": [], "table": ["0.2", "0.8"]},
        "RY": {"parents": ["X", "RX"], "table": [[["1/2", "1/2"], ["1/4", "3/4"]], [["1/5", "4/5"], ["1/10", "9/10"]]]}
      }
    })";
  }
  const auto law = load_law<Rational>(dir / "law.json");
  CHECK(law.cpt("X").table(0, 1) == Rational(2, 3));
  CHECK(law.cpt("RY").table(3, 1) == Rational(9, 10));
  CHECK(law.cpt("Y").table(0, 0) == Rational(1, 2));

  const auto obs = load_observed<Rational>(dir / "law.json");
  CHECK(obs.observed.variables() == observed_columns(*obs.graph));
  {
    json j{{"graph", "g.json"}, {"observed", table_to_json(obs.observed)}};
    std::ofstream(dir / "obs.json") << j.dump(2);
  }
  const auto obs2 = load_observed<Rational>(dir / "obs.json");
  for (std::size_t i = 0; i < obs.observed.size(); ++i) CHECK(obs.observed[i] == obs2.observed[i]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("law errors point at the CPT") {
  const std::string text =
      "{\"graph\": " + graph_to_json(fixtures::colluder_only(2, 2)).dump() +
      ",\n\"cpts\": {\n"
      "\"X\": {\"parents\": [], \"table\": [\"0.5\", \"0.5\"]},\n"
      "\"Y\": {\"parents\": [], \"table\": [\"0.5\", \"0.6\"]},\n"
      "\"RX\": {\"parents\": [], \"table\": [\"0.2\", \"0.8\"]},\n"
      "\"RY\": {\"parents\": [\"X\", \"RX\"], \"table\": [[[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]]]}\n"
      "}}";
  try {
    parse_law<double>(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  std::string wrong = text;
  wrong.replace(wrong.find("[\"X\", \"RX\"]"), 11, "[\"RX\", \"X\"]");
  try {
    parse_law<double>(wrong);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
    CHECK(std::string(e.what()).find("must be [X, RX]") != std::string::npos);
  }
}

TEST_CASE("CSV reading") {
  const auto g = ccm(3, 2);
  std::istringstream in("X,Y,RX,RY\n0,1,1,1\nNA,1,0,1\n2,NA,1,0\n\n");
  const auto d = read_csv(in, g);
  CHECK(d.n() == 3);

  SUBCASE("indicators derived, proxy names, one-based and NA token") {
    std::istringstream in2("Y*,X\n2,1\n2,.\n.,3\n");
    const auto d2 = read_csv(in2, g, {".", true});
    CHECK(d2.n() == 3);
    std::vector<std::vector<int>> expected{{0, 1, 1, 1}, {3, 1, 0, 1}, {2, 2, 1, 0}};
    const auto ref = Dataset::from_records(g, expected);
    CHECK(ref.patterns() == d2.patterns());
    CHECK(ref.patterns() == d.patterns());
  }
  SUBCASE("inconsistent record line") {
    std::istringstream bad("X,Y,RX,RY\n0,1,1,1\n0,1,1,1\nNA,1,1,1\n");
    try {
      read_csv(bad, g);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
      CHECK(std::string(e.what()).rfind("inconsistent record at line 4", 0) == 0);
    }
  }
  SUBCASE("bad input") {
    std::istringstream unknown("X,Y,Z\n");
    CHECK_THROWS_AS(read_csv(unknown, g), ParseError);
    std::istringstream dup("X,X*,Y\n");
    CHECK_THROWS_AS(read_csv(dup, g), ParseError);
    std::istringstream range("X,Y\n3,0\n");
    try {
      read_csv(range, g);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    std::istringstream fields("X,Y\n1\n");
    CHECK_THROWS_AS(read_csv(fields, g), ParseError);
  }
}

TEST_CASE("CSV round trip through sampled records") {
  const auto law = random_law(ccm(2, 3), SimConstraints{}, 9);
  const auto records = sample_records(law, 500, 3);
  for (bool one_based : {false, true}) {
    std::stringstream s;
    CsvOptions opts{"-", one_based};
    write_csv(s, *law.graph_ptr(), records, opts);
    const auto d = read_csv(s, law.graph_ptr(), opts);
    const auto ref = Dataset::from_records(law.graph_ptr(), records);
    CHECK(d.patterns() == ref.patterns());
    CHECK(d.counts() == ref.counts());
  }
}

TEST_CASE("verdict JSON round-trips") {
  for (char c : std::string("abcdef")) {
    const auto g = fixtures::example_graph(c);
    const auto v = decide_full_law(g);
    const auto j = verdict_to_json(g, v);
    const auto back = verdict_from_json(json::parse(j.dump()), g);
    CHECK(back.decision == v.decision);
    CHECK(back.rank_condition_pending == v.rank_condition_pending);
    REQUIRE(back.reasons.size() == v.reasons.size());
    for (std::size_t i = 0; i < v.reasons.size(); ++i) {
      CHECK(back.reasons[i].kind == v.reasons[i].kind);
      CHECK(back.reasons[i].colluder == v.reasons[i].colluder);
      CHECK(back.reasons[i].detail == v.reasons[i].detail);
    }
  }
}

TEST_CASE("fit JSON round-trips and formats") {
  const auto law = random_law(ccm(2, 2), SimConstraints{}, 2);
  const auto data = sample_dataset(law, 2000, 5);
  FitConfig config;
  config.restarts = 2;
  const auto r = fit(data, config);
  const auto back = fit_from_json(json::parse(fit_to_json(r).dump()));
  CHECK(back.log_likelihood == r.log_likelihood);
  CHECK(back.theta == r.theta);
  CHECK(back.probabilities == r.probabilities);
  CHECK(back.status == r.status);
  CHECK(back.restarts.size() == r.restarts.size());
  REQUIRE(back.estimates.size() == r.estimates.size());
  for (std::size_t i = 0; i < r.estimates.size(); ++i) {
    CHECK(back.estimates[i].label == r.estimates[i].label);
    CHECK(back.estimates[i].estimate == r.estimates[i].estimate);
    CHECK(back.estimates[i].lower == r.estimates[i].lower);
  }
  const auto text = format_fit(r);
  CHECK(text.find("p(RY=1 | X=1, RX=1)") != std::string::npos);
  CHECK(text.find("converged") != std::string::npos);
}

TEST_CASE("scenario and report JSON") {
  const auto s = parse_scenario(R"({"m": 2, "q": 2, "sample_sizes": [100, 200], "replications": 3, "seed": 11,
    "constraints": {"dependency_gap": 0.3}})");
  CHECK(s.sample_sizes == std::vector<long>{100, 200});
  CHECK(s.constraints.dependency_gap == 0.3);
  CHECK(s.constraints.min_probability == SimScenario::default_constraints(2).min_probability);
  CHECK(s.constraints.fixed_response.at("RX") == 0.8);
  const auto again = parse_scenario(scenario_to_json(s).dump());
  CHECK(again.seed == 11);
  CHECK(again.constraints.dependency_gap == 0.3);

  CHECK_THROWS_AS(parse_scenario(R"({"m": 2, "q": 2, "replications": 0})"), ParseError);
  try {
    parse_scenario("{\"m\": 2,\n \"q\": 2,\n \"reps\": 5}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  const auto report = run_scenario(s);
  const auto back = report_from_json(json::parse(report_to_json(report).dump()));
  CHECK(back.failed == report.failed);
  REQUIRE(back.sizes.size() == 2);
  CHECK(back.sizes[1].colluder.mean_rmse == report.sizes[1].colluder.mean_rmse);
  CHECK(back.sizes[0].parameters.size() == report.sizes[0].parameters.size());
  CHECK(format_report(back) == format_report(report));
}
