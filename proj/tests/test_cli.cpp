#include <doctest.h>

#include "cli.hpp"
#include "colluder/fixtures.hpp"
#include "colluder/io.hpp"
#include "colluder/simstudy.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace colluder;
namespace fs = std::filesystem;

namespace {

const fs::path kData = COLLUDER_DATA_DIR;
const fs::path kScenarios = COLLUDER_SCENARIO_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "colluder-lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "colluder_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("check-id exit codes and verdict JSON") {
  const auto c = run({"check-id", (kData / "example_c.json").string()});
  CHECK(c.code == 2);
  const auto g = io::load_graph(kData / "example_c.json");
  const auto v = io::verdict_from_json(io::json::parse(c.out), g);
  CHECK(v.decision == Decision::NotIdentifiable);
  REQUIRE_FALSE(v.reasons.empty());
  CHECK(v.reasons[0].kind == FindingKind::ConditionalIndependence);

  const auto d = run({"check-id", (kData / "example_d.json").string()});
  CHECK(d.code == 0);
  CHECK(io::json::parse(d.out)["decision"] == "Identifiable");
  CHECK(io::json::parse(d.out)["rank_condition_pending"] == true);

  const auto with_law = run({"check-id", (kData / "ccm33.json").string(), "--law", (kData / "survey_law.json").string()});
  CHECK(with_law.code == 0);
  CHECK(io::json::parse(with_law.out)["rank_condition_pending"] == false);

  const auto dir = scratch();
  write(dir / "bad.json", "{\n  \"vertices\": [\n    {\"name\": \"X\",, }\n  ]\n}\n");
  const auto bad = run({"check-id", (dir / "bad.json").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("line 3") != std::string::npos);
  CHECK(run({"check-id", (dir / "missing.json").string()}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("rank-deficient law is a negative verdict") {
  const auto dir = scratch();
  const auto law = random_law(std::make_shared<const MissingDataGraph>(fixtures::colluder_with_dependency(3, 2)),
                              SimConstraints{}, 1);
  write(dir / "law32.json", io::law_to_json(law).dump());
  write(dir / "g32.json", io::graph_to_json(law.graph()).dump());
  const auto structural = run({"check-id", (dir / "g32.json").string()});
  CHECK(structural.code == 2);
  const auto solve = run({"solve-colluder", (dir / "law32.json").string()});
  CHECK(solve.code == 2);
  CHECK(io::json::parse(solve.out)["mechanisms"][0]["error"]["kind"] == "rank_deficient");
}

TEST_CASE("solve-colluder matches the library") {
  const auto r = run({"solve-colluder", (kData / "survey_law.json").string(), "--exact"});
  REQUIRE(r.code == 0);
  const auto j = io::json::parse(r.out);
  const auto law = io::load_law<Rational>(kData / "survey_law.json");
  const auto& g = law.graph();
  const auto expected = colluder_mechanism(law.observed_table(), g, find_colluders(g).front());
  const auto doc = io::parse_json(j["mechanisms"][0]["table"].dump());
  const auto got = io::table_from_json<Rational>(doc);
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expected[i]);
  // p(RX = 0 | X = 0, RY = 1) from the CPTs by Bayes
  const Rational a = Rational(147, 1000) * Rational(1, 2);
  const Rational b = Rational(853, 1000) * Rational(901, 1000);
  CHECK(got[0] == a / (a + b));
}

TEST_CASE("sample and fit a survey look-alike") {
  const auto dir = scratch();
  const auto csv = (dir / "survey.csv").string();
  const auto s = run({"sample", (kData / "survey_law.json").string(), "-n", "11708", "--seed", "5", "--one-based",
                      "-o", csv});
  REQUIRE(s.code == 0);
  CHECK(s.err.empty());
  const auto json_path = (dir / "fit.json").string();
  const auto f = run({"fit", (kData / "ccm33.json").string(), csv, "--one-based", "--seed", "2", "--json", json_path});
  REQUIRE(f.code == 0);
  const auto back = io::fit_from_json(io::json::parse(slurp(json_path)));
  CHECK(back.n == 11708);
  CHECK(back.estimates.size() == 15);
  CHECK(f.out.find("p(RY=1 | X=1, RX=0)") != std::string::npos);
  CHECK(f.out.find("p(Y=3 | X=3)") != std::string::npos);
  int rows = 0;
  std::istringstream lines(f.out);
  for (std::string line; std::getline(lines, line);) rows += line.rfind("p(", 0) == 0;
  CHECK(rows == 15);

  const auto again = run({"fit", (kData / "ccm33.json").string(), csv, "--one-based", "--seed", "2"});
  CHECK(again.out == f.out);
  const auto unseeded = run({"fit", (kData / "ccm33.json").string(), csv, "--one-based", "--restarts", "1"});
  CHECK(unseeded.err.rfind("seed: ", 0) == 0);
}

TEST_CASE("fit on complete data returns empirical frequencies") {
  const auto dir = scratch();
  write(dir / "complete.csv", "X,Y\n0,0\n0,1\n1,1\n1,1\n0,1\n");
  const auto r = run({"fit", (kData / "ccm22.json").string(), (dir / "complete.csv").string(), "--seed", "1",
                      "--json", (dir / "c.json").string()});
  CHECK(r.code == 0);
  const auto fit = io::fit_from_json(io::json::parse(slurp(dir / "c.json")));
  for (const auto& e : fit.estimates) {
    if (e.label == "p(X=1)") CHECK(e.estimate == doctest::Approx(0.4).epsilon(1e-6));
    if (e.label == "p(Y=1 | X=0)") CHECK(e.estimate == doctest::Approx(2.0 / 3).epsilon(1e-6));
  }
}

TEST_CASE("fit input errors") {
  const auto dir = scratch();
  write(dir / "bad.csv", "X,Y,RX,RY\n0,1,1,1\n1,NA,1,0\n1,1,0,1\n");
  const auto r = run({"fit", (kData / "ccm22.json").string(), (dir / "bad.csv").string(), "--seed", "1"});
  CHECK(r.code == 1);
  CHECK(r.err.find("inconsistent record at line 4") != std::string::npos);
  write(dir / "empty.csv", "X,Y\n");
  CHECK(run({"fit", (kData / "ccm22.json").string(), (dir / "empty.csv").string(), "--seed", "1"}).code == 1);
  write(dir / "cols.csv", "X,W\n0,1\n");
  CHECK(run({"fit", (kData / "ccm22.json").string(), (dir / "cols.csv").string(), "--seed", "1"}).code == 1);
  write(dir / "na.csv", "X,Y\n0,?\n1,1\n");
  CHECK(run({"fit", (kData / "ccm22.json").string(), (dir / "na.csv").string(), "--seed", "1"}).code == 1);
  CHECK(run({"fit", (kData / "ccm22.json").string(), (dir / "na.csv").string(), "--seed", "1", "--na-token", "?"}).code == 0);
  write(dir / "c.csv", "X,Y\n0,1\n1,0\n");
  const auto c = run({"fit", (kData / "example_c.json").string(), (dir / "c.csv").string(), "--seed", "1"});
  CHECK(c.code != 0);
}

TEST_CASE("simulate writes deterministic reports") {
  const auto dir = scratch();
  write(dir / "small.json", R"({"m": 2, "q": 2, "sample_sizes": [500, 5000], "replications": 6, "seed": 4})");
  const auto a = run({"simulate", (dir / "small.json").string(), "--json", (dir / "a.json").string(), "--text",
                      (dir / "a.txt").string()});
  REQUIRE(a.code == 0);
  const auto b = run({"simulate", (dir / "small.json").string(), "--json", (dir / "b.json").string(), "--text",
                      (dir / "b.txt").string(), "--threads", "2"});
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(slurp(dir / "a.txt") == slurp(dir / "b.txt"));
  CHECK(a.out == slurp(dir / "a.txt"));
  const auto report = io::report_from_json(io::json::parse(slurp(dir / "a.json")));
  CHECK(io::report_to_json(report).dump() == io::json::parse(slurp(dir / "a.json")).dump());

  write(dir / "zero.json", R"({"m": 2, "q": 2, "replications": 0})");
  CHECK(run({"simulate", (dir / "zero.json").string()}).code == 1);
  write(dir / "hard.json", R"({"m": 2, "q": 2, "sample_sizes": [500], "replications": 4, "max_iterations": 2})");
  const auto hard = run({"simulate", (dir / "hard.json").string(), "--seed", "1"});
  CHECK(hard.code == 2);
  CHECK(hard.out.find("FAILED") != std::string::npos);
  write(dir / "infeasible.json",
        R"({"m": 2, "q": 2, "replications": 2, "constraints": {"dependency_gap": 1.5}})");
  CHECK(run({"simulate", (dir / "infeasible.json").string()}).code == 1);
}

TEST_CASE("bundled scenario produces both parameter groups") {
  const auto r = run({"simulate", (kScenarios / "ccm22.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("p(RY=1 | X, RX)") != std::string::npos);
  CHECK(r.out.find("p(X), p(Y | X), p(RX=1)") != std::string::npos);
  CHECK(r.out.find("200 replications") != std::string::npos);
  CHECK(r.err.empty());
}

TEST_CASE("oracle subcommand verifies the cross-censoring pair") {
  const auto r = run({"oracle", "appendix-c", "--verify"});
  CHECK(r.code == 0);
  for (const char* f : {"69/200", "1/200", "1/20", "257/1425", "1611/10450", "VERIFIED"}) {
    CHECK(r.out.find(f) != std::string::npos);
  }
  CHECK(run({"oracle", "appendix-z"}).code == 1);
}
