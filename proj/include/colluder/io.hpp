#pragma once

#include "colluder/estimate.hpp"
#include "colluder/graph.hpp"
#include "colluder/identify.hpp"
#include "colluder/law.hpp"
#include "colluder/simstudy.hpp"
#include "colluder/table.hpp"

#include <json.hpp>

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace colluder::io {

using json = nlohmann::ordered_json;

/// Input error; `line` is 1-based, 0 when unknown. what() is "line N: ..."
/// unless `prefix` is false.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message, bool prefix = true);
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  std::string message_;
};

/// Parsed JSON with the source line of every value, keyed by JSON pointer.
struct Document {
  json value;
  std::map<std::string, int> lines;

  /// Line of `pointer` or of its closest recorded ancestor.
  int line(const std::string& pointer) const;
};

Document parse_json(std::string_view text);
std::string read_file(const std::filesystem::path& path);

// Graph files: {"vertices": [...], "edges": [...], "pairs": [...]}.
MissingDataGraph graph_from_json(const Document& doc, const std::string& at = "");
MissingDataGraph parse_graph(std::string_view text);
MissingDataGraph load_graph(const std::filesystem::path& path);
json graph_to_json(const MissingDataGraph& g);

// Law files: {"graph": <object or path>, "cpts": {name: {"parents", "table"}}}.
// Relative graph paths resolve against `base`.
template <typename Scalar>
BasicLaw<Scalar> law_from_json(const Document& doc, const std::filesystem::path& base = {});
template <typename Scalar>
BasicLaw<Scalar> parse_law(std::string_view text, const std::filesystem::path& base = {});
template <typename Scalar>
BasicLaw<Scalar> load_law(const std::filesystem::path& path);
template <typename Scalar>
json law_to_json(const BasicLaw<Scalar>& law, bool embed_graph = true);

/// {"variables": [{"name", "levels"}], "values": [decimal strings]}.
template <typename Scalar>
json table_to_json(const ProbabilityTable<Scalar>& t);
template <typename Scalar>
ProbabilityTable<Scalar> table_from_json(const Document& doc, const std::string& at = "");

/// A law file, or an observed-law file {"graph": ..., "observed": <table>}.
/// Returns the observed table over observed_columns(graph).
template <typename Scalar>
struct ObservedInput {
  std::shared_ptr<const MissingDataGraph> graph;
  ProbabilityTable<Scalar> observed;
};
template <typename Scalar>
ObservedInput<Scalar> load_observed(const std::filesystem::path& path);

// Dataset CSV.
struct CsvOptions {
  std::string na_token = "NA";
  bool one_based = false;
};

/// Header names are vertex names; a true variable column may be named by
/// its true or proxy name. Indicator columns are optional and derived from
/// NA when absent. One-based coding applies to non-indicator columns.
Dataset read_csv(std::istream& in, std::shared_ptr<const MissingDataGraph> graph, const CsvOptions& options = {});
Dataset load_csv(const std::filesystem::path& path, std::shared_ptr<const MissingDataGraph> graph,
                 const CsvOptions& options = {});
/// Columns named by true names, indicators included.
void write_csv(std::ostream& out, const MissingDataGraph& g, const std::vector<std::vector<int>>& records,
               const CsvOptions& options = {});

// Result exports and their parsers.
json verdict_to_json(const MissingDataGraph& g, const IdentifiabilityVerdict& v);
IdentifiabilityVerdict verdict_from_json(const json& j, const MissingDataGraph& g);

json fit_to_json(const FitResult& r);
FitResult fit_from_json(const json& j);
/// One row per probability: estimate and interval, or a flag in place of the interval.
std::string format_fit(const FitResult& r);

json scenario_to_json(const SimScenario& s);
SimScenario scenario_from_json(const Document& doc);
SimScenario parse_scenario(std::string_view text);

json report_to_json(const SimReport& r);
SimReport report_from_json(const json& j);

}  // namespace colluder::io
