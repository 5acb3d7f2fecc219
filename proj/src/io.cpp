#include "colluder/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>

namespace colluder::io {

ParseError::ParseError(int line, const std::string& message, bool prefix)
    : std::runtime_error(line > 0 && prefix ? "line " + std::to_string(line) + ": " + message : message),
      line_(line),
      message_(message) {}

int Document::line(const std::string& pointer) const {
  std::string p = pointer;
  while (true) {
    auto it = lines.find(p);
    if (it != lines.end()) return it->second;
    if (p.empty()) return 0;
    p.erase(p.rfind('/'));
  }
}

namespace {

// Input iterator over the text that counts the newlines it has passed.
class CountingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  CountingIterator(const char* p, int* line) : p_(p), line_(line) {}
  reference operator*() const { return *p_; }
  CountingIterator& operator++() {
    if (*p_ == '\n') ++*line_;
    ++p_;
    return *this;
  }
  CountingIterator operator++(int) {
    auto old = *this;
    ++*this;
    return old;
  }
  bool operator==(const CountingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const CountingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_;
  int* line_;
};

std::string escape_pointer(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

class LineSax {
 public:
  LineSax(json& root, std::map<std::string, int>& lines, const int& line)
      : dom_(root, true), lines_(lines), line_(line) {}

  bool null() { return mark() && dom_.null(); }
  bool boolean(bool v) { return mark() && dom_.boolean(v); }
  bool number_integer(json::number_integer_t v) { return mark() && dom_.number_integer(v); }
  bool number_unsigned(json::number_unsigned_t v) { return mark() && dom_.number_unsigned(v); }
  bool number_float(json::number_float_t v, const json::string_t& s) { return mark() && dom_.number_float(v, s); }
  bool string(json::string_t& v) { return mark() && dom_.string(v); }
  bool binary(json::binary_t& v) { return mark() && dom_.binary(v); }
  bool start_object(std::size_t n) {
    const auto p = pointer_for_value();
    lines_.emplace(p, line_);
    frames_.push_back({p, true, {}, 0});
    return dom_.start_object(n);
  }
  bool key(json::string_t& k) {
    frames_.back().key = k;
    lines_[frames_.back().pointer + "/" + escape_pointer(k)] = line_;
    return dom_.key(k);
  }
  bool end_object() {
    frames_.pop_back();
    return dom_.end_object();
  }
  bool start_array(std::size_t n) {
    const auto p = pointer_for_value();
    lines_.emplace(p, line_);
    frames_.push_back({p, false, {}, 0});
    return dom_.start_array(n);
  }
  bool end_array() {
    frames_.pop_back();
    return dom_.end_array();
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) {
    std::string what = ex.what();
    // "[json.exception.parse_error.101] parse error at line 3, column 5: ..."
    const auto colon = what.find(": ");
    throw ParseError(line_, "malformed JSON: " + (colon == std::string::npos ? what : what.substr(colon + 2)));
  }

 private:
  struct Frame {
    std::string pointer;
    bool object;
    std::string key;
    std::size_t index;
  };

  std::string pointer_for_value() {
    if (frames_.empty()) return "";
    auto& f = frames_.back();
    if (f.object) return f.pointer + "/" + escape_pointer(f.key);
    return f.pointer + "/" + std::to_string(f.index++);
  }
  bool mark() {
    lines_.emplace(pointer_for_value(), line_);
    return true;
  }

  nlohmann::detail::json_sax_dom_parser<json> dom_;
  std::map<std::string, int>& lines_;
  const int& line_;
  std::vector<Frame> frames_;
};

[[noreturn]] void fail(const Document& d, const std::string& at, const std::string& message) {
  throw ParseError(d.line(at), message);
}

const json& at_pointer(const Document& d, const std::string& at) {
  return at.empty() ? d.value : d.value.at(json::json_pointer(at));
}

void check_object(const Document& d, const std::string& at, std::initializer_list<std::string_view> allowed,
                  std::initializer_list<std::string_view> required = {}) {
  const auto& obj = at_pointer(d, at);
  if (!obj.is_object()) fail(d, at, "expected an object" + (at.empty() ? std::string() : " at " + at));
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(d, at + "/" + escape_pointer(key), "unknown key '" + key + "'");
    }
  }
  for (auto key : required) {
    if (!obj.contains(std::string(key))) fail(d, at, "missing key '" + std::string(key) + "'");
  }
}

std::string get_string(const Document& d, const std::string& at) {
  const auto& v = at_pointer(d, at);
  if (!v.is_string()) fail(d, at, "expected a string at " + at);
  return v.get<std::string>();
}

long long get_integer(const Document& d, const std::string& at) {
  const auto& v = at_pointer(d, at);
  if (!v.is_number_integer()) fail(d, at, "expected an integer at " + at);
  return v.get<long long>();
}

double get_number(const Document& d, const std::string& at) {
  const auto& v = at_pointer(d, at);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return parse_scalar<double>(v.get<std::string>());
    } catch (const std::exception& e) {
      fail(d, at, e.what());
    }
  }
  fail(d, at, "expected a number at " + at);
}

template <typename Scalar>
Scalar get_probability(const Document& d, const std::string& at) {
  const auto& v = at_pointer(d, at);
  try {
    if (v.is_string()) return parse_scalar<Scalar>(v.get<std::string>());
    if (v.is_number()) {
      if constexpr (is_exact_v<Scalar>) return parse_scalar<Scalar>(v.dump());
      else return v.get<double>();
    }
  } catch (const std::exception& e) {
    fail(d, at, e.what());
  }
  fail(d, at, "expected a probability (decimal string) at " + at);
}

std::string child(const std::string& at, std::string_view key) { return at + "/" + escape_pointer(std::string(key)); }
std::string child(const std::string& at, std::size_t index) { return at + "/" + std::to_string(index); }

json double_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

Document parse_json(std::string_view text) {
  Document d;
  int line = 1;
  LineSax sax(d.value, d.lines, line);
  CountingIterator first(text.data(), &line), last(text.data() + text.size(), &line);
  json::sax_parse(first, last, &sax);
  return d;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---- graphs

MissingDataGraph graph_from_json(const Document& d, const std::string& at) {
  check_object(d, at, {"vertices", "edges", "pairs"}, {"vertices"});
  MissingDataGraph::Builder b;
  std::vector<std::string> names;
  std::map<std::string, int> levels_of;
  const auto vertices_at = child(at, "vertices");
  if (!at_pointer(d, vertices_at).is_array()) fail(d, vertices_at, "'vertices' must be an array");
  for (std::size_t i = 0; i < at_pointer(d, vertices_at).size(); ++i) {
    const auto v = child(vertices_at, i);
    check_object(d, v, {"name", "role", "levels"}, {"name", "role"});
    const auto name = get_string(d, child(v, "name"));
    const auto role = get_string(d, child(v, "role"));
    VertexRole r;
    if (role == "O") r = VertexRole::FullyObserved;
    else if (role == "X1") r = VertexRole::TrueVariable;
    else if (role == "R") r = VertexRole::ResponseIndicator;
    else fail(d, child(v, "role"), "role must be one of O, X1, R (got '" + role + "')");
    int levels = 2;
    const auto& obj = at_pointer(d, v);
    if (obj.contains("levels")) {
      const auto lv = child(v, "levels");
      if (obj["levels"].is_string()) {
        if (obj["levels"].get<std::string>() != "continuous") fail(d, lv, "levels must be an integer or \"continuous\"");
        if (r != VertexRole::FullyObserved) fail(d, lv, "only fully observed vertices may be continuous");
        levels = kContinuous;
      } else {
        const auto n = get_integer(d, lv);
        if (n < 2 || n > 1000000) fail(d, lv, "levels of '" + name + "' must be at least 2");
        levels = static_cast<int>(n);
      }
    }
    if (r == VertexRole::ResponseIndicator && levels != 2) fail(d, v, "indicator '" + name + "' must be binary");
    if (std::find(names.begin(), names.end(), name) != names.end()) fail(d, v, "duplicate vertex '" + name + "'");
    names.push_back(name);
    levels_of[name] = levels;
    b.vertex(name, r, levels);
  }
  auto known = [&](const std::string& at_name) {
    const auto n = get_string(d, at_name);
    if (std::find(names.begin(), names.end(), n) == names.end()) fail(d, at_name, "unknown vertex '" + n + "'");
    return n;
  };
  const auto& root = at_pointer(d, at);
  if (root.contains("edges")) {
    const auto edges_at = child(at, "edges");
    if (!root["edges"].is_array()) fail(d, edges_at, "'edges' must be an array");
    for (std::size_t i = 0; i < root["edges"].size(); ++i) {
      const auto e = child(edges_at, i);
      check_object(d, e, {"from", "to", "type"}, {"from", "to"});
      const auto from = known(child(e, "from"));
      const auto to = known(child(e, "to"));
      std::string type = "directed";
      if (at_pointer(d, e).contains("type")) type = get_string(d, child(e, "type"));
      if (type == "directed") b.directed(from, to);
      else if (type == "bidirected") b.bidirected(from, to);
      else fail(d, child(e, "type"), "edge type must be directed or bidirected");
    }
  }
  if (root.contains("pairs")) {
    const auto pairs_at = child(at, "pairs");
    if (!root["pairs"].is_array()) fail(d, pairs_at, "'pairs' must be an array");
    for (std::size_t i = 0; i < root["pairs"].size(); ++i) {
      const auto p = child(pairs_at, i);
      check_object(d, p, {"true", "indicator", "proxy"}, {"true", "indicator"});
      const auto t = known(child(p, "true"));
      const auto r = known(child(p, "indicator"));
      std::optional<std::string> proxy;
      if (at_pointer(d, p).contains("proxy")) {
        proxy = get_string(d, child(p, "proxy"));
        if (std::find(names.begin(), names.end(), *proxy) != names.end()) fail(d, child(p, "proxy"), "duplicate vertex '" + *proxy + "'");
        const int lv = levels_of[t];
        b.vertex(*proxy, VertexRole::Proxy, lv == kContinuous ? kContinuous : lv + 1);
        b.directed(t, *proxy);
        b.directed(r, *proxy);
        names.push_back(*proxy);
      }
      b.pair(t, r, proxy);
    }
  }
  MissingDataGraph g;
  try {
    g = b.build();
  } catch (const std::exception& e) {
    fail(d, at, e.what());
  }
  const auto report = validate_graph(g);
  if (!report.valid()) fail(d, at, "invalid graph: " + report.violations.front().message);
  return g;
}

MissingDataGraph parse_graph(std::string_view text) { return graph_from_json(parse_json(text)); }

MissingDataGraph load_graph(const std::filesystem::path& path) { return parse_graph(read_file(path)); }

json graph_to_json(const MissingDataGraph& g) {
  json vertices = json::array(), edges = json::array(), pairs = json::array();
  for (int v = 0; v < g.size(); ++v) {
    const auto& vx = g.vertex(v);
    if (vx.role == VertexRole::Proxy) continue;
    json o{{"name", vx.name}, {"role", std::string(to_string(vx.role))}};
    o["levels"] = vx.categorical() ? json(vx.levels) : json("continuous");
    vertices.push_back(std::move(o));
  }
  for (const auto& e : g.edges()) {
    if (g.vertex(e.to).role == VertexRole::Proxy) continue;
    edges.push_back({{"from", g.name(e.from)},
                     {"to", g.name(e.to)},
                     {"type", e.type == EdgeType::Directed ? "directed" : "bidirected"}});
  }
  for (const auto& p : g.pairs()) {
    json o{{"true", g.name(p.true_variable)}, {"indicator", g.name(p.indicator)}};
    if (g.name(p.proxy) != g.name(p.true_variable) + "*") o["proxy"] = g.name(p.proxy);
    pairs.push_back(std::move(o));
  }
  return {{"vertices", vertices}, {"edges", edges}, {"pairs", pairs}};
}

// ---- laws and tables

template <typename Scalar>
BasicLaw<Scalar> law_from_json(const Document& d, const std::filesystem::path& base) {
  check_object(d, "", {"graph", "cpts", "latent_levels"}, {"graph", "cpts"});
  std::shared_ptr<const MissingDataGraph> graph;
  if (d.value["graph"].is_string()) {
    auto path = std::filesystem::path(d.value["graph"].get<std::string>());
    if (path.is_relative()) path = base / path;
    try {
      graph = std::make_shared<const MissingDataGraph>(load_graph(path));
    } catch (const ParseError& e) {
      fail(d, "/graph", "in graph file '" + path.string() + "': " + e.what());
    }
  } else {
    graph = std::make_shared<const MissingDataGraph>(graph_from_json(d, "/graph"));
  }
  int latent_levels = 2;
  if (d.value.contains("latent_levels")) {
    const auto n = get_integer(d, "/latent_levels");
    if (n < 2) fail(d, "/latent_levels", "latent_levels must be at least 2");
    latent_levels = static_cast<int>(n);
  }
  LawLayout layout;
  try {
    layout = LawLayout::from_graph(*graph, latent_levels);
  } catch (const std::exception& e) {
    fail(d, "/graph", e.what());
  }
  const auto& cpts = d.value["cpts"];
  if (!cpts.is_object()) fail(d, "/cpts", "'cpts' must be an object");
  for (const auto& [name, value] : cpts.items()) {
    bool found = false;
    for (const auto& v : layout.variables) found = found || v.name == name;
    if (!found) fail(d, child("/cpts", name), "CPT for unknown variable '" + name + "'");
  }
  std::vector<RowMatrix<Scalar>> tables;
  for (std::size_t i = 0; i < layout.variables.size(); ++i) {
    const auto& var = layout.variables[i];
    const auto at = child("/cpts", var.name);
    if (!cpts.contains(var.name)) fail(d, "/cpts", "missing CPT for '" + var.name + "'");
    check_object(d, at, {"parents", "table"}, {"table"});
    std::vector<std::string> expected;
    for (int p : layout.parents[i]) expected.push_back(layout.variables[p].name);
    std::vector<std::string> given;
    if (cpts[var.name].contains("parents")) {
      const auto& arr = cpts[var.name]["parents"];
      if (!arr.is_array()) fail(d, child(at, "parents"), "'parents' must be an array");
      for (std::size_t k = 0; k < arr.size(); ++k) given.push_back(get_string(d, child(child(at, "parents"), k)));
    }
    if (given != expected) {
      std::string list;
      for (const auto& e : expected) list += (list.empty() ? "" : ", ") + e;
      fail(d, child(at, "parents"), "parents of '" + var.name + "' must be [" + list + "]");
    }
    int rows = 1;
    std::vector<int> levels;
    for (int p : layout.parents[i]) {
      levels.push_back(layout.variables[p].levels);
      rows *= levels.back();
    }
    RowMatrix<Scalar> t(rows, var.levels);
    int row = 0;
    // Walk the nested arrays depth first; the last axis is the variable.
    std::function<void(const std::string&, std::size_t)> walk = [&](const std::string& p, std::size_t depth) {
      const auto& node = at_pointer(d, p);
      const std::size_t want = depth < levels.size() ? static_cast<std::size_t>(levels[depth]) : var.levels;
      if (!node.is_array() || node.size() != want) {
        fail(d, p, "table of '" + var.name + "' needs " + std::to_string(want) + " entries at depth " +
                       std::to_string(depth));
      }
      if (depth == levels.size()) {
        for (std::size_t l = 0; l < want; ++l) t(row, static_cast<Eigen::Index>(l)) = get_probability<Scalar>(d, child(p, l));
        ++row;
        return;
      }
      for (std::size_t k = 0; k < want; ++k) walk(child(p, k), depth + 1);
    };
    walk(child(at, "table"), 0);
    tables.push_back(std::move(t));
  }
  try {
    return BasicLaw<Scalar>(graph, std::move(tables), latent_levels);
  } catch (const LawError& e) {
    std::string what = e.what();
    for (const auto& v : layout.variables) {
      if (what.find("'" + v.name + "'") != std::string::npos) fail(d, child(child("/cpts", v.name), "table"), what);
    }
    fail(d, "/cpts", what);
  }
}

template <typename Scalar>
BasicLaw<Scalar> parse_law(std::string_view text, const std::filesystem::path& base) {
  return law_from_json<Scalar>(parse_json(text), base);
}

template <typename Scalar>
BasicLaw<Scalar> load_law(const std::filesystem::path& path) {
  return parse_law<Scalar>(read_file(path), path.parent_path());
}

template <typename Scalar>
json law_to_json(const BasicLaw<Scalar>& law, bool embed_graph) {
  json cpts = json::object();
  const auto& layout = law.layout();
  for (std::size_t i = 0; i < layout.variables.size(); ++i) {
    const auto& c = law.cpts()[i];
    json parents = json::array();
    for (int p : c.parents) parents.push_back(layout.variables[p].name);
    std::function<json(std::size_t, Eigen::Index&)> nest = [&](std::size_t depth, Eigen::Index& row) {
      json arr = json::array();
      if (depth == c.parents.size()) {
        for (Eigen::Index l = 0; l < c.table.cols(); ++l) arr.push_back(format_scalar(c.table(row, l)));
        ++row;
        return arr;
      }
      for (int k = 0; k < c.parent_levels[depth]; ++k) arr.push_back(nest(depth + 1, row));
      return arr;
    };
    Eigen::Index row = 0;
    cpts[layout.variables[i].name] = {{"parents", parents}, {"table", nest(0, row)}};
  }
  json out{{"graph", embed_graph ? graph_to_json(law.graph()) : json(nullptr)}, {"cpts", cpts}};
  if (law.latent_levels() != 2) out["latent_levels"] = law.latent_levels();
  return out;
}

template <typename Scalar>
json table_to_json(const ProbabilityTable<Scalar>& t) {
  json vars = json::array(), values = json::array();
  for (const auto& v : t.variables()) vars.push_back({{"name", v.name}, {"levels", v.levels}});
  for (std::size_t i = 0; i < t.size(); ++i) values.push_back(format_scalar(t[i]));
  return {{"variables", vars}, {"values", values}};
}

template <typename Scalar>
ProbabilityTable<Scalar> table_from_json(const Document& d, const std::string& at) {
  check_object(d, at, {"variables", "values"}, {"variables", "values"});
  std::vector<TableVariable> vars;
  const auto vat = child(at, "variables");
  if (!at_pointer(d, vat).is_array()) fail(d, vat, "'variables' must be an array");
  for (std::size_t i = 0; i < at_pointer(d, vat).size(); ++i) {
    const auto v = child(vat, i);
    check_object(d, v, {"name", "levels"}, {"name", "levels"});
    const auto levels = get_integer(d, child(v, "levels"));
    if (levels < 1) fail(d, child(v, "levels"), "levels must be positive");
    vars.push_back({get_string(d, child(v, "name")), static_cast<int>(levels)});
  }
  const auto values_at = child(at, "values");
  const auto& values = at_pointer(d, values_at);
  std::size_t size = 1;
  for (const auto& v : vars) size *= static_cast<std::size_t>(v.levels);
  if (!values.is_array() || values.size() != size) {
    fail(d, values_at, "'values' must hold " + std::to_string(size) + " entries");
  }
  Vector<Scalar> x(static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < size; ++i) x[static_cast<Eigen::Index>(i)] = get_probability<Scalar>(d, child(values_at, i));
  return ProbabilityTable<Scalar>(std::move(vars), std::move(x));
}

template <typename Scalar>
ObservedInput<Scalar> load_observed(const std::filesystem::path& path) {
  const auto d = parse_json(read_file(path));
  if (d.value.is_object() && d.value.contains("cpts")) {
    const auto law = law_from_json<Scalar>(d, path.parent_path());
    return {law.graph_ptr(), law.observed_table()};
  }
  check_object(d, "", {"graph", "observed"}, {"graph", "observed"});
  std::shared_ptr<const MissingDataGraph> graph;
  if (d.value["graph"].is_string()) {
    auto gp = std::filesystem::path(d.value["graph"].get<std::string>());
    if (gp.is_relative()) gp = path.parent_path() / gp;
    graph = std::make_shared<const MissingDataGraph>(load_graph(gp));
  } else {
    graph = std::make_shared<const MissingDataGraph>(graph_from_json(d, "/graph"));
  }
  auto table = table_from_json<Scalar>(d, "/observed");
  if (table.variables() != observed_columns(*graph)) {
    std::string list;
    for (const auto& v : observed_columns(*graph)) list += (list.empty() ? "" : ", ") + v.name + "(" + std::to_string(v.levels) + ")";
    fail(d, "/observed/variables", "observed variables must be [" + list + "]");
  }
  return {graph, std::move(table)};
}

template BasicLaw<double> law_from_json<double>(const Document&, const std::filesystem::path&);
template BasicLaw<Rational> law_from_json<Rational>(const Document&, const std::filesystem::path&);
template BasicLaw<double> parse_law<double>(std::string_view, const std::filesystem::path&);
template BasicLaw<Rational> parse_law<Rational>(std::string_view, const std::filesystem::path&);
template BasicLaw<double> load_law<double>(const std::filesystem::path&);
template BasicLaw<Rational> load_law<Rational>(const std::filesystem::path&);
template json law_to_json(const BasicLaw<double>&, bool);
template json law_to_json(const BasicLaw<Rational>&, bool);
template json table_to_json(const ProbabilityTable<double>&);
template json table_to_json(const ProbabilityTable<Rational>&);
template ProbabilityTable<double> table_from_json<double>(const Document&, const std::string&);
template ProbabilityTable<Rational> table_from_json<Rational>(const Document&, const std::string&);
template ObservedInput<double> load_observed<double>(const std::filesystem::path&);
template ObservedInput<Rational> load_observed<Rational>(const std::filesystem::path&);

// ---- CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else cur += c;
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

Dataset read_csv(std::istream& in, std::shared_ptr<const MissingDataGraph> graph, const CsvOptions& options) {
  const auto& g = *graph;
  const auto law = g.law_vertices();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty CSV (no header)");
  const auto header = split_csv_line(line);
  // column of the file -> position in the record, -1 for unused
  std::vector<int> target(header.size(), -1);
  std::vector<int> source(law.size(), -1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto v = g.find(header[c]);
    if (!v) throw ParseError(1, "unknown column '" + header[c] + "'");
    int vertex = *v;
    if (g.vertex(vertex).role == VertexRole::Proxy) {
      for (const auto& p : g.pairs())
        if (p.proxy == vertex) vertex = p.true_variable;
    }
    const auto pos = std::find(law.begin(), law.end(), vertex) - law.begin();
    if (pos == static_cast<long>(law.size())) throw ParseError(1, "column '" + header[c] + "' is not observable");
    if (source[pos] >= 0) throw ParseError(1, "duplicate column for '" + g.name(vertex) + "'");
    source[pos] = static_cast<int>(c);
    target[c] = static_cast<int>(pos);
  }
  for (std::size_t k = 0; k < law.size(); ++k) {
    if (source[k] < 0 && g.vertex(law[k]).role != VertexRole::ResponseIndicator) {
      throw ParseError(1, "missing column for '" + g.name(law[k]) + "'");
    }
  }

  std::vector<std::vector<int>> records;
  int line_no = 1;
  std::vector<int> record(law.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    for (std::size_t k = 0; k < law.size(); ++k) {
      const auto& vx = g.vertex(law[k]);
      if (source[k] < 0) continue;
      const auto& f = fields[static_cast<std::size_t>(source[k])];
      const bool indicator = vx.role == VertexRole::ResponseIndicator;
      if (f == options.na_token) {
        if (vx.role != VertexRole::TrueVariable) throw ParseError(line_no, "'" + vx.name + "' cannot be missing");
        record[k] = vx.levels;
        continue;
      }
      int value = 0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(line_no, "'" + f + "' is not a level code for '" + vx.name + "'");
      }
      if (options.one_based && !indicator) --value;
      if (value < 0 || value >= vx.levels) {
        throw ParseError(line_no, "value '" + f + "' out of range for '" + vx.name + "'");
      }
      record[k] = value;
    }
    for (std::size_t k = 0; k < law.size(); ++k) {
      if (source[k] >= 0) continue;
      const auto t = g.true_of_indicator(law[k]);
      const auto pos = std::find(law.begin(), law.end(), *t) - law.begin();
      record[k] = record[static_cast<std::size_t>(pos)] == g.vertex(*t).levels ? 0 : 1;
    }
    if (auto problem = record_problem(g, record)) {
      throw ParseError(line_no, "inconsistent record at line " + std::to_string(line_no) + ": " + *problem, false);
    }
    records.push_back(record);
  }
  return Dataset::from_records(std::move(graph), records);
}

Dataset load_csv(const std::filesystem::path& path, std::shared_ptr<const MissingDataGraph> graph,
                 const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open '" + path.string() + "'");
  return read_csv(in, std::move(graph), options);
}

void write_csv(std::ostream& out, const MissingDataGraph& g, const std::vector<std::vector<int>>& records,
               const CsvOptions& options) {
  const auto law = g.law_vertices();
  for (std::size_t k = 0; k < law.size(); ++k) out << (k ? "," : "") << g.name(law[k]);
  out << "\n";
  for (const auto& r : records) {
    for (std::size_t k = 0; k < law.size(); ++k) {
      const auto& vx = g.vertex(law[k]);
      out << (k ? "," : "");
      if (vx.role == VertexRole::TrueVariable && r[k] == vx.levels) out << options.na_token;
      else out << r[k] + (options.one_based && vx.role != VertexRole::ResponseIndicator ? 1 : 0);
    }
    out << "\n";
  }
}

// ---- verdicts

namespace {

FindingKind finding_kind_from(const std::string& s) {
  for (auto k : {FindingKind::SelfCensoring, FindingKind::ConditionalIndependence, FindingKind::StructuralRank,
                 FindingKind::RankDeficient, FindingKind::Positivity, FindingKind::DependencyAssumption,
                 FindingKind::MissingLevels}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown finding kind '" + s + "'");
}

}  // namespace

json verdict_to_json(const MissingDataGraph& g, const IdentifiabilityVerdict& v) {
  json reasons = json::array();
  for (const auto& r : v.reasons) {
    json o{{"kind", std::string(to_string(r.kind))}, {"detail", r.detail}};
    if (r.colluder) {
      o["colluder"] = {{"true", g.name(r.colluder->true_variable)},
                       {"indicator", g.name(r.colluder->response_of_true)},
                       {"target", g.name(r.colluder->target_indicator)}};
    } else {
      o["colluder"] = nullptr;
    }
    if (!r.singular_values.empty()) o["singular_values"] = r.singular_values;
    reasons.push_back(std::move(o));
  }
  return {{"decision", std::string(to_string(v.decision))},
          {"reasons", reasons},
          {"rank_condition_pending", v.rank_condition_pending}};
}

IdentifiabilityVerdict verdict_from_json(const json& j, const MissingDataGraph& g) {
  IdentifiabilityVerdict v;
  const auto decision = j.at("decision").get<std::string>();
  if (decision == "Identifiable") v.decision = Decision::Identifiable;
  else if (decision == "NotIdentifiable") v.decision = Decision::NotIdentifiable;
  else throw std::invalid_argument("unknown decision '" + decision + "'");
  v.rank_condition_pending = j.at("rank_condition_pending").get<bool>();
  for (const auto& r : j.at("reasons")) {
    Finding f{finding_kind_from(r.at("kind").get<std::string>()), std::nullopt, r.at("detail").get<std::string>(), {}};
    if (!r.at("colluder").is_null()) {
      const auto& c = r["colluder"];
      f.colluder = Colluder{g.index(c.at("true").get<std::string>()), g.index(c.at("indicator").get<std::string>()),
                            g.index(c.at("target").get<std::string>())};
    }
    if (r.contains("singular_values")) f.singular_values = r["singular_values"].get<std::vector<double>>();
    v.reasons.push_back(std::move(f));
  }
  return v;
}

// ---- fits

namespace {

FitStatus fit_status_from(const std::string& s) {
  for (auto k : {FitStatus::Converged, FitStatus::MaxIterations, FitStatus::LineSearchFailed})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown fit status '" + s + "'");
}

json vector_json(const Vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(double_or_null(x));
  return a;
}

Vector<double> vector_from(const json& a) {
  Vector<double> v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = number_or_nan(a[i]);
  return v;
}

}  // namespace

json fit_to_json(const FitResult& r) {
  json estimates = json::array(), restarts = json::array();
  for (const auto& e : r.estimates) {
    json o{{"label", e.label},           {"block", e.block},         {"row", e.row},
           {"level", e.level},           {"estimate", e.estimate},   {"standard_error", double_or_null(e.standard_error)},
           {"boundary", e.boundary},     {"unreliable", e.unreliable}};
    o["ci"] = e.lower ? json::array({*e.lower, *e.upper}) : json(nullptr);
    estimates.push_back(std::move(o));
  }
  for (const auto& s : r.restarts) {
    restarts.push_back({{"index", s.index},
                        {"log_likelihood", double_or_null(s.log_likelihood)},
                        {"gradient_norm", double_or_null(s.gradient_norm)},
                        {"iterations", s.iterations},
                        {"status", std::string(to_string(s.status))}});
  }
  return {{"n", r.n},
          {"log_likelihood", double_or_null(r.log_likelihood)},
          {"gradient_norm", double_or_null(r.gradient_norm)},
          {"iterations", r.iterations},
          {"status", std::string(to_string(r.status))},
          {"converged", r.converged()},
          {"best_restart", r.best_restart},
          {"estimates", estimates},
          {"restarts", restarts},
          {"theta", vector_json(r.theta)},
          {"probabilities", vector_json(r.probabilities)},
          {"information_eigenvalues", r.information_eigenvalues}};
}

FitResult fit_from_json(const json& j) {
  FitResult r;
  r.n = j.at("n").get<double>();
  r.log_likelihood = number_or_nan(j.at("log_likelihood"));
  r.gradient_norm = number_or_nan(j.at("gradient_norm"));
  r.iterations = j.at("iterations").get<int>();
  r.status = fit_status_from(j.at("status").get<std::string>());
  r.best_restart = j.at("best_restart").get<int>();
  for (const auto& e : j.at("estimates")) {
    ParameterEstimate p;
    p.label = e.at("label").get<std::string>();
    p.block = e.at("block").get<int>();
    p.row = e.at("row").get<int>();
    p.level = e.at("level").get<int>();
    p.estimate = e.at("estimate").get<double>();
    p.standard_error = number_or_nan(e.at("standard_error"));
    p.boundary = e.at("boundary").get<bool>();
    p.unreliable = e.at("unreliable").get<bool>();
    if (!e.at("ci").is_null()) {
      p.lower = e["ci"].at(0).get<double>();
      p.upper = e["ci"].at(1).get<double>();
    }
    r.estimates.push_back(std::move(p));
  }
  for (const auto& s : j.at("restarts")) {
    r.restarts.push_back({s.at("index").get<int>(), number_or_nan(s.at("log_likelihood")),
                          number_or_nan(s.at("gradient_norm")), s.at("iterations").get<int>(),
                          fit_status_from(s.at("status").get<std::string>())});
  }
  r.theta = vector_from(j.at("theta"));
  r.probabilities = vector_from(j.at("probabilities"));
  r.information_eigenvalues = j.at("information_eigenvalues").get<std::vector<double>>();
  return r;
}

std::string format_fit(const FitResult& r) {
  std::size_t width = 9;
  for (const auto& e : r.estimates) width = std::max(width, e.label.size());
  const int w = static_cast<int>(width);
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof line, "%-*s  %s\n", w, "Parameter", "Estimate (95% CI)");
  out << line << std::string(width + 30, '-') << "\n";
  for (const auto& e : r.estimates) {
    std::string tail;
    if (e.lower) {
      char ci[64];
      std::snprintf(ci, sizeof ci, " (%.3f, %.3f)", *e.lower, *e.upper);
      tail = ci;
    } else {
      tail = "  not reliably estimable";
    }
    if (e.boundary) tail += "  [boundary]";
    std::snprintf(line, sizeof line, "%-*s  %.3f%s\n", w, e.label.c_str(), e.estimate, tail.c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "n = %.0f, log-likelihood = %.4f, gradient norm = %.2e, %s after %d iterations\n",
                r.n, r.log_likelihood, r.gradient_norm, std::string(to_string(r.status)).c_str(), r.iterations);
  out << line;
  return out.str();
}

// ---- scenarios and reports

namespace {

SimConstraints constraints_from(const Document& d, const std::string& at, int m) {
  auto c = SimScenario::default_constraints(m);
  check_object(d, at,
               {"fixed_response", "response_low", "response_high", "response_gap", "dependency_gap", "min_probability",
                "latent_levels", "max_attempts"});
  const auto& o = at_pointer(d, at);
  if (o.contains("fixed_response")) {
    const auto fat = child(at, "fixed_response");
    if (!o["fixed_response"].is_object()) fail(d, fat, "'fixed_response' must be an object");
    c.fixed_response.clear();
    for (const auto& [name, value] : o["fixed_response"].items()) c.fixed_response[name] = get_number(d, child(fat, name));
  }
  if (o.contains("response_low")) c.response_low = get_number(d, child(at, "response_low"));
  if (o.contains("response_high")) c.response_high = get_number(d, child(at, "response_high"));
  if (o.contains("response_gap")) c.response_gap = get_number(d, child(at, "response_gap"));
  if (o.contains("dependency_gap")) c.dependency_gap = get_number(d, child(at, "dependency_gap"));
  if (o.contains("min_probability")) c.min_probability = get_number(d, child(at, "min_probability"));
  if (o.contains("latent_levels")) c.latent_levels = static_cast<int>(get_integer(d, child(at, "latent_levels")));
  if (o.contains("max_attempts")) c.max_attempts = static_cast<int>(get_integer(d, child(at, "max_attempts")));
  return c;
}

json constraints_json(const SimConstraints& c) {
  json fixed = json::object();
  for (const auto& [k, v] : c.fixed_response) fixed[k] = v;
  return {{"fixed_response", fixed},       {"response_low", c.response_low},
          {"response_high", c.response_high}, {"response_gap", c.response_gap},
          {"dependency_gap", c.dependency_gap}, {"min_probability", c.min_probability},
          {"latent_levels", c.latent_levels}, {"max_attempts", c.max_attempts}};
}

}  // namespace

json scenario_to_json(const SimScenario& s) {
  return {{"name", s.name},
          {"m", s.m},
          {"q", s.q},
          {"sample_sizes", s.sample_sizes},
          {"replications", s.replications},
          {"seed", s.seed},
          {"restarts", s.restarts},
          {"max_iterations", s.max_iterations},
          {"max_failure_rate", s.max_failure_rate},
          {"constraints", constraints_json(s.constraints)}};
}

SimScenario scenario_from_json(const Document& d) {
  check_object(d, "",
               {"name", "m", "q", "sample_sizes", "replications", "seed", "restarts", "max_iterations", "threads",
                "max_failure_rate", "constraints"},
               {"m", "q"});
  SimScenario s;
  const auto& o = d.value;
  if (o.contains("name")) s.name = get_string(d, "/name");
  s.m = static_cast<int>(get_integer(d, "/m"));
  s.q = static_cast<int>(get_integer(d, "/q"));
  if (o.contains("sample_sizes")) {
    if (!o["sample_sizes"].is_array()) fail(d, "/sample_sizes", "'sample_sizes' must be an array");
    s.sample_sizes.clear();
    for (std::size_t i = 0; i < o["sample_sizes"].size(); ++i) s.sample_sizes.push_back(get_integer(d, child("/sample_sizes", i)));
  }
  if (o.contains("replications")) s.replications = static_cast<int>(get_integer(d, "/replications"));
  if (o.contains("seed")) {
    if (!o["seed"].is_number_unsigned()) fail(d, "/seed", "seed must be a non-negative integer");
    s.seed = o["seed"].get<std::uint64_t>();
  }
  if (o.contains("restarts")) s.restarts = static_cast<int>(get_integer(d, "/restarts"));
  if (o.contains("max_iterations")) s.max_iterations = static_cast<int>(get_integer(d, "/max_iterations"));
  if (o.contains("threads")) s.threads = static_cast<int>(get_integer(d, "/threads"));
  if (o.contains("max_failure_rate")) s.max_failure_rate = get_number(d, "/max_failure_rate");
  s.constraints = o.contains("constraints") ? constraints_from(d, "/constraints", s.m) : SimScenario::default_constraints(s.m);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail(d, "", e.what());
  }
  return s;
}

SimScenario parse_scenario(std::string_view text) { return scenario_from_json(parse_json(text)); }

namespace {

json group_json(const GroupSummary& g) {
  return {{"description", g.description}, {"min_bias", g.min_bias},   {"max_bias", g.max_bias},
          {"mean_rmse", g.mean_rmse},     {"max_rmse", g.max_rmse},   {"mean_abs_bias", g.mean_abs_bias}};
}

GroupSummary group_from(const json& j, ParameterGroup group) {
  GroupSummary g;
  g.group = group;
  g.description = j.at("description").get<std::string>();
  g.min_bias = j.at("min_bias").get<double>();
  g.max_bias = j.at("max_bias").get<double>();
  g.mean_rmse = j.at("mean_rmse").get<double>();
  g.max_rmse = j.at("max_rmse").get<double>();
  g.mean_abs_bias = j.at("mean_abs_bias").get<double>();
  return g;
}

}  // namespace

json report_to_json(const SimReport& r) {
  json sizes = json::array();
  for (const auto& s : r.sizes) {
    json params = json::array();
    for (const auto& p : s.parameters) {
      params.push_back({{"label", p.label},
                        {"group", std::string(to_string(p.group))},
                        {"mean_bias", p.mean_bias},
                        {"rmse", p.rmse}});
    }
    sizes.push_back({{"n", s.n},
                     {"used", s.used},
                     {"failures", s.failures},
                     {"parameters", params},
                     {"groups", {{"colluder", group_json(s.colluder)}, {"other", group_json(s.other)}}}});
  }
  return {{"scenario", scenario_to_json(r.scenario)}, {"failed", r.failed}, {"sizes", sizes}};
}

SimReport report_from_json(const json& j) {
  SimReport r;
  Document d{j.at("scenario"), {}};
  r.scenario = scenario_from_json(d);
  r.failed = j.at("failed").get<bool>();
  for (const auto& s : j.at("sizes")) {
    SampleSizeReport x;
    x.n = s.at("n").get<long>();
    x.used = s.at("used").get<int>();
    x.failures = s.at("failures").get<int>();
    for (const auto& p : s.at("parameters")) {
      const auto group = p.at("group").get<std::string>();
      if (group != "colluder" && group != "other") throw std::invalid_argument("unknown parameter group '" + group + "'");
      x.parameters.push_back({p.at("label").get<std::string>(),
                              group == "colluder" ? ParameterGroup::Colluder : ParameterGroup::Other,
                              p.at("mean_bias").get<double>(), p.at("rmse").get<double>()});
    }
    x.colluder = group_from(s.at("groups").at("colluder"), ParameterGroup::Colluder);
    x.other = group_from(s.at("groups").at("other"), ParameterGroup::Other);
    r.sizes.push_back(std::move(x));
  }
  return r;
}

}  // namespace colluder::io
