#include "colluder/law.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace colluder {

LawLayout LawLayout::from_graph(const MissingDataGraph& g, int latent_levels) {
  if (latent_levels < 2) throw LawError("latent confounders need at least two levels");
  LawLayout layout;
  std::vector<int> slot(g.size(), -1);
  for (int v : g.law_vertices()) {
    const auto& vx = g.vertex(v);
    if (!vx.categorical()) throw LawError("vertex '" + vx.name + "' is continuous; laws must be categorical");
    slot[v] = static_cast<int>(layout.variables.size());
    layout.variables.push_back(LawVariable{vx.name, vx.levels, v});
  }
  layout.visible = static_cast<int>(layout.variables.size());
  layout.parents.assign(layout.variables.size(), {});
  for (int k = 0; k < layout.visible; ++k) {
    for (int p : g.parents(layout.variables[k].vertex)) {
      if (slot[p] < 0) throw LawError("proxy '" + g.name(p) + "' cannot be a parent");
      layout.parents[k].push_back(slot[p]);
    }
  }
  for (const auto& e : g.edges()) {
    if (e.type != EdgeType::Bidirected) continue;
    if (slot[e.from] < 0 || slot[e.to] < 0) throw LawError("bidirected edge touches a proxy");
    const int u = static_cast<int>(layout.variables.size());
    layout.variables.push_back(LawVariable{"U(" + g.name(e.from) + "," + g.name(e.to) + ")", latent_levels, -1});
    layout.parents.emplace_back();
    layout.parents[slot[e.from]].push_back(u);
    layout.parents[slot[e.to]].push_back(u);
  }
  return layout;
}

int LawLayout::find(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return static_cast<int>(i);
  }
  throw LawError("law has no variable '" + std::string(name) + "'");
}

template <typename Scalar>
BasicLaw<Scalar>::BasicLaw(std::shared_ptr<const MissingDataGraph> graph, std::vector<RowMatrix<Scalar>> tables,
                           int latent_levels)
    : graph_(std::move(graph)), latent_levels_(latent_levels) {
  if (!graph_) throw LawError("law without graph");
  const auto report = validate_graph(*graph_);
  if (!report.valid()) throw LawError("invalid graph: " + report.violations.front().message);
  layout_ = LawLayout::from_graph(*graph_, latent_levels);
  if (tables.size() != layout_.variables.size()) {
    throw LawError("expected " + std::to_string(layout_.variables.size()) + " CPTs, got " +
                   std::to_string(tables.size()));
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    Cpt<Scalar> c;
    c.variable = static_cast<int>(i);
    c.parents = layout_.parents[i];
    Eigen::Index rows = 1;
    for (int p : c.parents) {
      c.parent_levels.push_back(layout_.variables[p].levels);
      rows *= layout_.variables[p].levels;
    }
    const auto& name = layout_.variables[i].name;
    if (tables[i].rows() != rows || tables[i].cols() != layout_.variables[i].levels) {
      throw LawError("CPT of '" + name + "' must be " + std::to_string(rows) + "x" +
                     std::to_string(layout_.variables[i].levels));
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      Scalar sum = 0;
      for (Eigen::Index l = 0; l < tables[i].cols(); ++l) {
        const Scalar& v = tables[i](r, l);
        if (v < 0 || v > 1) throw LawError("CPT of '" + name + "' has an entry outside [0,1]");
        sum += v;
      }
      const bool ok = is_exact_v<Scalar> ? sum == 1 : std::abs(to_double(sum) - 1.0) <= 1e-12;
      if (!ok) throw LawError("CPT row of '" + name + "' does not sum to 1");
    }
    c.table = std::move(tables[i]);
    cpts_.push_back(std::move(c));
  }
}

template <typename Scalar>
std::vector<TableVariable> BasicLaw<Scalar>::visible_variables() const {
  std::vector<TableVariable> out;
  for (int i = 0; i < layout_.visible; ++i) out.push_back({layout_.variables[i].name, layout_.variables[i].levels});
  return out;
}

template <typename Scalar>
Scalar BasicLaw<Scalar>::joint_probability(std::span<const int> config) const {
  if (static_cast<int>(config.size()) != layout_.visible) throw LawError("assignment has wrong arity");
  std::vector<int> full(layout_.variables.size(), 0);
  for (int i = 0; i < layout_.visible; ++i) {
    if (config[i] < 0 || config[i] >= layout_.variables[i].levels) {
      throw std::out_of_range("level " + std::to_string(config[i]) + " out of range for '" +
                              layout_.variables[i].name + "'");
    }
    full[i] = config[i];
  }
  Scalar total = 0;
  const int n = static_cast<int>(full.size());
  while (true) {
    Scalar prod = 1;
    for (const auto& c : cpts_) prod *= c.table(c.row_of(full), full[c.variable]);
    total += prod;
    int k = n - 1;
    while (k >= layout_.visible && ++full[k] == layout_.variables[k].levels) full[k--] = 0;
    if (k < layout_.visible) break;
  }
  return total;
}

template <typename Scalar>
ProbabilityTable<Scalar> BasicLaw<Scalar>::full_table() const {
  auto table = ProbabilityTable<Scalar>::zeros(visible_variables());
  const int n = static_cast<int>(layout_.variables.size());
  std::vector<int> full(n, 0);
  std::vector<int> visible(layout_.visible);
  while (true) {
    Scalar prod = 1;
    for (const auto& c : cpts_) prod *= c.table(c.row_of(full), full[c.variable]);
    std::copy(full.begin(), full.begin() + layout_.visible, visible.begin());
    table.at(visible) += prod;
    int k = n - 1;
    while (k >= 0 && ++full[k] == layout_.variables[k].levels) full[k--] = 0;
    if (k < 0) break;
  }
  return table;
}

template <typename Scalar>
ProbabilityTable<Scalar> BasicLaw<Scalar>::observed_table() const {
  return observed_from_full(*graph_, full_table());
}

template <typename Scalar>
bool BasicLaw<Scalar>::strictly_positive(double eps_pos) const {
  for (const auto& c : cpts_) {
    for (Eigen::Index i = 0; i < c.table.size(); ++i) {
      if (to_double(c.table.data()[i]) < eps_pos) return false;
    }
  }
  return true;
}

template class BasicLaw<double>;
template class BasicLaw<Rational>;

template <typename Scalar>
BasicLaw<Scalar> make_law(std::shared_ptr<const MissingDataGraph> graph,
                          const std::map<std::string, RowMatrix<Scalar>>& tables, int latent_levels) {
  const auto layout = LawLayout::from_graph(*graph, latent_levels);
  std::vector<RowMatrix<Scalar>> ordered;
  for (const auto& v : layout.variables) {
    auto it = tables.find(v.name);
    if (it == tables.end()) throw LawError("missing CPT for '" + v.name + "'");
    ordered.push_back(it->second);
  }
  if (tables.size() != layout.variables.size()) throw LawError("CPT given for an unknown variable");
  return BasicLaw<Scalar>(std::move(graph), std::move(ordered), latent_levels);
}

template BasicLaw<double> make_law(std::shared_ptr<const MissingDataGraph>,
                                   const std::map<std::string, RowMatrix<double>>&, int);
template BasicLaw<Rational> make_law(std::shared_ptr<const MissingDataGraph>,
                                     const std::map<std::string, RowMatrix<Rational>>&, int);

template <typename Scalar>
ProbabilityTable<Scalar> observed_from_full(const MissingDataGraph& g, const ProbabilityTable<Scalar>& full) {
  const auto& vars = full.variables();
  std::vector<int> vertices;
  std::vector<TableVariable> out_vars;
  for (const auto& tv : vars) {
    const int v = g.index(tv.name);
    vertices.push_back(v);
    if (g.vertex(v).role == VertexRole::TrueVariable) {
      const auto r = g.indicator_of(v);
      const bool indicator_present =
          r && std::any_of(vars.begin(), vars.end(), [&](const TableVariable& x) { return x.name == g.name(*r); });
      if (!indicator_present) throw LawError("table lacks the indicator of '" + tv.name + "'");
      out_vars.push_back({g.name(*g.proxy_of(v)), tv.levels + 1});
    } else {
      out_vars.push_back(tv);
    }
  }
  auto out = ProbabilityTable<Scalar>::zeros(std::move(out_vars));
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto cfg = full.config(i);
    out.at(observe(g, vertices, cfg)) += full[i];
  }
  return out;
}

template ProbabilityTable<double> observed_from_full(const MissingDataGraph&, const ProbabilityTable<double>&);
template ProbabilityTable<Rational> observed_from_full(const MissingDataGraph&, const ProbabilityTable<Rational>&);

std::vector<int> observe(const MissingDataGraph& g, std::span<const int> vertices, std::span<const int> config) {
  std::vector<int> out(config.begin(), config.end());
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    const int v = vertices[k];
    if (g.vertex(v).role != VertexRole::TrueVariable) continue;
    const int r = *g.indicator_of(v);
    const auto pos = std::find(vertices.begin(), vertices.end(), r) - vertices.begin();
    if (config[static_cast<std::size_t>(pos)] == 0) out[k] = g.vertex(v).levels;
  }
  return out;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  double tv = 0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

namespace {

std::vector<double> dirichlet_row(std::mt19937_64& rng, int levels) {
  std::vector<double> row(levels);
  double sum = 0;
  for (auto& v : row) {
    v = -std::log1p(-uniform01(rng));
    sum += v;
  }
  for (auto& v : row) v /= sum;
  return row;
}

bool rows_separated(const std::vector<std::vector<double>>& rows, double gap) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j)
      if (total_variation(rows[i], rows[j]) < gap) return false;
  return true;
}

}  // namespace

CategoricalLaw random_law(std::shared_ptr<const MissingDataGraph> graph, const SimConstraints& sc,
                          std::uint64_t seed) {
  const auto layout = LawLayout::from_graph(*graph, sc.latent_levels);
  if (!(sc.response_low >= 0 && sc.response_low <= sc.response_high && sc.response_high <= 1)) {
    throw InfeasibleConstraints("response interval must satisfy 0 <= low <= high <= 1");
  }
  if (sc.dependency_gap > 1) throw InfeasibleConstraints("dependency gap above 1 is unreachable");
  for (const auto& [name, p] : sc.fixed_response) {
    if (p < 0 || p > 1) throw InfeasibleConstraints("fixed response probability of '" + name + "' outside [0,1]");
  }
  std::mt19937_64 rng(seed);
  const MissingDataGraph& g = *graph;

  std::vector<RowMatrix<double>> tables;
  for (std::size_t i = 0; i < layout.variables.size(); ++i) {
    const auto& var = layout.variables[i];
    int rows = 1;
    for (int p : layout.parents[i]) rows *= layout.variables[p].levels;
    RowMatrix<double> t(rows, var.levels);

    const bool indicator = !var.latent() && g.vertex(var.vertex).role == VertexRole::ResponseIndicator;
    if (indicator) {
      std::vector<double> p1(rows);
      auto fixed = sc.fixed_response.find(var.name);
      if (fixed != sc.fixed_response.end()) {
        if (rows != 1) throw InfeasibleConstraints("'" + var.name + "' has parents; cannot fix p(R=1)");
        p1[0] = fixed->second;
      } else {
        const double width = sc.response_high - sc.response_low;
        if ((rows - 1) * sc.response_gap > width) {
          throw InfeasibleConstraints("cannot place " + std::to_string(rows) + " response probabilities of '" +
                                      var.name + "' with the requested gap");
        }
        bool ok = false;
        for (int attempt = 0; attempt < sc.max_attempts && !ok; ++attempt) {
          for (auto& v : p1) v = sc.response_low + width * uniform01(rng);
          auto sorted = p1;
          std::sort(sorted.begin(), sorted.end());
          ok = true;
          for (std::size_t k = 1; k < sorted.size(); ++k) ok = ok && sorted[k] - sorted[k - 1] >= sc.response_gap;
        }
        if (!ok) throw InfeasibleConstraints("response gap not reached for '" + var.name + "'");
      }
      for (int r = 0; r < rows; ++r) {
        t(r, 0) = 1.0 - p1[r];
        t(r, 1) = p1[r];
      }
    } else {
      const double gap = layout.parents[i].empty() ? 0.0 : sc.dependency_gap;
      const bool is_latent = var.latent();
      std::vector<std::vector<double>> sampled;
      bool ok = false;
      for (int attempt = 0; attempt < sc.max_attempts && !ok; ++attempt) {
        sampled.clear();
        bool positive = true;
        for (int r = 0; r < rows; ++r) {
          sampled.push_back(dirichlet_row(rng, var.levels));
          positive = positive && *std::min_element(sampled.back().begin(), sampled.back().end()) >= sc.min_probability;
        }
        ok = positive && (is_latent || rows_separated(sampled, gap));
      }
      if (!ok) throw InfeasibleConstraints("dependency constraints not reached for '" + var.name + "'");
      for (int r = 0; r < rows; ++r)
        for (int l = 0; l < var.levels; ++l) t(r, l) = sampled[r][l];
    }
    tables.push_back(std::move(t));
  }
  return CategoricalLaw(std::move(graph), std::move(tables), sc.latent_levels);
}

}  // namespace colluder
