#include "colluder/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace colluder {

MissingDataGraph::Builder& MissingDataGraph::Builder::vertex(std::string name, VertexRole role,
                                                             int levels) {
  vertices_.push_back(Vertex{std::move(name), role, levels});
  return *this;
}

MissingDataGraph::Builder& MissingDataGraph::Builder::directed(std::string_view from,
                                                               std::string_view to) {
  directed_.emplace_back(std::string(from), std::string(to));
  return *this;
}

MissingDataGraph::Builder& MissingDataGraph::Builder::bidirected(std::string_view a,
                                                                 std::string_view b) {
  bidirected_.emplace_back(std::string(a), std::string(b));
  return *this;
}

MissingDataGraph::Builder& MissingDataGraph::Builder::pair(std::string_view true_variable,
                                                           std::string_view indicator,
                                                           std::optional<std::string> proxy) {
  pairs_.push_back(PendingPair{std::string(true_variable), std::string(indicator), std::move(proxy)});
  return *this;
}

MissingDataGraph MissingDataGraph::Builder::build() const {
  MissingDataGraph g;
  auto add_vertex = [&g](const Vertex& v) {
    if (v.name.empty()) throw GraphError("vertex with empty name");
    // A single level is a degenerate constant; file formats ask for two or more.
    if (v.levels < 0) throw GraphError("vertex '" + v.name + "' has a negative level count");
    if (!g.by_name_.emplace(v.name, g.size()).second) {
      throw GraphError("duplicate vertex name '" + v.name + "'");
    }
    g.vertices_.push_back(v);
  };
  for (const auto& v : vertices_) add_vertex(v);

  std::vector<std::pair<std::string, std::string>> directed = directed_;
  for (const auto& p : pairs_) {
    if (p.proxy) continue;
    auto tv = g.find(p.true_variable);
    if (!tv) throw GraphError("pair references unknown vertex '" + p.true_variable + "'");
    const Vertex& t = g.vertices_[*tv];
    const int proxy_levels = t.categorical() ? t.levels + 1 : kContinuous;
    add_vertex(Vertex{p.true_variable + "*", VertexRole::Proxy, proxy_levels});
    directed.emplace_back(p.true_variable, p.true_variable + "*");
    directed.emplace_back(p.indicator, p.true_variable + "*");
  }

  const int n = g.size();
  g.parents_.assign(n, {});
  g.children_.assign(n, {});
  g.spouses_.assign(n, {});
  for (const auto& [from, to] : directed) {
    const int a = g.index(from);
    const int b = g.index(to);
    if (g.has_directed(a, b)) continue;
    g.edges_.push_back(Edge{a, b, EdgeType::Directed});
    g.parents_[b].push_back(a);
    g.children_[a].push_back(b);
  }
  for (const auto& [x, y] : bidirected_) {
    int a = g.index(x);
    int b = g.index(y);
    if (a > b) std::swap(a, b);
    if (g.has_bidirected(a, b)) continue;
    g.edges_.push_back(Edge{a, b, EdgeType::Bidirected});
    g.spouses_[a].push_back(b);
    if (a != b) g.spouses_[b].push_back(a);
  }
  for (auto& list : g.parents_) std::sort(list.begin(), list.end());
  for (auto& list : g.children_) std::sort(list.begin(), list.end());
  for (auto& list : g.spouses_) std::sort(list.begin(), list.end());

  for (const auto& p : pairs_) {
    MissingnessPair mp;
    mp.true_variable = g.index(p.true_variable);
    mp.indicator = g.index(p.indicator);
    mp.proxy = g.index(p.proxy ? *p.proxy : p.true_variable + "*");
    g.pairs_.push_back(mp);
  }
  return g;
}

int MissingDataGraph::index(std::string_view name) const {
  auto v = find(name);
  if (!v) throw GraphError("unknown vertex '" + std::string(name) + "'");
  return *v;
}

std::optional<int> MissingDataGraph::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

bool MissingDataGraph::has_directed(int from, int to) const {
  const auto& ch = children_.at(from);
  return std::find(ch.begin(), ch.end(), to) != ch.end();
}

bool MissingDataGraph::has_bidirected(int a, int b) const {
  const auto& sp = spouses_.at(a);
  return std::find(sp.begin(), sp.end(), b) != sp.end();
}

bool MissingDataGraph::has_bidirected_edges() const {
  return std::any_of(edges_.begin(), edges_.end(),
                     [](const Edge& e) { return e.type == EdgeType::Bidirected; });
}

std::optional<int> MissingDataGraph::indicator_of(int true_variable) const {
  for (const auto& p : pairs_) {
    if (p.true_variable == true_variable) return p.indicator;
  }
  return std::nullopt;
}

std::optional<int> MissingDataGraph::true_of_indicator(int indicator) const {
  for (const auto& p : pairs_) {
    if (p.indicator == indicator) return p.true_variable;
  }
  return std::nullopt;
}

std::optional<int> MissingDataGraph::proxy_of(int true_variable) const {
  for (const auto& p : pairs_) {
    if (p.true_variable == true_variable) return p.proxy;
  }
  return std::nullopt;
}

std::vector<int> MissingDataGraph::with_role(VertexRole role) const {
  std::vector<int> out;
  for (int v = 0; v < size(); ++v) {
    if (vertices_[v].role == role) out.push_back(v);
  }
  return out;
}

std::vector<int> MissingDataGraph::law_vertices() const {
  std::vector<int> out;
  for (int v = 0; v < size(); ++v) {
    if (vertices_[v].role != VertexRole::Proxy) out.push_back(v);
  }
  return out;
}

std::optional<std::vector<int>> MissingDataGraph::topological_order() const {
  const int n = size();
  std::vector<int> indegree(n, 0);
  for (int v = 0; v < n; ++v) indegree[v] = static_cast<int>(parents_[v].size());
  std::deque<int> ready;
  for (int v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop_front();
    order.push_back(v);
    for (int c : children_[v]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  if (static_cast<int>(order.size()) != n) return std::nullopt;
  return order;
}

std::vector<bool> MissingDataGraph::ancestors(std::span<const int> targets) const {
  std::vector<bool> seen(size(), false);
  std::vector<int> stack(targets.begin(), targets.end());
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = true;
    for (int p : parents_[v]) stack.push_back(p);
  }
  return seen;
}

bool ValidationReport::contains(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

ValidationReport validate_graph(const MissingDataGraph& g) {
  ValidationReport report;
  auto add = [&report](ViolationKind kind, std::string message) {
    report.violations.push_back(Violation{kind, std::move(message)});
  };

  for (const auto& e : g.edges()) {
    if (e.from == e.to) add(ViolationKind::SelfLoop, "self loop on '" + g.name(e.from) + "'");
  }
  if (!g.topological_order()) add(ViolationKind::Cycle, "directed part contains a cycle");

  for (const auto& e : g.edges()) {
    if (e.type != EdgeType::Directed) continue;
    const auto from_role = g.vertex(e.from).role;
    const auto to_role = g.vertex(e.to).role;
    if (from_role == VertexRole::ResponseIndicator &&
        (to_role == VertexRole::FullyObserved || to_role == VertexRole::TrueVariable)) {
      add(ViolationKind::IndicatorParentsSubstantive,
          "response indicator parents true variable: " + g.name(e.from) + " -> " + g.name(e.to));
    }
  }

  std::vector<int> pair_count(g.size(), 0);
  for (const auto& p : g.pairs()) {
    const auto& t = g.vertex(p.true_variable);
    const auto& r = g.vertex(p.indicator);
    const auto& x = g.vertex(p.proxy);
    if (t.role != VertexRole::TrueVariable || r.role != VertexRole::ResponseIndicator ||
        x.role != VertexRole::Proxy) {
      add(ViolationKind::PairRoleMismatch,
          "pair (" + t.name + ", " + r.name + ", " + x.name + ") has mismatched roles");
      continue;
    }
    ++pair_count[p.true_variable];
    ++pair_count[p.indicator];
    ++pair_count[p.proxy];

    std::vector<int> expected{p.true_variable, p.indicator};
    std::sort(expected.begin(), expected.end());
    std::vector<int> actual(g.parents(p.proxy).begin(), g.parents(p.proxy).end());
    if (actual != expected) {
      add(ViolationKind::ProxyParentSet,
          "proxy parent set of '" + x.name + "' must be exactly {" + t.name + ", " + r.name + "}");
    }
    const int expected_levels = t.categorical() ? t.levels + 1 : kContinuous;
    if (x.levels != expected_levels) {
      add(ViolationKind::ProxyLevels,
          "proxy '" + x.name + "' must have " + std::to_string(expected_levels) + " levels");
    }
  }

  for (int v = 0; v < g.size(); ++v) {
    const auto& vx = g.vertex(v);
    switch (vx.role) {
      case VertexRole::TrueVariable:
        if (pair_count[v] == 0) add(ViolationKind::UnpairedTrueVariable, "'" + vx.name + "' has no response indicator");
        break;
      case VertexRole::ResponseIndicator:
        if (pair_count[v] == 0) add(ViolationKind::UnpairedIndicator, "'" + vx.name + "' indicates no true variable");
        if (vx.levels != 2) add(ViolationKind::IndicatorNotBinary, "'" + vx.name + "' must be binary");
        break;
      case VertexRole::Proxy:
        if (pair_count[v] == 0) add(ViolationKind::ProxyParentSet, "proxy '" + vx.name + "' is not paired");
        if (!g.children(v).empty()) add(ViolationKind::ProxyHasChildren, "proxy '" + vx.name + "' has children");
        if (!g.spouses(v).empty()) {
          add(ViolationKind::ProxyInBidirectedEdge, "proxy '" + vx.name + "' has a bidirected edge");
        }
        break;
      case VertexRole::FullyObserved:
        break;
    }
    if (pair_count[v] > 1) add(ViolationKind::DuplicatePairing, "'" + vx.name + "' is paired more than once");
  }
  return report;
}

namespace {

// Traversal state: vertex plus whether the edge used to arrive has an
// arrowhead at that vertex.
struct Arrival {
  int vertex;
  bool head;
};

}  // namespace

std::optional<Walk> m_connecting_walk(const MissingDataGraph& g, std::span<const int> a, std::span<const int> b,
                                     std::span<const int> z) {
  const int n = g.size();
  std::vector<char> in_a(n, 0), in_b(n, 0), in_z(n, 0);
  for (int v : a) in_a.at(v) = 1;
  for (int v : b) in_b.at(v) = 1;
  for (int v : z) in_z.at(v) = 1;
  for (int v = 0; v < n; ++v) {
    if (in_a[v] + in_b[v] + in_z[v] > 1) {
      throw std::invalid_argument("m_separated: sets must be disjoint ('" + g.name(v) + "')");
    }
  }
  const std::vector<bool> anc_z = g.ancestors(z);

  // State 2v + head: at v, arrived with (head) or without an arrowhead at v.
  // from[state] = predecessor state, or -1 for a start edge leaving A.
  constexpr int kUnseen = -2;
  std::vector<int> from(2 * static_cast<std::size_t>(n), kUnseen);
  std::vector<int> origin(2 * static_cast<std::size_t>(n), -1);
  std::vector<WalkLink> link(2 * static_cast<std::size_t>(n), WalkLink::Forward);
  std::deque<Arrival> queue;
  auto push = [&](int v, bool head, int pred, int start, WalkLink how) {
    const auto state = 2 * static_cast<std::size_t>(v) + (head ? 1 : 0);
    if (from[state] == kUnseen) {
      from[state] = pred;
      origin[state] = start;
      link[state] = how;
      queue.push_back({v, head});
    }
  };
  auto leave = [&](int v, auto&& emit) {
    for (int c : g.children(v)) emit(c, true, false, WalkLink::Forward);
    for (int p : g.parents(v)) emit(p, false, true, WalkLink::Backward);
    for (int s : g.spouses(v)) emit(s, true, true, WalkLink::Bidirected);
  };

  for (int s : a) {
    leave(s, [&](int w, bool head_at_w, bool, WalkLink how) { push(w, head_at_w, -1, s, how); });
  }
  while (!queue.empty()) {
    const Arrival cur = queue.front();
    queue.pop_front();
    const int state = 2 * cur.vertex + (cur.head ? 1 : 0);
    if (in_b[cur.vertex]) {
      Walk walk;
      for (int st = state; st >= 0; st = from[st]) {
        walk.vertices.push_back(st / 2);
        walk.links.push_back(link[st]);
        if (from[st] < 0) walk.vertices.push_back(origin[st]);
      }
      std::reverse(walk.vertices.begin(), walk.vertices.end());
      std::reverse(walk.links.begin(), walk.links.end());
      return walk;
    }
    if (in_a[cur.vertex]) continue;
    leave(cur.vertex, [&](int w, bool head_at_w, bool head_at_cur, WalkLink how) {
      const bool collider = cur.head && head_at_cur;
      const bool open = collider ? anc_z[cur.vertex] : !in_z[cur.vertex];
      if (open) push(w, head_at_w, state, -1, how);
    });
  }
  return std::nullopt;
}

bool m_separated(const MissingDataGraph& g, std::span<const int> a, std::span<const int> b,
                 std::span<const int> z) {
  return !m_connecting_walk(g, a, b, z).has_value();
}

std::string to_string(const MissingDataGraph& g, const Walk& walk) {
  std::string out;
  for (std::size_t k = 0; k < walk.vertices.size(); ++k) {
    if (k > 0) {
      switch (walk.links[k - 1]) {
        case WalkLink::Forward: out += " -> "; break;
        case WalkLink::Backward: out += " <- "; break;
        case WalkLink::Bidirected: out += " <-> "; break;
      }
    }
    out += g.name(walk.vertices[k]);
  }
  return out;
}

bool m_separated(const MissingDataGraph& g, const std::vector<std::string>& a,
                 const std::vector<std::string>& b, const std::vector<std::string>& z) {
  auto resolve = [&g](const std::vector<std::string>& names) {
    std::vector<int> out;
    out.reserve(names.size());
    for (const auto& s : names) out.push_back(g.index(s));
    return out;
  };
  return m_separated(g, resolve(a), resolve(b), resolve(z));
}

std::vector<Colluder> find_colluders(const MissingDataGraph& g) {
  std::vector<Colluder> out;
  for (int ry : g.with_role(VertexRole::ResponseIndicator)) {
    for (int rx : g.parents(ry)) {
      if (g.vertex(rx).role != VertexRole::ResponseIndicator) continue;
      auto x = g.true_of_indicator(rx);
      if (!x || !g.has_directed(*x, ry)) continue;
      out.push_back(Colluder{*x, rx, ry});
    }
  }
  return out;
}

std::vector<Edge> find_self_censoring(const MissingDataGraph& g) {
  std::vector<Edge> out;
  for (const auto& p : g.pairs()) {
    if (g.has_directed(p.true_variable, p.indicator)) {
      out.push_back(Edge{p.true_variable, p.indicator, EdgeType::Directed});
    }
  }
  return out;
}

std::string describe(const MissingDataGraph& g, const Colluder& c) {
  return "{" + g.name(c.true_variable) + ", " + g.name(c.response_of_true) + "} of " +
         g.name(c.target_indicator);
}

std::string_view to_string(VertexRole role) {
  switch (role) {
    case VertexRole::FullyObserved: return "O";
    case VertexRole::TrueVariable: return "X1";
    case VertexRole::Proxy: return "X";
    case VertexRole::ResponseIndicator: return "R";
  }
  return "?";
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Cycle: return "cycle";
    case ViolationKind::SelfLoop: return "self_loop";
    case ViolationKind::IndicatorParentsSubstantive: return "indicator_parents_substantive";
    case ViolationKind::ProxyParentSet: return "proxy_parent_set";
    case ViolationKind::ProxyHasChildren: return "proxy_has_children";
    case ViolationKind::ProxyLevels: return "proxy_levels";
    case ViolationKind::ProxyInBidirectedEdge: return "proxy_in_bidirected_edge";
    case ViolationKind::UnpairedTrueVariable: return "unpaired_true_variable";
    case ViolationKind::UnpairedIndicator: return "unpaired_indicator";
    case ViolationKind::PairRoleMismatch: return "pair_role_mismatch";
    case ViolationKind::DuplicatePairing: return "duplicate_pairing";
    case ViolationKind::IndicatorNotBinary: return "indicator_not_binary";
  }
  return "?";
}

}  // namespace colluder
