#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace colluder {

enum class VertexRole { FullyObserved, TrueVariable, Proxy, ResponseIndicator };

/// Level count used for vertices declared "continuous".
inline constexpr int kContinuous = 0;

struct Vertex {
  std::string name;
  VertexRole role = VertexRole::FullyObserved;
  int levels = 2;

  bool categorical() const { return levels != kContinuous; }
};

enum class EdgeType { Directed, Bidirected };

struct Edge {
  int from = -1;
  int to = -1;
  EdgeType type = EdgeType::Directed;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Links a true variable X(1) with its response indicator R_X and proxy X.
struct MissingnessPair {
  int true_variable = -1;
  int indicator = -1;
  int proxy = -1;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable missing-data DAG/ADMG. Construct via MissingDataGraph::Builder.
///
/// The graph is allowed to violate the structural restrictions of missing
/// data models (cycles, indicators parenting substantive variables, ...);
/// those are reported by validate_graph. Only name-level problems (unknown
/// or duplicate names) are rejected at build time.
class MissingDataGraph {
 public:
  class Builder {
   public:
    Builder& vertex(std::string name, VertexRole role, int levels = 2);
    Builder& directed(std::string_view from, std::string_view to);
    Builder& bidirected(std::string_view a, std::string_view b);
    /// Declares X(1)/R_X pairing. Without an explicit proxy a vertex named
    /// `<true>*` is generated together with its two deterministic edges.
    Builder& pair(std::string_view true_variable, std::string_view indicator,
                  std::optional<std::string> proxy = std::nullopt);

    MissingDataGraph build() const;

   private:
    struct PendingPair {
      std::string true_variable;
      std::string indicator;
      std::optional<std::string> proxy;
    };
    std::vector<Vertex> vertices_;
    std::vector<std::pair<std::string, std::string>> directed_;
    std::vector<std::pair<std::string, std::string>> bidirected_;
    std::vector<PendingPair> pairs_;
  };

  int size() const { return static_cast<int>(vertices_.size()); }
  const Vertex& vertex(int v) const { return vertices_.at(v); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::string& name(int v) const { return vertices_.at(v).name; }

  /// Throws GraphError for unknown names.
  int index(std::string_view name) const;
  std::optional<int> find(std::string_view name) const;

  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const int> parents(int v) const { return parents_.at(v); }
  std::span<const int> children(int v) const { return children_.at(v); }
  std::span<const int> spouses(int v) const { return spouses_.at(v); }

  bool has_directed(int from, int to) const;
  bool has_bidirected(int a, int b) const;
  bool has_bidirected_edges() const;

  const std::vector<MissingnessPair>& pairs() const { return pairs_; }
  std::optional<int> indicator_of(int true_variable) const;
  std::optional<int> true_of_indicator(int indicator) const;
  std::optional<int> proxy_of(int true_variable) const;

  std::vector<int> with_role(VertexRole role) const;
  /// Non-proxy vertices in index order: the variables of the full law.
  std::vector<int> law_vertices() const;

  /// Topological order of the directed part, or nullopt if it has a cycle.
  std::optional<std::vector<int>> topological_order() const;

  /// Ancestors of `targets` (inclusive) along directed edges.
  std::vector<bool> ancestors(std::span<const int> targets) const;

 private:
  std::vector<Vertex> vertices_;
  std::unordered_map<std::string, int> by_name_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> spouses_;
  std::vector<MissingnessPair> pairs_;
};

enum class ViolationKind {
  Cycle,
  SelfLoop,
  IndicatorParentsSubstantive,
  ProxyParentSet,
  ProxyHasChildren,
  ProxyLevels,
  ProxyInBidirectedEdge,
  UnpairedTrueVariable,
  UnpairedIndicator,
  PairRoleMismatch,
  DuplicatePairing,
  IndicatorNotBinary,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool valid() const { return violations.empty(); }
  bool contains(ViolationKind kind) const;
};

ValidationReport validate_graph(const MissingDataGraph& g);

/// m-separation of A and B given Z; d-separation when no bidirected edges.
/// Throws std::invalid_argument when the sets overlap.
bool m_separated(const MissingDataGraph& g, std::span<const int> a, std::span<const int> b,
                 std::span<const int> z);
bool m_separated(const MissingDataGraph& g, const std::vector<std::string>& a,
                 const std::vector<std::string>& b, const std::vector<std::string>& z);

enum class WalkLink { Forward, Backward, Bidirected };

/// Vertex sequence of an m-connecting walk; links[k] joins vertices[k] and
/// vertices[k + 1].
struct Walk {
  std::vector<int> vertices;
  std::vector<WalkLink> links;
};

/// Shortest m-connecting walk from A to B given Z, if any.
std::optional<Walk> m_connecting_walk(const MissingDataGraph& g, std::span<const int> a, std::span<const int> b,
                                      std::span<const int> z);
/// "RX -> RY <- X <-> Y"
std::string to_string(const MissingDataGraph& g, const Walk& walk);

/// {X(1), R_X} is a colluder of R_Y.
struct Colluder {
  int true_variable = -1;
  int response_of_true = -1;
  int target_indicator = -1;

  friend bool operator==(const Colluder&, const Colluder&) = default;
};

std::vector<Colluder> find_colluders(const MissingDataGraph& g);
std::vector<Edge> find_self_censoring(const MissingDataGraph& g);

std::string describe(const MissingDataGraph& g, const Colluder& c);
std::string_view to_string(VertexRole role);
std::string_view to_string(ViolationKind kind);

}  // namespace colluder
