#pragma once

// Brute-force m-separation by enumerating every simple path. Test-only; shares
// nothing with the reachability implementation it checks.

#include <functional>
#include <utility>
#include <vector>

namespace oracle {

struct MixedGraph {
  int n = 0;
  std::vector<std::pair<int, int>> directed;    // from, to
  std::vector<std::pair<int, int>> bidirected;  // unordered
};

inline bool separated_by_paths(const MixedGraph& g, const std::vector<int>& a, const std::vector<int>& b,
                               const std::vector<int>& z) {
  std::vector<bool> in_z(g.n, false), in_b(g.n, false);
  for (int v : z) in_z[v] = true;
  for (int v : b) in_b[v] = true;

  // A vertex is "activated as a collider" if it or any descendant is in Z.
  std::vector<bool> desc_in_z(g.n, false);
  for (int v = 0; v < g.n; ++v) {
    std::vector<bool> seen(g.n, false);
    std::vector<int> stack{v};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      if (seen[u]) continue;
      seen[u] = true;
      if (in_z[u]) desc_in_z[v] = true;
      for (auto [f, t] : g.directed)
        if (f == u) stack.push_back(t);
    }
  }

  // Incident edge list: (neighbor, arrowhead at self, arrowhead at neighbor).
  struct Step {
    int to;
    bool head_here;
    bool head_there;
  };
  std::vector<std::vector<Step>> adj(g.n);
  for (auto [f, t] : g.directed) {
    adj[f].push_back({t, false, true});
    adj[t].push_back({f, true, false});
  }
  for (auto [x, y] : g.bidirected) {
    adj[x].push_back({y, true, true});
    adj[y].push_back({x, true, true});
  }

  bool connected = false;
  std::vector<bool> on_path(g.n, false);
  // head_in: arrowhead at `v` on the edge we arrived by.
  std::function<void(int, bool, bool)> walk = [&](int v, bool head_in, bool is_start) {
    if (connected) return;
    if (!is_start && in_b[v]) {
      connected = true;
      return;
    }
    on_path[v] = true;
    for (const auto& s : adj[v]) {
      if (on_path[s.to]) continue;
      if (!is_start) {
        const bool collider = head_in && s.head_here;
        const bool active = collider ? desc_in_z[v] : !in_z[v];
        if (!active) continue;
      }
      walk(s.to, s.head_there, false);
    }
    on_path[v] = false;
  };
  for (int s : a) walk(s, false, true);
  return !connected;
}

}  // namespace oracle
