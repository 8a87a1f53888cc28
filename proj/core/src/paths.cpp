#include "edgesim/paths.hpp"

#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

namespace edgesim {

namespace {

double edge_cost(const Topology& topo, NodeId from, NodeId to,
                 const EdgeWeightFn& weight) {
  return weight ? weight(from, to) : topo.edge_weight(from, to);
}

/// Dijkstra distances from every node to `target`, following edges in
/// their forward direction (cost of u→v counts toward dist(u)).
std::map<NodeId, double> distances_to(const Topology& topo, NodeId target,
                                      const EdgeWeightFn& weight) {
  std::map<NodeId, double> dist;
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[target] = 0.0;
  heap.push({0.0, target});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    // Relax incoming edges v→u.
    for (const Neighbor& n : topo.neighbors(u)) {
      const NodeId v = n.node;
      const double c = edge_cost(topo, v, u, weight);
      if (c < 0) throw std::invalid_argument("negative edge weight");
      const double nd = d + c;
      auto it = dist.find(v);
      if (it == dist.end() || nd < it->second) {
        dist[v] = nd;
        heap.push({nd, v});
      }
    }
  }
  return dist;
}

}  // namespace

std::optional<std::vector<NodeId>> shortest_path(const Topology& topo,
                                                 NodeId src, NodeId dst,
                                                 const EdgeWeightFn& weight) {
  if (!topo.has_node(src) || !topo.has_node(dst)) {
    throw std::invalid_argument("shortest_path: unknown node");
  }
  if (src == dst) return std::vector<NodeId>{src};

  const auto dist = distances_to(topo, dst, weight);
  if (!dist.count(src)) return std::nullopt;

  // Walk greedily from src, always taking the smallest neighbor that lies
  // on some shortest path. Neighbor lists are sorted, so the first match
  // yields the lexicographically smallest node sequence.
  constexpr double kSlack = 1e-12;
  std::vector<NodeId> path{src};
  NodeId u = src;
  std::set<NodeId> seen{src};
  while (u != dst) {
    bool advanced = false;
    for (const Neighbor& n : topo.neighbors(u)) {
      if (seen.count(n.node)) continue;
      auto it = dist.find(n.node);
      if (it == dist.end()) continue;
      const double via = edge_cost(topo, u, n.node, weight) + it->second;
      const double du = dist.at(u);
      if (via <= du + kSlack * (1.0 + du)) {
        path.push_back(n.node);
        seen.insert(n.node);
        u = n.node;
        advanced = true;
        break;
      }
    }
    if (!advanced) return std::nullopt;  // numerical dead end; unreachable
  }
  return path;
}

std::vector<std::vector<NodeId>> all_simple_paths(const Topology& topo,
                                                  NodeId src, NodeId dst) {
  if (!topo.has_node(src) || !topo.has_node(dst)) {
    throw std::invalid_argument("all_simple_paths: unknown node");
  }
  std::vector<std::vector<NodeId>> result;
  std::vector<NodeId> stack{src};
  std::set<NodeId> on_path{src};

  // Iterative DFS with sorted neighbor expansion gives lexicographic
  // output order.
  std::function<void()> dfs = [&] {
    const NodeId u = stack.back();
    if (u == dst) {
      result.push_back(stack);
      return;
    }
    for (const Neighbor& n : topo.neighbors(u)) {
      if (on_path.count(n.node)) continue;
      stack.push_back(n.node);
      on_path.insert(n.node);
      dfs();
      on_path.erase(n.node);
      stack.pop_back();
    }
  };
  dfs();
  return result;
}

double path_cost(const Topology& topo, const std::vector<NodeId>& path,
                 const EdgeWeightFn& weight) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    total += edge_cost(topo, path[i], path[i + 1], weight);
  }
  return total;
}

}  // namespace edgesim
