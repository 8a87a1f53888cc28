#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "edgesim/topology.hpp"

namespace edgesim {

/// Directed edge cost override. When empty, the topology's stored
/// directional weights are used.
using EdgeWeightFn = std::function<double(NodeId from, NodeId to)>;

/// Minimum-total-weight path over powered-on links (Dijkstra semantics).
/// Among equal-cost paths the lexicographically smallest node sequence
/// wins. Returns nullopt when dst is unreachable.
std::optional<std::vector<NodeId>> shortest_path(
    const Topology& topo, NodeId src, NodeId dst,
    const EdgeWeightFn& weight = {});

/// Every loop-free path from src to dst over powered-on links, in
/// lexicographic order of the node sequences. Empty when unreachable.
std::vector<std::vector<NodeId>> all_simple_paths(const Topology& topo,
                                                  NodeId src, NodeId dst);

/// Sum of directed edge weights along a path.
double path_cost(const Topology& topo, const std::vector<NodeId>& path,
                 const EdgeWeightFn& weight = {});

}  // namespace edgesim
