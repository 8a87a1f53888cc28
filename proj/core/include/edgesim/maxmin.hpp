#pragma once

#include <cstddef>
#include <vector>

namespace edgesim {

/// One flow for the fluid bandwidth allocator. Inelastic flows (UDP) are
/// capped at rate_cap_bps and are served before elastic flows; elastic
/// flows (TCP) split the residual max-min fairly.
struct MaxMinFlow {
  bool elastic{true};
  double rate_cap_bps{0};     // ignored for elastic flows
  std::vector<size_t> links;  // directed link ids the flow crosses
};

/// Progressive-filling max-min allocation. Inelastic flows first receive
/// min(cap, fair share of raw capacity); elastic flows then water-fill the
/// residual. Returns one rate per flow, in input order.
std::vector<double> maxmin_allocate(const std::vector<MaxMinFlow>& flows,
                                    const std::vector<double>& capacity_bps);

}  // namespace edgesim
