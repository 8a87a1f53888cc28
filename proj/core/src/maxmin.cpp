#include "edgesim/maxmin.hpp"

#include <algorithm>
#include <limits>

namespace edgesim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Uniformly raises every flow in `active` until a link saturates or a
/// capped flow reaches its cap, freezing as it goes.
void fill(const std::vector<MaxMinFlow>& flows, std::vector<size_t> active,
          std::vector<double>& residual, std::vector<double>& rates,
          bool respect_caps) {
  const size_t n_links = residual.size();
  std::vector<double> eps(n_links);
  for (size_t l = 0; l < n_links; ++l) eps[l] = 1e-9 * (1.0 + residual[l]);

  while (!active.empty()) {
    std::vector<size_t> count(n_links, 0);
    for (size_t f : active) {
      for (size_t l : flows[f].links) ++count[l];
    }
    double step = kInf;
    for (size_t l = 0; l < n_links; ++l) {
      if (count[l] == 0) continue;
      step = std::min(step, std::max(0.0, residual[l]) /
                                static_cast<double>(count[l]));
    }
    if (respect_caps) {
      for (size_t f : active) {
        step = std::min(step, flows[f].rate_cap_bps - rates[f]);
      }
    }
    if (step == kInf) break;  // flows crossing no links get nothing
    step = std::max(step, 0.0);

    for (size_t f : active) rates[f] += step;
    for (size_t l = 0; l < n_links; ++l) {
      if (count[l] > 0) residual[l] -= step * static_cast<double>(count[l]);
    }

    std::vector<size_t> next;
    for (size_t f : active) {
      bool frozen = false;
      if (respect_caps) {
        const double cap = flows[f].rate_cap_bps;
        if (rates[f] >= cap - 1e-9 * (1.0 + cap)) {
          rates[f] = cap;  // snap away the accumulated rounding
          frozen = true;
        }
      }
      for (size_t l : flows[f].links) {
        if (residual[l] <= eps[l]) frozen = true;
      }
      if (!frozen) next.push_back(f);
    }
    if (next.size() == active.size()) break;  // numerical stall
    active = std::move(next);
  }
}

}  // namespace

std::vector<double> maxmin_allocate(const std::vector<MaxMinFlow>& flows,
                                    const std::vector<double>& capacity_bps) {
  std::vector<double> rates(flows.size(), 0.0);
  std::vector<double> residual = capacity_bps;

  std::vector<size_t> udp;
  std::vector<size_t> tcp;
  for (size_t f = 0; f < flows.size(); ++f) {
    if (flows[f].links.empty()) continue;
    (flows[f].elastic ? tcp : udp).push_back(f);
  }

  // Inelastic traffic does not back off, so it claims capacity first.
  fill(flows, std::move(udp), residual, rates, /*respect_caps=*/true);
  for (double& r : residual) r = std::max(r, 0.0);
  fill(flows, std::move(tcp), residual, rates, /*respect_caps=*/false);
  return rates;
}

}  // namespace edgesim
