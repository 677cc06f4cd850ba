#pragma once

#include <span>
#include <utility>
#include <vector>

#include "noma/model.hpp"

namespace noma {

/// Jain's index (sum x)^2 / (N sum x^2) in [1/N, 1]. The all-zero vector
/// returns 1 by convention; *vacuous is set when that convention fired.
/// Negative entries raise std::domain_error.
double jain_index(std::span<const double> x, bool* vacuous = nullptr);

/// Per-device offloaded bits of each stage at an allocation.
std::pair<std::vector<double>, std::vector<double>> stage_bits(
    const Allocation& a, const ChannelRealization& ch, double w_hz);

struct StageRatios {
  std::vector<double> energy_ratio;  // E_n^C / E_n^I, +inf entries flagged
  double time_ratio = 0.0;           // tau^C / tau^I
  bool has_infinite = false;
};

/// Element-wise stage ratios; zero denominators produce +inf and the flag,
/// never a throw.
StageRatios stage_ratios(const Allocation& a);

}  // namespace noma
