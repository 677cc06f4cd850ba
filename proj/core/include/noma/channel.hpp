#pragma once

#include <cstdint>
#include <vector>

#include "noma/scenario.hpp"

namespace noma {

/// One block-fading draw. gains/gamma are sorted by descending gamma (the
/// SIC decode order); order[i] is the original device id of sorted slot i.
struct ChannelRealization {
  std::vector<double> gains;   // |h_n|^2, sorted to match gamma
  std::vector<double> gamma;   // |h_n|^2 / sigma^2, non-increasing
  std::vector<int> order;      // sorted index -> original device id
  double sigma2_w = 0.0;
};

/// Draws device positions uniformly by area on the annulus
/// [min_dist_m, cell_radius_m], Rayleigh |g|^2 ~ Exp(1), applies d^-alpha
/// pathloss and sorts by gamma (stable: ties keep original device order).
/// Identical seeds give bit-identical realizations.
ChannelRealization sample_channel(const Scenario& sc, std::uint64_t seed);

}  // namespace noma
