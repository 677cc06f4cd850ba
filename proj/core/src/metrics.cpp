#include "noma/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace noma {

double jain_index(std::span<const double> x, bool* vacuous) {
  if (vacuous) *vacuous = false;
  if (x.empty()) throw std::domain_error("jain_index: empty input");
  double sum = 0.0, sumsq = 0.0;
  for (double v : x) {
    if (v < 0.0) throw std::domain_error("jain_index: negative entry");
    sum += v;
    sumsq += v * v;
  }
  if (sumsq == 0.0) {
    if (vacuous) *vacuous = true;
    return 1.0;
  }
  return (sum * sum) / (static_cast<double>(x.size()) * sumsq);
}

std::pair<std::vector<double>, std::vector<double>> stage_bits(
    const Allocation& a, const ChannelRealization& ch, double w_hz) {
  const int n = static_cast<int>(a.e_c.size());
  std::vector<double> common(n), individual(n);
  for (int i = 0; i < n; ++i) {
    common[i] = common_rate_bits(i, a.tau_c, a.e_c, ch.gamma, w_hz);
    individual[i] = individual_rate_bits(i, a.tau_i, a.e_i, ch.gamma, w_hz);
  }
  return {std::move(common), std::move(individual)};
}

StageRatios stage_ratios(const Allocation& a) {
  StageRatios r;
  const int n = static_cast<int>(a.e_c.size());
  r.energy_ratio.resize(n);
  for (int i = 0; i < n; ++i) {
    if (a.e_i[i] > 0.0) {
      r.energy_ratio[i] = a.e_c[i] / a.e_i[i];
    } else if (a.e_c[i] == 0.0) {
      r.energy_ratio[i] = 0.0;
    } else {
      r.energy_ratio[i] = std::numeric_limits<double>::infinity();
      r.has_infinite = true;
    }
  }
  if (a.tau_i > 0.0) {
    r.time_ratio = a.tau_c / a.tau_i;
  } else if (a.tau_c == 0.0) {
    r.time_ratio = 0.0;
  } else {
    r.time_ratio = std::numeric_limits<double>::infinity();
    r.has_infinite = true;
  }
  return r;
}

}  // namespace noma
