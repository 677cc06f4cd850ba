#include "noma/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "noma/rng.hpp"

namespace noma {

void Scenario::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("scenario." + field + ": " + why);
  };
  if (n_devices < 1) fail("n_devices", "must be >= 1");
  if (!(bandwidth_hz > 0.0)) fail("bandwidth_hz", "must be > 0");
  if (!(t_max_s > 0.0)) fail("t_max_s", "must be > 0");
  if (k_common_bits < 0.0) fail("k_common_bits", "must be >= 0");
  if (!(pathloss_exp > 0.0)) fail("pathloss_exp", "must be > 0");
  if (static_cast<int>(e_max_j.size()) != n_devices)
    fail("e_max_j", "length must equal n_devices");
  for (double e : e_max_j)
    if (!(e > 0.0)) fail("e_max_j", "every entry must be > 0");
  if (!(min_dist_m > 0.0) || !(min_dist_m < cell_radius_m))
    fail("min_dist_m", "need 0 < min_dist_m < cell_radius_m");
}

Scenario Scenario::with_uniform_energy(int n, double e_each) {
  Scenario sc;
  sc.n_devices = n;
  sc.e_max_j.assign(static_cast<std::size_t>(n), e_each);
  return sc;
}

double noise_power_w(const Scenario& sc) {
  if (!(sc.bandwidth_hz > 0.0))
    throw std::invalid_argument("noise_power_w: bandwidth must be > 0");
  return std::pow(10.0, (sc.noise_psd_dbm_hz - 30.0) / 10.0) * sc.bandwidth_hz;
}

ChannelRealization sample_channel(const Scenario& sc, std::uint64_t seed) {
  sc.validate();
  const int n = sc.n_devices;
  std::mt19937_64 gen(SplitMix64::mix(seed));

  const double r0 = sc.min_dist_m;
  const double r1 = sc.cell_radius_m;
  const double sigma2 = noise_power_w(sc);

  std::vector<double> gains(n);
  for (int i = 0; i < n; ++i) {
    // Uniform by area on the annulus [r0, r1].
    const double u = uniform01(gen);
    const double d = std::sqrt(u * (r1 * r1 - r0 * r0) + r0 * r0);
    // |g|^2 of a CN(0,1) coefficient is Exp(1).
    double v = uniform01(gen);
    if (v >= 1.0) v = std::nextafter(1.0, 0.0);
    const double g2 = -std::log1p(-v);
    gains[i] = g2 * std::pow(d, -sc.pathloss_exp);
  }

  ChannelRealization ch;
  ch.sigma2_w = sigma2;
  ch.order.resize(n);
  std::iota(ch.order.begin(), ch.order.end(), 0);
  std::stable_sort(ch.order.begin(), ch.order.end(),
                   [&](int a, int b) { return gains[a] > gains[b]; });

  ch.gains.resize(n);
  ch.gamma.resize(n);
  for (int i = 0; i < n; ++i) {
    ch.gains[i] = gains[ch.order[i]];
    ch.gamma[i] = ch.gains[i] / sigma2;
  }
  return ch;
}

}  // namespace noma
