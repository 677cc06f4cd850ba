#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "noma/channel.hpp"

using namespace noma;

namespace {

// Annulus squeezed to a single radius, so distances are known exactly up to
// 1e-9 and |g|^2 can be recovered from the output.
Scenario pinched(int n, double dist) {
  Scenario sc = Scenario::with_uniform_energy(n, 0.2);
  sc.noise_psd_dbm_hz = 30.0;  // sigma^2 = 1 W at W = 1 Hz
  sc.bandwidth_hz = 1.0;
  sc.min_dist_m = dist;
  sc.cell_radius_m = dist * (1.0 + 1e-12);
  return sc;
}

}  // namespace

TEST_CASE("noise power conversions") {
  Scenario sc = Scenario::with_uniform_energy(1, 0.2);
  sc.noise_psd_dbm_hz = -174.0;
  sc.bandwidth_hz = 1.0;
  CHECK(noise_power_w(sc) == doctest::Approx(3.9810717055349695e-21).epsilon(1e-12));
  sc.bandwidth_hz = 1e6;
  CHECK(noise_power_w(sc) == doctest::Approx(3.9810717055349695e-15).epsilon(1e-12));
  sc.noise_psd_dbm_hz = 0.0;
  sc.bandwidth_hz = 1.0;
  CHECK(noise_power_w(sc) == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("unit pipeline: gamma equals |g|^2 d^-alpha / sigma^2") {
  const Scenario sc = pinched(1, 1.0);
  const ChannelRealization ch = sample_channel(sc, 7);
  CHECK(ch.sigma2_w == doctest::Approx(1.0));
  CHECK(ch.gamma[0] == doctest::Approx(ch.gains[0]));
  CHECK(ch.gamma[0] > 0.0);
}

TEST_CASE("sampling determinism and ordering") {
  Scenario sc = Scenario::with_uniform_energy(4, 0.2);
  const ChannelRealization a = sample_channel(sc, 42);
  const ChannelRealization b = sample_channel(sc, 42);
  CHECK(a.gains == b.gains);
  CHECK(a.gamma == b.gamma);
  CHECK(a.order == b.order);

  const ChannelRealization c = sample_channel(sc, 43);
  CHECK(a.gains != c.gains);

  for (int i = 0; i + 1 < 4; ++i) CHECK(a.gamma[i] >= a.gamma[i + 1]);
  std::set<int> ids(a.order.begin(), a.order.end());
  CHECK(ids.size() == 4);
  CHECK(*ids.begin() == 0);
  CHECK(*ids.rbegin() == 3);
}

TEST_CASE("gamma positive and finite across draws") {
  Scenario sc = Scenario::with_uniform_energy(3, 0.2);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const ChannelRealization ch = sample_channel(sc, s);
    for (double g : ch.gamma) {
      CHECK(g > 0.0);
      CHECK(std::isfinite(g));
    }
  }
}

TEST_CASE("|g|^2 is unit-mean exponential over many draws") {
  const Scenario sc = pinched(4, 1.0);
  double sum = 0.0;
  int count = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const ChannelRealization ch = sample_channel(sc, s);
    for (double g : ch.gains) {
      sum += g;  // d = 1 so |h|^2 = |g|^2
      ++count;
    }
  }
  CHECK(sum / count == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("pathloss monotonicity with the fading draw held fixed") {
  // Same seed consumes the same uniforms, so |g|^2 matches between the two
  // pinched scenarios and only the distance differs.
  const Scenario near = pinched(4, 1.0);
  const Scenario far = pinched(4, 2.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ChannelRealization a = sample_channel(near, s);
    const ChannelRealization b = sample_channel(far, s);
    for (int i = 0; i < 4; ++i) CHECK(b.gains[i] < a.gains[i]);
  }
}

TEST_CASE("sampling rejects invalid scenarios") {
  Scenario sc = Scenario::with_uniform_energy(1, 0.2);
  sc.n_devices = 0;
  sc.e_max_j.clear();
  CHECK_THROWS_AS(sample_channel(sc, 1), std::invalid_argument);
}
