#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "noma/metrics.hpp"

using namespace noma;

TEST_CASE("jain index closed forms") {
  CHECK(jain_index(std::vector<double>{1, 1, 1, 1}) == doctest::Approx(1.0));
  CHECK(jain_index(std::vector<double>{1, 0, 0, 0}) == doctest::Approx(0.25));
  CHECK(jain_index(std::vector<double>{1, 2, 3}) ==
        doctest::Approx(6.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("jain index bounds and scale invariance") {
  std::vector<double> x{0.3, 0.0, 2.5, 1.1};
  const double j = jain_index(x);
  CHECK(j >= 1.0 / 4.0);
  CHECK(j <= 1.0);
  for (double c : {0.1, 3.0, 1e6}) {
    std::vector<double> scaled = x;
    for (double& v : scaled) v *= c;
    CHECK(jain_index(scaled) == doctest::Approx(j).epsilon(1e-12));
  }
}

TEST_CASE("jain index edge cases") {
  bool vacuous = false;
  CHECK(jain_index(std::vector<double>{0.0, 0.0}, &vacuous) == 1.0);
  CHECK(vacuous);
  jain_index(std::vector<double>{1.0, 2.0}, &vacuous);
  CHECK_FALSE(vacuous);
  CHECK_THROWS_AS(jain_index(std::vector<double>{1.0, -0.1}), std::domain_error);
}

TEST_CASE("stage bits at a binding stage-1 solution") {
  ChannelRealization ch;
  ch.gamma = {1.0};
  ch.gains = {1.0};
  ch.order = {0};
  ch.sigma2_w = 1.0;
  Allocation a = Allocation::zeros(1);
  a.tau_c = 1.0;
  a.e_c = {1.0};
  a.tau_i = 0.5;
  a.e_i = {0.5};
  auto [common, individual] = stage_bits(a, ch, 1.0);
  CHECK(common[0] == doctest::Approx(1.0).epsilon(1e-12));  // delivers K = 1 bit
  CHECK(individual[0] == doctest::Approx(0.5 * std::log2(2.0)).epsilon(1e-12));
}

TEST_CASE("stage bits zero energy gives zero bits") {
  ChannelRealization ch;
  ch.gamma = {2.0, 1.0};
  ch.gains = ch.gamma;
  ch.order = {0, 1};
  ch.sigma2_w = 1.0;
  Allocation a = Allocation::zeros(2);
  a.tau_c = 0.5;
  a.tau_i = 0.5;
  a.e_c = {0.0, 0.3};
  a.e_i = {0.1, 0.1};
  auto [common, individual] = stage_bits(a, ch, 1.0);
  CHECK(common[0] == 0.0);
  CHECK(common[1] > 0.0);
  CHECK(individual[0] > 0.0);
}

TEST_CASE("stage ratios") {
  Allocation a = Allocation::zeros(2);
  a.tau_c = 0.5;
  a.tau_i = 0.5;
  a.e_c = {0.0, 0.0};
  a.e_i = {0.1, 0.2};
  SUBCASE("equal slots give ratio one, K=0 energies give zero") {
    const StageRatios r = stage_ratios(a);
    CHECK(r.time_ratio == doctest::Approx(1.0));
    CHECK(r.energy_ratio[0] == 0.0);
    CHECK(r.energy_ratio[1] == 0.0);
    CHECK_FALSE(r.has_infinite);
  }
  SUBCASE("zero denominator flags an infinite ratio") {
    a.e_c[0] = 0.05;
    a.e_i[0] = 0.0;
    const StageRatios r = stage_ratios(a);
    CHECK(std::isinf(r.energy_ratio[0]));
    CHECK(r.has_infinite);
  }
}
