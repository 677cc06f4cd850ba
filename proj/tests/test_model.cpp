#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "noma/model.hpp"
#include "noma/rng.hpp"

using namespace noma;

namespace {

ChannelRealization synthetic_channel(std::vector<double> gamma) {
  ChannelRealization ch;
  ch.sigma2_w = 1.0;
  ch.gamma = std::move(gamma);
  ch.gains = ch.gamma;
  ch.order.resize(ch.gamma.size());
  for (std::size_t i = 0; i < ch.order.size(); ++i)
    ch.order[i] = static_cast<int>(i);
  return ch;
}

std::vector<double> random_desc(std::mt19937_64& g, int n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * uniform01(g);
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

}  // namespace

TEST_CASE("common rate closed forms") {
  const std::vector<double> g1{1.0};
  CHECK(common_rate_bits(0, 1.0, std::vector<double>{1.0}, g1, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> g2{1.0, 1.0};
  const std::vector<double> e2{1.0, 2.0};  // E_1 gamma_1 = 1, E_2 gamma_2 = 2
  CHECK(common_rate_bits(0, 1.0, e2, g2, 1.0) ==
        doctest::Approx(std::log2(4.0 / 3.0)).epsilon(1e-12));
  CHECK(common_rate_bits(1, 1.0, e2, g2, 1.0) ==
        doctest::Approx(std::log2(3.0)).epsilon(1e-12));

  const std::vector<double> ez{0.0, 2.0};
  CHECK(common_rate_bits(0, 1.0, ez, g2, 1.0) == 0.0);
}

TEST_CASE("zero slot duration") {
  const std::vector<double> g{1.0};
  CHECK(common_rate_bits(0, 0.0, std::vector<double>{0.0}, g, 1.0) == 0.0);
  CHECK_THROWS_AS(common_rate_bits(0, 0.0, std::vector<double>{1.0}, g, 1.0),
                  std::domain_error);
  CHECK(common_sum_rate_bits(0.0, std::vector<double>{0.0}, g, 1.0) == 0.0);
  CHECK_THROWS_AS(common_sum_rate_bits(0.0, std::vector<double>{1.0}, g, 1.0),
                  std::domain_error);
}

TEST_CASE("telescoping identity, exact two-device case") {
  const std::vector<double> g2{1.0, 1.0};
  const std::vector<double> e2{1.0, 2.0};
  const double sum = common_sum_rate_bits(1.0, e2, g2, 1.0);
  CHECK(sum == doctest::Approx(2.0).epsilon(1e-12));
  const double parts =
      common_rate_bits(0, 1.0, e2, g2, 1.0) + common_rate_bits(1, 1.0, e2, g2, 1.0);
  CHECK(parts == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("telescoping identity on random instances up to N=8") {
  std::mt19937_64 gen(123);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 1 + static_cast<int>(uniform01(gen) * 8);
    const auto gamma = random_desc(gen, n, 1e3, 1e9);
    std::vector<double> e(n);
    for (double& x : e) x = 0.3 * uniform01(gen);
    const double tau = 0.1 + uniform01(gen);
    const double w = 1e6;
    const double sum = common_sum_rate_bits(tau, e, gamma, w);
    double parts = 0.0;
    for (int i = 0; i < n; ++i) parts += common_rate_bits(i, tau, e, gamma, w);
    CHECK(parts == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("individual rate examples") {
  const std::vector<double> g1{1.0};
  CHECK(individual_rate_bits(0, 1.0, std::vector<double>{3.0}, g1, 1.0) ==
        doctest::Approx(2.0).epsilon(1e-12));

  const std::vector<double> g2{1.0, 1.0};
  const std::vector<double> e2{5.0, 1.0};
  CHECK(individual_rate_bits(1, 1.0, e2, g2, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("individual rate monotone in own energy") {
  const std::vector<double> g{2.0, 1.0, 0.5};
  std::vector<double> e{0.1, 0.1, 0.1};
  double prev = individual_rate_bits(1, 1.0, e, g, 1.0);
  for (double own = 0.2; own < 1.0; own += 0.1) {
    e[1] = own;
    const double cur = individual_rate_bits(1, 1.0, e, g, 1.0);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("objective is the worst individual rate") {
  Allocation a = Allocation::zeros(2);
  a.tau_i = 1.0;
  a.e_i = {5.0, 1.0};
  const std::vector<double> g{1.0, 1.0};
  const double obj = objective_min_individual_bits(a, g, 1.0);
  // rate_0 = log2(1 + 5/2), rate_1 = log2(2); the last device is the worst
  CHECK(obj == doctest::Approx(individual_rate_bits(1, 1.0, a.e_i, g, 1.0)));

  Allocation z = Allocation::zeros(3);
  z.tau_i = 1.0;
  const std::vector<double> g3{3.0, 2.0, 1.0};
  CHECK(objective_min_individual_bits(z, g3, 1.0) == 0.0);
}

TEST_CASE("objective equals explicit per-device minimum on random instances") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 3;
    Allocation a = Allocation::zeros(n);
    a.tau_i = 0.2 + uniform01(gen);
    a.e_i.resize(n);
    for (double& x : a.e_i) x = uniform01(gen);
    const auto gamma = random_desc(gen, n, 1.0, 1e6);
    double expect = 1e300;
    for (int i = 0; i < n; ++i)
      expect = std::min(expect, individual_rate_bits(i, a.tau_i, a.e_i, gamma, 1e6));
    CHECK(objective_min_individual_bits(a, gamma, 1e6) == doctest::Approx(expect));
  }
}

TEST_CASE("SIC order only permutes per-device rates, not the sum") {
  const std::vector<double> sorted{4.0, 2.0, 1.0};
  const std::vector<double> shuffled{2.0, 1.0, 4.0};
  const std::vector<double> e{0.2, 0.3, 0.1};
  const std::vector<double> e_shuffled{0.3, 0.1, 0.2};  // follow the gains
  const double s1 = common_sum_rate_bits(1.0, e, sorted, 1.0);
  const double s2 = common_sum_rate_bits(1.0, e_shuffled, shuffled, 1.0);
  CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
  CHECK(common_rate_bits(0, 1.0, e, sorted, 1.0) !=
        doctest::Approx(common_rate_bits(0, 1.0, e_shuffled, shuffled, 1.0)));
}

TEST_CASE("sum rate is nondecreasing in every energy and the slot length") {
  const std::vector<double> g{5.0, 1.0};
  std::vector<double> e{0.4, 0.2};
  const double base = common_sum_rate_bits(0.5, e, g, 1.0);
  for (int i = 0; i < 2; ++i) {
    auto e2 = e;
    e2[i] += 0.05;
    CHECK(common_sum_rate_bits(0.5, e2, g, 1.0) > base);
  }
  CHECK(common_sum_rate_bits(0.6, e, g, 1.0) > base);
}

TEST_CASE("stage-2 difference value is nondecreasing in the slot when s2 >= s3") {
  // g(tau) = tau*(log2(1+s2/tau) - log2(1+s3/tau))
  const double s2 = 2.0, s3 = 0.5;
  double prev = -1.0;
  for (double tau = 0.05; tau <= 1.0; tau += 0.05) {
    const double val = perspective_log2(tau, s2) - perspective_log2(tau, s3);
    CHECK(val >= prev - 1e-12);
    prev = val;
  }
}

TEST_CASE("feasibility report") {
  Scenario sc = Scenario::with_uniform_energy(4, 0.2);
  sc.bandwidth_hz = 1e6;
  sc.noise_psd_dbm_hz = -174.0;
  sc.t_max_s = 1.0;
  sc.k_common_bits = 0.0;
  const ChannelRealization ch = synthetic_channel({4e9, 2e9, 1e9, 5e8});

  SUBCASE("time boundary is feasible") {
    Allocation a = Allocation::zeros(4);
    a.tau_c = 0.4;
    a.tau_i = 0.6;
    const FeasibilityReport r = check_feasibility(a, sc, ch, 1e-9);
    CHECK(r.time_residual_s == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.feasible);
  }
  SUBCASE("zero allocation with K=0 is feasible") {
    const FeasibilityReport r =
        check_feasibility(Allocation::zeros(4), sc, ch, 1e-9);
    CHECK(r.feasible);
    CHECK(r.common_residual_bits <= 0.0);
  }
  SUBCASE("energy overdraw is reported with its residual") {
    Allocation a = Allocation::zeros(4);
    a.tau_c = 0.5;
    a.tau_i = 0.5;
    a.e_c[0] = 0.15;
    a.e_i[0] = 0.10;  // 0.25 J > 0.2 J
    const FeasibilityReport r = check_feasibility(a, sc, ch, 1e-9);
    CHECK_FALSE(r.feasible);
    CHECK(r.energy_residual_j[0] == doctest::Approx(0.05).epsilon(1e-12));
  }
}

TEST_CASE("max common capacity") {
  Scenario sc = Scenario::with_uniform_energy(1, 1.0);
  sc.bandwidth_hz = 1.0;
  sc.t_max_s = 1.0;
  const ChannelRealization ch = synthetic_channel({1.0});
  CHECK(max_common_capacity_bits(sc, ch) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("max common capacity matches a grid search over (tau, E)") {
  Scenario sc = Scenario::with_uniform_energy(2, 0.2);
  sc.bandwidth_hz = 1e6;
  sc.t_max_s = 1.0;
  const ChannelRealization ch = synthetic_channel({3e9, 7e8});
  const double cap = max_common_capacity_bits(sc, ch);

  double best = 0.0;
  const int r = 65;
  for (int it = 1; it <= r; ++it) {
    const double tau = sc.t_max_s * it / r;
    for (int i1 = 0; i1 <= r; ++i1) {
      for (int i2 = 0; i2 <= r; ++i2) {
        const std::vector<double> e{0.2 * i1 / r, 0.2 * i2 / r};
        best = std::max(best, common_sum_rate_bits(tau, e, ch.gamma, sc.bandwidth_hz));
      }
    }
  }
  // The grid contains the maximizing corner (tau = T, E = E_max) exactly.
  CHECK(best == doctest::Approx(cap).epsilon(1e-12));
}
