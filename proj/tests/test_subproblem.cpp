#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "noma/rng.hpp"
#include "noma/sca.hpp"
#include "noma/subproblem.hpp"

using namespace noma;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ConvexSubproblem tiny_lp() {
  ConvexSubproblem p;
  p.n_vars = 1;
  p.layout = {{"phi", 0, 1}};
  p.objective = {1.0};
  p.lower = {-kInf};
  p.upper = {kInf};
  p.linear_rows.push_back({{{0, 1.0}}, 3.0, "cap_a"});
  p.linear_rows.push_back({{{0, 1.0}}, 5.0, "cap_b"});
  return p;
}

ConvexSubproblem one_perspective() {
  // maximize phi s.t. q(tau, s) >= phi, tau <= 1, s <= 1
  ConvexSubproblem p;
  p.n_vars = 3;  // phi, tau, s
  p.layout = {{"phi", 0, 1}, {"tau", 1, 1}, {"s", 2, 1}};
  p.objective = {1.0, 0.0, 0.0};
  p.lower = {0.0, 1e-9, 0.0};
  p.upper = {kInf, kInf, kInf};
  PerspectiveRow r;
  r.a_index = 1;
  r.b_index = 2;
  r.weight = 1.0;
  r.linear = {{0, -1.0}};
  r.rhs = 0.0;
  r.label = "rate";
  p.perspective_rows.push_back(r);
  p.linear_rows.push_back({{{1, 1.0}}, 1.0, "tau_cap"});
  p.linear_rows.push_back({{{2, 1.0}}, 1.0, "s_cap"});
  return p;
}

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

Scenario table1_scenario(int n, double k_bits) {
  Scenario sc = Scenario::with_uniform_energy(n, 0.2);
  sc.bandwidth_hz = 1e6;
  sc.noise_psd_dbm_hz = -174.0;
  sc.pathloss_exp = 3.0;
  sc.t_max_s = 1.0;
  sc.k_common_bits = k_bits;
  return sc;
}

// Evaluates a candidate of the proposed-scheme subproblem with slacks tight
// and phi as large as the rate rows allow; returns that phi or -inf when the
// stage-1 requirement fails. Grid candidates are scaled variables.
double tight_phi(const ConvexSubproblem& p, double tau_c, double tau_i,
                 const std::vector<double>& e_c, const std::vector<double>& e_i,
                 const std::vector<double>& gamma_t) {
  const int n = static_cast<int>(e_i.size());
  std::vector<double> x(static_cast<std::size_t>(p.n_vars), 0.0);
  const int phi = p.block_offset("phi");
  const int tc = p.block_offset("tau_c");
  const int ti = p.block_offset("tau_i");
  const int ec = p.block_offset("e_c");
  const int ei = p.block_offset("e_i");
  const int s1 = p.block_offset("s1");
  const int s2 = p.block_offset("s2");
  const int s3 = p.block_offset("s3");
  if (tc >= 0) x[tc] = std::max(tau_c, 1e-9);
  x[ti] = std::max(tau_i, 1e-9);
  for (int i = 0; i < n; ++i) {
    if (ec >= 0) x[ec + i] = e_c[i];
    x[ei + i] = e_i[i];
  }
  if (s1 >= 0) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += gamma_t[i] * e_c[i];
    x[s1] = s;
  }
  double suffix = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    if (i < n - 1 && s3 >= 0) x[s3 + i] = suffix;
    suffix += gamma_t[i] * e_i[i];
    x[s2 + i] = suffix;
  }
  x[phi] = 0.0;

  const auto slacks = p.row_slacks(x);
  double best_phi = kInf;
  for (std::size_t r = 0; r < p.perspective_rows.size(); ++r) {
    const auto& row = p.perspective_rows[r];
    bool touches_phi = false;
    for (auto& [j, c] : row.linear)
      if (j == phi) touches_phi = true;
    if (touches_phi)
      best_phi = std::min(best_phi, slacks[r]);
    else if (slacks[r] < 0.0)
      return -kInf;  // stage-1 requirement violated
  }
  return std::max(0.0, best_phi);
}

}  // namespace

TEST_CASE("degenerate LP") {
  const ConvexSubproblem p = tiny_lp();
  const SolveOutcome out = solve_subproblem(p, 1e-8);
  CHECK(out.status == SolveStatus::Optimal);
  CHECK(out.objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(out.kkt_residual <= 1e-8);
}

TEST_CASE("single perspective row caps at q(1,1) = 1") {
  const ConvexSubproblem p = one_perspective();
  const SolveOutcome out = solve_subproblem(p, 1e-8);
  CHECK(out.status == SolveStatus::Optimal);
  CHECK(out.objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(out.x[1] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(out.x[2] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("infeasible problems come back with a diagnosis") {
  ConvexSubproblem p = tiny_lp();
  p.linear_rows.push_back({{{0, -1.0}}, -10.0, "floor"});  // phi >= 10
  const SolveOutcome out = solve_subproblem(p, 1e-8);
  CHECK(out.status == SolveStatus::Infeasible);
  CHECK(out.diagnosis.find("floor") != std::string::npos);
}

TEST_CASE("solutions satisfy every constraint and beat the warm start") {
  const ConvexSubproblem p = one_perspective();
  const std::vector<double> warm{0.2, 0.5, 0.4};  // interior, low objective
  const SolveOutcome out = solve_subproblem(p, 1e-8, &warm);
  CHECK(out.status == SolveStatus::Optimal);
  CHECK(p.max_violation(out.x) <= 1e-9);
  CHECK(out.objective >= 0.2);
}

TEST_CASE("bitwise determinism across repeated solves") {
  const Scenario sc = table1_scenario(2, 2e6);
  const ChannelRealization ch = synthetic_channel({5e9, 8e8});
  const ConvexSubproblem p = build_subproblem(sc, ch, default_init(sc, ch));
  const SolveOutcome a = solve_subproblem(p, 1e-8);
  const SolveOutcome b = solve_subproblem(p, 1e-8);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  for (std::size_t i = 0; i < a.x.size(); ++i)
    CHECK(std::abs(a.x[i] - b.x[i]) <=
          1e-12 * std::max(1.0, std::abs(a.x[i])));
}

TEST_CASE("full N=2 subproblem matches a dense grid on the active core") {
  const Scenario sc = table1_scenario(2, 2e6);
  const ChannelRealization ch = synthetic_channel({5e9, 8e8});
  const ConvexSubproblem p = build_subproblem(sc, ch, default_init(sc, ch));
  const SolveOutcome out = solve_subproblem(p, 1e-8);
  REQUIRE(out.status == SolveStatus::Optimal);

  // Scaled gamma used by the builder: gamma * E_ref / T_max.
  const std::vector<double> gt{ch.gamma[0] * 0.2, ch.gamma[1] * 0.2};

  double best = -kInf;
  std::vector<double> at(5, 0.0);
  std::vector<double> lo{0.0, 0.0, 0.0, 0.0, 0.0};
  std::vector<double> hi{1.0, 1.0, 1.0, 1.0, 1.0};
  const int r = 17;
  for (int round = 0; round < 4; ++round) {
    for (int a0 = 0; a0 < r; ++a0)
      for (int a1 = 0; a1 < r; ++a1)
        for (int a2 = 0; a2 < r; ++a2)
          for (int a3 = 0; a3 < r; ++a3)
            for (int a4 = 0; a4 < r; ++a4) {
              auto v = [&](int ax, int idx) {
                return lo[ax] + (hi[ax] - lo[ax]) * idx / (r - 1);
              };
              const double tau_c = v(0, a0);
              const double tau_i = 1.0 - tau_c;
              std::vector<double> e_c{v(1, a1), v(2, a2)};
              std::vector<double> e_i{v(3, a3), v(4, a4)};
              if (e_c[0] + e_i[0] > 1.0 || e_c[1] + e_i[1] > 1.0) continue;
              if (tau_i <= 0.0) continue;
              const double phi = tight_phi(p, tau_c, tau_i, e_c, e_i, gt);
              if (phi > best) {
                best = phi;
                at = {tau_c, e_c[0], e_c[1], e_i[0], e_i[1]};
              }
            }
    for (int ax = 0; ax < 5; ++ax) {
      const double cell = (hi[ax] - lo[ax]) / (r - 1);
      lo[ax] = std::max(0.0, at[ax] - cell);
      hi[ax] = std::min(1.0, at[ax] + cell);
    }
  }
  REQUIRE(best > 0.0);
  CHECK(out.objective == doctest::Approx(best).epsilon(0.01));
}

TEST_CASE("solver beats 1e5 random feasible samples") {
  const Scenario sc = table1_scenario(2, 2e6);
  const ChannelRealization ch = synthetic_channel({5e9, 8e8});
  const ConvexSubproblem p = build_subproblem(sc, ch, default_init(sc, ch));
  const SolveOutcome out = solve_subproblem(p, 1e-8);
  REQUIRE(out.status == SolveStatus::Optimal);

  const std::vector<double> gt{ch.gamma[0] * 0.2, ch.gamma[1] * 0.2};
  std::mt19937_64 gen(99);
  double best = -kInf;
  for (int i = 0; i < 100000; ++i) {
    const double tau_c = uniform01(gen);
    const double tau_i = (1.0 - tau_c) * uniform01(gen);
    std::vector<double> e_c(2), e_i(2);
    for (int d = 0; d < 2; ++d) {
      e_c[d] = uniform01(gen);
      e_i[d] = (1.0 - e_c[d]) * uniform01(gen);
    }
    best = std::max(best, tight_phi(p, tau_c, tau_i, e_c, e_i, gt));
  }
  CHECK(out.objective >= best - 1e-8);
}

TEST_CASE("concavity probe") {
  const ConvexSubproblem p = one_perspective();
  CHECK(concavity_probe(p, 1000, 7));

  ConvexSubproblem flipped = p;
  flipped.perspective_rows[0].weight = -1.0;
  CHECK_FALSE(concavity_probe(flipped, 1000, 7));
}

TEST_CASE("well-formedness is enforced") {
  ConvexSubproblem p = one_perspective();
  p.lower[1] = 0.0;  // perspective time variable must stay positive
  CHECK_THROWS_AS(solve_subproblem(p, 1e-8), std::invalid_argument);

  ConvexSubproblem q = one_perspective();
  q.layout = {{"phi", 0, 1}};  // not a partition
  CHECK_THROWS_AS(solve_subproblem(q, 1e-8), std::invalid_argument);
}
