#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "noma/model.hpp"
#include "noma/subproblem.hpp"

namespace noma {

/// Local expansion point of one D.C. linearization step: the stage-2 slot
/// length and the interference slacks S_3 (length N-1).
struct SlackPoint {
  double tau_i = 0.0;
  std::vector<double> s3;
};

/// Values of the introduced slack variables at a solution.
struct SlackVars {
  double s1 = 0.0;
  std::vector<double> s2;
  std::vector<double> s3;
};

/// First-order expansion of g2(tau, s3) = tau*W*log2(1 + s3/tau) at the local
/// point: b is the function value, d its tau-gradient, q its s3-gradient.
struct TaylorTerms {
  std::vector<double> b;
  std::vector<double> d;
  std::vector<double> q;
};

enum class ScaStatus { Converged, IterLimit, Infeasible };

struct ScaIteration {
  double phi_bits = 0.0;
  SolveStatus subproblem_status = SolveStatus::NumericalFailure;
  double kkt_residual = 0.0;
  double wall_time_s = 0.0;
};

struct ScaTrace {
  std::vector<ScaIteration> iterations;
  ScaStatus status = ScaStatus::Infeasible;
  double total_time_s = 0.0;

  std::vector<double> phi_series() const;
};

TaylorTerms taylor_terms(const SlackPoint& point, double w_hz);

/// The concave subproblem of one iteration over variables
/// (phi, tau^C, tau^I, E^C, E^I, S_1, S_2, S_3), in solver-scaled units
/// (times / T_max, energies / max E_max, rates / (W*T_max)). When K = 0 the
/// whole common stage is dropped from the layout.
ConvexSubproblem build_subproblem(const Scenario& sc, const ChannelRealization& ch,
                                  const SlackPoint& point);

/// tau^I = T_max/2, E^I = E_max/2, S_3 from the interference sums.
SlackPoint default_init(const Scenario& sc, const ChannelRealization& ch);

/// Iterative linearize-solve-update loop. Returns the final allocation (in
/// physical units) and the per-iteration trace. phi never decreases along the
/// trace; the slack couplings hold with equality at the returned point.
std::pair<Allocation, ScaTrace> sca_solve(const Scenario& sc,
                                          const ChannelRealization& ch,
                                          std::optional<SlackPoint> init = {},
                                          double eps = 1e-4, int n_max = 50);

namespace detail {

/// Scheme-variant hooks shared with the baselines module.
struct ScaVariant {
  // Devices allowed to spend energy in stage 1; empty = all of them.
  std::vector<int> common_devices;
  // Orthogonal (per-device sub-slot) stage 2 instead of NOMA.
  bool oma_stage2 = false;
  // Every device must individually deliver K bits in stage 1 (D.C. rows).
  bool per_device_common = false;
};

struct VariantPoint {
  SlackPoint stage2;
  double tau_c = 0.0;           // only used with per_device_common
  std::vector<double> u3;       // stage-1 interference slacks, length N-1
  // Magnitudes of the S_2 / U_2 slacks near the current iterate (scaled
  // units); drive the solver's variable scaling. Empty = use budget caps.
  std::vector<double> s2_scale, u2_scale;
};

ConvexSubproblem build_variant_subproblem(const Scenario& sc,
                                          const ChannelRealization& ch,
                                          const ScaVariant& variant,
                                          const VariantPoint& point);

struct VariantResult {
  Allocation allocation;
  ScaTrace trace;
  std::vector<double> oma_slots;  // stage-2 sub-slot seconds (OMA only)
};

VariantResult sca_solve_variant(const Scenario& sc, const ChannelRealization& ch,
                                const ScaVariant& variant, double eps, int n_max);

double tau_min_floor(const Scenario& sc);

}  // namespace detail

}  // namespace noma
