#pragma once

#include <span>
#include <vector>

#include "noma/channel.hpp"
#include "noma/scenario.hpp"

namespace noma {

/// Decision variables in energy form. Powers follow as P = E / tau.
/// Vectors are in decode (sorted-gamma) order, like ChannelRealization.
struct Allocation {
  double tau_c = 0.0;          // common-data slot (s)
  double tau_i = 0.0;          // individual-data slot (s)
  std::vector<double> e_c;     // J, length N
  std::vector<double> e_i;     // J, length N

  static Allocation zeros(int n);
};

/// Constraint residuals of an allocation; positive residual = violation.
struct FeasibilityReport {
  std::vector<double> energy_residual_j;  // E_n^C + E_n^I - E_{n,max}
  double time_residual_s = 0.0;           // tau^C + tau^I - T_max
  double common_residual_bits = 0.0;      // K - sum common throughput
  double nonneg_residual = 0.0;           // largest negative entry, flipped
  double worst_violation = 0.0;           // max relative violation
  double tolerance = 0.0;
  bool feasible = false;
};

/// tau * log2(1 + s / tau) with the continuous extension 0 at tau = 0, s = 0.
/// Computed through log1p so small SNRs do not cancel.
double perspective_log2(double tau, double s);

/// Stage-1 throughput of sorted device n (0-based), Eqs. in energy form:
/// tau^C W log2(1 + (E_n gamma_n / tau^C) / (1 + sum_{k>n} E_k gamma_k / tau^C)).
double common_rate_bits(int n, double tau_c, std::span<const double> e_c,
                        std::span<const double> gamma, double w_hz);

/// tau^C W log2(1 + sum_n E_n gamma_n / tau^C); telescopes to the per-device sum.
double common_sum_rate_bits(double tau_c, std::span<const double> e_c,
                            std::span<const double> gamma, double w_hz);

/// Stage-2 throughput of sorted device n, same structure with (tau^I, E^I).
double individual_rate_bits(int n, double tau_i, std::span<const double> e_i,
                            std::span<const double> gamma, double w_hz);

/// min_n individual_rate_bits(n, ...).
double objective_min_individual_bits(const Allocation& a,
                                     std::span<const double> gamma, double w_hz);

/// Residuals of the energy/time/common-data/nonnegativity constraints.
/// Reports, never throws, for finite inputs. The verdict compares each
/// family's relative violation against tol.
FeasibilityReport check_feasibility(const Allocation& a, const Scenario& sc,
                                    const ChannelRealization& ch, double tol);

/// Supremum of stage-1 throughput: everything (time and energy) spent on the
/// common data. Stage 1 is satisfiable only if this is >= K.
double max_common_capacity_bits(const Scenario& sc, const ChannelRealization& ch);

}  // namespace noma
