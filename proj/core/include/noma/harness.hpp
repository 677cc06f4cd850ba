#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "noma/baselines.hpp"

namespace noma {

enum class SweepAxis { K, N, DeviceEnergy };

const char* sweep_axis_name(SweepAxis a);

struct ExperimentConfig {
  Scenario base;
  SweepAxis axis = SweepAxis::K;
  std::vector<double> values;          // bits | device counts | joules
  int energy_device = 2;               // 0-based decode rank for DeviceEnergy
  std::vector<Scheme> schemes = {Scheme::Proposed};
  int n_trials = 100;
  std::uint64_t master_seed = 1;
  int threads = 0;                     // 0 = hardware concurrency
  double eps = 1e-4;
  int n_max = 50;

  void validate() const;
  Scenario scenario_at(double sweep_value) const;
};

struct Stat {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  int n = 0;

  void accumulate(const std::vector<double>& xs);
};

struct AggregateRow {
  double sweep_value = 0.0;
  Scheme scheme = Scheme::Proposed;
  Stat objective_bits;        // infeasible trials count as 0 bits
  Stat jain_stage1;           // feasible trials only
  Stat time_ratio;            // feasible trials only
  Stat energy_ratio;          // feasible trials only, device-averaged
  Stat stage1_share;          // share of the swept device (DeviceEnergy axis)
  double infeasible_frac = 0.0;
  double infeasible_stderr = 0.0;
  int n_ok = 0;               // trials that produced a result
  int n_fail = 0;             // NumericalFailure trials, excluded from means
};

/// Child seed for (sweep index, trial index); collision-free within a run.
std::uint64_t child_seed(std::uint64_t master, int sweep_index, int trial_index);

/// Seeded Monte-Carlo sweep. Every scheme inside a trial sees the identical
/// channel draw; trials run on a bounded worker pool and merge by slot, so
/// the output is independent of scheduling order.
std::vector<AggregateRow> run_monte_carlo(const ExperimentConfig& config);

/// CSV with header `sweep,scheme,metric,mean,stderr,n_ok,n_fail` (UTF-8, LF).
void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows,
                         const ExperimentConfig& config);

/// Exhaustive-search reference for N <= 2: grids (tau^C, E^I) with
/// tau^I = T_max - tau^C, checks stage-1 feasibility against the best
/// remaining common-stage energy, and refines three times around the
/// incumbent (cells halve each round). Returns the best min-throughput.
double grid_oracle(const Scenario& sc, const ChannelRealization& ch,
                   int resolution);

struct ConvergenceReport {
  std::vector<double> phi_bits;         // one entry per SCA iteration
  std::optional<double> oracle_bits;    // present when N <= 2
  ScaStatus status = ScaStatus::Infeasible;
};

ConvergenceReport convergence_experiment(const Scenario& sc,
                                         const ChannelRealization& ch,
                                         int oracle_resolution = 64);

}  // namespace noma
