#include "noma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "noma/metrics.hpp"
#include "noma/rng.hpp"

namespace noma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct TrialOutcome {
  ResultStatus status = ResultStatus::NumericalFailure;
  double objective_bits = 0.0;
  double jain = 0.0;
  bool jain_valid = false;
  double time_ratio = 0.0;
  double energy_ratio = 0.0;
  bool ratio_valid = false;
  double stage1_share = 0.0;
  bool share_valid = false;
};

TrialOutcome evaluate_trial(const SchemeResult& r, int share_device) {
  TrialOutcome t;
  t.status = r.status;
  if (r.status == ResultStatus::NumericalFailure) return t;
  t.objective_bits = r.objective_bits;  // 0 for infeasible draws
  if (r.status != ResultStatus::Ok) return t;

  t.jain = jain_index(r.common_bits);
  t.jain_valid = true;

  const StageRatios ratios = stage_ratios(r.allocation);
  t.time_ratio = ratios.time_ratio;
  double sum = 0.0;
  int cnt = 0;
  for (double e : ratios.energy_ratio)
    if (std::isfinite(e)) {
      sum += e;
      ++cnt;
    }
  if (cnt > 0 && std::isfinite(ratios.time_ratio)) {
    t.energy_ratio = sum / cnt;
    t.ratio_valid = true;
  }

  double total = 0.0;
  for (double b : r.common_bits) total += b;
  if (share_device >= 0 && share_device < static_cast<int>(r.common_bits.size()) &&
      total > 0.0) {
    t.stage1_share = r.common_bits[share_device] / total;
    t.share_valid = true;
  }
  return t;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::K:
      return "k";
    case SweepAxis::N:
      return "n";
    case SweepAxis::DeviceEnergy:
      return "e";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  base.validate();
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (values.empty()) throw std::invalid_argument("sweep values are empty");
  for (double v : values) scenario_at(v).validate();
}

Scenario ExperimentConfig::scenario_at(double sweep_value) const {
  Scenario sc = base;
  switch (axis) {
    case SweepAxis::K:
      sc.k_common_bits = sweep_value;
      break;
    case SweepAxis::N: {
      const int n = static_cast<int>(std::lround(sweep_value));
      sc.n_devices = n;
      sc.e_max_j.assign(static_cast<std::size_t>(n),
                        base.e_max_j.empty() ? 0.2 : base.e_max_j.front());
      break;
    }
    case SweepAxis::DeviceEnergy: {
      if (energy_device < 0 || energy_device >= sc.n_devices)
        throw std::invalid_argument("energy_device out of range");
      sc.e_max_j[energy_device] = sweep_value;
      break;
    }
  }
  return sc;
}

void Stat::accumulate(const std::vector<double>& xs) {
  n = static_cast<int>(xs.size());
  if (n == 0) {
    mean = 0.0;
    stderr_of_mean = 0.0;
    return;
  }
  double s = 0.0;
  for (double x : xs) s += x;
  mean = s / n;
  if (n >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    stderr_of_mean = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
  } else {
    stderr_of_mean = 0.0;
  }
}

std::uint64_t child_seed(std::uint64_t master, int sweep_index, int trial_index) {
  SplitMix64 s(master);
  const std::uint64_t a = s.next();
  return SplitMix64::mix(a ^ (static_cast<std::uint64_t>(sweep_index) << 32) ^
                         (static_cast<std::uint64_t>(trial_index) + 1));
}

std::vector<AggregateRow> run_monte_carlo(const ExperimentConfig& config) {
  config.validate();
  const int n_sweep = static_cast<int>(config.values.size());
  const int n_schemes = static_cast<int>(config.schemes.size());
  const int n_tasks = n_sweep * config.n_trials;

  // results[sweep * n_trials + trial][scheme]
  std::vector<std::vector<TrialOutcome>> results(
      static_cast<std::size_t>(n_tasks),
      std::vector<TrialOutcome>(static_cast<std::size_t>(n_schemes)));

  const int share_device =
      config.axis == SweepAxis::DeviceEnergy ? config.energy_device : -1;

  auto run_task = [&](int task) {
    const int si = task / config.n_trials;
    const int ti = task % config.n_trials;
    const Scenario sc = config.scenario_at(config.values[si]);
    const ChannelRealization ch =
        sample_channel(sc, child_seed(config.master_seed, si, ti));
    for (int k = 0; k < n_schemes; ++k) {
      const SchemeResult r =
          solve_scheme(config.schemes[k], sc, ch, config.eps, config.n_max);
      results[task][k] = evaluate_trial(r, share_device);
    }
  };

  int threads = config.threads;
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n_tasks));

  if (threads == 1) {
    for (int task = 0; task < n_tasks; ++task) run_task(task);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int task = next.fetch_add(1); task < n_tasks;
             task = next.fetch_add(1))
          run_task(task);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<AggregateRow> rows;
  rows.reserve(static_cast<std::size_t>(n_sweep) * n_schemes);
  for (int si = 0; si < n_sweep; ++si) {
    for (int k = 0; k < n_schemes; ++k) {
      AggregateRow row;
      row.sweep_value = config.values[si];
      row.scheme = config.schemes[k];
      std::vector<double> obj, jain, tratio, eratio, share;
      int n_fail = 0, n_infeasible = 0, n_done = 0;
      for (int ti = 0; ti < config.n_trials; ++ti) {
        const TrialOutcome& t =
            results[static_cast<std::size_t>(si) * config.n_trials + ti][k];
        if (t.status == ResultStatus::NumericalFailure) {
          ++n_fail;
          continue;
        }
        ++n_done;
        obj.push_back(t.objective_bits);
        if (t.status == ResultStatus::Infeasible) ++n_infeasible;
        if (t.jain_valid) jain.push_back(t.jain);
        if (t.ratio_valid) {
          tratio.push_back(t.time_ratio);
          eratio.push_back(t.energy_ratio);
        }
        if (t.share_valid) share.push_back(t.stage1_share);
      }
      row.objective_bits.accumulate(obj);
      row.jain_stage1.accumulate(jain);
      row.time_ratio.accumulate(tratio);
      row.energy_ratio.accumulate(eratio);
      row.stage1_share.accumulate(share);
      row.n_ok = n_done;
      row.n_fail = n_fail;
      if (n_done > 0) {
        const double p = static_cast<double>(n_infeasible) / n_done;
        row.infeasible_frac = p;
        row.infeasible_stderr = std::sqrt(p * (1.0 - p) / n_done);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows,
                         const ExperimentConfig& config) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF on any host
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "sweep,scheme,metric,mean,stderr,n_ok,n_fail\n";
  auto emit = [&](const AggregateRow& r, const char* metric, const Stat& s) {
    out << format_double(r.sweep_value) << ',' << scheme_name(r.scheme) << ','
        << metric << ',' << format_double(s.mean) << ','
        << format_double(s.stderr_of_mean) << ',' << s.n << ',' << r.n_fail
        << '\n';
  };
  for (const AggregateRow& r : rows) {
    emit(r, "objective_bits", r.objective_bits);
    emit(r, "jain_stage1", r.jain_stage1);
    emit(r, "time_ratio", r.time_ratio);
    emit(r, "energy_ratio", r.energy_ratio);
    if (config.axis == SweepAxis::DeviceEnergy && r.stage1_share.n > 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "stage1_share_d%d",
                    config.energy_device + 1);
      emit(r, name, r.stage1_share);
    }
    Stat inf;
    inf.mean = r.infeasible_frac;
    inf.stderr_of_mean = r.infeasible_stderr;
    inf.n = r.n_ok;
    emit(r, "infeasible_frac", inf);
  }
}

double grid_oracle(const Scenario& sc, const ChannelRealization& ch,
                   int resolution) {
  sc.validate();
  if (sc.n_devices > 2)
    throw std::invalid_argument("grid_oracle: only N <= 2 is supported");
  if (resolution < 32)
    throw std::invalid_argument("grid_oracle: resolution must be >= 32");

  const int n = sc.n_devices;
  const double w = sc.bandwidth_hz;
  const double t_max = sc.t_max_s;
  const double k_bits = sc.k_common_bits;

  // Stage-1 feasibility at fixed (tau_c, e_i) only depends on the largest
  // possible common-stage energy, and the objective does not involve e_c at
  // all, so the common energies collapse to a corner check.
  auto stage1_feasible = [&](double tau_c, const std::vector<double>& e_i) {
    if (k_bits <= 0.0) return true;
    if (tau_c <= 0.0) return false;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += (sc.e_max_j[i] - e_i[i]) * ch.gamma[i];
    return w * perspective_log2(tau_c, s) >= k_bits;
  };

  struct Range {
    double lo, hi;
  };
  std::vector<Range> ranges;  // axis 0: tau_c, then e_i per device
  ranges.push_back({0.0, t_max});
  for (int i = 0; i < n; ++i) ranges.push_back({0.0, sc.e_max_j[i]});

  double best = -kInf;
  std::vector<double> best_at(ranges.size(), 0.0);

  std::vector<double> e_i(n);
  auto sweep_pass = [&] {
    const int r = resolution;
    auto value_at = [&](int axis, int idx) {
      const Range& rg = ranges[axis];
      return rg.lo + (rg.hi - rg.lo) * idx / (r - 1);
    };
    for (int it = 0; it < r; ++it) {
      const double tau_c = value_at(0, it);
      const double tau_i = t_max - tau_c;
      for (int i1 = 0; i1 < r; ++i1) {
        e_i[0] = value_at(1, i1);
        const int r2 = n == 2 ? r : 1;
        for (int i2 = 0; i2 < r2; ++i2) {
          if (n == 2) e_i[1] = value_at(2, i2);
          if (!stage1_feasible(tau_c, e_i)) continue;
          double obj;
          if (tau_i <= 0.0) {
            obj = 0.0;
            for (double e : e_i)
              if (e > 0.0) obj = -kInf;  // energy wasted in a zero slot
            if (obj < 0.0) continue;
          } else {
            obj = kInf;
            for (int d = 0; d < n; ++d)
              obj = std::min(obj, individual_rate_bits(d, tau_i, e_i, ch.gamma, w));
          }
          if (obj > best) {
            best = obj;
            best_at[0] = tau_c;
            for (int d = 0; d < n; ++d) best_at[1 + d] = e_i[d];
          }
        }
      }
    }
  };

  sweep_pass();
  for (int round = 0; round < 3; ++round) {
    if (best == -kInf) break;
    for (std::size_t ax = 0; ax < ranges.size(); ++ax) {
      const double cell = (ranges[ax].hi - ranges[ax].lo) / (resolution - 1);
      const double hi0 = ax == 0 ? t_max : sc.e_max_j[ax - 1];
      ranges[ax].lo = std::max(0.0, best_at[ax] - cell);
      ranges[ax].hi = std::min(hi0, best_at[ax] + cell);
      if (ranges[ax].hi <= ranges[ax].lo) {
        ranges[ax].lo = 0.0;
        ranges[ax].hi = hi0;
      }
    }
    sweep_pass();
  }
  return best == -kInf ? 0.0 : best;
}

ConvergenceReport convergence_experiment(const Scenario& sc,
                                         const ChannelRealization& ch,
                                         int oracle_resolution) {
  ConvergenceReport rep;
  auto [alloc, trace] = sca_solve(sc, ch);
  rep.status = trace.status;
  if (rep.status != ScaStatus::Infeasible) rep.phi_bits = trace.phi_series();
  if (sc.n_devices <= 2 && rep.status != ScaStatus::Infeasible)
    rep.oracle_bits = grid_oracle(sc, ch, oracle_resolution);
  return rep;
}

}  // namespace noma
