#include "noma/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "noma/metrics.hpp"

namespace noma {

namespace {

// Largest stage-1 throughput a single device can deliver on its own.
double single_device_capacity_bits(const Scenario& sc, const ChannelRealization& ch,
                                   int device) {
  return sc.bandwidth_hz *
         perspective_log2(sc.t_max_s, sc.e_max_j[device] * ch.gamma[device]);
}

SchemeResult from_variant(Scheme scheme, const Scenario& sc,
                          const ChannelRealization& ch,
                          detail::VariantResult&& vr) {
  SchemeResult r;
  r.scheme = scheme;
  r.trace = std::move(vr.trace);
  r.allocation = std::move(vr.allocation);

  if (r.trace.status == ScaStatus::Infeasible) {
    r.status = ResultStatus::Infeasible;
    r.objective_bits = 0.0;
    r.common_bits.assign(sc.n_devices, 0.0);
    r.individual_bits.assign(sc.n_devices, 0.0);
    return r;
  }
  if (r.trace.iterations.empty()) {
    r.status = ResultStatus::NumericalFailure;
    r.objective_bits = 0.0;
    r.common_bits.assign(sc.n_devices, 0.0);
    r.individual_bits.assign(sc.n_devices, 0.0);
    return r;
  }
  r.status = ResultStatus::Ok;

  if (!vr.oma_slots.empty()) {
    // Orthogonal stage 2: exclusive sub-slots, no interference terms.
    r.individual_bits.resize(sc.n_devices);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < sc.n_devices; ++i) {
      r.individual_bits[i] =
          sc.bandwidth_hz *
          perspective_log2(vr.oma_slots[i], r.allocation.e_i[i] * ch.gamma[i]);
      worst = std::min(worst, r.individual_bits[i]);
    }
    r.objective_bits = worst;
    r.common_bits.resize(sc.n_devices);
    for (int i = 0; i < sc.n_devices; ++i)
      r.common_bits[i] = common_rate_bits(i, r.allocation.tau_c,
                                          r.allocation.e_c, ch.gamma,
                                          sc.bandwidth_hz);
  } else {
    auto [common, individual] = stage_bits(r.allocation, ch, sc.bandwidth_hz);
    r.common_bits = std::move(common);
    r.individual_bits = std::move(individual);
    r.objective_bits =
        objective_min_individual_bits(r.allocation, ch.gamma, sc.bandwidth_hz);
  }
  return r;
}

SchemeResult infeasible_result(Scheme scheme, int n) {
  SchemeResult r;
  r.scheme = scheme;
  r.status = ResultStatus::Infeasible;
  r.objective_bits = 0.0;
  r.allocation = Allocation::zeros(n);
  r.common_bits.assign(n, 0.0);
  r.individual_bits.assign(n, 0.0);
  r.trace.status = ScaStatus::Infeasible;
  return r;
}

// Shared candidate sweep for the single-common-device schemes. Candidates are
// visited strongest channel first, so "keep only strictly better" breaks ties
// toward the highest gamma.
SchemeResult best_single_device(Scheme scheme, const Scenario& sc,
                                const ChannelRealization& ch, bool oma,
                                double eps, int n_max) {
  sc.validate();
  const int n = sc.n_devices;

  if (sc.k_common_bits <= 0.0) {
    detail::ScaVariant v;
    v.oma_stage2 = oma;
    return from_variant(scheme, sc, ch,
                        detail::sca_solve_variant(sc, ch, v, eps, n_max));
  }

  SchemeResult best = infeasible_result(scheme, n);
  bool any_failure = false;
  for (int i = 0; i < n; ++i) {
    if (single_device_capacity_bits(sc, ch, i) < sc.k_common_bits) continue;
    detail::ScaVariant v;
    v.common_devices = {i};
    v.oma_stage2 = oma;
    SchemeResult cand = from_variant(
        scheme, sc, ch, detail::sca_solve_variant(sc, ch, v, eps, n_max));
    if (cand.status == ResultStatus::NumericalFailure) {
      any_failure = true;
      continue;
    }
    if (cand.status == ResultStatus::Ok &&
        (best.status != ResultStatus::Ok ||
         cand.objective_bits > best.objective_bits))
      best = std::move(cand);
  }
  if (best.status != ResultStatus::Ok && any_failure)
    best.status = ResultStatus::NumericalFailure;
  return best;
}

}  // namespace

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Proposed:
      return "proposed";
    case Scheme::SNoma:
      return "s_noma";
    case Scheme::SOma:
      return "s_oma";
    case Scheme::Benchmark:
      return "benchmark";
  }
  return "unknown";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "proposed") return Scheme::Proposed;
  if (name == "s_noma") return Scheme::SNoma;
  if (name == "s_oma") return Scheme::SOma;
  if (name == "benchmark") return Scheme::Benchmark;
  throw std::invalid_argument("unknown scheme: " + name);
}

SchemeResult solve_proposed(const Scenario& sc, const ChannelRealization& ch,
                            double eps, int n_max) {
  sc.validate();
  if (sc.k_common_bits > 0.0 &&
      max_common_capacity_bits(sc, ch) < sc.k_common_bits)
    return infeasible_result(Scheme::Proposed, sc.n_devices);
  return from_variant(
      Scheme::Proposed, sc, ch,
      detail::sca_solve_variant(sc, ch, detail::ScaVariant{}, eps, n_max));
}

SchemeResult solve_s_noma(const Scenario& sc, const ChannelRealization& ch,
                          double eps, int n_max) {
  return best_single_device(Scheme::SNoma, sc, ch, /*oma=*/false, eps, n_max);
}

SchemeResult solve_s_oma(const Scenario& sc, const ChannelRealization& ch,
                         double eps, int n_max) {
  return best_single_device(Scheme::SOma, sc, ch, /*oma=*/true, eps, n_max);
}

SchemeResult solve_benchmark(const Scenario& sc, const ChannelRealization& ch,
                             double eps, int n_max) {
  sc.validate();
  if (sc.k_common_bits > 0.0) {
    // Necessary: even interference-free, every device must manage K alone.
    for (int i = 0; i < sc.n_devices; ++i)
      if (single_device_capacity_bits(sc, ch, i) < sc.k_common_bits)
        return infeasible_result(Scheme::Benchmark, sc.n_devices);
  }
  detail::ScaVariant v;
  v.per_device_common = true;
  return from_variant(Scheme::Benchmark, sc, ch,
                      detail::sca_solve_variant(sc, ch, v, eps, n_max));
}

SchemeResult solve_scheme(Scheme s, const Scenario& sc,
                          const ChannelRealization& ch, double eps, int n_max) {
  switch (s) {
    case Scheme::Proposed:
      return solve_proposed(sc, ch, eps, n_max);
    case Scheme::SNoma:
      return solve_s_noma(sc, ch, eps, n_max);
    case Scheme::SOma:
      return solve_s_oma(sc, ch, eps, n_max);
    case Scheme::Benchmark:
      return solve_benchmark(sc, ch, eps, n_max);
  }
  throw std::invalid_argument("unknown scheme");
}

}  // namespace noma
