#include "noma/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace noma {

namespace {
constexpr double kLn2 = 0.6931471805599453;

void require_device(int n, std::size_t len) {
  if (n < 0 || static_cast<std::size_t>(n) >= len)
    throw std::out_of_range("device index out of range");
}

// Shared structure of Eqs. for both stages: rate of sorted device n given a
// slot length, per-device energies and the decode-ordered gains.
double sic_rate_bits(int n, double tau, std::span<const double> e,
                     std::span<const double> gamma, double w_hz) {
  require_device(n, e.size());
  if (tau < 0.0) throw std::domain_error("slot duration must be >= 0");
  if (tau == 0.0) {
    for (double en : e)
      if (en > 0.0)
        throw std::domain_error("zero slot duration with positive energy");
    return 0.0;  // zero-rate limit
  }
  double interference = 0.0;
  for (std::size_t k = static_cast<std::size_t>(n) + 1; k < e.size(); ++k)
    interference += e[k] * gamma[k] / tau;
  const double snr = (e[n] * gamma[n] / tau) / (1.0 + interference);
  return tau * w_hz * std::log1p(snr) / kLn2;
}
}  // namespace

Allocation Allocation::zeros(int n) {
  Allocation a;
  a.e_c.assign(static_cast<std::size_t>(n), 0.0);
  a.e_i.assign(static_cast<std::size_t>(n), 0.0);
  return a;
}

double perspective_log2(double tau, double s) {
  if (tau <= 0.0) return 0.0;
  return tau * std::log1p(s / tau) / kLn2;
}

double common_rate_bits(int n, double tau_c, std::span<const double> e_c,
                        std::span<const double> gamma, double w_hz) {
  return sic_rate_bits(n, tau_c, e_c, gamma, w_hz);
}

double common_sum_rate_bits(double tau_c, std::span<const double> e_c,
                            std::span<const double> gamma, double w_hz) {
  if (tau_c < 0.0) throw std::domain_error("slot duration must be >= 0");
  double s = 0.0;
  for (std::size_t i = 0; i < e_c.size(); ++i) s += e_c[i] * gamma[i];
  if (tau_c == 0.0) {
    if (s > 0.0)
      throw std::domain_error("zero slot duration with positive energy");
    return 0.0;
  }
  return w_hz * perspective_log2(tau_c, s);
}

double individual_rate_bits(int n, double tau_i, std::span<const double> e_i,
                            std::span<const double> gamma, double w_hz) {
  return sic_rate_bits(n, tau_i, e_i, gamma, w_hz);
}

double objective_min_individual_bits(const Allocation& a,
                                     std::span<const double> gamma,
                                     double w_hz) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < a.e_i.size(); ++n)
    worst = std::min(worst, individual_rate_bits(static_cast<int>(n), a.tau_i,
                                                 a.e_i, gamma, w_hz));
  return a.e_i.empty() ? 0.0 : worst;
}

FeasibilityReport check_feasibility(const Allocation& a, const Scenario& sc,
                                    const ChannelRealization& ch, double tol) {
  FeasibilityReport r;
  r.tolerance = tol;
  const int n = sc.n_devices;

  r.energy_residual_j.resize(n);
  double worst_rel = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double res = a.e_c[i] + a.e_i[i] - sc.e_max_j[i];
    r.energy_residual_j[i] = res;
    worst_rel = std::max(worst_rel, res / sc.e_max_j[i]);
  }

  r.time_residual_s = a.tau_c + a.tau_i - sc.t_max_s;
  worst_rel = std::max(worst_rel, r.time_residual_s / sc.t_max_s);

  double sum_rate = 0.0;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a.e_c[i] * ch.gamma[i];
  if (a.tau_c > 0.0)
    sum_rate = sc.bandwidth_hz * perspective_log2(a.tau_c, s);
  else if (s > 0.0)
    sum_rate = 0.0;  // energy spent in a zero-length slot delivers nothing
  r.common_residual_bits = sc.k_common_bits - sum_rate;
  worst_rel = std::max(worst_rel,
                       r.common_residual_bits / std::max(1.0, sc.k_common_bits));

  double most_negative = 0.0;
  for (int i = 0; i < n; ++i)
    most_negative = std::min({most_negative, a.e_c[i], a.e_i[i]});
  most_negative = std::min({most_negative, a.tau_c, a.tau_i});
  r.nonneg_residual = -most_negative;
  worst_rel = std::max(worst_rel, r.nonneg_residual);

  r.worst_violation = std::max(0.0, worst_rel);
  r.feasible = r.worst_violation <= tol;
  return r;
}

double max_common_capacity_bits(const Scenario& sc, const ChannelRealization& ch) {
  double s = 0.0;
  for (int i = 0; i < sc.n_devices; ++i) s += sc.e_max_j[i] * ch.gamma[i];
  return sc.bandwidth_hz * perspective_log2(sc.t_max_s, s);
}

}  // namespace noma
