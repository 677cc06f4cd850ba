#pragma once

#include <vector>

namespace noma {

/// Static parameters of one offloading experiment. Energies are indexed by
/// decode rank: e_max_j[0] is the budget of the device with the strongest
/// channel after sorting (this is what makes "the 3rd device" well defined
/// in sweeps where one device's battery differs from the rest).
struct Scenario {
  int n_devices = 1;
  double bandwidth_hz = 1e6;          // W
  double noise_psd_dbm_hz = -174.0;   // N0
  double pathloss_exp = 3.0;          // alpha
  double t_max_s = 1.0;               // T_max
  double k_common_bits = 0.0;         // K
  std::vector<double> e_max_j;        // E_{n,max}, length n_devices
  double cell_radius_m = 200.0;
  double min_dist_m = 1.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Uniform budget helper.
  static Scenario with_uniform_energy(int n, double e_max_j_each);
};

/// sigma^2 = 10^((N0_dBm/Hz - 30)/10) * W, in watts.
double noise_power_w(const Scenario& sc);

}  // namespace noma
