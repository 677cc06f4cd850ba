#pragma once

#include <string>
#include <vector>

#include "noma/sca.hpp"

namespace noma {

enum class Scheme { Proposed, SNoma, SOma, Benchmark };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);  // throws on unknown

enum class ResultStatus { Ok, Infeasible, NumericalFailure };

struct SchemeResult {
  Scheme scheme = Scheme::Proposed;
  double objective_bits = 0.0;           // 0 whenever infeasible
  Allocation allocation;
  std::vector<double> common_bits;       // per sorted device, stage 1
  std::vector<double> individual_bits;   // per sorted device, stage 2
  ResultStatus status = ResultStatus::Infeasible;
  ScaTrace trace;

  bool feasible() const { return status == ResultStatus::Ok; }
};

/// Cooperative common stage + NOMA individual stage (the full machinery).
SchemeResult solve_proposed(const Scenario& sc, const ChannelRealization& ch,
                            double eps = 1e-4, int n_max = 50);

/// Best single device carries all common data; NOMA stage 2. All N candidate
/// devices are tried; ties go to the strongest channel.
SchemeResult solve_s_noma(const Scenario& sc, const ChannelRealization& ch,
                          double eps = 1e-4, int n_max = 50);

/// Single common device + orthogonal per-device sub-slots in stage 2 (one
/// concave solve per candidate, no linearization needed).
SchemeResult solve_s_oma(const Scenario& sc, const ChannelRealization& ch,
                         double eps = 1e-4, int n_max = 50);

/// Every device offloads the full K bits itself in stage 1 (per-device D.C.
/// constraints folded into the same SCA loop); NOMA stage 2.
SchemeResult solve_benchmark(const Scenario& sc, const ChannelRealization& ch,
                             double eps = 1e-4, int n_max = 50);

SchemeResult solve_scheme(Scheme s, const Scenario& sc, const ChannelRealization& ch,
                          double eps = 1e-4, int n_max = 50);

}  // namespace noma
