#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace noma {

/// Sparse linear form sum_j coeffs[j].second * x[coeffs[j].first].
using LinearTerms = std::vector<std::pair<int, double>>;

/// a^T x <= rhs
struct LinearRow {
  LinearTerms coeffs;
  double rhs = 0.0;
  std::string label;  // constraint family, used in infeasibility diagnoses
};

/// weight * q(x[a_index], x[b_index]) + linear(x) >= rhs, with
/// q(a,b) = a*log2(1+b/a) (jointly concave, positively homogeneous).
struct PerspectiveRow {
  int a_index = -1;       // time-like variable
  int b_index = -1;       // slack/SNR-like variable
  double weight = 0.0;    // bandwidth factor in front of q
  LinearTerms linear;
  double rhs = 0.0;
  std::string label;
};

struct VariableBlock {
  std::string name;
  int offset = 0;
  int count = 0;
};

/// Declarative description of one concave subproblem:
/// maximize objective^T x subject to the rows and bounds below.
struct ConvexSubproblem {
  int n_vars = 0;
  std::vector<VariableBlock> layout;        // partition of [0, n_vars)
  std::vector<double> objective;            // usually a unit vector on phi
  std::vector<double> lower;                // -inf allowed
  std::vector<double> upper;                // +inf allowed
  std::vector<double> scale_hint;           // per-variable magnitude, empty = 1
  std::vector<LinearRow> linear_rows;
  std::vector<PerspectiveRow> perspective_rows;

  int block_offset(const std::string& name) const;  // -1 if absent/empty
  int block_count(const std::string& name) const;

  /// Slack of every row (perspective rows first, then linear rows);
  /// nonnegative entries mean satisfied.
  std::vector<double> row_slacks(const std::vector<double>& x) const;

  /// Largest violation across rows and bounds (0 when feasible).
  double max_violation(const std::vector<double>& x) const;

  void check_well_formed() const;  // throws std::invalid_argument
};

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

struct SolveOutcome {
  std::vector<double> x;
  double objective = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  double kkt_residual = 0.0;   // max of stationarity / primal / complementarity
  std::string diagnosis;       // which constraint families block feasibility
  int newton_steps = 0;
};

/// Primal log-barrier interior-point method: phase-I max-min-slack to find a
/// strict interior point (or certify infeasibility), then path following with
/// mu <- 0.2*mu and Armijo-backtracked Newton centering. If warm_start is
/// feasible, the returned objective is never below its value.
SolveOutcome solve_subproblem(const ConvexSubproblem& p, double tol = 1e-8,
                              const std::vector<double>* warm_start = nullptr);

/// Midpoint-concavity probe of every perspective row: random positive
/// argument pairs and blend weights must satisfy
/// f(lambda*x + (1-lambda)*y) >= lambda*f(x) + (1-lambda)*f(y) - 1e-10
/// where f is the row's weighted perspective term.
bool concavity_probe(const ConvexSubproblem& p, int n_samples, std::uint64_t seed);

}  // namespace noma
