#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssds/core_types.hpp"
#include "ssds/problems.hpp"

namespace ssds {

class Rng;

/// t + lambda (sum_i (L_i - v^i h^i(u^i)) - t).
double lagrangian_value(const RobustProblem& problem, const SaddleIterate& z);

/// Residuals of the KKT system; every field is zero exactly at a KKT point.
struct KktResidual {
  /// ||(lambda sum_i dL_i/dw, 1 - lambda)||_2.
  double stationarity_x = 0.0;
  /// max_i distance from dL_i/du to v^i times the subdifferential of h^i.
  double stationarity_u = 0.0;
  /// |lambda (sum_i L_i - t - sum_i v^i h^i)|.
  double comp_slack_lambda = 0.0;
  /// max_i |v^i h^i(u^i)|.
  double comp_slack_v = 0.0;
  /// max(0, sum_i L_i - t, max_i h^i(u^i)).
  double primal_feas = 0.0;
  /// max(0, -lambda, max_i -v^i).
  double dual_feas = 0.0;

  double max_field() const;
};

KktResidual kkt_residual(const RobustProblem& problem, const SaddleIterate& z);

struct SaddleProbeOptions {
  std::size_t probes = 1000;
  double radius = 0.1;
  double tolerance = 1e-7;
};

struct SaddleCheck {
  std::size_t violations = 0;
  /// Largest amount by which either inequality failed (0 if none).
  double max_violation = 0.0;
};

/// Local check of L(x*, lambda, u, v*) <= L(x*, lambda*, u*, v*) <=
/// L(x, lambda*, u*, v). Each probe perturbs (lambda, u) and, separately,
/// (x, v) by independent uniform draws in [-radius, radius] per component
/// (multipliers clipped at zero) and tests both sides.
SaddleCheck saddle_inequality_check(const RobustProblem& problem, const SaddleIterate& candidate, Rng& rng,
                                    const SaddleProbeOptions& options = {});

/// Histogram of ||u^i||_inf over [0, max norm] in equal-width bins.
struct BudgetHistogram {
  std::vector<double> bin_start;
  std::vector<std::size_t> counts;
  double max_norm = 0.0;
  /// Fraction of samples with ||u^i||_inf <= epsilon.
  double fraction_within = 0.0;
};

/// Throws ConfigError when bins == 0. With every norm zero all samples fall
/// into bin 0.
BudgetHistogram budget_histogram(const UncertaintyState& u, const BudgetConstraint& budget, std::size_t bins);

/// Fraction of samples with ||u^i||_inf <= epsilon + slack.
double fraction_within_budget(const UncertaintyState& u, double epsilon, double slack = 0.0);

/// Two-column CSV `bin_start,count`.
void write_histogram_csv(const std::filesystem::path& path, const BudgetHistogram& histogram);

/// JSON report keyed by run id. `kkt_threshold` is recorded along with the
/// verdict when given.
std::string diagnostics_json(const std::string& run_id, const KktResidual& kkt, const std::optional<SaddleCheck>& saddle,
                             std::optional<double> kkt_threshold = std::nullopt, double lagrangian = 0.0);

}  // namespace ssds
