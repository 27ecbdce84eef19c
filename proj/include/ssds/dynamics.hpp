#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ssds/config.hpp"
#include "ssds/core_types.hpp"
#include "ssds/problems.hpp"

namespace ssds {

class Rng;

/// T(z) split by block. x moves against dw/dt; lambda, u and v move along
/// their directions.
struct UpdateDirections {
  Vector dw;
  double dt = 0.0;
  double dlambda = 0.0;
  std::vector<Vector> du;
  std::vector<double> dv;

  /// Two-norm of the stacked (x, lambda, u, v) directions.
  double stacked_norm() const;
};

/// Which samples drive the x and lambda directions: one sample (0-based
/// dataset index) or, when empty, the whole dataset.
using SampleSelection = std::optional<std::size_t>;

/// Update directions at z.
///
/// With the full dataset g = sum_i L_i - t; with a single sample xi the sum
/// is replaced by its unbiased estimate N * L_xi. The u and v directions
/// always cover every sample. Throws NumericalDivergence naming the first
/// non-finite component.
UpdateDirections compute_directions(const RobustProblem& problem, const SaddleIterate& z, SampleSelection xi,
                                    bool include_lambda_in_v_update = false);

struct StepOutcome {
  SaddleIterate z;
  double alpha = 0.0;
  double dynamics_norm = 0.0;
  /// Set when the stacked direction norm is exactly zero; z is then the
  /// input iterate, unchanged.
  bool fixed_point = false;
};

/// One step of the coupled update laws with alpha from `schedule` at
/// k = z.k + 1.
StepOutcome ssds_step(const RobustProblem& problem, const SaddleIterate& z, SampleSelection xi,
                      const StepSchedule& schedule, bool include_lambda_in_v_update = false);

/// ||x - x*||^2 + (lambda - lambda*)^2 + lambda* sum_i ||u^i - u*^i||^2
///   + sum_i (v^i - v*^i)^2, where x = (w, t).
double weighted_distance(const SaddleIterate& z, const SaddleIterate& z_star);

/// Starting iterate from a config: w given, t = t0, lambda = lambda0,
/// u = 0, v = v0 for every sample, k = 0.
SaddleIterate initial_iterate(const RobustProblem& problem, Vector w, const SsdsConfig& config);

/// Throws NumericalDivergence if any component is non-finite or lambda
/// exceeds 1e12.
void check_divergence(const SaddleIterate& z);

struct EpochReport {
  std::uint64_t epoch = 0;
  double alpha = 0.0;
  double lambda = 0.0;
  double t = 0.0;
  /// Mean per-sample loss, each evaluated when its batch was processed.
  double mean_loss = 0.0;
  /// Fraction of samples with ||u^i||_p <= epsilon at epoch end.
  double frac_u_within_budget = 0.0;
  /// Mean over samples of ||u^i_k - u^i_{k-1}||_2.
  double mean_u_delta_l2 = 0.0;
};

struct EpochResult {
  SaddleIterate z;
  EpochReport report;
};

/// Mini-batch SSDS. One call runs one epoch k = z.k + 1 with
/// alpha_k = alpha0 exp(-p (1 + ... + (k - 1))):
///
///   for each shuffled batch B (all terms at the batch-start w, u, v):
///     w   <- w - lr lambda sum_B dL/dw
///     v_j <- [v_j + alpha h_j]_+            (times lambda if configured)
///     u_j <- u_j + eta alpha (dL_j/du - c1 v_j s_j)
///     lambda <- [lambda + c2 alpha (sum_B (L_j - v_j) h_j - t)]_+
///   t <- t + alpha (lambda_epoch_start - 1)
///
/// s_j is the problem's constraint subgradient. Throws NumericalDivergence.
EpochResult minibatch_ssds_epoch(const RobustProblem& problem, const SaddleIterate& z, std::size_t batch_size,
                                 const SsdsConfig& config, Rng& rng);

/// Mini-batch SGDA: w <- w - lr sum_B dL/dw, u_j <- u_j + eta alpha dL_j/du.
/// t, lambda and v are carried through untouched.
EpochResult minibatch_sgda_epoch(const RobustProblem& problem, const SaddleIterate& z, std::size_t batch_size,
                                 const SsdsConfig& config, Rng& rng);

/// Mini-batch SSDS with every updated u_j projected onto the budget ball.
/// `lambda_ceiling`, when set, additionally clamps lambda from above.
EpochResult minibatch_ssds_p_epoch(const RobustProblem& problem, const SaddleIterate& z, std::size_t batch_size,
                                   const SsdsConfig& config, Rng& rng,
                                   std::optional<double> lambda_ceiling = std::nullopt);

/// Called after each attack step k (1-based) with the current perturbations.
using AttackObserver = std::function<void(std::uint64_t k, const UncertaintyState& u)>;

/// SSDS attack against frozen w: for k = 1..steps,
///   v_j <- [v_j + alpha_k h_j]_+,
///   u_j <- u_j + eta alpha_k (dL_j/du - c1 v_j s_j),
/// from u = 0, v = v0. Samples are dataset indices of `problem`; the
/// result is aligned with them.
UncertaintyState ssds_attack(const RobustProblem& problem, const Vector& w, std::span<const std::size_t> samples,
                             const SsdsConfig& config, std::uint64_t steps, const AttackObserver& observer = {});

/// SGDA attack: u_j <- u_j + eta alpha_k dL_j/du from u = 0.
UncertaintyState sgda_attack(const RobustProblem& problem, const Vector& w, std::span<const std::size_t> samples,
                             const SsdsConfig& config, std::uint64_t steps, const AttackObserver& observer = {});

}  // namespace ssds
