#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ssds {

using Vector = Eigen::VectorXd;

/// Decision variable x = (w, t) of the epigraph problem.
struct DecisionState {
  /// Model parameters; fixed dimension for the lifetime of a run.
  Vector w;
  /// Epigraph auxiliary variable, in loss units.
  double t = 0.0;
};

/// Per-sample perturbations. Entry i belongs to the sample with id i + 1.
using UncertaintyState = std::vector<Vector>;

/// Multipliers of the outer (lambda) and inner (v) constraints. Both stay
/// nonnegative.
struct DualState {
  double lambda = 0.0;
  std::vector<double> v;
};

/// Full state z_k = (x, lambda, u, v) of the saddle-point dynamics.
struct SaddleIterate {
  DecisionState x;
  DualState duals;
  UncertaintyState u;
  std::uint64_t k = 0;
};

enum class NormOrder { L1, L2, LInf };

/// Which element of the budget subdifferential drives the u dynamics.
enum class SubgradientRule {
  /// Componentwise sgn(u) with sgn(0) = 0, as in the mini-batch algorithms.
  Sign,
  /// Minimum-norm element of the true subdifferential of ||u||_p.
  Exact,
};

/// Uncertainty set { u : ||u||_p - epsilon <= 0 }.
struct BudgetConstraint {
  NormOrder norm_order = NormOrder::LInf;
  double epsilon = 0.03;

  /// Throws ConfigError unless epsilon > 0.
  BudgetConstraint(NormOrder order, double eps);

  double norm(const Vector& u) const;
  /// h(u) = ||u||_p - epsilon.
  double evaluate(const Vector& u) const { return norm(u) - epsilon; }
};

/// Subgradient of u -> ||u||_p under the requested rule.
Vector budget_subgradient(const Vector& u, NormOrder order, SubgradientRule rule);

/// Distance from r to the scaled subdifferential v * d||u||_p. Zero exactly
/// when r is a valid multiple-v subgradient, which is the inner stationarity
/// condition of the KKT system.
double subdifferential_distance(const Vector& r, double v, const Vector& u, NormOrder order);

struct StepSchedule {
  enum class Variant { AdaptiveNorm, ExponentialDecay };

  Variant variant = Variant::ExponentialDecay;
  double gamma0 = 1.0;
  double decay_p = 0.001;
  double alpha0 = 2.0;

  /// gamma_k = gamma0 / k, alpha_k = gamma_k / ||T(z_k)||_2.
  static StepSchedule adaptive_norm(double gamma0);
  /// alpha_{k+1} = alpha_k * exp(-k p).
  static StepSchedule exponential_decay(double alpha0, double decay_p);
};

/// Componentwise max(x, 0). Throws NumericalDivergence on non-finite input.
double positive_project(double x);
Vector positive_project(const Vector& x);

/// Step size for step (or epoch) k >= 1.
///
/// AdaptiveNorm returns (gamma0 / k) / dynamics_norm and throws
/// FixedPointReached when dynamics_norm == 0. ExponentialDecay ignores the
/// norm and returns alpha0 * exp(-p * (1 + 2 + ... + (k - 1))).
double step_size(const StepSchedule& schedule, std::uint64_t k, double dynamics_norm = 0.0);

/// Euclidean projection onto { ||u||_p <= epsilon } for p in {1, 2, inf}.
Vector ball_project(const Vector& u, const BudgetConstraint& budget);

/// Euclidean projection onto the probability simplex scaled to sum `total`.
Vector simplex_project(const Vector& y, double total);

}  // namespace ssds
