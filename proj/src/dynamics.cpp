#include "ssds/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ssds/errors.hpp"
#include "ssds/rng.hpp"

namespace ssds {

namespace {

constexpr double kLambdaLimit = 1e12;

void require_finite(double x, const std::string& what) {
  if (!std::isfinite(x)) throw NumericalDivergence(what, x);
}

void require_finite(const Vector& x, const std::string& what) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw NumericalDivergence(what + "[" + std::to_string(j) + "]", x[j]);
  }
}

void check_shape(const RobustProblem& problem, const SaddleIterate& z) {
  const std::size_t n = problem.dataset().size();
  if (static_cast<std::size_t>(z.x.w.size()) != problem.param_dim()) throw ShapeError("iterate w has wrong dimension");
  if (z.u.size() != n || z.duals.v.size() != n) throw ShapeError("iterate u/v must have one entry per sample");
}

enum class Variant { Ssds, Sgda, SsdsP };

EpochResult run_epoch(const RobustProblem& problem, const SaddleIterate& z0, std::size_t batch_size,
                      const SsdsConfig& config, Rng& rng, Variant variant, std::optional<double> lambda_ceiling) {
  config.validate();
  check_shape(problem, z0);
  const std::size_t n = problem.dataset().size();
  if (batch_size == 0 || batch_size > n) {
    throw ConfigError("batch size must be in [1, " + std::to_string(n) + "], got " + std::to_string(batch_size));
  }

  SaddleIterate z = z0;
  const std::uint64_t k = z.k + 1;
  const double alpha = step_size(config.schedule(), k);
  const double u_step = config.eta * alpha;
  const double lambda_start = z.duals.lambda;
  const double t_start = z.x.t;
  const UncertaintyState u_start = z.u;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  double loss_sum = 0.0;
  std::vector<Vector> u_batch;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::span<const std::size_t> batch(order.data() + begin, std::min(batch_size, n - begin));
    u_batch.clear();
    for (const auto i : batch) u_batch.push_back(z.u[i]);
    const BatchEvaluation ev = problem.evaluate_batch(z.x.w, batch, u_batch);

    if (variant == Variant::Sgda) {
      z.x.w -= config.lr * ev.grad_w_sum;
    } else {
      z.x.w -= (config.lr * z.duals.lambda) * ev.grad_w_sum;
    }

    double big_u = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const std::size_t i = batch[j];
      loss_sum += ev.losses[j];
      Vector& u = z.u[i];
      if (variant == Variant::Sgda) {
        u += u_step * ev.grad_u[j];
        require_finite(u, "u[" + std::to_string(i) + "]");
        continue;
      }
      const double h = problem.constraint(u);
      const double v_old = z.duals.v[i];
      const double v_rate = config.include_lambda_in_v_update ? z.duals.lambda * h : h;
      z.duals.v[i] = positive_project(v_old + alpha * v_rate);
      const double penalty = config.c1 * v_old;
      if (penalty != 0.0) {
        u += u_step * (ev.grad_u[j] - penalty * problem.constraint_subgrad(u));
      } else {
        u += u_step * ev.grad_u[j];
      }
      if (variant == Variant::SsdsP) u = ball_project(u, problem.budget());
      big_u += (ev.losses[j] - v_old) * h;
      require_finite(u, "u[" + std::to_string(i) + "]");
      require_finite(z.duals.v[i], "v[" + std::to_string(i) + "]");
    }

    if (variant != Variant::Sgda) {
      double lambda = positive_project(z.duals.lambda + config.c2 * alpha * (big_u - t_start));
      if (lambda_ceiling) lambda = std::min(lambda, *lambda_ceiling);
      z.duals.lambda = lambda;
    }
    require_finite(z.x.w, "w");
    if (z.duals.lambda > kLambdaLimit) throw NumericalDivergence("lambda", z.duals.lambda);
  }

  if (variant != Variant::Sgda) z.x.t = t_start + alpha * (lambda_start - 1.0);
  z.k = k;
  check_divergence(z);

  EpochResult out{std::move(z), {}};
  EpochReport& r = out.report;
  r.epoch = k;
  r.alpha = alpha;
  r.lambda = out.z.duals.lambda;
  r.t = out.z.x.t;
  r.mean_loss = loss_sum / static_cast<double>(n);
  std::size_t within = 0;
  double delta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    within += problem.budget().norm(out.z.u[i]) <= problem.budget().epsilon ? 1 : 0;
    delta += (out.z.u[i] - u_start[i]).norm();
  }
  r.frac_u_within_budget = static_cast<double>(within) / static_cast<double>(n);
  r.mean_u_delta_l2 = delta / static_cast<double>(n);
  return out;
}

UncertaintyState run_attack(const RobustProblem& problem, const Vector& w, std::span<const std::size_t> samples,
                            const SsdsConfig& config, std::uint64_t steps, const AttackObserver& observer,
                            bool with_multiplier) {
  config.validate();
  const auto m = static_cast<Eigen::Index>(problem.input_dim());
  for (const auto i : samples) {
    if (i >= problem.dataset().size()) throw ShapeError("attack sample index out of range");
  }
  UncertaintyState u(samples.size(), Vector::Zero(m));
  std::vector<double> v(samples.size(), config.v0);
  const StepSchedule schedule = config.schedule();

  for (std::uint64_t k = 1; k <= steps; ++k) {
    const double alpha = step_size(schedule, k);
    const double u_step = config.eta * alpha;
    const BatchEvaluation ev = problem.evaluate_batch(w, samples, u);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (!with_multiplier) {
        u[j] += u_step * ev.grad_u[j];
      } else {
        const double v_old = v[j];
        v[j] = positive_project(v_old + alpha * problem.constraint(u[j]));
        const double penalty = config.c1 * v_old;
        if (penalty != 0.0) {
          u[j] += u_step * (ev.grad_u[j] - penalty * problem.constraint_subgrad(u[j]));
        } else {
          u[j] += u_step * ev.grad_u[j];
        }
      }
      require_finite(u[j], "u[" + std::to_string(samples[j]) + "]");
    }
    if (observer) observer(k, u);
  }
  return u;
}

}  // namespace

double UpdateDirections::stacked_norm() const {
  double acc = dw.squaredNorm() + dt * dt + dlambda * dlambda;
  for (const Vector& d : du) acc += d.squaredNorm();
  for (const double d : dv) acc += d * d;
  return std::sqrt(acc);
}

UpdateDirections compute_directions(const RobustProblem& problem, const SaddleIterate& z, SampleSelection xi,
                                    bool include_lambda_in_v_update) {
  check_shape(problem, z);
  const Dataset& data = problem.dataset();
  const std::size_t n = data.size();
  if (xi && *xi >= n) throw ShapeError("sample selection out of range");
  const double lambda = z.duals.lambda;

  UpdateDirections d;
  d.du.reserve(n);
  d.dv.reserve(n);
  double loss_sum = 0.0;
  double penalty_sum = 0.0;
  Vector grad_w_sum = Vector::Zero(z.x.w.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = data[i];
    const Vector& u = z.u[i];
    const double loss = problem.loss(z.x.w, s, u);
    const double h = problem.constraint(u);
    const double v = z.duals.v[i];
    require_finite(loss, "loss[" + std::to_string(i) + "]");
    if (!xi) {
      loss_sum += loss;
      grad_w_sum += problem.grad_w(z.x.w, s, u);
    } else if (*xi == i) {
      loss_sum = static_cast<double>(n) * loss;
      grad_w_sum = static_cast<double>(n) * problem.grad_w(z.x.w, s, u);
    }
    penalty_sum += v * h;
    Vector du = problem.grad_u(z.x.w, s, u);
    if (v != 0.0) du -= v * problem.constraint_subgrad(u);
    require_finite(du, "du[" + std::to_string(i) + "]");
    d.du.push_back(std::move(du));
    d.dv.push_back(include_lambda_in_v_update ? lambda * h : h);
  }
  require_finite(grad_w_sum, "dw");
  d.dw = lambda * grad_w_sum;
  d.dt = 1.0 - lambda;
  d.dlambda = loss_sum - z.x.t - penalty_sum;
  require_finite(d.dlambda, "dlambda");
  return d;
}

StepOutcome ssds_step(const RobustProblem& problem, const SaddleIterate& z, SampleSelection xi,
                      const StepSchedule& schedule, bool include_lambda_in_v_update) {
  const UpdateDirections d = compute_directions(problem, z, xi, include_lambda_in_v_update);
  StepOutcome out;
  out.dynamics_norm = d.stacked_norm();
  try {
    out.alpha = step_size(schedule, z.k + 1, out.dynamics_norm);
  } catch (const FixedPointReached&) {
    out.z = z;
    out.fixed_point = true;
    return out;
  }
  const double a = out.alpha;
  SaddleIterate& next = out.z;
  next.x.w = z.x.w - a * d.dw;
  next.x.t = z.x.t - a * d.dt;
  next.duals.lambda = positive_project(z.duals.lambda + a * d.dlambda);
  next.u.resize(z.u.size());
  next.duals.v.resize(z.duals.v.size());
  for (std::size_t i = 0; i < z.u.size(); ++i) {
    next.u[i] = z.u[i] + a * d.du[i];
    next.duals.v[i] = positive_project(z.duals.v[i] + a * d.dv[i]);
  }
  next.k = z.k + 1;
  check_divergence(next);
  return out;
}

double weighted_distance(const SaddleIterate& z, const SaddleIterate& z_star) {
  if (z.u.size() != z_star.u.size() || z.duals.v.size() != z_star.duals.v.size()) {
    throw ShapeError("weighted_distance: iterates have different sample counts");
  }
  const double dt = z.x.t - z_star.x.t;
  const double dl = z.duals.lambda - z_star.duals.lambda;
  double u_term = 0.0;
  for (std::size_t i = 0; i < z.u.size(); ++i) u_term += (z.u[i] - z_star.u[i]).squaredNorm();
  double v_term = 0.0;
  for (std::size_t i = 0; i < z.duals.v.size(); ++i) {
    const double dv = z.duals.v[i] - z_star.duals.v[i];
    v_term += dv * dv;
  }
  return (z.x.w - z_star.x.w).squaredNorm() + dt * dt + dl * dl + z_star.duals.lambda * u_term + v_term;
}

SaddleIterate initial_iterate(const RobustProblem& problem, Vector w, const SsdsConfig& config) {
  if (static_cast<std::size_t>(w.size()) != problem.param_dim()) throw ShapeError("initial w has wrong dimension");
  const std::size_t n = problem.dataset().size();
  SaddleIterate z;
  z.x.w = std::move(w);
  z.x.t = config.t0;
  z.duals.lambda = config.lambda0;
  z.duals.v.assign(n, config.v0);
  z.u.assign(n, Vector::Zero(static_cast<Eigen::Index>(problem.input_dim())));
  z.k = 0;
  return z;
}

void check_divergence(const SaddleIterate& z) {
  require_finite(z.x.w, "w");
  require_finite(z.x.t, "t");
  require_finite(z.duals.lambda, "lambda");
  if (z.duals.lambda > kLambdaLimit) throw NumericalDivergence("lambda", z.duals.lambda);
  for (std::size_t i = 0; i < z.u.size(); ++i) require_finite(z.u[i], "u[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < z.duals.v.size(); ++i) require_finite(z.duals.v[i], "v[" + std::to_string(i) + "]");
}

EpochResult minibatch_ssds_epoch(const RobustProblem& problem, const SaddleIterate& z, std::size_t batch_size,
                                 const SsdsConfig& config, Rng& rng) {
  return run_epoch(problem, z, batch_size, config, rng, Variant::Ssds, std::nullopt);
}

EpochResult minibatch_sgda_epoch(const RobustProblem& problem, const SaddleIterate& z, std::size_t batch_size,
                                 const SsdsConfig& config, Rng& rng) {
  return run_epoch(problem, z, batch_size, config, rng, Variant::Sgda, std::nullopt);
}

EpochResult minibatch_ssds_p_epoch(const RobustProblem& problem, const SaddleIterate& z, std::size_t batch_size,
                                   const SsdsConfig& config, Rng& rng, std::optional<double> lambda_ceiling) {
  return run_epoch(problem, z, batch_size, config, rng, Variant::SsdsP, lambda_ceiling);
}

UncertaintyState ssds_attack(const RobustProblem& problem, const Vector& w, std::span<const std::size_t> samples,
                             const SsdsConfig& config, std::uint64_t steps, const AttackObserver& observer) {
  return run_attack(problem, w, samples, config, steps, observer, true);
}

UncertaintyState sgda_attack(const RobustProblem& problem, const Vector& w, std::span<const std::size_t> samples,
                             const SsdsConfig& config, std::uint64_t steps, const AttackObserver& observer) {
  return run_attack(problem, w, samples, config, steps, observer, false);
}

}  // namespace ssds
