#include "ssds/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>

#include "ssds/errors.hpp"
#include "ssds/rng.hpp"

namespace ssds {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Vector sign_of(const Vector& g) { return g.unaryExpr([](double x) { return sgn(x); }); }

Vector clamp_to(const Vector& x, const InputRange& range) { return x.cwiseMax(range.lo).cwiseMin(range.hi); }

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  return order;
}

}  // namespace

AttackSpec AttackSpec::fgsm(double epsilon) {
  AttackSpec s;
  s.kind = Kind::FGSM;
  s.epsilon = epsilon;
  s.step_eta = epsilon;
  s.steps = 1;
  s.random_start = false;
  return s;
}

AttackSpec AttackSpec::pgd(double epsilon, double step_eta, std::uint64_t steps, bool random_start) {
  AttackSpec s;
  s.kind = Kind::PGD;
  s.epsilon = epsilon;
  s.step_eta = step_eta;
  s.steps = steps;
  s.random_start = random_start;
  return s;
}

void AttackSpec::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("attack epsilon must be nonnegative");
  if (kind == Kind::PGD) {
    if (!(step_eta >= 0.0) || !std::isfinite(step_eta)) throw ConfigError("PGD step must be nonnegative");
    if (steps == 0) throw ConfigError("PGD needs at least one step");
  }
}

std::vector<std::string> AttackSpec::warnings() const {
  std::vector<std::string> out;
  if (kind == Kind::PGD && step_eta > 2.0 * epsilon) {
    out.push_back("PGD step " + std::to_string(step_eta) + " exceeds 2*epsilon; steps overshoot the ball");
  }
  return out;
}

std::string AttackSpec::summary() const {
  char buf[128];
  if (kind == Kind::FGSM) {
    std::snprintf(buf, sizeof buf, "eps=%g", epsilon);
  } else {
    std::snprintf(buf, sizeof buf, "eps=%g eta=%g steps=%llu random_start=%d", epsilon, step_eta,
                  static_cast<unsigned long long>(steps), random_start ? 1 : 0);
  }
  return buf;
}

Vector fgsm(const RobustProblem& problem, const Vector& w, const Sample& sample, const AttackSpec& spec,
            const InputRange& range) {
  spec.validate();
  const Vector zero = Vector::Zero(sample.input.size());
  const Vector g = problem.grad_u(w, sample, zero);
  return clamp_to(sample.input + spec.epsilon * sign_of(g), range);
}

Vector pgd(const RobustProblem& problem, const Vector& w, const Sample& sample, const AttackSpec& spec,
           const InputRange& range, Rng& rng) {
  spec.validate();
  const Eigen::Index m = sample.input.size();
  Vector u = Vector::Zero(m);
  if (spec.random_start && spec.epsilon > 0.0) {
    for (Eigen::Index j = 0; j < m; ++j) u[j] = rng.uniform(-spec.epsilon, spec.epsilon);
    u = clamp_to(sample.input + u, range) - sample.input;
  }
  Vector x = sample.input + u;
  for (std::uint64_t k = 0; k < spec.steps; ++k) {
    const Vector g = problem.grad_u(w, sample, u);
    u = (u + spec.step_eta * sign_of(g)).cwiseMax(-spec.epsilon).cwiseMin(spec.epsilon);
    x = clamp_to(sample.input + u, range);
    u = x - sample.input;
  }
  return x;
}

double accuracy_on_inputs(const ClassifierProblem& problem, const Vector& w, const Dataset& data,
                          const std::vector<Vector>& inputs) {
  if (inputs.size() != data.size()) throw ShapeError("one input per sample required");
  const auto predicted = problem.predict_batch(w, inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += predicted[i] == data[i].label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double evaluate_under_attack(const ClassifierProblem& problem, const Vector& w, const Dataset& data,
                             const Evaluation& evaluation, std::uint64_t seed) {
  if (data.dim() != problem.input_dim()) throw ShapeError("evaluation data dimension does not match the problem");
  std::vector<Vector> inputs;
  inputs.reserve(data.size());
  if (std::holds_alternative<CleanEvaluation>(evaluation)) {
    for (const Sample& s : data.samples()) inputs.push_back(s.input);
    return accuracy_on_inputs(problem, w, data, inputs);
  }
  const AttackSpec& spec = std::get<AttackSpec>(evaluation);
  spec.validate();
  for (const Sample& s : data.samples()) {
    if (spec.kind == AttackSpec::Kind::FGSM) {
      inputs.push_back(fgsm(problem, w, s, spec, data.input_range()));
    } else {
      Rng rng(mix_seed(seed, s.id));
      inputs.push_back(pgd(problem, w, s, spec, data.input_range(), rng));
    }
  }
  return accuracy_on_inputs(problem, w, data, inputs);
}

double natural_training_epoch(const RobustProblem& problem, Vector& w, std::size_t batch_size, double lr, Rng& rng) {
  const std::size_t n = problem.dataset().size();
  if (batch_size == 0 || batch_size > n) throw ConfigError("batch size must be in [1, N]");
  const auto order = shuffled_indices(n, rng);
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(problem.input_dim()));
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::span<const std::size_t> batch(order.data() + begin, std::min(batch_size, n - begin));
    const std::vector<Vector> u(batch.size(), zero);
    const BatchEvaluation ev = problem.evaluate_batch(w, batch, u);
    w -= lr * ev.grad_w_sum;
    for (const double l : ev.losses) loss_sum += l;
  }
  if (!w.allFinite()) throw NumericalDivergence("w", loss_sum);
  return loss_sum / static_cast<double>(n);
}

double pgd_training_epoch(const RobustProblem& problem, Vector& w, std::size_t batch_size, double lr,
                          const AttackSpec& spec, Rng& rng) {
  const std::size_t n = problem.dataset().size();
  if (batch_size == 0 || batch_size > n) throw ConfigError("batch size must be in [1, N]");
  const auto order = shuffled_indices(n, rng);
  const Dataset& data = problem.dataset();
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::span<const std::size_t> batch(order.data() + begin, std::min(batch_size, n - begin));
    std::vector<Vector> u;
    u.reserve(batch.size());
    for (const auto i : batch) u.push_back(pgd(problem, w, data[i], spec, data.input_range(), rng) - data[i].input);
    const BatchEvaluation ev = problem.evaluate_batch(w, batch, u);
    w -= lr * ev.grad_w_sum;
    for (const double l : ev.losses) loss_sum += l;
  }
  if (!w.allFinite()) throw NumericalDivergence("w", loss_sum);
  return loss_sum / static_cast<double>(n);
}

}  // namespace ssds
