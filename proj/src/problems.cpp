#include "ssds/problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssds/errors.hpp"
#include "ssds/rng.hpp"

namespace ssds {

RobustProblem::RobustProblem(std::shared_ptr<const Dataset> data, BudgetConstraint budget, SubgradientRule rule)
    : data_(std::move(data)), budget_(budget), rule_(rule) {
  if (!data_) throw ConfigError("problem needs a dataset");
}

Vector RobustProblem::constraint_subgrad(const Vector& u) const {
  return budget_subgradient(u, budget_.norm_order, rule_);
}

void RobustProblem::check_dims(const Vector& w, const Vector& u) const {
  if (static_cast<std::size_t>(w.size()) != param_dim()) {
    throw ShapeError("w has dimension " + std::to_string(w.size()) + ", expected " + std::to_string(param_dim()));
  }
  if (static_cast<std::size_t>(u.size()) != input_dim()) {
    throw ShapeError("u has dimension " + std::to_string(u.size()) + ", expected " + std::to_string(input_dim()));
  }
}

BatchEvaluation RobustProblem::evaluate_batch(const Vector& w, std::span<const std::size_t> indices,
                                              std::span<const Vector> u) const {
  if (indices.size() != u.size()) throw ShapeError("evaluate_batch: one perturbation per index required");
  BatchEvaluation out;
  out.grad_w_sum = Vector::Zero(static_cast<Eigen::Index>(param_dim()));
  out.losses.reserve(indices.size());
  out.grad_u.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const Sample& s = dataset()[indices[j]];
    out.losses.push_back(loss(w, s, u[j]));
    out.grad_u.push_back(grad_u(w, s, u[j]));
    out.grad_w_sum += grad_w(w, s, u[j]);
  }
  return out;
}

std::size_t ClassifierProblem::predict(const Vector& w, const Vector& input) const {
  Eigen::Index best = 0;
  logits(w, input).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

std::vector<std::size_t> ClassifierProblem::predict_batch(const Vector& w, std::span<const Vector> inputs) const {
  std::vector<std::size_t> out;
  out.reserve(inputs.size());
  for (const Vector& x : inputs) out.push_back(predict(w, x));
  return out;
}

double dual_norm(const Vector& r, NormOrder order) {
  switch (order) {
    case NormOrder::L1:
      return r.size() == 0 ? 0.0 : r.lpNorm<Eigen::Infinity>();
    case NormOrder::L2:
      return r.norm();
    case NormOrder::LInf:
      return r.lpNorm<1>();
  }
  return 0.0;
}

QuadraticSaddleProblem::QuadraticSaddleProblem(std::shared_ptr<const Dataset> data, BudgetConstraint budget, Vector c,
                                               double a, double b, SubgradientRule rule)
    : RobustProblem(std::move(data), budget, rule), c_(std::move(c)), a_(a), b_(b) {
  if (!(a_ > 0.0) || !(b_ > 0.0)) throw ConfigError("quadratic curvatures a and b must be positive");
  if (static_cast<std::size_t>(c_.size()) != input_dim()) {
    throw ShapeError("target c must have the sample dimension " + std::to_string(input_dim()));
  }
  if (!c_.allFinite()) throw ConfigError("target c must be finite");
}

double QuadraticSaddleProblem::loss(const Vector& w, const Sample& sample, const Vector& u) const {
  check_dims(w, u);
  return a_ * (w - sample.input).squaredNorm() - b_ * (u - c_).squaredNorm();
}

Vector QuadraticSaddleProblem::grad_w(const Vector& w, const Sample& sample, const Vector& u) const {
  check_dims(w, u);
  return 2.0 * a_ * (w - sample.input);
}

Vector QuadraticSaddleProblem::grad_u(const Vector& w, const Sample&, const Vector& u) const {
  check_dims(w, u);
  return -2.0 * b_ * (u - c_);
}

Vector QuadraticSaddleProblem::initial_parameters(std::uint64_t) const {
  return Vector::Zero(static_cast<Eigen::Index>(param_dim()));
}

QuadraticSaddleProblem::InnerMax QuadraticSaddleProblem::inner_max_oracle(const Vector& w, const Sample& sample) const {
  InnerMax out;
  out.u_star = ball_project(c_, budget());
  out.value = loss(w, sample, out.u_star);
  return out;
}

SaddleIterate QuadraticSaddleProblem::saddle_oracle() const {
  const Dataset& data = dataset();
  Vector w_star = Vector::Zero(static_cast<Eigen::Index>(param_dim()));
  for (const Sample& s : data.samples()) w_star += s.input;
  w_star /= static_cast<double>(data.size());

  const Vector u_star = ball_project(c_, budget());
  const double v_star = 2.0 * b_ * dual_norm(c_ - u_star, budget().norm_order);

  SaddleIterate z;
  z.x.w = w_star;
  z.x.t = 0.0;
  for (const Sample& s : data.samples()) z.x.t += loss(w_star, s, u_star);
  z.duals.lambda = 1.0;
  z.duals.v.assign(data.size(), v_star);
  z.u.assign(data.size(), u_star);
  z.k = 0;
  return z;
}

RobustLogisticProblem::RobustLogisticProblem(std::shared_ptr<const Dataset> data, BudgetConstraint budget,
                                             SubgradientRule rule)
    : ClassifierProblem(std::move(data), budget, rule) {
  if (num_classes() < 2) throw ConfigError("logistic problem needs at least two classes");
}

Vector RobustLogisticProblem::logits(const Vector& w, const Vector& input) const {
  const auto k = static_cast<Eigen::Index>(num_classes());
  const auto m = static_cast<Eigen::Index>(input_dim());
  if (w.size() != k * m + k || input.size() != m) throw ShapeError("logistic: dimension mismatch");
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> weight(w.data(), k, m);
  return weight * input + w.segment(k * m, k);
}

Vector RobustLogisticProblem::residual(const Vector& w, const Sample& sample, const Vector& u) const {
  Vector z = logits(w, sample.input + u);
  z.array() -= z.maxCoeff();
  Vector p = z.array().exp();
  p /= p.sum();
  p[static_cast<Eigen::Index>(sample.label)] -= 1.0;
  return p;
}

double RobustLogisticProblem::loss(const Vector& w, const Sample& sample, const Vector& u) const {
  check_dims(w, u);
  return autodiff::cross_entropy(autodiff::Tensor::from_vector(logits(w, sample.input + u)), sample.label);
}

Vector RobustLogisticProblem::grad_w(const Vector& w, const Sample& sample, const Vector& u) const {
  check_dims(w, u);
  const auto k = static_cast<Eigen::Index>(num_classes());
  const auto m = static_cast<Eigen::Index>(input_dim());
  const Vector r = residual(w, sample, u);
  const Vector x = sample.input + u;
  Vector g(k * m + k);
  for (Eigen::Index row = 0; row < k; ++row) g.segment(row * m, m) = r[row] * x;
  g.segment(k * m, k) = r;
  return g;
}

Vector RobustLogisticProblem::grad_u(const Vector& w, const Sample& sample, const Vector& u) const {
  check_dims(w, u);
  const auto k = static_cast<Eigen::Index>(num_classes());
  const auto m = static_cast<Eigen::Index>(input_dim());
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> weight(w.data(), k, m);
  return weight.transpose() * residual(w, sample, u);
}

Vector RobustLogisticProblem::initial_parameters(std::uint64_t) const {
  return Vector::Zero(static_cast<Eigen::Index>(param_dim()));
}

MlpProblem::MlpProblem(std::shared_ptr<const Dataset> data, BudgetConstraint budget, autodiff::MlpArchitecture arch,
                       SubgradientRule rule)
    : ClassifierProblem(std::move(data), budget, rule), arch_(std::move(arch)) {
  arch_.validate();
  if (arch_.input_dim() != input_dim()) {
    throw ShapeError("architecture input " + std::to_string(arch_.input_dim()) + " does not match data dimension " +
                     std::to_string(input_dim()));
  }
  if (arch_.output_dim() != num_classes()) {
    throw ShapeError("architecture output " + std::to_string(arch_.output_dim()) + " does not match class count " +
                     std::to_string(num_classes()));
  }
}

autodiff::MlpArchitecture MlpProblem::default_architecture() {
  return {{784, 128, 64, 10}, autodiff::Activation::ReLU};
}

MlpProblem::SampleGrad MlpProblem::evaluate(const Vector& w, const Sample& sample, const Vector& u) const {
  check_dims(w, u);
  auto pass = autodiff::forward(arch_, w, autodiff::Tensor::from_vector(sample.input + u));
  const std::size_t label = sample.label;
  const auto root = pass.tape.cross_entropy(pass.logits_node, std::span<const std::size_t>(&label, 1));
  const double value = pass.tape.value(root)[0];
  return {value, autodiff::backward(pass.tape)};
}

double MlpProblem::loss(const Vector& w, const Sample& sample, const Vector& u) const {
  check_dims(w, u);
  return autodiff::cross_entropy(autodiff::Tensor::from_vector(logits(w, sample.input + u)), sample.label);
}

Vector MlpProblem::grad_w(const Vector& w, const Sample& sample, const Vector& u) const {
  return evaluate(w, sample, u).grads.params;
}

Vector MlpProblem::grad_u(const Vector& w, const Sample& sample, const Vector& u) const {
  return evaluate(w, sample, u).grads.input.to_vector();
}

BatchEvaluation MlpProblem::evaluate_batch(const Vector& w, std::span<const std::size_t> indices,
                                           std::span<const Vector> u) const {
  if (indices.size() != u.size()) throw ShapeError("evaluate_batch: one perturbation per index required");
  if (indices.empty()) return {{}, {}, Vector::Zero(static_cast<Eigen::Index>(param_dim()))};
  std::vector<Vector> rows;
  std::vector<std::size_t> labels;
  rows.reserve(indices.size());
  labels.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const Sample& s = dataset()[indices[j]];
    check_dims(w, u[j]);
    rows.push_back(s.input + u[j]);
    labels.push_back(s.label);
  }
  auto pass = autodiff::forward(arch_, w, autodiff::Tensor::from_rows(rows));
  BatchEvaluation out;
  pass.tape.cross_entropy(pass.logits_node, labels, &out.losses);
  const auto grads = autodiff::backward(pass.tape);
  out.grad_w_sum = grads.params;
  out.grad_u.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) out.grad_u.push_back(grads.input.row(j));
  return out;
}

Vector MlpProblem::logits(const Vector& w, const Vector& input) const {
  return autodiff::forward(arch_, w, autodiff::Tensor::from_vector(input)).logits.to_vector();
}

std::vector<std::size_t> MlpProblem::predict_batch(const Vector& w, std::span<const Vector> inputs) const {
  std::vector<std::size_t> out;
  if (inputs.empty()) return out;
  const auto pass = autodiff::forward(arch_, w, autodiff::Tensor::from_rows(inputs));
  const std::size_t k = pass.logits.cols();
  out.reserve(inputs.size());
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    const double* row = pass.logits.data() + r * k;
    out.push_back(static_cast<std::size_t>(std::max_element(row, row + k) - row));
  }
  return out;
}

Vector MlpProblem::initial_parameters(std::uint64_t seed) const {
  Rng rng(seed);
  return autodiff::MlpModel::glorot(arch_, rng).parameters();
}

Dataset make_quadratic_dataset(std::size_t num_samples, std::size_t dim, std::uint64_t seed) {
  if (num_samples == 0 || dim == 0) throw ConfigError("quadratic dataset arguments must be positive");
  Rng rng(seed);
  std::vector<Sample> samples(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) {
    samples[i].id = i + 1;
    samples[i].input.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) samples[i].input[static_cast<Eigen::Index>(j)] = rng.uniform(-1.0, 1.0);
  }
  return Dataset(std::move(samples), 1);
}

}  // namespace ssds
