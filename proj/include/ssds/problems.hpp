#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ssds/autodiff.hpp"
#include "ssds/core_types.hpp"
#include "ssds/dataset.hpp"

namespace ssds {

/// Losses and gradients for a set of samples at one (w, u).
struct BatchEvaluation {
  std::vector<double> losses;
  std::vector<Vector> grad_u;
  /// Sum of grad_w over the batch.
  Vector grad_w_sum;
};

/// The (f, g, h) triple of the epigraph problem.
///
/// f(x) = t and g(x, u) = sum_i L(I^i + u^i, y^i, w) - t are fixed by the
/// formulation; implementations supply the per-sample loss L and its
/// gradients. All evaluation is const and safe to call concurrently.
class RobustProblem {
 public:
  RobustProblem(std::shared_ptr<const Dataset> data, BudgetConstraint budget, SubgradientRule rule);
  virtual ~RobustProblem() = default;

  /// Dimension n of w.
  virtual std::size_t param_dim() const = 0;
  /// Dimension m of u (equal to the sample dimension).
  std::size_t input_dim() const { return data_->dim(); }

  const Dataset& dataset() const { return *data_; }
  const std::shared_ptr<const Dataset>& dataset_ptr() const { return data_; }
  const BudgetConstraint& budget() const { return budget_; }
  SubgradientRule subgradient_rule() const { return rule_; }

  virtual double loss(const Vector& w, const Sample& sample, const Vector& u) const = 0;
  virtual Vector grad_w(const Vector& w, const Sample& sample, const Vector& u) const = 0;
  virtual Vector grad_u(const Vector& w, const Sample& sample, const Vector& u) const = 0;

  /// h(u) = ||u||_p - epsilon.
  double constraint(const Vector& u) const { return budget_.evaluate(u); }
  /// Direction multiplying v in the u dynamics, per the configured rule.
  Vector constraint_subgrad(const Vector& u) const;

  /// Evaluates the samples at dataset indices `indices` (0-based) with
  /// perturbations `u` aligned to them. The default loops over samples in
  /// order; overrides must keep that summation order.
  virtual BatchEvaluation evaluate_batch(const Vector& w, std::span<const std::size_t> indices,
                                         std::span<const Vector> u) const;

  /// Starting parameters for training runs.
  virtual Vector initial_parameters(std::uint64_t seed) const = 0;

 protected:
  void check_dims(const Vector& w, const Vector& u) const;

 private:
  std::shared_ptr<const Dataset> data_;
  BudgetConstraint budget_;
  SubgradientRule rule_;
};

/// A RobustProblem whose loss is the cross-entropy of a classifier.
class ClassifierProblem : public RobustProblem {
 public:
  using RobustProblem::RobustProblem;

  std::size_t num_classes() const { return dataset().num_classes(); }
  virtual Vector logits(const Vector& w, const Vector& input) const = 0;
  std::size_t predict(const Vector& w, const Vector& input) const;
  /// Predictions for many inputs; the default calls predict per input.
  virtual std::vector<std::size_t> predict_batch(const Vector& w, std::span<const Vector> inputs) const;
};

/// L = a ||w - I^i||^2 - b ||u - c||^2 with n = m. Strictly convex in w,
/// strictly concave in u, so the saddle point is known in closed form.
class QuadraticSaddleProblem : public RobustProblem {
 public:
  struct InnerMax {
    Vector u_star;
    double value = 0.0;
  };

  QuadraticSaddleProblem(std::shared_ptr<const Dataset> data, BudgetConstraint budget, Vector c, double a = 1.0,
                         double b = 1.0, SubgradientRule rule = SubgradientRule::Sign);

  std::size_t param_dim() const override { return input_dim(); }
  double loss(const Vector& w, const Sample& sample, const Vector& u) const override;
  Vector grad_w(const Vector& w, const Sample& sample, const Vector& u) const override;
  Vector grad_u(const Vector& w, const Sample& sample, const Vector& u) const override;
  /// Zeros.
  Vector initial_parameters(std::uint64_t seed) const override;

  const Vector& c() const { return c_; }
  double a() const { return a_; }
  double b() const { return b_; }

  /// Exact maximizer of L(w, sample, .) over the budget ball: the projection
  /// of c. It does not depend on w or the sample; the value does.
  InnerMax inner_max_oracle(const Vector& w, const Sample& sample) const;

  /// Closed-form saddle point (x*, lambda*, u*, v*): w* = mean of the
  /// inputs, lambda* = 1, u*^i = projection of c, v*^i = 2b times the dual
  /// norm of c - u*, t* = sum of the inner maxima at w*. Returned with k = 0.
  SaddleIterate saddle_oracle() const;

 private:
  Vector c_;
  double a_;
  double b_;
};

/// Linear softmax classifier. w holds W (K x m, row-major) followed by b (K).
class RobustLogisticProblem : public ClassifierProblem {
 public:
  RobustLogisticProblem(std::shared_ptr<const Dataset> data, BudgetConstraint budget,
                        SubgradientRule rule = SubgradientRule::Sign);

  std::size_t param_dim() const override { return num_classes() * input_dim() + num_classes(); }
  double loss(const Vector& w, const Sample& sample, const Vector& u) const override;
  Vector grad_w(const Vector& w, const Sample& sample, const Vector& u) const override;
  Vector grad_u(const Vector& w, const Sample& sample, const Vector& u) const override;
  Vector logits(const Vector& w, const Vector& input) const override;
  /// Zeros.
  Vector initial_parameters(std::uint64_t seed) const override;

 private:
  // softmax(z) - onehot(label) at input I + u
  Vector residual(const Vector& w, const Sample& sample, const Vector& u) const;
};

/// Feed-forward network trained with softmax cross-entropy; gradients come
/// from the autodiff tape.
class MlpProblem : public ClassifierProblem {
 public:
  /// The architecture's input and output sizes must match the dataset.
  MlpProblem(std::shared_ptr<const Dataset> data, BudgetConstraint budget, autodiff::MlpArchitecture arch,
             SubgradientRule rule = SubgradientRule::Sign);

  /// 784-128-64-10 with ReLU.
  static autodiff::MlpArchitecture default_architecture();

  const autodiff::MlpArchitecture& architecture() const { return arch_; }

  std::size_t param_dim() const override { return arch_.parameter_count(); }
  double loss(const Vector& w, const Sample& sample, const Vector& u) const override;
  Vector grad_w(const Vector& w, const Sample& sample, const Vector& u) const override;
  Vector grad_u(const Vector& w, const Sample& sample, const Vector& u) const override;
  /// One batched forward/backward pass over all the samples.
  BatchEvaluation evaluate_batch(const Vector& w, std::span<const std::size_t> indices,
                                 std::span<const Vector> u) const override;
  Vector logits(const Vector& w, const Vector& input) const override;
  std::vector<std::size_t> predict_batch(const Vector& w, std::span<const Vector> inputs) const override;
  /// Glorot-uniform weights from `seed`, zero biases.
  Vector initial_parameters(std::uint64_t seed) const override;

 private:
  struct SampleGrad {
    double loss;
    autodiff::Gradients grads;
  };
  SampleGrad evaluate(const Vector& w, const Sample& sample, const Vector& u) const;

  autodiff::MlpArchitecture arch_;
};

/// N points with inputs uniform in [-1, 1]^dim, one class; the data for
/// QuadraticSaddleProblem.
Dataset make_quadratic_dataset(std::size_t num_samples, std::size_t dim, std::uint64_t seed);

/// Dual norm of r for the budget's p (inf <-> 1, 2 <-> 2).
double dual_norm(const Vector& r, NormOrder order);

}  // namespace ssds
