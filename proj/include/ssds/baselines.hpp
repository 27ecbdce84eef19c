#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ssds/core_types.hpp"
#include "ssds/dataset.hpp"
#include "ssds/problems.hpp"

namespace ssds {

class Rng;

/// Sign-gradient attack in the l_inf ball of radius epsilon.
struct AttackSpec {
  enum class Kind { FGSM, PGD };

  Kind kind = Kind::FGSM;
  double epsilon = 0.03;
  /// PGD step eta.
  double step_eta = 0.007;
  /// PGD iterations.
  std::uint64_t steps = 1;
  /// PGD uniform start in the ball.
  bool random_start = true;

  static AttackSpec fgsm(double epsilon);
  static AttackSpec pgd(double epsilon, double step_eta, std::uint64_t steps, bool random_start = true);

  /// Throws ConfigError for negative sizes or zero PGD steps.
  void validate() const;
  /// Non-fatal remarks, e.g. a PGD step larger than 2 epsilon.
  std::vector<std::string> warnings() const;
  /// Short description for result tables, e.g. "eps=0.1 eta=0.025 steps=10".
  std::string summary() const;
};

/// clamp(I + epsilon sgn(dL/du at u = 0)) into `range`. `sample` may come
/// from any dataset with the problem's input dimension.
Vector fgsm(const RobustProblem& problem, const Vector& w, const Sample& sample, const AttackSpec& spec,
            const InputRange& range);

/// Optional uniform start, then `steps` of
///   u <- project(u + eta sgn(dL/du)),  x <- clamp(I + u),  u <- x - I.
/// Returns the final x.
Vector pgd(const RobustProblem& problem, const Vector& w, const Sample& sample, const AttackSpec& spec,
           const InputRange& range, Rng& rng);

struct CleanEvaluation {};
using Evaluation = std::variant<CleanEvaluation, AttackSpec>;

/// Accuracy of `problem`'s classifier at w on `data`, optionally under
/// attack. PGD random starts draw from a per-sample stream derived from
/// (seed, sample id), so the result does not depend on evaluation order.
double evaluate_under_attack(const ClassifierProblem& problem, const Vector& w, const Dataset& data,
                             const Evaluation& evaluation, std::uint64_t seed = 0);

/// Accuracy on `data` with each input replaced by the corresponding entry
/// of `inputs`.
double accuracy_on_inputs(const ClassifierProblem& problem, const Vector& w, const Dataset& data,
                          const std::vector<Vector>& inputs);

/// One epoch of mini-batch SGD on the summed loss: w <- w - lr sum_B dL/dw.
/// Returns the mean loss.
double natural_training_epoch(const RobustProblem& problem, Vector& w, std::size_t batch_size, double lr, Rng& rng);

/// Same as natural training with each batch replaced by its PGD adversaries.
double pgd_training_epoch(const RobustProblem& problem, Vector& w, std::size_t batch_size, double lr,
                          const AttackSpec& spec, Rng& rng);

}  // namespace ssds
