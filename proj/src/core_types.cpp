#include "ssds/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "ssds/errors.hpp"

namespace ssds {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_finite(const Vector& u, const char* what) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) {
      throw NumericalDivergence(std::string(what) + "[" + std::to_string(i) + "]", u[i]);
    }
  }
}

// Rounding slack for the l1/l2 "already inside" test. A projected point sits
// within a few ulps of the sphere, so it must pass this test unchanged for
// ball_project to be idempotent.
double inside_slack(double radius, Eigen::Index dim) {
  return 4.0 * static_cast<double>(dim + 2) * std::numeric_limits<double>::epsilon() * radius;
}

// Euclidean projection onto the l1 ball of radius r.
Vector l1_ball_project(const Vector& y, double r) {
  if (y.lpNorm<1>() <= r + inside_slack(r, y.size())) return y;
  const Vector magnitude = simplex_project(y.cwiseAbs(), r);
  Vector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = sgn(y[i]) * magnitude[i];
  return out;
}

}  // namespace

BudgetConstraint::BudgetConstraint(NormOrder order, double eps) : norm_order(order), epsilon(eps) {
  if (!(eps > 0.0)) throw ConfigError("budget epsilon must be positive, got " + std::to_string(eps));
}

double BudgetConstraint::norm(const Vector& u) const {
  switch (norm_order) {
    case NormOrder::L1:
      return u.lpNorm<1>();
    case NormOrder::L2:
      return u.norm();
    case NormOrder::LInf:
      return u.size() == 0 ? 0.0 : u.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

Vector budget_subgradient(const Vector& u, NormOrder order, SubgradientRule rule) {
  Vector g = Vector::Zero(u.size());
  switch (order) {
    case NormOrder::L1:
      for (Eigen::Index i = 0; i < u.size(); ++i) g[i] = sgn(u[i]);
      return g;
    case NormOrder::L2: {
      const double n = u.norm();
      if (n > 0.0) g = u / n;
      return g;
    }
    case NormOrder::LInf: {
      if (rule == SubgradientRule::Sign) {
        for (Eigen::Index i = 0; i < u.size(); ++i) g[i] = sgn(u[i]);
        return g;
      }
      if (u.size() == 0) return g;
      const double top = u.lpNorm<Eigen::Infinity>();
      if (top == 0.0) return g;
      std::size_t ties = 0;
      for (Eigen::Index i = 0; i < u.size(); ++i) ties += std::abs(u[i]) == top ? 1 : 0;
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (std::abs(u[i]) == top) g[i] = sgn(u[i]) / static_cast<double>(ties);
      }
      return g;
    }
  }
  return g;
}

double subdifferential_distance(const Vector& r, double v, const Vector& u, NormOrder order) {
  if (v == 0.0) return r.norm();
  switch (order) {
    case NormOrder::L2: {
      const double n = u.norm();
      if (n > 0.0) return (r - v * u / n).norm();
      return std::max(0.0, r.norm() - v);
    }
    case NormOrder::L1: {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double d = u[i] != 0.0 ? r[i] - v * sgn(u[i]) : std::max(0.0, std::abs(r[i]) - v);
        acc += d * d;
      }
      return std::sqrt(acc);
    }
    case NormOrder::LInf: {
      const double top = u.size() == 0 ? 0.0 : u.lpNorm<Eigen::Infinity>();
      if (top == 0.0) return (r - l1_ball_project(r, v)).norm();
      double acc = 0.0;
      std::vector<double> q;
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (std::abs(u[i]) == top) {
          q.push_back(r[i] * sgn(u[i]));
        } else {
          acc += r[i] * r[i];
        }
      }
      const Vector qv = Eigen::Map<const Vector>(q.data(), static_cast<Eigen::Index>(q.size()));
      acc += (qv - simplex_project(qv, v)).squaredNorm();
      return std::sqrt(acc);
    }
  }
  return 0.0;
}

StepSchedule StepSchedule::adaptive_norm(double gamma0) {
  if (!(gamma0 > 0.0)) throw ConfigError("gamma0 must be positive");
  StepSchedule s;
  s.variant = Variant::AdaptiveNorm;
  s.gamma0 = gamma0;
  return s;
}

StepSchedule StepSchedule::exponential_decay(double alpha0, double decay_p) {
  if (!(alpha0 > 0.0)) throw ConfigError("alpha0 must be positive");
  if (!(decay_p > 0.0)) throw ConfigError("decay_p must be positive");
  StepSchedule s;
  s.variant = Variant::ExponentialDecay;
  s.alpha0 = alpha0;
  s.decay_p = decay_p;
  return s;
}

double positive_project(double x) {
  if (!std::isfinite(x)) throw NumericalDivergence("positive_project", x);
  return std::max(x, 0.0);
}

Vector positive_project(const Vector& x) {
  require_finite(x, "positive_project");
  return x.cwiseMax(0.0);
}

double step_size(const StepSchedule& schedule, std::uint64_t k, double dynamics_norm) {
  if (k == 0) throw ConfigError("step index k must be >= 1");
  switch (schedule.variant) {
    case StepSchedule::Variant::AdaptiveNorm: {
      if (!std::isfinite(dynamics_norm)) throw NumericalDivergence("dynamics_norm", dynamics_norm);
      if (dynamics_norm == 0.0) throw FixedPointReached();
      const double gamma = schedule.gamma0 / static_cast<double>(k);
      return gamma / dynamics_norm;
    }
    case StepSchedule::Variant::ExponentialDecay: {
      const double kk = static_cast<double>(k);
      return schedule.alpha0 * std::exp(-schedule.decay_p * kk * (kk - 1.0) / 2.0);
    }
  }
  return 0.0;
}

Vector ball_project(const Vector& u, const BudgetConstraint& budget) {
  require_finite(u, "u");
  const double eps = budget.epsilon;
  switch (budget.norm_order) {
    case NormOrder::LInf:
      return u.cwiseMax(-eps).cwiseMin(eps);
    case NormOrder::L2: {
      const double n = u.norm();
      if (n <= eps + inside_slack(eps, u.size())) return u;
      return u * (eps / n);
    }
    case NormOrder::L1:
      return l1_ball_project(u, eps);
  }
  return u;
}

Vector simplex_project(const Vector& y, double total) {
  if (y.size() == 0) return y;
  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - total) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  return (y.array() - theta).cwiseMax(0.0).matrix();
}

}  // namespace ssds
