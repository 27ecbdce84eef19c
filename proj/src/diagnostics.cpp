#include "ssds/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "ssds/config.hpp"
#include "ssds/errors.hpp"
#include "ssds/rng.hpp"

namespace ssds {

namespace {

double linf(const Vector& u) { return u.size() == 0 ? 0.0 : u.lpNorm<Eigen::Infinity>(); }

double lagrangian_at(const RobustProblem& problem, const Vector& w, double t, double lambda,
                     const UncertaintyState& u, const std::vector<double>& v) {
  double inner = 0.0;
  const Dataset& data = problem.dataset();
  for (std::size_t i = 0; i < data.size(); ++i) {
    inner += problem.loss(w, data[i], u[i]) - v[i] * problem.constraint(u[i]);
  }
  return t + lambda * (inner - t);
}

}  // namespace

double lagrangian_value(const RobustProblem& problem, const SaddleIterate& z) {
  if (z.u.size() != problem.dataset().size() || z.duals.v.size() != z.u.size()) {
    throw ShapeError("lagrangian_value: iterate does not match dataset");
  }
  return lagrangian_at(problem, z.x.w, z.x.t, z.duals.lambda, z.u, z.duals.v);
}

double KktResidual::max_field() const {
  return std::max({stationarity_x, stationarity_u, comp_slack_lambda, comp_slack_v, primal_feas, dual_feas});
}

KktResidual kkt_residual(const RobustProblem& problem, const SaddleIterate& z) {
  const Dataset& data = problem.dataset();
  if (z.u.size() != data.size() || z.duals.v.size() != z.u.size()) {
    throw ShapeError("kkt_residual: iterate does not match dataset");
  }
  const double lambda = z.duals.lambda;
  KktResidual r;
  Vector grad_w = Vector::Zero(z.x.w.size());
  double loss_sum = 0.0;
  double penalty_sum = 0.0;
  double worst_h = 0.0;
  double min_v = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector& u = z.u[i];
    const double v = z.duals.v[i];
    const double h = problem.constraint(u);
    loss_sum += problem.loss(z.x.w, data[i], u);
    grad_w += problem.grad_w(z.x.w, data[i], u);
    penalty_sum += v * h;
    worst_h = std::max(worst_h, h);
    min_v = std::min(min_v, v);
    r.stationarity_u = std::max(
        r.stationarity_u, subdifferential_distance(problem.grad_u(z.x.w, data[i], u), v, u, problem.budget().norm_order));
    r.comp_slack_v = std::max(r.comp_slack_v, std::abs(v * h));
  }
  const double dt = 1.0 - lambda;
  r.stationarity_x = std::sqrt((lambda * grad_w).squaredNorm() + dt * dt);
  r.comp_slack_lambda = std::abs(lambda * (loss_sum - z.x.t - penalty_sum));
  r.primal_feas = std::max({0.0, loss_sum - z.x.t, worst_h});
  r.dual_feas = std::max(-std::min(lambda, 0.0), -min_v);
  return r;
}

SaddleCheck saddle_inequality_check(const RobustProblem& problem, const SaddleIterate& candidate, Rng& rng,
                                    const SaddleProbeOptions& options) {
  SaddleCheck out;
  if (options.probes == 0) return out;
  const double center = lagrangian_value(problem, candidate);
  const double r = options.radius;
  auto draw = [&] { return rng.uniform(-r, r); };
  auto note = [&](double excess) {
    if (excess > options.tolerance) {
      ++out.violations;
      out.max_violation = std::max(out.max_violation, excess);
    }
  };

  for (std::size_t probe = 0; probe < options.probes; ++probe) {
    // ascent side: perturb (lambda, u) with x, v held at the candidate
    const double lambda = std::max(0.0, candidate.duals.lambda + draw());
    UncertaintyState u = candidate.u;
    for (Vector& ui : u) {
      for (Eigen::Index j = 0; j < ui.size(); ++j) ui[j] += draw();
    }
    note(lagrangian_at(problem, candidate.x.w, candidate.x.t, lambda, u, candidate.duals.v) - center);

    // descent side: perturb (x, v) with lambda, u held
    Vector w = candidate.x.w;
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] += draw();
    const double t = candidate.x.t + draw();
    std::vector<double> v = candidate.duals.v;
    for (double& vi : v) vi = std::max(0.0, vi + draw());
    note(center - lagrangian_at(problem, w, t, candidate.duals.lambda, candidate.u, v));
  }
  return out;
}

BudgetHistogram budget_histogram(const UncertaintyState& u, const BudgetConstraint& budget, std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  BudgetHistogram hist;
  hist.counts.assign(bins, 0);
  std::vector<double> norms;
  norms.reserve(u.size());
  for (const Vector& ui : u) norms.push_back(linf(ui));
  for (const double n : norms) hist.max_norm = std::max(hist.max_norm, n);
  const double width = hist.max_norm / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) hist.bin_start.push_back(width * static_cast<double>(b));
  for (const double n : norms) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>(n / width) : 0;
    hist.counts[std::min(b, bins - 1)] += 1;
  }
  hist.fraction_within = fraction_within_budget(u, budget.epsilon);
  return hist;
}

double fraction_within_budget(const UncertaintyState& u, double epsilon, double slack) {
  if (u.empty()) return 1.0;
  std::size_t within = 0;
  for (const Vector& ui : u) within += linf(ui) <= epsilon + slack ? 1 : 0;
  return static_cast<double>(within) / static_cast<double>(u.size());
}

void write_histogram_csv(const std::filesystem::path& path, const BudgetHistogram& histogram) {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatError::Kind::Unreadable, "cannot write " + path.string());
  out << "bin_start,count\n";
  for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
    out << format_real(histogram.bin_start[b]) << ',' << histogram.counts[b] << '\n';
  }
}

std::string diagnostics_json(const std::string& run_id, const KktResidual& kkt, const std::optional<SaddleCheck>& saddle,
                             std::optional<double> kkt_threshold, double lagrangian) {
  nlohmann::ordered_json report;
  report["run_id"] = run_id;
  report["lagrangian"] = lagrangian;
  report["kkt"] = {
      {"stationarity_x", kkt.stationarity_x},   {"stationarity_u", kkt.stationarity_u},
      {"comp_slack_lambda", kkt.comp_slack_lambda}, {"comp_slack_v", kkt.comp_slack_v},
      {"primal_feas", kkt.primal_feas},         {"dual_feas", kkt.dual_feas},
  };
  if (kkt_threshold) {
    report["kkt_threshold"] = *kkt_threshold;
    report["kkt_pass"] = kkt.max_field() <= *kkt_threshold;
  }
  if (saddle) {
    report["saddle"] = {{"violations", saddle->violations}, {"max_violation", saddle->max_violation}};
  }
  return report.dump(2);
}

}  // namespace ssds
