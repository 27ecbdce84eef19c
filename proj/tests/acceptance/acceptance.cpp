// Acceptance suite. Usage: ssds_acceptance [criterion...]; with no arguments
// every criterion runs. Prints one PASS/FAIL line per criterion and exits
// nonzero if any failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ssds/autodiff.hpp"
#include "ssds/baselines.hpp"
#include "ssds/diagnostics.hpp"
#include "ssds/dynamics.hpp"
#include "ssds/errors.hpp"
#include "ssds/harness.hpp"
#include "ssds/problems.hpp"
#include "ssds/rng.hpp"

using namespace ssds;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const fs::path kMnist = fs::path(SSDS_SOURCE_DIR) / "data" / "mnist";

std::shared_ptr<const Dataset> mnist_train(std::size_t n) {
  return std::make_shared<const Dataset>(
      load_idx_dataset(kMnist / "train-images-idx3-ubyte", kMnist / "train-labels-idx1-ubyte", n));
}

std::shared_ptr<const Dataset> mnist_test(std::size_t n) {
  return std::make_shared<const Dataset>(
      load_idx_dataset(kMnist / "t10k-images-idx3-ubyte", kMnist / "t10k-labels-idx1-ubyte", n));
}

std::shared_ptr<const Dataset> spec(const std::string& text) {
  return std::make_shared<const Dataset>(load_dataset(text));
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

Vector train_natural(const RobustProblem& problem, Vector w, std::size_t epochs, std::size_t batch, double lr,
                     std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t e = 0; e < epochs; ++e) natural_training_epoch(problem, w, batch, lr, rng);
  return w;
}

// ---------------------------------------------------------------------------
// 1. Saddle convergence of the normalized-step dynamics on the quadratic
//    instance, measured in the weighted distance to the closed form.

Verdict saddle_convergence() {
  const auto start = std::chrono::steady_clock::now();
  auto data = std::make_shared<const Dataset>(make_quadratic_dataset(4, 2, 11));
  const QuadraticSaddleProblem problem(data, BudgetConstraint(NormOrder::LInf, 0.03), Vector{{0.05, 0.01}}, 1.0, 1.0,
                                       SubgradientRule::Exact);
  const SaddleIterate star = problem.saddle_oracle();
  const auto schedule = StepSchedule::adaptive_norm(1.0);
  constexpr int kSeeds = 10;
  const std::uint64_t checkpoints[] = {100, 10'000, 100'000};
  std::map<std::uint64_t, double> mean;

  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(mix_seed(1001, static_cast<std::uint64_t>(seed)));
    SaddleIterate z;
    z.x.w = Vector{{rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    z.x.t = rng.uniform(-1, 1);
    z.duals.lambda = rng.uniform(0, 2);
    for (int i = 0; i < 4; ++i) {
      z.u.push_back(Vector{{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)}});
      z.duals.v.push_back(rng.uniform(0, 1));
    }
    for (std::uint64_t k = 1; k <= 100'000; ++k) {
      const StepOutcome step = ssds_step(problem, z, rng.below(4), schedule);
      if (step.fixed_point) break;
      z = step.z;
      for (const std::uint64_t c : checkpoints) {
        if (k == c) mean[c] += weighted_distance(z, star) / kSeeds;
      }
    }
  }
  const double ratio = mean[100] / mean[100'000];
  const double elapsed = seconds_since(start);
  Verdict v;
  v.pass = ratio >= 100.0 && mean[100'000] <= 1e-4 && elapsed < 30.0;
  v.detail = fmt("N(k=1e2)=%.4g N(k=1e4)=%.4g N(k=1e5)=%.4g reduction=%.3gx (need >=100x, final <=1e-4) %.1fs",
                 mean[100], mean[10'000], mean[100'000], ratio, elapsed);
  return v;
}

// ---------------------------------------------------------------------------
// 2. KKT residuals and saddle inequalities at the closed-form saddle point.

Verdict kkt_saddle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  auto data = std::make_shared<const Dataset>(make_quadratic_dataset(4, 2, 11));
  const QuadraticSaddleProblem problem(data, BudgetConstraint(NormOrder::LInf, 0.03), Vector{{0.05, 0.01}}, 1.0, 1.0,
                                       SubgradientRule::Exact);
  const SaddleIterate star = problem.saddle_oracle();
  const KktResidual kkt = kkt_residual(problem, star);
  Rng rng(2);
  SaddleProbeOptions options;
  options.probes = 1000;
  options.radius = 0.1;
  const SaddleCheck check = saddle_inequality_check(problem, star, rng, options);
  const double elapsed = seconds_since(start);
  Verdict v;
  v.pass = kkt.max_field() <= 1e-9 && check.violations == 0 && elapsed < 5.0;
  v.detail = fmt("max KKT field %.3g (need <=1e-9), %zu/1000 probe violations, %.2fs", kkt.max_field(),
                 check.violations, elapsed);
  return v;
}

// ---------------------------------------------------------------------------
// 3. Plain SSDS keeps perturbations at the budget without projection.

Verdict soft_budget() {
  const auto start = std::chrono::steady_clock::now();

  auto blobs = spec("synthetic:500,2,2,2,7");
  const RobustLogisticProblem logistic(blobs, BudgetConstraint(NormOrder::LInf, 0.03));
  SsdsConfig lcfg;
  lcfg.alpha0 = 0.1;
  lcfg.decay_p = 1e-4;
  lcfg.c1 = 1.0;
  Rng lrng(mix_seed(0, 1));
  SaddleIterate lz = initial_iterate(logistic, logistic.initial_parameters(0), lcfg);
  for (int e = 0; e < 300; ++e) lz = minibatch_ssds_epoch(logistic, lz, 50, lcfg, lrng).z;
  const double within = fraction_within_budget(lz.u, 0.03, 1e-3);

  auto points = std::make_shared<const Dataset>(make_quadratic_dataset(4, 2, 11));
  const QuadraticSaddleProblem quadratic(points, BudgetConstraint(NormOrder::LInf, 0.03), Vector{{0.05, 0.01}}, 1.0,
                                         0.1, SubgradientRule::Sign);
  const SsdsConfig qcfg;
  Rng qrng(mix_seed(0, 1));
  SaddleIterate qz = initial_iterate(quadratic, quadratic.initial_parameters(0), qcfg);
  for (int e = 0; e < 300; ++e) qz = minibatch_ssds_epoch(quadratic, qz, 2, qcfg, qrng).z;
  double worst_gap = 0.0;
  double max_norm = 0.0;
  for (const Vector& u : qz.u) {
    const double n = u.lpNorm<Eigen::Infinity>();
    max_norm = std::max(max_norm, n);
    worst_gap = std::max(worst_gap, std::abs(n - 0.03));
  }
  const double elapsed = seconds_since(start);
  Verdict v;
  v.pass = within >= 0.9 && worst_gap <= 1e-3 && elapsed < 60.0;
  v.detail = fmt("logistic: %.3f of samples within eps+1e-3 (need >=0.9), final lambda %.3g; quadratic: "
                 "max ||u||_inf %.5f, worst |norm - eps| %.2e (need <=1e-3); %.1fs",
                 within, lz.duals.lambda, max_norm, worst_gap, elapsed);
  return v;
}

// ---------------------------------------------------------------------------
// 4. SSDS-p keeps every perturbation inside the ball after every epoch.

Verdict hard_budget() {
  SsdsConfig cfg;
  double worst = 0.0;
  std::size_t epochs = 0;
  bool ok = true;

  auto blobs = spec("synthetic:500,2,2,2,7");
  const RobustLogisticProblem logistic(blobs, BudgetConstraint(NormOrder::LInf, cfg.epsilon));
  SsdsConfig lcfg = cfg;
  lcfg.alpha0 = 0.1;
  Rng lrng(4);
  SaddleIterate z = initial_iterate(logistic, logistic.initial_parameters(0), lcfg);
  for (int e = 0; e < 100; ++e) {
    z = minibatch_ssds_p_epoch(logistic, z, 50, lcfg, lrng).z;
    ++epochs;
    for (const Vector& u : z.u) {
      worst = std::max(worst, u.lpNorm<Eigen::Infinity>());
      ok = ok && u.lpNorm<Eigen::Infinity>() <= cfg.epsilon;
    }
  }

  auto images = mnist_train(500);
  const MlpProblem mlp(images, BudgetConstraint(NormOrder::LInf, cfg.epsilon), {{784, 32, 10}});
  Rng mrng(5);
  SaddleIterate m = initial_iterate(mlp, mlp.initial_parameters(1), cfg);
  for (int e = 0; e < 20; ++e) {
    m = minibatch_ssds_p_epoch(mlp, m, 50, cfg, mrng).z;
    ++epochs;
    for (const Vector& u : m.u) {
      worst = std::max(worst, u.lpNorm<Eigen::Infinity>());
      ok = ok && u.lpNorm<Eigen::Infinity>() <= cfg.epsilon;
    }
  }
  Verdict v;
  v.pass = ok;
  v.detail = fmt("largest ||u||_inf over %zu epochs (logistic + MNIST MLP) = %.17g, eps = %.17g", epochs, worst,
                 cfg.epsilon);
  return v;
}

// ---------------------------------------------------------------------------
// 5. SSDS with multipliers frozen at (1, 0) and C1 = C2 = 0 is SGDA.

Verdict sgda_degeneration() {
  SsdsConfig cfg;
  cfg.lambda0 = 1.0;
  cfg.v0 = 0.0;
  cfg.c1 = 0.0;
  cfg.c2 = 0.0;
  bool identical = true;
  std::size_t compared = 0;

  auto run_pair = [&](const RobustProblem& problem, const SsdsConfig& c, Vector w0, std::size_t batch) {
    Rng ra(99);
    Rng rb(99);
    SaddleIterate a = initial_iterate(problem, w0, c);
    SaddleIterate b = a;
    for (int e = 0; e < 10; ++e) {
      a = minibatch_ssds_epoch(problem, a, batch, c, ra).z;
      b = minibatch_sgda_epoch(problem, b, batch, c, rb).z;
      identical = identical && a.x.w == b.x.w && a.duals.lambda == 1.0;
      for (std::size_t i = 0; i < a.u.size(); ++i) identical = identical && a.u[i] == b.u[i];
      ++compared;
    }
  };

  auto blobs = spec("synthetic:500,2,2,2,7");
  const RobustLogisticProblem logistic(blobs, BudgetConstraint(NormOrder::LInf, cfg.epsilon));
  SsdsConfig lcfg = cfg;
  lcfg.alpha0 = 0.1;
  run_pair(logistic, lcfg, logistic.initial_parameters(0), 50);

  auto images = mnist_train(300);
  const MlpProblem mlp(images, BudgetConstraint(NormOrder::LInf, cfg.epsilon), {{784, 32, 10}});
  run_pair(mlp, cfg, mlp.initial_parameters(1), 30);

  Verdict v;
  v.pass = identical;
  v.detail = fmt("%zu epochs compared (logistic + MNIST MLP): w and u %s", compared,
                 identical ? "bit-identical" : "DIFFER");
  return v;
}

// ---------------------------------------------------------------------------
// 6. Tape gradients against central finite differences on 784-16-10 MLPs.

Vector plain_logits(const autodiff::MlpArchitecture& arch, const Vector& p, const Vector& x) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Vector h = x;
  Eigen::Index off = 0;
  const auto layers = arch.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(layers[l].out);
    const auto in = static_cast<Eigen::Index>(layers[l].in);
    const Eigen::Map<const RowMajor> W(p.data() + off, out, in);
    Vector z = W * h + p.segment(off + out * in, out);
    off += out * in + out;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    h = z;
  }
  return h;
}

double plain_loss(const autodiff::MlpArchitecture& arch, const Vector& p, const Vector& x, std::size_t label) {
  const Vector z = plain_logits(arch, p, x);
  const double top = z.maxCoeff();
  return std::log((z.array() - top).exp().sum()) + top - z[static_cast<Eigen::Index>(label)];
}

Vector central(const std::function<double(const Vector&)>& f, Vector x) {
  constexpr double h = 1e-5;
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max({a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>(), 1e-12});
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

Verdict gradient_fidelity() {
  const auto start = std::chrono::steady_clock::now();
  const autodiff::MlpArchitecture arch{{784, 16, 10}, autodiff::Activation::ReLU};
  Rng rng(606);
  double worst_params = 0.0;
  double worst_input = 0.0;
  for (int instance = 0; instance < 16; ++instance) {
    const autodiff::MlpModel model = autodiff::MlpModel::glorot(arch, rng);
    Vector x(784);
    for (Eigen::Index j = 0; j < 784; ++j) x[j] = rng.uniform01();
    const std::size_t label = rng.below(10);

    autodiff::ForwardPass pass = autodiff::forward(model, autodiff::Tensor::from_vector(x));
    const std::size_t labels[1] = {label};
    pass.tape.cross_entropy(pass.logits_node, labels);
    const autodiff::Gradients g = autodiff::backward(pass.tape);

    const Vector fd_p = central([&](const Vector& p) { return plain_loss(arch, p, x, label); }, model.parameters());
    const Vector fd_x = central([&](const Vector& in) { return plain_loss(arch, model.parameters(), in, label); }, x);
    worst_params = std::max(worst_params, rel_err(g.params, fd_p));
    worst_input = std::max(worst_input, rel_err(g.input.to_vector(), fd_x));
  }
  const double elapsed = seconds_since(start);
  Verdict v;
  v.pass = worst_params <= 1e-5 && worst_input <= 1e-5 && elapsed < 10.0;
  v.detail = fmt("16 models: max relative error params %.2e, input %.2e (need <=1e-5), %.1fs", worst_params,
                 worst_input, elapsed);
  return v;
}

// ---------------------------------------------------------------------------
// 7. SSDS-p training buys FGSM robustness on an MNIST subset at a small
//    clean-accuracy cost.

Verdict robustness_direction() {
  const auto start = std::chrono::steady_clock::now();
  auto train = mnist_train(2000);
  auto test = mnist_test(1000);
  SsdsConfig cfg;
  cfg.epsilon = 0.1;
  cfg.lr = 0.002;
  const BudgetConstraint budget(NormOrder::LInf, cfg.epsilon);
  const MlpProblem problem(train, budget, MlpProblem::default_architecture());
  const MlpProblem evaluator(test, budget, MlpProblem::default_architecture());
  const Vector w0 = problem.initial_parameters(1);

  const Vector natural = train_natural(problem, w0, 50, 50, cfg.lr, 3);
  Rng rng(3);
  SaddleIterate z = initial_iterate(problem, w0, cfg);
  for (int e = 0; e < 50; ++e) z = minibatch_ssds_p_epoch(problem, z, 50, cfg, rng).z;

  const AttackSpec fgsm = AttackSpec::fgsm(0.1);
  const double nat_clean = evaluate_under_attack(evaluator, natural, *test, CleanEvaluation{});
  const double nat_fgsm = evaluate_under_attack(evaluator, natural, *test, fgsm);
  const double rob_clean = evaluate_under_attack(evaluator, z.x.w, *test, CleanEvaluation{});
  const double rob_fgsm = evaluate_under_attack(evaluator, z.x.w, *test, fgsm);
  const double elapsed = seconds_since(start);
  Verdict v;
  v.pass = rob_fgsm - nat_fgsm >= 0.15 && nat_clean - rob_clean <= 0.10 && elapsed < 600.0;
  v.detail = fmt("natural clean %.3f fgsm %.3f; SSDS-p clean %.3f fgsm %.3f; fgsm gain %+.1f pp (need >=15), "
                 "clean drop %.1f pp (need <=10); %.0fs",
                 nat_clean, nat_fgsm, rob_clean, rob_fgsm, 100 * (rob_fgsm - nat_fgsm), 100 * (nat_clean - rob_clean),
                 elapsed);
  return v;
}

// ---------------------------------------------------------------------------
// 8. Stronger attacks never help the model: PGD-20 <= PGD-10 <= FGSM.

Verdict attack_monotonicity() {
  struct Model {
    std::string name;
    const ClassifierProblem* problem;
    Vector w;
    std::shared_ptr<const Dataset> test;
  };
  const double eps = 0.1;
  const BudgetConstraint budget(NormOrder::LInf, eps);

  auto mtrain = mnist_train(2000);
  auto mtest = mnist_test(1000);
  const MlpProblem mlp(mtrain, budget, MlpProblem::default_architecture());
  const MlpProblem mlp_eval(mtest, budget, MlpProblem::default_architecture());
  const Vector mlp_w = train_natural(mlp, mlp.initial_parameters(1), 30, 50, 0.002, 3);

  auto btrain = spec("synthetic:1000,10,2,1,7@0+500");
  auto btest = spec("synthetic:1000,10,2,1,7@500+500");
  const RobustLogisticProblem logistic(btrain, budget);
  const RobustLogisticProblem logistic_eval(btest, budget);
  const Vector log_w = train_natural(logistic, logistic.initial_parameters(0), 50, 50, 0.01, 1);

  const std::vector<Model> models = {{"mnist-mlp", &mlp_eval, mlp_w, mtest}, {"blobs-logistic", &logistic_eval, log_w, btest}};
  bool ok = true;
  std::string detail;
  for (const Model& m : models) {
    const double a_fgsm = evaluate_under_attack(*m.problem, m.w, *m.test, AttackSpec::fgsm(eps));
    const double a_10 = evaluate_under_attack(*m.problem, m.w, *m.test, AttackSpec::pgd(eps, eps / 4, 10), 7);
    const double a_20 = evaluate_under_attack(*m.problem, m.w, *m.test, AttackSpec::pgd(eps, eps / 4, 20), 7);
    ok = ok && a_20 <= a_10 + 0.01 && a_10 <= a_fgsm + 0.01;
    detail += fmt("%s FGSM %.3f PGD-10 %.3f PGD-20 %.3f; ", m.name.c_str(), a_fgsm, a_10, a_20);
  }
  Verdict v;
  v.pass = ok;
  v.detail = detail + "tolerance 1 pp";
  return v;
}

// ---------------------------------------------------------------------------
// 9. The SSDS attack's accuracy curve falls and then stays flat.

Verdict attack_plateau() {
  const double eps = 0.1;
  const BudgetConstraint budget(NormOrder::LInf, eps);
  auto train = spec("synthetic:1000,10,2,1,7@0+500");
  auto test = spec("synthetic:1000,10,2,1,7@500+500");
  const RobustLogisticProblem problem(train, budget);
  const RobustLogisticProblem evaluator(test, budget);
  const Vector w = train_natural(problem, problem.initial_parameters(0), 50, 50, 0.01, 1);

  SsdsConfig cfg;
  cfg.epsilon = eps;
  cfg.alpha0 = 0.01;
  cfg.decay_p = 1e-4;
  cfg.c1 = 0.1;
  constexpr std::size_t kSteps = 150;
  constexpr std::size_t kBurnIn = 10;
  std::vector<double> curve;
  curve.push_back(evaluate_under_attack(evaluator, w, *test, CleanEvaluation{}));
  ssds_attack(evaluator, w, all_indices(test->size()), cfg, kSteps, [&](std::uint64_t, const UncertaintyState& u) {
    std::vector<Vector> inputs;
    for (std::size_t i = 0; i < u.size(); ++i) inputs.push_back((*test)[i].input + u[i]);
    curve.push_back(accuracy_on_inputs(evaluator, w, *test, inputs));
  });
  std::size_t rises = 0;
  for (std::size_t k = kBurnIn + 1; k < curve.size(); ++k) rises += curve[k] > curve[k - 1] ? 1 : 0;
  const auto tail = std::minmax_element(curve.end() - 10, curve.end());
  const double range = *tail.second - *tail.first;
  Verdict v;
  v.pass = rises == 0 && range <= 0.01 && curve.back() < curve.front();
  v.detail = fmt("accuracy %.3f -> %.3f (step 10) -> %.3f (step %zu); %zu increases after burn-in of %zu; "
                 "last-10 range %.1f pp (need <=1)",
                 curve.front(), curve[kBurnIn], curve.back(), kSteps, rises, kBurnIn, 100 * range);
  return v;
}

// ---------------------------------------------------------------------------
// 10. Re-running a manifest reproduces the trajectory CSV byte for byte.

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / fmt("ssds_acceptance_%d", static_cast<int>(::getpid()));
  fs::remove_all(root);

  std::vector<RunConfig> configs(3);
  configs[0].problem = ProblemKind::Quadratic;
  configs[0].epochs = 40;
  configs[0].quadratic_b = 0.1;
  configs[0].batch_size = 2;
  configs[1].problem = ProblemKind::Logistic;
  configs[1].algorithm = Algorithm::SsdsP;
  configs[1].epochs = 30;
  configs[1].batch_size = 50;
  configs[1].histogram_every = 10;
  configs[1].ssds.alpha0 = 0.1;
  configs[1].ssds.seed = 17;
  configs[2].problem = ProblemKind::Mlp;
  configs[2].algorithm = Algorithm::Sgda;
  configs[2].data = "idx:" + (kMnist / "train-images-idx3-ubyte").string() + "," +
                    (kMnist / "train-labels-idx1-ubyte").string() + ",300";
  configs[2].hidden = {16};
  configs[2].epochs = 3;
  configs[2].batch_size = 30;
  configs[2].histogram_every = 1;

  bool ok = true;
  std::size_t files = 0;
  for (const RunConfig& config : configs) {
    const RunOutcome first = run_training(config, root / "first");
    const RunOutcome again = rerun_manifest(first.run_dir / "manifest.json", root / "again");
    for (const std::string& name : first.artifacts) {
      if (name == "manifest.json") continue;
      ok = ok && slurp(first.run_dir / name) == slurp(again.run_dir / name);
      ++files;
    }
  }
  fs::remove_all(root);
  Verdict v;
  v.pass = ok;
  v.detail = fmt("3 runs (quadratic ssds, logistic ssds-p, mlp sgda) re-run from their manifests: %zu artifact "
                 "files %s",
                 files, ok ? "byte-identical" : "DIFFER");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"saddle convergence", saddle_convergence},
      {"KKT/saddle equivalence", kkt_saddle_equivalence},
      {"soft budget without projection", soft_budget},
      {"hard budget under SSDS-p", hard_budget},
      {"SGDA degeneration", sgda_degeneration},
      {"gradient fidelity", gradient_fidelity},
      {"robustness direction", robustness_direction},
      {"attack monotonicity", attack_monotonicity},
      {"attack plateau", attack_plateau},
      {"determinism", determinism},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(n));
  }
  if (selected.empty()) {
    for (std::size_t n = 1; n <= criteria.size(); ++n) selected.push_back(n);
  }

  int failures = 0;
  for (const std::size_t n : selected) {
    Verdict v;
    try {
      v = criteria[n - 1].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2zu %-32s %s  %s\n", n, criteria[n - 1].first.c_str(), v.pass ? "PASS" : "FAIL",
                v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
