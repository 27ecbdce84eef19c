// Command-line front end: train, attack, diagnose, reproduce, generate, rerun.
//
// Exit codes: 0 success, 1 diagnostic failure, 2 usage or config error,
// 3 I/O or format error, 4 numerical divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ssds/autodiff.hpp"
#include "ssds/baselines.hpp"
#include "ssds/config.hpp"
#include "ssds/dataset.hpp"
#include "ssds/diagnostics.hpp"
#include "ssds/dynamics.hpp"
#include "ssds/errors.hpp"
#include "ssds/harness.hpp"
#include "ssds/problems.hpp"
#include "ssds/rng.hpp"

namespace fs = std::filesystem;
using namespace ssds;

namespace {

enum Exit : int { kOk = 0, kDiagnosticFailure = 1, kUsage = 2, kIo = 3, kDivergence = 4 };

struct TrainArgs {
  std::string algo = "ssds";
  std::string problem = "quadratic";
  std::string config;
  std::optional<std::uint64_t> epochs;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string out = "runs";
};

struct AttackArgs {
  std::string kind = "fgsm";
  std::string checkpoint;
  std::string data;
  std::string config;
  std::uint64_t steps = 10;
  double epsilon = 0.03;
  std::optional<double> eta;
  bool no_random_start = false;
  std::uint64_t seed = 0;
  std::string activation = "relu";
  std::string out;
  std::string save_inputs;
};

struct DiagnoseArgs {
  std::string analytic;
  std::string checkpoint;
  std::string problem;
  std::string activation = "relu";
  double epsilon = 0.03;
  double offset = 0.0;
  std::optional<double> threshold;
  std::size_t probes = 1000;
  std::uint64_t attack_steps = 50;
  std::uint64_t seed = 0;
  std::string out;
};

struct ReproduceArgs {
  std::string figure;
  std::string out = "figures";
  bool quick = false;
  std::uint64_t seed = 0;
};

struct GenerateArgs {
  std::string data;
  std::string out;
};

autodiff::Activation parse_activation(const std::string& text) {
  if (text == "relu") return autodiff::Activation::ReLU;
  if (text == "tanh") return autodiff::Activation::Tanh;
  throw ConfigError("activation must be relu or tanh");
}

int cmd_train(const TrainArgs& a) {
  KeyValues kv;
  if (!a.config.empty()) kv = read_key_values(a.config);
  kv["algorithm"] = a.algo;
  kv["problem"] = a.problem;
  if (a.epochs) kv["epochs"] = std::to_string(*a.epochs);
  if (a.seed) kv["seed"] = std::to_string(*a.seed);
  if (!a.data.empty()) kv["data"] = a.data;
  const RunConfig config = parse_run_config(std::move(kv));
  const RunOutcome outcome = run_training(config, a.out, [](const EpochReport& r, const SaddleIterate&) {
    std::fprintf(stderr, "epoch %llu  alpha %.3g  lambda %.6g  loss %.6g  within %.3f\n",
                 static_cast<unsigned long long>(r.epoch), r.alpha, r.lambda, r.mean_loss, r.frac_u_within_budget);
  });
  std::cout << outcome.run_dir.string() << '\n';
  if (outcome.divergence) {
    std::cerr << "diverged: " << *outcome.divergence << '\n';
    return kDivergence;
  }
  return kOk;
}

int cmd_attack(const AttackArgs& a) {
  const autodiff::MlpModel model = autodiff::load_checkpoint(a.checkpoint, parse_activation(a.activation));
  auto data = std::make_shared<const Dataset>(load_dataset(a.data));
  // FGSM and PGD never read the budget, so epsilon = 0 is allowed for them.
  const double budget_radius = a.epsilon > 0.0 ? a.epsilon : 1.0;
  const MlpProblem problem(data, BudgetConstraint(NormOrder::LInf, budget_radius), model.architecture());
  const Vector& w = model.parameters();

  std::vector<Vector> inputs;
  std::string params;
  double accuracy = 0.0;
  if (a.kind == "fgsm" || a.kind == "pgd") {
    const AttackSpec spec = a.kind == "fgsm"
                                ? AttackSpec::fgsm(a.epsilon)
                                : AttackSpec::pgd(a.epsilon, a.eta.value_or(a.epsilon / 4.0), a.steps, !a.no_random_start);
    for (const auto& warning : spec.warnings()) std::cerr << "warning: " << warning << '\n';
    params = spec.summary();
    for (const Sample& s : data->samples()) {
      if (spec.kind == AttackSpec::Kind::FGSM) {
        inputs.push_back(fgsm(problem, w, s, spec, data->input_range()));
      } else {
        Rng rng(mix_seed(a.seed, s.id));
        inputs.push_back(pgd(problem, w, s, spec, data->input_range(), rng));
      }
    }
  } else if (a.kind == "ssds" || a.kind == "sgda") {
    KeyValues kv;
    if (!a.config.empty()) kv = read_key_values(a.config);
    kv["epsilon"] = format_real(a.epsilon);
    SsdsConfig cfg = take_ssds_config(kv);
    reject_unknown_keys(kv);
    std::vector<std::size_t> all(data->size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const UncertaintyState u = a.kind == "ssds" ? ssds_attack(problem, w, all, cfg, a.steps)
                                                : sgda_attack(problem, w, all, cfg, a.steps);
    for (std::size_t i = 0; i < u.size(); ++i) inputs.push_back((*data)[i].input + u[i]);
    char buf[128];
    std::snprintf(buf, sizeof buf, "eps=%g alpha0=%g c1=%g steps=%llu", cfg.epsilon, cfg.alpha0, cfg.c1,
                  static_cast<unsigned long long>(a.steps));
    params = buf;
  } else {
    throw ConfigError("attack kind must be ssds, sgda, fgsm or pgd");
  }
  accuracy = accuracy_on_inputs(problem, w, *data, inputs);
  const double clean = evaluate_under_attack(problem, w, *data, CleanEvaluation{});
  std::printf("clean %.6f\n%s %.6f\n", clean, a.kind.c_str(), accuracy);

  if (!a.out.empty()) {
    write_evaluation_csv(a.out, {{fs::path(a.checkpoint).filename().string(), "clean", "", clean},
                                 {fs::path(a.checkpoint).filename().string(), a.kind, params, accuracy}});
  }
  if (!a.save_inputs.empty()) {
    std::vector<Sample> attacked = data->samples();
    for (std::size_t i = 0; i < attacked.size(); ++i) attacked[i].input = inputs[i];
    write_dataset_csv(a.save_inputs, Dataset(std::move(attacked), data->num_classes(), data->input_range()));
  }
  return kOk;
}

int report_diagnosis(const std::string& id, const RobustProblem& problem, const SaddleIterate& z,
                     const DiagnoseArgs& a, std::optional<double> threshold) {
  const KktResidual kkt = kkt_residual(problem, z);
  std::optional<SaddleCheck> saddle;
  if (a.probes > 0) {
    Rng rng(a.seed);
    SaddleProbeOptions options;
    options.probes = a.probes;
    saddle = saddle_inequality_check(problem, z, rng, options);
  }
  const std::string json = diagnostics_json(id, kkt, saddle, threshold, lagrangian_value(problem, z));
  std::cout << json << '\n';
  if (!a.out.empty()) write_file_atomically(a.out, json + "\n");
  const bool kkt_ok = !threshold || kkt.max_field() <= *threshold;
  const bool saddle_ok = !threshold || !saddle || saddle->violations == 0;
  return kkt_ok && saddle_ok ? kOk : kDiagnosticFailure;
}

int cmd_diagnose(const DiagnoseArgs& a) {
  if (!a.analytic.empty()) {
    if (a.analytic != "quadratic") throw ConfigError("only the 'quadratic' analytic problem is available");
    RunConfig config;
    config.ssds.epsilon = a.epsilon;
    config.subgradient = SubgradientRule::Exact;
    auto data = std::make_shared<const Dataset>(load_dataset(config.data_spec()));
    const QuadraticSaddleProblem problem(data, BudgetConstraint(config.norm, a.epsilon),
                                         Eigen::Map<const Vector>(config.quadratic_c.data(), 2), config.quadratic_a,
                                         config.quadratic_b, config.subgradient);
    SaddleIterate z = problem.saddle_oracle();
    z.x.w.array() += a.offset;
    return report_diagnosis("analytic-quadratic", problem, z, a, a.threshold.value_or(1e-9));
  }
  if (a.checkpoint.empty() || a.problem.empty()) {
    throw ConfigError("diagnose needs --analytic quadratic, or --checkpoint with --problem <data spec>");
  }
  const autodiff::MlpModel model = autodiff::load_checkpoint(a.checkpoint, parse_activation(a.activation));
  auto data = std::make_shared<const Dataset>(load_dataset(a.problem));
  const MlpProblem problem(data, BudgetConstraint(NormOrder::LInf, a.epsilon), model.architecture());
  SsdsConfig cfg;
  cfg.epsilon = a.epsilon;
  std::vector<std::size_t> all(data->size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  SaddleIterate z;
  z.x.w = model.parameters();
  z.u = ssds_attack(problem, z.x.w, all, cfg, a.attack_steps);
  z.duals.lambda = 1.0;
  z.duals.v.assign(data->size(), 0.0);
  z.x.t = 0.0;
  for (std::size_t i = 0; i < data->size(); ++i) z.x.t += problem.loss(z.x.w, (*data)[i], z.u[i]);
  return report_diagnosis(fs::path(a.checkpoint).filename().string(), problem, z, a, a.threshold);
}

int cmd_reproduce(const ReproduceArgs& a) {
  ReproduceOptions options;
  options.out_dir = a.out;
  options.quick = a.quick;
  options.seed = a.seed;
  for (const auto& path : reproduce_figure(a.figure, options)) std::cout << path.string() << '\n';
  return kOk;
}

int cmd_generate(const GenerateArgs& a) {
  const Dataset data = load_dataset(a.data);
  write_dataset_csv(a.out, data);
  std::cout << a.out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic saddle-point dynamics for robust optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", artifact_version());

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a run directory");
  train_cmd->add_option("--algo", train.algo, "Training dynamics")->check(CLI::IsMember({"ssds", "ssds-p", "sgda"}));
  train_cmd->add_option("--problem", train.problem, "Problem family")
      ->check(CLI::IsMember({"quadratic", "logistic", "mlp"}));
  train_cmd->add_option("--config", train.config, "Key/value config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", train.epochs, "Override the epoch count");
  train_cmd->add_option("--seed", train.seed, "Override the seed");
  train_cmd->add_option("--data", train.data, "Override the dataset spec");
  train_cmd->add_option("--out", train.out, "Root directory for run directories");

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "Evaluate a checkpoint under attack");
  attack_cmd->add_option("--kind", attack.kind, "Attack")->check(CLI::IsMember({"ssds", "sgda", "fgsm", "pgd"}));
  attack_cmd->add_option("--checkpoint", attack.checkpoint, "Model checkpoint")->required();
  attack_cmd->add_option("--data", attack.data, "Evaluation dataset spec")->required();
  attack_cmd->add_option("--config", attack.config, "SSDS attack config (ssds/sgda kinds)")->check(CLI::ExistingFile);
  attack_cmd->add_option("--steps", attack.steps, "Attack iterations");
  attack_cmd->add_option("--epsilon", attack.epsilon, "Budget radius");
  attack_cmd->add_option("--eta", attack.eta, "PGD step (default epsilon/4)");
  attack_cmd->add_flag("--no-random-start", attack.no_random_start, "PGD starts at the clean input");
  attack_cmd->add_option("--seed", attack.seed, "PGD random-start seed");
  attack_cmd->add_option("--activation", attack.activation, "Hidden activation of the checkpoint");
  attack_cmd->add_option("--out", attack.out, "Accuracy CSV");
  attack_cmd->add_option("--save-inputs", attack.save_inputs, "Write attacked inputs as a dataset CSV");

  DiagnoseArgs diagnose;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "KKT residuals and saddle-inequality probes");
  diagnose_cmd->add_option("--analytic", diagnose.analytic, "Analytic problem evaluated at its saddle point");
  diagnose_cmd->add_option("--checkpoint", diagnose.checkpoint, "Model checkpoint");
  diagnose_cmd->add_option("--problem", diagnose.problem, "Dataset spec for the checkpoint");
  diagnose_cmd->add_option("--activation", diagnose.activation, "Hidden activation of the checkpoint");
  diagnose_cmd->add_option("--epsilon", diagnose.epsilon, "Budget radius");
  diagnose_cmd->add_option("--offset", diagnose.offset, "Shift w away from the analytic saddle point");
  diagnose_cmd->add_option("--threshold", diagnose.threshold, "Fail (exit 1) when a residual exceeds this");
  diagnose_cmd->add_option("--probes", diagnose.probes, "Saddle-inequality probes");
  diagnose_cmd->add_option("--attack-steps", diagnose.attack_steps, "Inner SSDS attack steps for checkpoints");
  diagnose_cmd->add_option("--seed", diagnose.seed, "Probe seed");
  diagnose_cmd->add_option("--out", diagnose.out, "Write the JSON report here");

  ReproduceArgs reproduce;
  auto* reproduce_cmd = app.add_subcommand("reproduce", "Run a scripted experiment and write its CSV panels");
  reproduce_cmd->add_option("--figure", reproduce.figure, "Experiment")
      ->required()
      ->check(CLI::IsMember({"u-hist", "u-evolution", "sgda-vs-ssds", "robust-table"}));
  reproduce_cmd->add_option("--out", reproduce.out, "Output directory");
  reproduce_cmd->add_flag("--quick", reproduce.quick, "Shorter runs");
  reproduce_cmd->add_option("--seed", reproduce.seed, "Seed");

  GenerateArgs generate;
  auto* generate_cmd = app.add_subcommand("generate", "Materialize a dataset spec as CSV");
  generate_cmd->add_option("--data", generate.data, "Dataset spec, e.g. synthetic:500,2,2,2,7")->required();
  generate_cmd->add_option("--out", generate.out, "CSV path")->required();

  std::string manifest;
  std::string rerun_out = "runs";
  auto* rerun_cmd = app.add_subcommand("rerun", "Run the config recorded in a manifest again");
  rerun_cmd->add_option("--manifest", manifest, "manifest.json")->required();
  rerun_cmd->add_option("--out", rerun_out, "Root directory for the new run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train);
    if (*attack_cmd) return cmd_attack(attack);
    if (*diagnose_cmd) return cmd_diagnose(diagnose);
    if (*reproduce_cmd) return cmd_reproduce(reproduce);
    if (*generate_cmd) return cmd_generate(generate);
    if (*rerun_cmd) {
      const RunOutcome outcome = rerun_manifest(manifest, rerun_out);
      std::cout << outcome.run_dir.string() << '\n';
      return outcome.divergence ? kDivergence : kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericalDivergence& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
