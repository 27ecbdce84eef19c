#include "ssds/harness.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <system_error>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "ssds/baselines.hpp"
#include "ssds/diagnostics.hpp"
#include "ssds/errors.hpp"
#include "ssds/rng.hpp"

#ifndef SSDS_VERSION
#define SSDS_VERSION "0.0.0"
#endif
#ifndef SSDS_GIT_REV
#define SSDS_GIT_REV ""
#endif

namespace fs = std::filesystem;

namespace ssds {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

double parse_real(const std::string& text, const std::string& what) {
  KeyValues kv{{what, text}};
  double value = 0.0;
  take_real(kv, what, value);
  return value;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  KeyValues kv{{what, text}};
  std::uint64_t value = 0;
  take_u64(kv, what, value);
  return value;
}

std::string join_reals(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_real(values[i]);
  return out;
}

std::string norm_name(NormOrder order) {
  switch (order) {
    case NormOrder::L1:
      return "1";
    case NormOrder::L2:
      return "2";
    case NormOrder::LInf:
      return "inf";
  }
  return "inf";
}

NormOrder parse_norm(const std::string& text) {
  if (text == "inf") return NormOrder::LInf;
  if (text == "2") return NormOrder::L2;
  if (text == "1") return NormOrder::L1;
  throw ConfigError("norm must be one of inf, 2, 1; got '" + text + "'");
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatError::Kind::Unreadable, "cannot write " + path.string());
  return out;
}

nlohmann::ordered_json report_json(const EpochReport& r) {
  return {{"epoch", r.epoch},
          {"alpha", r.alpha},
          {"lambda", r.lambda},
          {"t", r.t},
          {"mean_loss", r.mean_loss},
          {"frac_u_within_budget", r.frac_u_within_budget},
          {"mean_u_delta_l2", r.mean_u_delta_l2}};
}

EpochResult run_one_epoch(const RunConfig& config, const RobustProblem& problem, const SaddleIterate& z,
                          std::size_t batch, Rng& rng) {
  switch (config.algorithm) {
    case Algorithm::Ssds:
      return minibatch_ssds_epoch(problem, z, batch, config.ssds, rng);
    case Algorithm::SsdsP:
      return minibatch_ssds_p_epoch(problem, z, batch, config.ssds, rng, config.lambda_ceiling);
    case Algorithm::Sgda:
      return minibatch_sgda_epoch(problem, z, batch, config.ssds, rng);
  }
  throw ConfigError("unknown algorithm");
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Ssds:
      return "ssds";
    case Algorithm::SsdsP:
      return "ssds-p";
    case Algorithm::Sgda:
      return "sgda";
  }
  return "ssds";
}

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Quadratic:
      return "quadratic";
    case ProblemKind::Logistic:
      return "logistic";
    case ProblemKind::Mlp:
      return "mlp";
  }
  return "quadratic";
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "ssds") return Algorithm::Ssds;
  if (text == "ssds-p") return Algorithm::SsdsP;
  if (text == "sgda") return Algorithm::Sgda;
  throw ConfigError("algorithm must be ssds, ssds-p or sgda; got '" + text + "'");
}

ProblemKind parse_problem_kind(const std::string& text) {
  if (text == "quadratic") return ProblemKind::Quadratic;
  if (text == "logistic") return ProblemKind::Logistic;
  if (text == "mlp") return ProblemKind::Mlp;
  throw ConfigError("problem must be quadratic, logistic or mlp; got '" + text + "'");
}

std::string RunConfig::data_spec() const {
  if (!data.empty()) return data;
  switch (problem) {
    case ProblemKind::Quadratic:
      return "quadratic:4," + std::to_string(quadratic_c.size()) + ",1";
    case ProblemKind::Logistic:
      return "synthetic:500,2,2,2,7";
    case ProblemKind::Mlp:
      return "idx:data/mnist/train-images-idx3-ubyte,data/mnist/train-labels-idx1-ubyte,2000";
  }
  return {};
}

RunConfig parse_run_config(KeyValues kv) {
  RunConfig c;
  c.ssds = take_ssds_config(kv);
  std::string text;
  if (take_string(kv, "algorithm", text = ""), !text.empty()) c.algorithm = parse_algorithm(text);
  if (take_string(kv, "problem", text = ""), !text.empty()) c.problem = parse_problem_kind(text);
  take_u64(kv, "epochs", c.epochs);
  take_u64(kv, "batch_size", c.batch_size);
  take_u64(kv, "histogram_every", c.histogram_every);
  take_string(kv, "data", c.data);
  if (take_string(kv, "norm", text = ""), !text.empty()) c.norm = parse_norm(text);
  if (take_string(kv, "subgradient", text = ""), !text.empty()) {
    if (text == "sign") {
      c.subgradient = SubgradientRule::Sign;
    } else if (text == "exact") {
      c.subgradient = SubgradientRule::Exact;
    } else {
      throw ConfigError("subgradient must be sign or exact; got '" + text + "'");
    }
  }
  take_bool(kv, "record_wall_time", c.record_wall_time);
  if (take_string(kv, "lambda_ceiling", text = ""), !text.empty() && text != "none") {
    c.lambda_ceiling = parse_real(text, "lambda_ceiling");
  }
  if (take_string(kv, "quadratic_c", text = ""), !text.empty()) {
    c.quadratic_c.clear();
    for (const auto& item : split(text, ',')) c.quadratic_c.push_back(parse_real(item, "quadratic_c"));
  }
  take_real(kv, "quadratic_a", c.quadratic_a);
  take_real(kv, "quadratic_b", c.quadratic_b);
  if (take_string(kv, "hidden", text = "-"), text != "-") {
    c.hidden.clear();
    if (!text.empty() && text != "none") {
      for (const auto& item : split(text, ',')) c.hidden.push_back(parse_u64(item, "hidden"));
    }
  }
  if (take_string(kv, "activation", text = ""), !text.empty()) {
    if (text == "relu") {
      c.activation = autodiff::Activation::ReLU;
    } else if (text == "tanh") {
      c.activation = autodiff::Activation::Tanh;
    } else {
      throw ConfigError("activation must be relu or tanh; got '" + text + "'");
    }
  }
  reject_unknown_keys(kv);
  if (c.epochs == 0) throw ConfigError("epochs must be positive");
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (c.histogram_every == 0) throw ConfigError("histogram_every must be positive");
  if (c.quadratic_c.empty()) throw ConfigError("quadratic_c must not be empty");
  return c;
}

RunConfig read_run_config(const fs::path& path) { return parse_run_config(read_key_values(path)); }

KeyValues to_key_values(const RunConfig& c) {
  KeyValues kv = to_key_values(c.ssds);
  kv["algorithm"] = to_string(c.algorithm);
  kv["problem"] = to_string(c.problem);
  kv["epochs"] = std::to_string(c.epochs);
  kv["batch_size"] = std::to_string(c.batch_size);
  kv["histogram_every"] = std::to_string(c.histogram_every);
  kv["data"] = c.data_spec();
  kv["norm"] = norm_name(c.norm);
  kv["subgradient"] = c.subgradient == SubgradientRule::Sign ? "sign" : "exact";
  kv["record_wall_time"] = c.record_wall_time ? "true" : "false";
  kv["lambda_ceiling"] = c.lambda_ceiling ? format_real(*c.lambda_ceiling) : "none";
  kv["quadratic_c"] = join_reals(c.quadratic_c);
  kv["quadratic_a"] = format_real(c.quadratic_a);
  kv["quadratic_b"] = format_real(c.quadratic_b);
  std::string hidden;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) hidden += (i ? "," : "") + std::to_string(c.hidden[i]);
  kv["hidden"] = hidden.empty() ? "none" : hidden;
  kv["activation"] = c.activation == autodiff::Activation::ReLU ? "relu" : "tanh";
  return kv;
}

Dataset load_dataset(const std::string& spec_with_slice) {
  std::string spec = spec_with_slice;
  std::optional<std::pair<std::size_t, std::size_t>> slice;
  if (const auto at = spec.rfind('@'); at != std::string::npos) {
    const auto parts = split(spec.substr(at + 1), '+');
    if (parts.size() != 2) throw ConfigError("slice must be @BEGIN+COUNT in '" + spec_with_slice + "'");
    slice = {parse_u64(parts[0], "slice begin"), parse_u64(parts[1], "slice count")};
    spec = spec.substr(0, at);
  }
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("dataset spec needs a kind prefix: '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string body = spec.substr(colon + 1);

  auto data = [&]() -> Dataset {
    if (kind == "csv") return read_dataset_csv(body);
    const auto args = split(body, ',');
    if (kind == "synthetic") {
      if (args.size() != 5) throw ConfigError("synthetic:N,DIM,CLASSES,SEPARATION,SEED expected");
      return make_synthetic_dataset(parse_u64(args[0], "N"), parse_u64(args[1], "DIM"), parse_u64(args[2], "CLASSES"),
                                    parse_real(args[3], "SEPARATION"), parse_u64(args[4], "SEED"));
    }
    if (kind == "quadratic") {
      if (args.size() != 3) throw ConfigError("quadratic:N,DIM,SEED expected");
      return make_quadratic_dataset(parse_u64(args[0], "N"), parse_u64(args[1], "DIM"), parse_u64(args[2], "SEED"));
    }
    if (kind == "idx") {
      if (args.size() != 2 && args.size() != 3) throw ConfigError("idx:IMAGES,LABELS[,LIMIT] expected");
      std::optional<std::size_t> limit;
      if (args.size() == 3) limit = parse_u64(args[2], "LIMIT");
      return load_idx_dataset(args[0], args[1], limit);
    }
    throw ConfigError("unknown dataset kind '" + kind + "'");
  }();
  if (slice) return data.slice(slice->first, slice->second);
  return data;
}

std::unique_ptr<RobustProblem> make_problem(const RunConfig& config, std::shared_ptr<const Dataset> data) {
  const BudgetConstraint budget(config.norm, config.ssds.epsilon);
  switch (config.problem) {
    case ProblemKind::Quadratic: {
      const Vector c = Eigen::Map<const Vector>(config.quadratic_c.data(), static_cast<Eigen::Index>(config.quadratic_c.size()));
      return std::make_unique<QuadraticSaddleProblem>(std::move(data), budget, c, config.quadratic_a, config.quadratic_b,
                                                      config.subgradient);
    }
    case ProblemKind::Logistic:
      return std::make_unique<RobustLogisticProblem>(std::move(data), budget, config.subgradient);
    case ProblemKind::Mlp: {
      autodiff::MlpArchitecture arch;
      arch.activation = config.activation;
      arch.sizes.push_back(data->dim());
      arch.sizes.insert(arch.sizes.end(), config.hidden.begin(), config.hidden.end());
      arch.sizes.push_back(data->num_classes());
      return std::make_unique<MlpProblem>(std::move(data), budget, arch, config.subgradient);
    }
  }
  throw ConfigError("unknown problem kind");
}

std::string run_id(const RunConfig& config) {
  std::ostringstream text;
  write_key_values(text, to_key_values(config));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text.str())));
  return buf;
}

std::string artifact_version() {
  const std::string rev = SSDS_GIT_REV;
  return rev.empty() ? std::string(SSDS_VERSION) : std::string(SSDS_VERSION) + "+g" + rev;
}

std::string trajectory_header() {
  return "epoch,alpha,lambda,t,mean_loss,frac_u_within_budget,mean_u_delta_l2,wall_ms";
}

std::string trajectory_row(const EpochReport& r, double wall_ms) {
  return std::to_string(r.epoch) + ',' + format_real(r.alpha) + ',' + format_real(r.lambda) + ',' + format_real(r.t) +
         ',' + format_real(r.mean_loss) + ',' + format_real(r.frac_u_within_budget) + ',' +
         format_real(r.mean_u_delta_l2) + ',' + format_real(wall_ms);
}

void write_evaluation_csv(const fs::path& path, const std::vector<EvaluationRow>& rows) {
  auto out = open_for_write(path);
  out << "model_id,attack,params,accuracy\n";
  for (const auto& r : rows) out << r.model_id << ',' << r.attack << ",\"" << r.params << "\"," << format_real(r.accuracy) << '\n';
}

void write_u_norms_csv(const fs::path& path, const UncertaintyState& u) {
  auto out = open_for_write(path);
  out << "sample_id,linf_norm\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    out << i + 1 << ',' << format_real(u[i].size() == 0 ? 0.0 : u[i].lpNorm<Eigen::Infinity>()) << '\n';
  }
}

void write_file_atomically(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    auto out = open_for_write(tmp);
    out << contents;
    if (!out.flush()) throw FormatError(FormatError::Kind::Unreadable, "failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

RunOutcome run_training(const RunConfig& config, const fs::path& out_root, const EpochObserver& observer) {
  const std::string started = utc_now();
  const std::string spec = config.data_spec();
  auto data = std::make_shared<const Dataset>(load_dataset(spec));
  const auto problem = make_problem(config, data);

  RunOutcome outcome;
  outcome.run_id = run_id(config);
  outcome.run_dir = out_root / outcome.run_id;
  if (fs::exists(outcome.run_dir)) {
    throw fs::filesystem_error("run directory already exists", outcome.run_dir,
                               std::make_error_code(std::errc::file_exists));
  }
  fs::create_directories(outcome.run_dir);

  {
    auto out = open_for_write(outcome.run_dir / "config.txt");
    write_key_values(out, to_key_values(config));
    outcome.artifacts.push_back("config.txt");
  }
  auto trajectory = open_for_write(outcome.run_dir / "trajectory.csv");
  outcome.artifacts.push_back("trajectory.csv");
  trajectory << trajectory_header() << '\n';

  Rng rng(mix_seed(config.ssds.seed, 1));
  SaddleIterate z = initial_iterate(*problem, problem->initial_parameters(mix_seed(config.ssds.seed, 2)), config.ssds);
  const std::size_t batch = std::min<std::size_t>(config.batch_size, data->size());

  for (std::uint64_t e = 1; e <= config.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochResult result;
    try {
      result = run_one_epoch(config, *problem, z, batch, rng);
    } catch (const NumericalDivergence& err) {
      outcome.divergence = err.what();
      break;
    }
    const double wall_ms =
        config.record_wall_time
            ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()
            : 0.0;
    z = std::move(result.z);
    trajectory << trajectory_row(result.report, wall_ms) << '\n';
    outcome.reports.push_back(result.report);
    if (e % config.histogram_every == 0) {
      char name[48];
      std::snprintf(name, sizeof name, "u_norms_epoch_%06llu.csv", static_cast<unsigned long long>(e));
      write_u_norms_csv(outcome.run_dir / name, z.u);
      outcome.artifacts.push_back(name);
    }
    if (observer) observer(result.report, z);
  }
  trajectory.close();
  outcome.final_state = z;

  if (const auto* classifier = dynamic_cast<const ClassifierProblem*>(problem.get())) {
    autodiff::MlpArchitecture arch;
    if (const auto* mlp = dynamic_cast<const MlpProblem*>(classifier)) {
      arch = mlp->architecture();
    } else {
      arch.sizes = {data->dim(), data->num_classes()};
    }
    autodiff::save_checkpoint(outcome.run_dir / "checkpoint.bin", autodiff::MlpModel(arch, z.x.w));
    outcome.artifacts.push_back("checkpoint.bin");
  }

  nlohmann::ordered_json manifest;
  manifest["run_id"] = outcome.run_id;
  manifest["version"] = artifact_version();
  manifest["status"] = outcome.divergence ? "diverged" : "completed";
  if (outcome.divergence) manifest["divergence"] = *outcome.divergence;
  manifest["started_at"] = started;
  manifest["finished_at"] = utc_now();
  manifest["config"] = to_key_values(config);
  manifest["dataset"] = {{"spec", spec},
                         {"size", data->size()},
                         {"dim", data->dim()},
                         {"num_classes", data->num_classes()}};
  manifest["epochs_completed"] = outcome.reports.size();
  if (!outcome.reports.empty()) {
    manifest["final_report"] = report_json(outcome.reports.back());
    manifest["final_lambda"] = z.duals.lambda;
    manifest["lambda_collapsed"] = config.algorithm != Algorithm::Sgda && z.duals.lambda == 0.0;
  }
  outcome.artifacts.push_back("manifest.json");
  manifest["artifacts"] = outcome.artifacts;
  write_file_atomically(outcome.run_dir / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

RunOutcome rerun_manifest(const fs::path& manifest_path, const fs::path& out_root) {
  std::ifstream in(manifest_path);
  if (!in) throw FormatError(FormatError::Kind::Unreadable, "cannot open manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::BadValue, manifest_path.string() + ": " + e.what());
  }
  if (!manifest.contains("config") || !manifest["config"].is_object()) {
    throw FormatError(FormatError::Kind::BadValue, manifest_path.string() + ": no config snapshot");
  }
  KeyValues kv;
  for (const auto& [key, value] : manifest["config"].items()) {
    if (!value.is_string()) throw FormatError(FormatError::Kind::BadValue, "config value for '" + key + "' is not a string");
    kv[key] = value.get<std::string>();
  }
  return run_training(parse_run_config(std::move(kv)), out_root);
}

namespace {

// Soft-budget setting for the logistic experiments: u steps small enough
// for the feature scale, and a penalty strong enough to pull u back.
RunConfig logistic_budget_config(std::uint64_t seed, std::uint64_t epochs) {
  RunConfig c;
  c.problem = ProblemKind::Logistic;
  c.algorithm = Algorithm::Ssds;
  c.data = "synthetic:500,2,2,2,7";
  c.batch_size = 50;
  c.epochs = epochs;
  c.ssds.alpha0 = 0.1;
  c.ssds.decay_p = 1e-4;
  c.ssds.c1 = 1.0;
  c.ssds.seed = seed;
  return c;
}

std::vector<fs::path> reproduce_u_panels(const ReproduceOptions& options, bool histograms) {
  const RunConfig config = logistic_budget_config(options.seed, options.quick ? 60 : 300);
  auto data = std::make_shared<const Dataset>(load_dataset(config.data_spec()));
  const auto problem = make_problem(config, data);
  Rng rng(mix_seed(config.ssds.seed, 1));
  SaddleIterate z = initial_iterate(*problem, problem->initial_parameters(mix_seed(config.ssds.seed, 2)), config.ssds);

  std::vector<fs::path> written;
  const fs::path summary_path = options.out_dir / (histograms ? "u_hist_summary.csv" : "u_evolution.csv");
  auto summary = open_for_write(summary_path);
  written.push_back(summary_path);
  summary << (histograms ? "epoch,fraction_within,fraction_within_slack,max_norm\n" : "epoch,u_linf,v,u_delta_l2\n");
  const BudgetConstraint budget(NormOrder::LInf, config.ssds.epsilon);
  for (std::uint64_t e = 1; e <= config.epochs; ++e) {
    const Vector u_prev = z.u.front();
    z = minibatch_ssds_epoch(*problem, z, config.batch_size, config.ssds, rng).z;
    if (!histograms) {
      summary << e << ',' << format_real(z.u.front().lpNorm<Eigen::Infinity>()) << ',' << format_real(z.duals.v.front())
              << ',' << format_real((z.u.front() - u_prev).norm()) << '\n';
      continue;
    }
    if (e % 30 != 0) continue;
    const BudgetHistogram hist = budget_histogram(z.u, budget, 20);
    char name[40];
    std::snprintf(name, sizeof name, "u_hist_epoch_%03llu.csv", static_cast<unsigned long long>(e));
    write_histogram_csv(options.out_dir / name, hist);
    written.push_back(options.out_dir / name);
    summary << e << ',' << format_real(hist.fraction_within) << ','
            << format_real(fraction_within_budget(z.u, budget.epsilon, 1e-3)) << ',' << format_real(hist.max_norm) << '\n';
  }
  return written;
}

struct SplitData {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> test;
};

// Overlapping blobs so that an epsilon = 0.1 attack visibly moves accuracy.
SplitData overlapping_blobs() {
  return {std::make_shared<const Dataset>(load_dataset("synthetic:1000,10,2,1,7@0+500")),
          std::make_shared<const Dataset>(load_dataset("synthetic:1000,10,2,1,7@500+500"))};
}

std::vector<fs::path> reproduce_sgda_vs_ssds(const ReproduceOptions& options) {
  const SplitData data = overlapping_blobs();
  SsdsConfig cfg;
  cfg.epsilon = 0.1;
  cfg.alpha0 = 0.01;
  cfg.decay_p = 1e-4;
  cfg.c1 = 0.1;
  cfg.seed = options.seed;
  const BudgetConstraint budget(NormOrder::LInf, cfg.epsilon);
  const RobustLogisticProblem train(data.train, budget);
  const RobustLogisticProblem test(data.test, budget);
  const std::uint64_t epochs = options.quick ? 10 : 100;

  const fs::path path = options.out_dir / "sgda_vs_ssds.csv";
  auto out = open_for_write(path);
  out << "epoch,algorithm,mean_loss,lambda,frac_u_within_budget,test_clean_accuracy,test_fgsm_accuracy\n";
  for (const Algorithm algorithm : {Algorithm::Sgda, Algorithm::Ssds}) {
    Rng rng(mix_seed(cfg.seed, 1));
    SaddleIterate z = initial_iterate(train, train.initial_parameters(0), cfg);
    for (std::uint64_t e = 1; e <= epochs; ++e) {
      const EpochResult r = algorithm == Algorithm::Sgda ? minibatch_sgda_epoch(train, z, 50, cfg, rng)
                                                         : minibatch_ssds_epoch(train, z, 50, cfg, rng);
      z = r.z;
      out << e << ',' << to_string(algorithm) << ',' << format_real(r.report.mean_loss) << ','
          << format_real(r.report.lambda) << ',' << format_real(r.report.frac_u_within_budget) << ','
          << format_real(evaluate_under_attack(test, z.x.w, *data.test, CleanEvaluation{})) << ','
          << format_real(evaluate_under_attack(test, z.x.w, *data.test, AttackSpec::fgsm(cfg.epsilon))) << '\n';
    }
  }
  return {path};
}

std::vector<fs::path> reproduce_robust_table(const ReproduceOptions& options) {
  const SplitData data = overlapping_blobs();
  const double eps = 0.1;
  const BudgetConstraint budget(NormOrder::LInf, eps);
  const RobustLogisticProblem train(data.train, budget);
  const RobustLogisticProblem test(data.test, budget);
  Vector w = train.initial_parameters(0);
  Rng rng(mix_seed(options.seed, 1));
  for (int e = 0; e < (options.quick ? 10 : 50); ++e) natural_training_epoch(train, w, 50, 0.01, rng);

  SsdsConfig attack;
  attack.epsilon = eps;
  attack.alpha0 = 0.01;
  attack.decay_p = 1e-4;
  attack.c1 = 0.1;
  const std::uint64_t steps = options.quick ? 20 : 100;
  std::vector<std::size_t> all(data.test->size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto attacked = [&](const UncertaintyState& u) {
    std::vector<Vector> inputs;
    for (std::size_t i = 0; i < u.size(); ++i) inputs.push_back((*data.test)[i].input + u[i]);
    return accuracy_on_inputs(test, w, *data.test, inputs);
  };
  const AttackSpec pgd20 = AttackSpec::pgd(eps, eps / 4.0, 20);
  char params[96];
  std::snprintf(params, sizeof params, "eps=%g alpha0=%g c1=%g steps=%llu", eps, attack.alpha0, attack.c1,
                static_cast<unsigned long long>(steps));
  const std::vector<EvaluationRow> rows = {
      {"natural-logistic", "clean", "", evaluate_under_attack(test, w, *data.test, CleanEvaluation{})},
      {"natural-logistic", "fgsm", AttackSpec::fgsm(eps).summary(),
       evaluate_under_attack(test, w, *data.test, AttackSpec::fgsm(eps))},
      {"natural-logistic", "pgd", pgd20.summary(), evaluate_under_attack(test, w, *data.test, pgd20, options.seed)},
      {"natural-logistic", "sgda-attack", params, attacked(sgda_attack(test, w, all, attack, steps))},
      {"natural-logistic", "ssds-attack", params, attacked(ssds_attack(test, w, all, attack, steps))},
  };
  const fs::path path = options.out_dir / "robust_table.csv";
  write_evaluation_csv(path, rows);
  return {path};
}

}  // namespace

std::vector<fs::path> reproduce_figure(const std::string& figure, const ReproduceOptions& options) {
  fs::create_directories(options.out_dir);
  if (figure == "u-hist") return reproduce_u_panels(options, true);
  if (figure == "u-evolution") return reproduce_u_panels(options, false);
  if (figure == "sgda-vs-ssds") return reproduce_sgda_vs_ssds(options);
  if (figure == "robust-table") return reproduce_robust_table(options);
  throw ConfigError("unknown figure '" + figure + "'; expected u-hist, u-evolution, sgda-vs-ssds or robust-table");
}

}  // namespace ssds
