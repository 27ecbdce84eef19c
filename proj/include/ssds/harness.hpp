#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ssds/autodiff.hpp"
#include "ssds/config.hpp"
#include "ssds/dataset.hpp"
#include "ssds/dynamics.hpp"
#include "ssds/problems.hpp"

namespace ssds {

enum class Algorithm { Ssds, SsdsP, Sgda };
enum class ProblemKind { Quadratic, Logistic, Mlp };

std::string to_string(Algorithm algorithm);
std::string to_string(ProblemKind kind);
/// "ssds", "ssds-p", "sgda"; ConfigError otherwise.
Algorithm parse_algorithm(const std::string& text);
/// "quadratic", "logistic", "mlp"; ConfigError otherwise.
ProblemKind parse_problem_kind(const std::string& text);

/// Everything that determines a training run. Serializes to the flat
/// key/value config format: the SsdsConfig keys plus the run keys below.
struct RunConfig {
  SsdsConfig ssds;
  Algorithm algorithm = Algorithm::Ssds;
  ProblemKind problem = ProblemKind::Quadratic;
  std::uint64_t epochs = 1;
  /// Clamped to the dataset size.
  std::uint64_t batch_size = 32;
  /// Per-sample u-norm file every this many epochs.
  std::uint64_t histogram_every = 30;
  /// Dataset spec (see load_dataset); empty selects the problem's default.
  std::string data;
  NormOrder norm = NormOrder::LInf;
  SubgradientRule subgradient = SubgradientRule::Sign;
  /// Off by default so that trajectory files are reproducible byte for byte.
  bool record_wall_time = false;
  /// SSDS-p only.
  std::optional<double> lambda_ceiling;
  std::vector<double> quadratic_c = {0.05, 0.01};
  double quadratic_a = 1.0;
  double quadratic_b = 1.0;
  std::vector<std::size_t> hidden = {128, 64};
  autodiff::Activation activation = autodiff::Activation::ReLU;

  /// `data`, or the default spec for `problem`.
  std::string data_spec() const;
  bool operator==(const RunConfig&) const = default;
};

/// Consumes all keys; unknown keys and malformed values are ConfigError.
RunConfig parse_run_config(KeyValues kv);
RunConfig read_run_config(const std::filesystem::path& path);
KeyValues to_key_values(const RunConfig& config);

/// Dataset specs:
///   synthetic:N,DIM,CLASSES,SEPARATION,SEED
///   quadratic:N,DIM,SEED
///   idx:IMAGES,LABELS[,LIMIT]
///   csv:PATH
/// Any spec may end in @BEGIN+COUNT to keep only that slice (ids
/// renumbered). ConfigError for a malformed spec, FormatError for bad files.
Dataset load_dataset(const std::string& spec);

std::unique_ptr<RobustProblem> make_problem(const RunConfig& config, std::shared_ptr<const Dataset> data);

/// 16 hex digits of FNV-1a over the serialized config (which includes the
/// seed, problem, algorithm, epoch count and data spec).
std::string run_id(const RunConfig& config);

/// Version of the artifact, e.g. "0.1.0+g1a2b3c4".
std::string artifact_version();

struct RunOutcome {
  std::string run_id;
  std::filesystem::path run_dir;
  std::vector<EpochReport> reports;
  SaddleIterate final_state;
  /// Set when the run stopped on NumericalDivergence.
  std::optional<std::string> divergence;
  std::vector<std::string> artifacts;
};

/// Called after every epoch.
using EpochObserver = std::function<void(const EpochReport& report, const SaddleIterate& z)>;

/// Runs `config` into out_root/<run id>/, writing config.txt,
/// trajectory.csv, u_norms_epoch_<k>.csv every histogram_every epochs, a
/// checkpoint for classifier problems, and manifest.json last (atomically).
/// Throws std::filesystem::filesystem_error (file_exists) if the run
/// directory already exists.
RunOutcome run_training(const RunConfig& config, const std::filesystem::path& out_root,
                        const EpochObserver& observer = {});

/// Reads the config snapshot from a manifest and runs it again under
/// out_root.
RunOutcome rerun_manifest(const std::filesystem::path& manifest_path, const std::filesystem::path& out_root);

/// Trajectory CSV header and row, shared with the reproduce experiments.
std::string trajectory_header();
std::string trajectory_row(const EpochReport& report, double wall_ms);

struct EvaluationRow {
  std::string model_id;
  std::string attack;
  std::string params;
  double accuracy = 0.0;
};

/// CSV `model_id,attack,params,accuracy`.
void write_evaluation_csv(const std::filesystem::path& path, const std::vector<EvaluationRow>& rows);

/// Writes `sample_id,linf_norm`.
void write_u_norms_csv(const std::filesystem::path& path, const UncertaintyState& u);

/// Writes `path.tmp` then renames it over `path`.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

struct ReproduceOptions {
  std::filesystem::path out_dir;
  /// Shorter runs for smoke tests.
  bool quick = false;
  std::uint64_t seed = 0;
};

/// Scripted desk-scale experiments; each writes CSV panels into out_dir and
/// returns their paths. Figures: "u-hist", "u-evolution", "sgda-vs-ssds",
/// "robust-table". ConfigError for an unknown figure.
std::vector<std::filesystem::path> reproduce_figure(const std::string& figure, const ReproduceOptions& options);

}  // namespace ssds
