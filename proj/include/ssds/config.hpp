#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "ssds/core_types.hpp"

namespace ssds {

/// Hyperparameters shared by the mini-batch training algorithms and attacks.
///
/// Defaults follow the reference experimental setup: epsilon = 0.03,
/// p = 0.001, lambda0 = 4, v0 = 1, C1 = C2 = 0.01, t0 = 1, alpha0 = 2.
struct SsdsConfig {
  double epsilon = 0.03;
  /// Learning rate of the w updates.
  double lr = 0.002;
  /// Exponential step decay rate p.
  double decay_p = 0.001;
  /// Scale of the budget penalty in the u update; 0 disables it.
  double c1 = 0.01;
  /// Scale of the lambda update; 0 freezes lambda.
  double c2 = 0.01;
  double lambda0 = 4.0;
  double v0 = 1.0;
  double t0 = 1.0;
  double alpha0 = 2.0;
  /// Extra multiplier on alpha in every u update.
  double eta = 1.0;
  bool include_lambda_in_v_update = false;
  std::uint64_t seed = 0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  StepSchedule schedule() const { return StepSchedule::exponential_decay(alpha0, decay_p); }

  bool operator==(const SsdsConfig&) const = default;
};

/// Ordered flat key/value map, the in-memory form of a config file.
using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines. Blank lines and lines starting with '#' are
/// skipped; a repeated key or a line without '=' is a ConfigError.
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);

/// Shortest-safe lossless decimal form of a double (17 significant digits).
std::string format_real(double value);

/// Moves every SsdsConfig key out of `kv` into a config, leaving unrelated
/// keys behind for the caller. Missing keys keep their defaults.
SsdsConfig take_ssds_config(KeyValues& kv);

/// Reads a file holding only SsdsConfig keys; unknown keys are an error.
SsdsConfig read_ssds_config(const std::filesystem::path& path);

KeyValues to_key_values(const SsdsConfig& config);
void write_key_values(std::ostream& out, const KeyValues& kv);

/// Typed accessors used by the config readers. Each removes the key when
/// present and throws ConfigError on a malformed value.
void take_real(KeyValues& kv, const std::string& key, double& target);
void take_bool(KeyValues& kv, const std::string& key, bool& target);
void take_u64(KeyValues& kv, const std::string& key, std::uint64_t& target);
void take_string(KeyValues& kv, const std::string& key, std::string& target);

/// Throws ConfigError naming the first leftover key, if any.
void reject_unknown_keys(const KeyValues& kv);

}  // namespace ssds
