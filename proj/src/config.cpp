#include "ssds/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "ssds/errors.hpp"

namespace ssds {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void SsdsConfig::validate() const {
  auto positive = [](double x, const char* name) {
    require(std::isfinite(x) && x > 0.0, std::string(name) + " must be positive");
  };
  auto nonnegative = [](double x, const char* name) {
    require(std::isfinite(x) && x >= 0.0, std::string(name) + " must be nonnegative");
  };
  positive(epsilon, "epsilon");
  positive(lr, "lr");
  positive(decay_p, "decay_p");
  nonnegative(c1, "c1");
  nonnegative(c2, "c2");
  positive(lambda0, "lambda0");
  nonnegative(v0, "v0");
  require(std::isfinite(t0), "t0 must be finite");
  positive(alpha0, "alpha0");
  positive(eta, "eta");
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    require(eq != std::string::npos, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    require(!key.empty(), "line " + std::to_string(line_no) + ": empty key");
    require(kv.emplace(key, value).second, "duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::Unreadable, "cannot open config " + path.string());
  return parse_key_values(in);
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void take_real(KeyValues& kv, const std::string& key, double& target) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  const std::string& text = it->second;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && ptr == text.data() + text.size(),
          "key '" + key + "': '" + text + "' is not a real number");
  target = value;
  kv.erase(it);
}

void take_bool(KeyValues& kv, const std::string& key, bool& target) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  if (it->second == "true" || it->second == "1") {
    target = true;
  } else if (it->second == "false" || it->second == "0") {
    target = false;
  } else {
    throw ConfigError("key '" + key + "': '" + it->second + "' is not a boolean");
  }
  kv.erase(it);
}

void take_u64(KeyValues& kv, const std::string& key, std::uint64_t& target) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  const std::string& text = it->second;
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && ptr == text.data() + text.size(),
          "key '" + key + "': '" + text + "' is not an unsigned integer");
  target = value;
  kv.erase(it);
}

void take_string(KeyValues& kv, const std::string& key, std::string& target) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  target = it->second;
  kv.erase(it);
}

void reject_unknown_keys(const KeyValues& kv) {
  if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
}

SsdsConfig take_ssds_config(KeyValues& kv) {
  SsdsConfig c;
  take_real(kv, "epsilon", c.epsilon);
  take_real(kv, "lr", c.lr);
  take_real(kv, "decay_p", c.decay_p);
  take_real(kv, "c1", c.c1);
  take_real(kv, "c2", c.c2);
  take_real(kv, "lambda0", c.lambda0);
  take_real(kv, "v0", c.v0);
  take_real(kv, "t0", c.t0);
  take_real(kv, "alpha0", c.alpha0);
  take_real(kv, "eta", c.eta);
  take_bool(kv, "include_lambda_in_v_update", c.include_lambda_in_v_update);
  take_u64(kv, "seed", c.seed);
  c.validate();
  return c;
}

SsdsConfig read_ssds_config(const std::filesystem::path& path) {
  KeyValues kv = read_key_values(path);
  SsdsConfig c = take_ssds_config(kv);
  reject_unknown_keys(kv);
  return c;
}

KeyValues to_key_values(const SsdsConfig& c) {
  return {
      {"epsilon", format_real(c.epsilon)},
      {"lr", format_real(c.lr)},
      {"decay_p", format_real(c.decay_p)},
      {"c1", format_real(c.c1)},
      {"c2", format_real(c.c2)},
      {"lambda0", format_real(c.lambda0)},
      {"v0", format_real(c.v0)},
      {"t0", format_real(c.t0)},
      {"alpha0", format_real(c.alpha0)},
      {"eta", format_real(c.eta)},
      {"include_lambda_in_v_update", c.include_lambda_in_v_update ? "true" : "false"},
      {"seed", std::to_string(c.seed)},
  };
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [key, value] : kv) out << key << " = " << value << '\n';
}

}  // namespace ssds
