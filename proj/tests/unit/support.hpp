#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "ssds/core_types.hpp"
#include "ssds/dataset.hpp"
#include "ssds/problems.hpp"
#include "ssds/rng.hpp"

namespace ssds::testing {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() / ("ssds_" + tag + "_" + std::to_string(rng.next_u64() % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Vector random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

/// Central differences of f at x with step h.
inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-5) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b||_inf / max(||a||_inf, ||b||_inf, floor).
inline double relative_error(const Vector& a, const Vector& b, double floor = 1e-8) {
  const double scale = std::max({a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>(), floor});
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

inline std::shared_ptr<const Dataset> single_point(const Vector& input) {
  return std::make_shared<const Dataset>(std::vector<Sample>{{input, 0, 1}}, 1);
}

}  // namespace ssds::testing
