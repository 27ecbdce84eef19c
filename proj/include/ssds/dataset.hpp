#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "ssds/core_types.hpp"

namespace ssds {

struct Sample {
  Vector input;
  std::size_t label = 0;
  /// 1-based, contiguous within a dataset.
  std::size_t id = 0;
};

/// Valid input interval; attacks clamp perturbed inputs into it.
struct InputRange {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static InputRange unit() { return {0.0, 1.0}; }
  bool bounded() const { return lo > -std::numeric_limits<double>::infinity() || hi < std::numeric_limits<double>::infinity(); }
};

/// Immutable labeled sample store.
class Dataset {
 public:
  /// Validates ids (1..N, in order), labels (< num_classes), a common finite
  /// input dimension, and N > 0. Throws ShapeError or ConfigError.
  Dataset(std::vector<Sample> samples, std::size_t num_classes, InputRange range = {});

  std::size_t size() const { return samples_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(samples_.front().input.size()); }
  std::size_t num_classes() const { return num_classes_; }
  const InputRange& input_range() const { return range_; }

  const Sample& operator[](std::size_t index) const { return samples_[index]; }
  const std::vector<Sample>& samples() const { return samples_; }

  /// First `count` samples as a new dataset (ids unchanged).
  Dataset head(std::size_t count) const;
  /// Samples [begin, begin + count) with ids renumbered from 1. Throws
  /// ConfigError if the range is empty or runs past the end.
  Dataset slice(std::size_t begin, std::size_t count) const;

 private:
  std::vector<Sample> samples_;
  std::size_t num_classes_;
  InputRange range_;
};

/// Gaussian blobs: class c sits at a seeded center at distance
/// separation / 2 from the origin (antipodal pair for two classes), samples
/// add isotropic noise with standard deviation 0.25. Label of sample i is
/// i mod num_classes. Same arguments give a bit-identical dataset.
Dataset make_synthetic_dataset(std::size_t num_samples, std::size_t dim, std::size_t num_classes,
                               double separation, std::uint64_t seed);

/// Reads an IDX image/label pair (magic 0x00000803 / 0x00000801), scaling
/// pixels to [0, 1]. Loads min(count in file, limit) samples.
/// Throws FormatError with kind BadMagic, Truncated, CountMismatch or
/// Unreadable.
Dataset load_idx_dataset(const std::filesystem::path& images_path,
                         const std::filesystem::path& labels_path,
                         std::optional<std::size_t> limit = std::nullopt);

/// CSV with header `id,label,x1,...,xm`; reals printed with 17 digits.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace ssds
