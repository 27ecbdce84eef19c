#include "ssds/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "ssds/config.hpp"
#include "ssds/errors.hpp"
#include "ssds/rng.hpp"

namespace ssds {

Dataset::Dataset(std::vector<Sample> samples, std::size_t num_classes, InputRange range)
    : samples_(std::move(samples)), num_classes_(num_classes), range_(range) {
  if (samples_.empty()) throw ConfigError("dataset must contain at least one sample");
  if (num_classes_ == 0) throw ConfigError("dataset needs at least one class");
  const auto m = samples_.front().input.size();
  if (m == 0) throw ShapeError("samples must have positive input dimension");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.id != i + 1) throw ShapeError("sample ids must be contiguous 1..N");
    if (s.input.size() != m) throw ShapeError("sample " + std::to_string(s.id) + " has wrong dimension");
    if (s.label >= num_classes_) throw ShapeError("sample " + std::to_string(s.id) + " label out of range");
    if (!s.input.allFinite()) throw ShapeError("sample " + std::to_string(s.id) + " has non-finite input");
  }
}

Dataset Dataset::head(std::size_t count) const {
  count = std::min(count, samples_.size());
  return Dataset({samples_.begin(), samples_.begin() + static_cast<std::ptrdiff_t>(count)}, num_classes_, range_);
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin > samples_.size() || count > samples_.size() - begin) {
    throw ConfigError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                      ") is outside a dataset of " + std::to_string(samples_.size()));
  }
  std::vector<Sample> out(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                          samples_.begin() + static_cast<std::ptrdiff_t>(begin + count));
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = i + 1;
  return Dataset(std::move(out), num_classes_, range_);
}

Dataset make_synthetic_dataset(std::size_t num_samples, std::size_t dim, std::size_t num_classes,
                               double separation, std::uint64_t seed) {
  if (num_samples == 0 || dim == 0 || num_classes == 0 || !(separation > 0.0)) {
    throw ConfigError("synthetic dataset arguments must be positive");
  }
  constexpr double kNoise = 0.25;
  Rng rng(seed);
  const auto m = static_cast<Eigen::Index>(dim);

  auto unit_direction = [&] {
    Vector d(m);
    do {
      for (Eigen::Index j = 0; j < m; ++j) d[j] = rng.normal();
    } while (d.norm() == 0.0);
    return Vector(d / d.norm());
  };

  std::vector<Vector> centers;
  if (num_classes == 2) {
    const Vector d = unit_direction();
    centers = {-0.5 * separation * d, 0.5 * separation * d};
  } else {
    for (std::size_t c = 0; c < num_classes; ++c) centers.push_back(0.5 * separation * unit_direction());
  }

  std::vector<Sample> samples;
  samples.reserve(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) {
    Sample s;
    s.id = i + 1;
    s.label = i % num_classes;
    s.input = centers[s.label];
    for (Eigen::Index j = 0; j < m; ++j) s.input[j] += kNoise * rng.normal();
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), num_classes);
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Unreadable, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

Dataset load_idx_dataset(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                         std::optional<std::size_t> limit) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  if (read_be32(images, 0, images_path) != 0x00000803) {
    throw FormatError(FormatError::Kind::BadMagic, images_path.string() + ": bad image magic");
  }
  if (read_be32(labels, 0, labels_path) != 0x00000801) {
    throw FormatError(FormatError::Kind::BadMagic, labels_path.string() + ": bad label magic");
  }
  const std::size_t n_images = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);
  if (n_images != n_labels) {
    throw FormatError(FormatError::Kind::CountMismatch, "image count " + std::to_string(n_images) +
                                                            " != label count " + std::to_string(n_labels));
  }
  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + n_images * pixels) {
    throw FormatError(FormatError::Kind::Truncated, images_path.string() + ": truncated pixel data");
  }
  if (labels.size() < 8 + n_labels) {
    throw FormatError(FormatError::Kind::Truncated, labels_path.string() + ": truncated label data");
  }
  if (n_images == 0 || pixels == 0) throw FormatError(FormatError::Kind::BadValue, "empty IDX file");

  const std::size_t count = std::min(n_images, limit.value_or(n_images));
  std::vector<Sample> samples(count);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    Sample& s = samples[i];
    s.id = i + 1;
    s.label = labels[8 + i];
    max_label = std::max(max_label, s.label);
    s.input.resize(static_cast<Eigen::Index>(pixels));
    const unsigned char* px = images.data() + 16 + i * pixels;
    for (std::size_t j = 0; j < pixels; ++j) s.input[static_cast<Eigen::Index>(j)] = px[j] / 255.0;
  }
  return Dataset(std::move(samples), max_label + 1, InputRange::unit());
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatError::Kind::Unreadable, "cannot write " + path.string());
  out << "id,label";
  for (std::size_t j = 0; j < data.dim(); ++j) out << ",x" << j + 1;
  out << '\n';
  for (const Sample& s : data.samples()) {
    out << s.id << ',' << s.label;
    for (Eigen::Index j = 0; j < s.input.size(); ++j) out << ',' << format_real(s.input[j]);
    out << '\n';
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::Unreadable, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(FormatError::Kind::Truncated, path.string() + ": empty file");
  std::vector<Sample> samples;
  std::size_t max_label = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(FormatError::Kind::BadValue, path.string() + ": bad cell '" + cell + "'");
      }
    }
    if (values.size() < 3) throw FormatError(FormatError::Kind::Truncated, path.string() + ": short row");
    Sample s;
    s.id = static_cast<std::size_t>(values[0]);
    s.label = static_cast<std::size_t>(values[1]);
    max_label = std::max(max_label, s.label);
    s.input = Eigen::Map<const Vector>(values.data() + 2, static_cast<Eigen::Index>(values.size() - 2));
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), max_label + 1);
}

}  // namespace ssds
