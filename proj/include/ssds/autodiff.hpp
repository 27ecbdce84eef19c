#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ssds/core_types.hpp"

namespace ssds {
class Rng;
}

namespace ssds::autodiff {

/// Dense row-major array of doubles. The product of `shape` always equals
/// the number of stored values; a rank-0 tensor holds one scalar.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor scalar(double value) { return Tensor({}, {value}); }
  static Tensor from_vector(const Vector& v);
  /// Stacks equal-length vectors into a (rows, dim) matrix.
  static Tensor from_rows(std::span<const Vector> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  /// Extent of the last axis for rank >= 1, else 1.
  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
  /// Number of rows when viewed as (size / cols, cols).
  std::size_t rows() const { return size() / cols(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  Vector row(std::size_t r) const;
  Vector to_vector() const { return Eigen::Map<const Vector>(data_.data(), static_cast<Eigen::Index>(size())); }

 private:
  std::vector<double> data_;
  std::vector<std::size_t> shape_;
};

struct Gradients {
  /// Flattened parameter gradient, in parameter registration order.
  Vector params;
  /// Same shape as the input leaf (empty tensor if the tape has no input).
  Tensor input;
};

class Tape;

/// Backpropagates from the last node of the tape, which must be a scalar
/// (ShapeError otherwise). Gradients are scaled by `loss_gradient_seed`.
Gradients backward(const Tape& tape, double loss_gradient_seed = 1.0);

/// Reverse-mode tape over tensor-valued operations.
///
/// Nodes are appended in execution order and only reference earlier nodes,
/// so walking the node list backwards is a reverse topological order.
class Tape {
 public:
  using NodeId = std::size_t;

  /// Differentiable leaf whose gradient is reported as the input gradient.
  /// At most one per tape.
  NodeId input(Tensor value);
  /// Differentiable leaf; parameter gradients are concatenated in the order
  /// these leaves were registered.
  NodeId parameter(Tensor value);

  /// x: (B, in), weight: (out, in), bias: (out) -> x * weight^T + bias.
  NodeId affine(NodeId x, NodeId weight, NodeId bias);
  NodeId relu(NodeId x);
  NodeId tanh(NodeId x);
  /// Sum over rows of -log softmax(logits)[label]; scalar result. Per-row
  /// losses are written to `row_losses` when given.
  NodeId cross_entropy(NodeId logits, std::span<const std::size_t> labels,
                       std::vector<double>* row_losses = nullptr);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  std::span<const NodeId> parameters() const { return parameters_; }
  bool has_input() const { return input_.has_value(); }
  NodeId input_node() const { return *input_; }

 private:
  friend Gradients backward(const Tape& tape, double loss_gradient_seed);

  // grads[i] holds d(root)/d(node i); the closure adds this node's
  // contribution into its parents' slots.
  using BackwardFn = std::function<void(const Tape&, std::vector<Tensor>& grads, NodeId self)>;

  struct Node {
    Tensor value;
    std::vector<NodeId> parents;
    BackwardFn backward;
  };

  NodeId push(Tensor value, std::vector<NodeId> parents, BackwardFn fn);

  std::vector<Node> nodes_;
  std::vector<NodeId> parameters_;
  std::optional<NodeId> input_;
};

/// -log softmax(logits)[label] with max subtraction.
double cross_entropy(const Tensor& logits, std::size_t label);

enum class Activation { ReLU, Tanh };

struct LayerShape {
  std::size_t out = 0;
  std::size_t in = 0;
  std::size_t parameter_count() const { return out * in + out; }
};

/// Layer sizes [in, hidden..., classes] plus the hidden activation.
struct MlpArchitecture {
  std::vector<std::size_t> sizes;
  Activation activation = Activation::ReLU;

  /// Throws ShapeError unless there are at least two positive sizes.
  void validate() const;
  std::vector<LayerShape> layers() const;
  std::size_t parameter_count() const;
  std::size_t input_dim() const { return sizes.front(); }
  std::size_t output_dim() const { return sizes.back(); }

  bool operator==(const MlpArchitecture&) const = default;
};

/// Affine layers with the activation between them (none after the last).
/// Parameters are flattened layer by layer as W (row-major, out x in) then b.
class MlpModel {
 public:
  MlpModel(MlpArchitecture arch, Vector params);

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static MlpModel glorot(MlpArchitecture arch, Rng& rng);
  static MlpModel zeros(MlpArchitecture arch);

  const MlpArchitecture& architecture() const { return arch_; }
  const Vector& parameters() const { return params_; }
  void set_parameters(Vector params);

  /// [W0, b0, W1, b1, ...] as tensors.
  std::vector<Tensor> unflatten() const;
  static Vector flatten(std::span<const Tensor> tensors);

 private:
  MlpArchitecture arch_;
  Vector params_;
};

struct ForwardPass {
  Tensor logits;
  Tape tape;
  Tape::NodeId logits_node = 0;
};

/// Records the network on a fresh tape. `input` is (m) or (B, m); logits
/// come back as (K) or (B, K) respectively. ShapeError on mismatch.
ForwardPass forward(const MlpArchitecture& arch, const Vector& params, const Tensor& input);
inline ForwardPass forward(const MlpModel& model, const Tensor& input) {
  return forward(model.architecture(), model.parameters(), input);
}

/// Checkpoint: "SSDSCKPT", u32 version, u32 layer count, (u32 out, u32 in)
/// per layer, then the flattened parameters as little-endian f64.
void save_checkpoint(const std::filesystem::path& path, const MlpModel& model);
/// The file does not record the activation; the caller supplies it.
MlpModel load_checkpoint(const std::filesystem::path& path, Activation activation = Activation::ReLU);

}  // namespace ssds::autodiff
