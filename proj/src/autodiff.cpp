#include "ssds/autodiff.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "ssds/errors.hpp"
#include "ssds/rng.hpp"

namespace ssds::autodiff {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

ConstMatrixMap as_matrix(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

MatrixMap as_matrix(Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

// Adds `delta` into grads[id], creating the slot on first use.
void accumulate(std::vector<Tensor>& grads, const Tape& tape, Tape::NodeId id, const Tensor& delta) {
  Tensor& slot = grads[id];
  if (slot.shape() != tape.value(id).shape() || slot.size() != delta.size()) {
    slot = delta;
    return;
  }
  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += delta[i];
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : data_(std::move(data)), shape_(std::move(shape)) {
  if (product(shape_) != data_.size()) {
    throw ShapeError("tensor shape does not match data length " + std::to_string(data_.size()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::from_vector(const Vector& v) {
  return Tensor({static_cast<std::size_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size()));
}

Tensor Tensor::from_rows(std::span<const Vector> rows) {
  if (rows.empty()) throw ShapeError("from_rows needs at least one row");
  const auto dim = static_cast<std::size_t>(rows.front().size());
  std::vector<double> data;
  data.reserve(rows.size() * dim);
  for (const Vector& r : rows) {
    if (static_cast<std::size_t>(r.size()) != dim) throw ShapeError("from_rows: ragged rows");
    data.insert(data.end(), r.data(), r.data() + r.size());
  }
  return Tensor({rows.size(), dim}, std::move(data));
}

Vector Tensor::row(std::size_t r) const {
  return Eigen::Map<const Vector>(data_.data() + r * cols(), static_cast<Eigen::Index>(cols()));
}

Tape::NodeId Tape::push(Tensor value, std::vector<NodeId> parents, BackwardFn fn) {
  nodes_.push_back(Node{std::move(value), std::move(parents), std::move(fn)});
  return nodes_.size() - 1;
}

Tape::NodeId Tape::input(Tensor value) {
  if (input_) throw ShapeError("tape already has an input leaf");
  input_ = push(std::move(value), {}, nullptr);
  return *input_;
}

Tape::NodeId Tape::parameter(Tensor value) {
  const NodeId id = push(std::move(value), {}, nullptr);
  parameters_.push_back(id);
  return id;
}

Tape::NodeId Tape::affine(NodeId x, NodeId weight, NodeId bias) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(weight);
  const Tensor& bv = value(bias);
  if (wv.rank() != 2 || bv.size() != wv.shape()[0] || xv.cols() != wv.shape()[1]) {
    throw ShapeError("affine: input width " + std::to_string(xv.cols()) + " does not match weight " +
                     std::to_string(wv.shape().empty() ? 0 : wv.shape().back()));
  }
  const std::size_t batch = xv.rows();
  const std::size_t out = wv.shape()[0];
  std::vector<std::size_t> shape = xv.rank() <= 1 ? std::vector<std::size_t>{out} : std::vector<std::size_t>{batch, out};
  Tensor y = Tensor::zeros(std::move(shape));
  {
    MatrixMap ym(y.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out));
    ym.noalias() = as_matrix(xv) * as_matrix(wv).transpose();
    const Eigen::Map<const Eigen::RowVectorXd> b(bv.data(), static_cast<Eigen::Index>(out));
    ym.rowwise() += b;
  }
  return push(std::move(y), {x, weight, bias}, [x, weight, bias](const Tape& tape, std::vector<Tensor>& grads, NodeId self) {
    const Tensor& dy = grads[self];
    const Tensor& xv = tape.value(x);
    const Tensor& wv = tape.value(weight);
    const auto batch = static_cast<Eigen::Index>(xv.rows());
    const auto out = static_cast<Eigen::Index>(wv.shape()[0]);
    const ConstMatrixMap dym(dy.data(), batch, out);

    Tensor dx = Tensor::zeros(xv.shape());
    as_matrix(dx).noalias() = dym * as_matrix(wv);
    accumulate(grads, tape, x, dx);

    Tensor dw = Tensor::zeros(wv.shape());
    as_matrix(dw).noalias() = dym.transpose() * as_matrix(xv);
    accumulate(grads, tape, weight, dw);

    Tensor db = Tensor::zeros({static_cast<std::size_t>(out)});
    Eigen::Map<Eigen::RowVectorXd>(db.data(), out) = dym.colwise().sum();
    accumulate(grads, tape, bias, db);
  });
}

Tape::NodeId Tape::relu(NodeId x) {
  Tensor y = value(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
  return push(std::move(y), {x}, [x](const Tape& tape, std::vector<Tensor>& grads, NodeId self) {
    const Tensor& in = tape.value(x);
    Tensor dx = grads[self];
    // subgradient 0 at exactly 0
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = in[i] > 0.0 ? dx[i] : 0.0;
    accumulate(grads, tape, x, dx);
  });
}

Tape::NodeId Tape::tanh(NodeId x) {
  Tensor y = value(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
  return push(std::move(y), {x}, [x](const Tape& tape, std::vector<Tensor>& grads, NodeId self) {
    const Tensor& out = tape.value(self);
    Tensor dx = grads[self];
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - out[i] * out[i];
    accumulate(grads, tape, x, dx);
  });
}

Tape::NodeId Tape::cross_entropy(NodeId logits, std::span<const std::size_t> labels, std::vector<double>* row_losses) {
  const Tensor& z = value(logits);
  const std::size_t rows = z.rows();
  const std::size_t k = z.cols();
  if (labels.size() != rows) throw ShapeError("cross_entropy: one label per logits row required");

  // softmax rows are kept for the backward pass
  Tensor probs = Tensor::zeros({rows, k});
  double total = 0.0;
  if (row_losses) row_losses->assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] >= k) throw ShapeError("cross_entropy: label out of range");
    const double* zr = z.data() + r * k;
    const double top = *std::max_element(zr, zr + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      probs[r * k + j] = std::exp(zr[j] - top);
      sum += probs[r * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) probs[r * k + j] /= sum;
    const double loss = top + std::log(sum) - zr[labels[r]];
    total += loss;
    if (row_losses) (*row_losses)[r] = loss;
  }
  std::vector<std::size_t> label_copy(labels.begin(), labels.end());
  return push(Tensor::scalar(total), {logits},
              [logits, probs = std::move(probs), label_copy = std::move(label_copy)](
                  const Tape& tape, std::vector<Tensor>& grads, NodeId self) {
                const double seed = grads[self][0];
                Tensor dz = Tensor::zeros(tape.value(logits).shape());
                const std::size_t k = probs.cols();
                for (std::size_t r = 0; r < label_copy.size(); ++r) {
                  for (std::size_t j = 0; j < k; ++j) dz[r * k + j] = seed * probs[r * k + j];
                  dz[r * k + label_copy[r]] -= seed;
                }
                accumulate(grads, tape, logits, dz);
              });
}

Gradients backward(const Tape& tape, double loss_gradient_seed) {
  if (tape.empty()) throw ShapeError("backward: empty tape");
  const Tape::NodeId root = tape.size() - 1;
  if (tape.value(root).rank() != 0) throw ShapeError("backward: tape does not end in a scalar");

  std::vector<Tensor> grads(tape.size());
  for (std::size_t i = 0; i < tape.size(); ++i) grads[i] = Tensor::zeros(tape.value(i).shape());
  grads[root][0] = loss_gradient_seed;
  for (std::size_t i = tape.size(); i-- > 0;) {
    const auto& node = tape.nodes_[i];
    if (node.backward) node.backward(tape, grads, i);
  }

  Gradients out;
  std::size_t total = 0;
  for (const auto id : tape.parameters()) total += tape.value(id).size();
  out.params.resize(static_cast<Eigen::Index>(total));
  std::size_t offset = 0;
  for (const auto id : tape.parameters()) {
    const Tensor& g = grads[id];
    std::copy(g.data(), g.data() + g.size(), out.params.data() + offset);
    offset += g.size();
  }
  if (tape.has_input()) out.input = grads[tape.input_node()];
  return out;
}

double cross_entropy(const Tensor& logits, std::size_t label) {
  const std::size_t k = logits.size();
  if (label >= k) throw ShapeError("cross_entropy: label out of range");
  const double* z = logits.data();
  const double top = *std::max_element(z, z + k);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - top);
  return top + std::log(sum) - z[label];
}

void MlpArchitecture::validate() const {
  if (sizes.size() < 2) throw ShapeError("an MLP needs at least input and output sizes");
  for (const auto s : sizes) {
    if (s == 0) throw ShapeError("layer sizes must be positive");
  }
}

std::vector<LayerShape> MlpArchitecture::layers() const {
  std::vector<LayerShape> out;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) out.push_back({sizes[i + 1], sizes[i]});
  return out;
}

std::size_t MlpArchitecture::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers()) n += l.parameter_count();
  return n;
}

MlpModel::MlpModel(MlpArchitecture arch, Vector params) : arch_(std::move(arch)), params_(std::move(params)) {
  arch_.validate();
  if (static_cast<std::size_t>(params_.size()) != arch_.parameter_count()) {
    throw ShapeError("parameter vector has " + std::to_string(params_.size()) + " entries, architecture needs " +
                     std::to_string(arch_.parameter_count()));
  }
}

MlpModel MlpModel::glorot(MlpArchitecture arch, Rng& rng) {
  arch.validate();
  Vector params = Vector::Zero(static_cast<Eigen::Index>(arch.parameter_count()));
  Eigen::Index offset = 0;
  for (const auto& layer : arch.layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (std::size_t i = 0; i < layer.out * layer.in; ++i) params[offset++] = rng.uniform(-limit, limit);
    offset += static_cast<Eigen::Index>(layer.out);
  }
  return MlpModel(std::move(arch), std::move(params));
}

MlpModel MlpModel::zeros(MlpArchitecture arch) {
  arch.validate();
  const auto n = static_cast<Eigen::Index>(arch.parameter_count());
  return MlpModel(std::move(arch), Vector::Zero(n));
}

void MlpModel::set_parameters(Vector params) {
  if (params.size() != params_.size()) throw ShapeError("set_parameters: wrong parameter count");
  params_ = std::move(params);
}

std::vector<Tensor> MlpModel::unflatten() const {
  std::vector<Tensor> out;
  const double* p = params_.data();
  for (const auto& layer : arch_.layers()) {
    out.emplace_back(std::vector<std::size_t>{layer.out, layer.in}, std::vector<double>(p, p + layer.out * layer.in));
    p += layer.out * layer.in;
    out.emplace_back(std::vector<std::size_t>{layer.out}, std::vector<double>(p, p + layer.out));
    p += layer.out;
  }
  return out;
}

Vector MlpModel::flatten(std::span<const Tensor> tensors) {
  std::size_t total = 0;
  for (const auto& t : tensors) total += t.size();
  Vector out(static_cast<Eigen::Index>(total));
  std::size_t offset = 0;
  for (const auto& t : tensors) {
    std::copy(t.data(), t.data() + t.size(), out.data() + offset);
    offset += t.size();
  }
  return out;
}

ForwardPass forward(const MlpArchitecture& arch, const Vector& params, const Tensor& input) {
  arch.validate();
  if (static_cast<std::size_t>(params.size()) != arch.parameter_count()) {
    throw ShapeError("forward: parameter vector does not match architecture");
  }
  if (input.rank() == 0 || input.rank() > 2 || input.cols() != arch.input_dim()) {
    throw ShapeError("forward: input width " + std::to_string(input.cols()) + " does not match first layer " +
                     std::to_string(arch.input_dim()));
  }
  ForwardPass pass;
  Tape& tape = pass.tape;
  Tape::NodeId h = tape.input(input);
  const double* p = params.data();
  const auto layers = arch.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto w = tape.parameter(Tensor({layer.out, layer.in}, std::vector<double>(p, p + layer.out * layer.in)));
    p += layer.out * layer.in;
    const auto b = tape.parameter(Tensor({layer.out}, std::vector<double>(p, p + layer.out)));
    p += layer.out;
    h = tape.affine(h, w, b);
    if (l + 1 < layers.size()) h = arch.activation == Activation::ReLU ? tape.relu(h) : tape.tanh(h);
  }
  pass.logits_node = h;
  pass.logits = tape.value(h);
  return pass;
}

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'S', 'D', 'S', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated checkpoint header");
  }
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MlpModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(FormatError::Kind::Unreadable, "cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  const auto layers = model.architecture().layers();
  put_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    put_u32(out, static_cast<std::uint32_t>(l.out));
    put_u32(out, static_cast<std::uint32_t>(l.in));
  }
  for (Eigen::Index i = 0; i < model.parameters().size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(model.parameters()[i]);
    std::array<char, 8> b{};
    for (int j = 0; j < 8; ++j) b[static_cast<std::size_t>(j)] = static_cast<char>((bits >> (8 * j)) & 0xff);
    out.write(b.data(), 8);
  }
  if (!out) throw FormatError(FormatError::Kind::Unreadable, "failed writing " + path.string());
}

MlpModel load_checkpoint(const std::filesystem::path& path, Activation activation) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Unreadable, "cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size())) {
    throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated checkpoint");
  }
  if (magic != kMagic) throw FormatError(FormatError::Kind::BadMagic, path.string() + ": not an SSDS checkpoint");
  const auto version = get_u32(in, path);
  if (version != kCheckpointVersion) {
    throw FormatError(FormatError::Kind::BadValue, path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get_u32(in, path);
  if (count == 0) throw FormatError(FormatError::Kind::BadValue, path.string() + ": checkpoint has no layers");
  MlpArchitecture arch;
  arch.activation = activation;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto out_dim = get_u32(in, path);
    const auto in_dim = get_u32(in, path);
    if (i == 0) arch.sizes.push_back(in_dim);
    if (arch.sizes.back() != in_dim) {
      throw FormatError(FormatError::Kind::BadValue, path.string() + ": inconsistent layer shapes");
    }
    arch.sizes.push_back(out_dim);
  }
  try {
    arch.validate();
  } catch (const ShapeError& e) {
    throw FormatError(FormatError::Kind::BadValue, path.string() + ": " + e.what());
  }
  Vector params(static_cast<Eigen::Index>(arch.parameter_count()));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    std::array<unsigned char, 8> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 8)) {
      throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated parameters");
    }
    std::uint64_t bits = 0;
    for (int j = 0; j < 8; ++j) bits |= std::uint64_t{b[static_cast<std::size_t>(j)]} << (8 * j);
    params[i] = std::bit_cast<double>(bits);
  }
  return MlpModel(std::move(arch), std::move(params));
}

}  // namespace ssds::autodiff
