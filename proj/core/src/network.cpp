#include "logcoral/network.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <utility>

namespace logcoral {

namespace {

Matrix activate(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::kRelu: return z.cwiseMax(0.0);
    case Activation::kTanh: return z.array().tanh().matrix();
  }
  return z;
}

// Elementwise derivative of the activation, expressed via pre- and
// post-activation values.
Matrix activation_slope(const Matrix& pre, const Matrix& post, Activation act) {
  switch (act) {
    case Activation::kRelu: return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::kTanh: return (1.0 - post.array().square()).matrix();
  }
  return Matrix::Ones(pre.rows(), pre.cols());
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw InvalidInput("unknown activation '" + std::string(name) + "' (expected relu or tanh)");
}

std::string to_string(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "tanh";
}

MlpModel::MlpModel(std::vector<int> dims, Activation activation, std::uint64_t seed)
    : dims_(std::move(dims)), activation_(activation) {
  if (dims_.size() < 2) throw InvalidInput("MlpModel: need at least input and output widths");
  for (int w : dims_) {
    if (w < 1) throw InvalidInput("MlpModel: layer widths must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const int in = dims_[l];
    const int out = dims_[l + 1];
    const double stddev = std::sqrt(2.0 / in);
    DenseLayer layer{Matrix(out, in), Vector::Zero(out)};
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < in; ++j) layer.weight(i, j) = stddev * normal(rng);
    }
    layers_.push_back(std::move(layer));
  }
}

MlpModel::MlpModel(std::vector<DenseLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.empty()) throw InvalidInput("MlpModel: need at least one layer");
  dims_.push_back(static_cast<int>(layers_.front().weight.cols()));
  for (const DenseLayer& layer : layers_) dims_.push_back(static_cast<int>(layer.weight.rows()));
  validate();
}

void MlpModel::validate() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.weight.cols() != dims_[l] || layer.weight.rows() != dims_[l + 1] ||
        layer.bias.size() != dims_[l + 1] || layer.weight.size() == 0) {
      std::ostringstream os;
      os << "MlpModel: layer " << l << " has shape " << layer.weight.rows() << "x"
         << layer.weight.cols() << " with bias " << layer.bias.size()
         << ", inconsistent with its neighbours";
      throw InvalidInput(os.str());
    }
  }
}

std::vector<std::string> MlpModel::tap_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) names.push_back("h" + std::to_string(l + 1));
  names.emplace_back("logits");
  return names;
}

std::size_t MlpModel::tap_index(std::string_view name) const {
  const auto names = tap_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  std::ostringstream os;
  os << "unknown feature tap '" << name << "'; available:";
  for (const auto& n : names) os << ' ' << n;
  throw InvalidInput(os.str());
}

int MlpModel::tap_width(std::string_view name) const { return dims_[tap_index(name) + 1]; }

void MlpModel::check_finite() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (!layers_[l].weight.allFinite() || !layers_[l].bias.allFinite()) {
      throw NumericalFailure("non-finite parameter in layer " + std::to_string(l));
    }
  }
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  for (const DenseLayer& layer : model.layers()) {
    g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.weight.size() != weight.size()) throw InvalidInput("Gradients: layer count mismatch");
  for (std::size_t l = 0; l < weight.size(); ++l) {
    weight[l] += other.weight[l];
    bias[l] += other.bias[l];
  }
  return *this;
}

ForwardPass forward(const MlpModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim()) {
    std::ostringstream os;
    os << "forward: input width " << inputs.cols() << " but model expects "
       << model.input_dim();
    throw InvalidInput(os.str());
  }
  ForwardPass pass;
  const Matrix* current = &inputs;
  const std::size_t last = model.num_layers() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    const DenseLayer& layer = model.layers()[l];
    Matrix z = (*current) * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    pass.outputs.push_back(l == last ? z : activate(z, model.activation()));
    pass.pre_activations.push_back(std::move(z));
    current = &pass.outputs.back();
  }
  return pass;
}

ForwardPass forward(const MlpModel& model, const FeatureBatch& batch) {
  return forward(model, batch.data());
}

Gradients backward(const MlpModel& model, const Matrix& inputs, const ForwardPass& pass,
                   const std::vector<Matrix>& output_grads) {
  const std::size_t layers = model.num_layers();
  if (output_grads.size() != layers || pass.outputs.size() != layers) {
    throw InvalidInput("backward: expected one output gradient slot per layer");
  }
  Gradients grads = Gradients::zeros_like(model);
  const Eigen::Index n = inputs.rows();

  Matrix upstream;  // dL/d(output of layer l), n x width
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& injected = output_grads[l];
    if (injected.size() > 0) {
      if (injected.rows() != n || injected.cols() != pass.outputs[l].cols()) {
        throw InvalidInput("backward: output gradient shape mismatch at layer " +
                           std::to_string(l));
      }
      if (upstream.size() == 0) {
        upstream = injected;
      } else {
        upstream += injected;
      }
    }
    if (upstream.size() == 0) continue;

    Matrix delta = (l + 1 == layers)
                       ? upstream
                       : Matrix(upstream.cwiseProduct(activation_slope(
                             pass.pre_activations[l], pass.outputs[l], model.activation())));
    const Matrix& below = l == 0 ? inputs : pass.outputs[l - 1];
    grads.weight[l] = delta.transpose() * below;
    grads.bias[l] = delta.colwise().sum().transpose();
    if (l > 0) upstream = delta * model.layers()[l].weight;
  }
  return grads;
}

double evaluate(const MlpModel& model, const FeatureBatch& data) {
  const std::vector<int>& labels = data.labels();
  const ForwardPass pass = forward(model, data);
  const Matrix& logits = pass.logits();
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

}  // namespace logcoral
