#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "logcoral/linalg.hpp"
#include "logcoral/statistics.hpp"

namespace logcoral {

enum class Activation { kRelu, kTanh };

Activation parse_activation(std::string_view name);
std::string to_string(Activation activation);

/// Affine map x -> W x + b; weight is out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;
};

/// Fully connected classifier. Hidden layers apply the activation, the last
/// layer emits logits. Each layer output is addressable as a feature tap:
/// "h1", "h2", ... for hidden layers and "logits" for the last one.
class MlpModel {
 public:
  /// He-normal weights and zero biases drawn from `seed`. `dims` lists the
  /// input width, the hidden widths and the class count.
  MlpModel(std::vector<int> dims, Activation activation, std::uint64_t seed);

  /// Wraps explicit parameters; throws InvalidInput on inconsistent shapes.
  MlpModel(std::vector<DenseLayer> layers, Activation activation);

  const std::vector<int>& dims() const noexcept { return dims_; }
  Activation activation() const noexcept { return activation_; }
  int input_dim() const noexcept { return dims_.front(); }
  int num_classes() const noexcept { return dims_.back(); }
  std::size_t num_layers() const noexcept { return layers_.size(); }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  std::vector<std::string> tap_names() const;
  /// Layer index of a tap. Throws InvalidInput for unknown names.
  std::size_t tap_index(std::string_view name) const;
  /// Output width of a tap.
  int tap_width(std::string_view name) const;

  /// Throws NumericalFailure naming the first layer with a NaN/Inf parameter.
  void check_finite() const;

 private:
  void validate() const;

  std::vector<int> dims_;
  std::vector<DenseLayer> layers_;
  Activation activation_;
};

/// Cached activations of one forward pass. outputs[l] is the tap of layer l
/// (post-activation for hidden layers, logits for the last).
struct ForwardPass {
  std::vector<Matrix> pre_activations;
  std::vector<Matrix> outputs;

  const Matrix& logits() const { return outputs.back(); }
};

/// Per-parameter gradients, shaped like the model.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  static Gradients zeros_like(const MlpModel& model);
  Gradients& operator+=(const Gradients& other);
};

/// Throws InvalidInput if the input width does not match the model.
ForwardPass forward(const MlpModel& model, const Matrix& inputs);
ForwardPass forward(const MlpModel& model, const FeatureBatch& batch);

/// Backpropagates gradients injected at the layer outputs. `output_grads`
/// holds one entry per layer; empty (0 x 0) entries contribute nothing.
Gradients backward(const MlpModel& model, const Matrix& inputs, const ForwardPass& pass,
                   const std::vector<Matrix>& output_grads);

/// Fraction of rows whose arg-max logit equals the label. Throws InvalidInput
/// for unlabeled batches or a width mismatch.
double evaluate(const MlpModel& model, const FeatureBatch& data);

}  // namespace logcoral
