#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdsra/random.hpp"

namespace sdsra {

/// Batched activations: one column per sample, one row per feature.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ParamDesc {
  std::string name;
  std::vector<std::size_t> shape;

  std::size_t size() const;
  bool operator==(const ParamDesc&) const = default;
};

/// Flat parameter storage with a named layout. Gradients share the layout of
/// the parameters they belong to.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::vector<ParamDesc> layout);
  ParamVector(std::vector<ParamDesc> layout, std::vector<double> values);

  const std::vector<ParamDesc>& layout() const { return layout_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool same_layout(const ParamVector& other) const { return layout_ == other.layout_; }
  ParamVector zeros_like() const;
  bool all_finite() const;
  void fill(double value);

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<ParamDesc> layout_;
  // Aligned to the widest SIMD packet.
  std::vector<double, Eigen::aligned_allocator<double>> values_;
};

/// Per-layer post-activation values kept by a batched forward pass.
struct MlpTrace {
  std::vector<Matrix> activations;  // activations[0] is the input
};

struct MlpGradient {
  ParamVector params;
  std::vector<double> input;
};

/// tanh to within a few ulp, vectorised.
Matrix tanh_elementwise(const Matrix& x);

/// Dense network with tanh hidden layers and an identity output layer.
/// Layer l stores `layer<l>.weight` (out x in, row-major) then `layer<l>.bias`.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialised network.
  explicit Mlp(std::vector<std::size_t> widths);
  /// Weights and biases uniform in +-1/sqrt(fan_in).
  static Mlp random(std::vector<std::size_t> widths, Random& rng);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }
  std::size_t num_layers() const { return widths_.size() - 1; }

  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

  std::vector<double> forward(std::span<const double> input) const;
  Matrix forward(const Matrix& inputs, MlpTrace* trace = nullptr) const;

  MlpGradient backward(std::span<const double> input, std::span<const double> output_grad) const;

  /// Back-propagates `output_grad` through a traced forward pass. Parameter
  /// gradients are accumulated into `param_grad` unless it is empty. Returns
  /// the gradient with respect to the inputs.
  Matrix backward(const MlpTrace& trace, const Matrix& output_grad,
                  std::span<double> param_grad) const;

 private:
  std::vector<std::size_t> widths_;
  ParamVector params_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t n, AdamConfig config);

  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step_count = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, ParamVector& params, const ParamVector& grads);

/// target <- tau * online + (1 - tau) * target
void polyak_update(ParamVector& target, const ParamVector& online, double tau);

/// Relative error ||a - b|| / max(||a||, ||b||); zero when both are below `floor`.
double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

}  // namespace sdsra
