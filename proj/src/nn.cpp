#include "sdsra/nn.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "sdsra/errors.hpp"

namespace sdsra {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t total_size(const std::vector<ParamDesc>& layout) {
  std::size_t n = 0;
  for (const auto& d : layout) n += d.size();
  return n;
}

}  // namespace

std::size_t ParamDesc::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

ParamVector::ParamVector(std::vector<ParamDesc> layout)
    : layout_(std::move(layout)), values_(total_size(layout_), 0.0) {}

ParamVector::ParamVector(std::vector<ParamDesc> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(values.begin(), values.end()) {
  if (values_.size() != total_size(layout_)) {
    throw ShapeError("ParamVector: " + std::to_string(values_.size()) +
                     " values for a layout of " + std::to_string(total_size(layout_)));
  }
  if (!all_finite()) throw NumericError("ParamVector: non-finite value");
}

ParamVector ParamVector::zeros_like() const { return ParamVector(layout_); }

bool ParamVector::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

void ParamVector::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ShapeError("Mlp needs at least an input and an output width");
  for (auto w : widths_)
    if (w == 0) throw ShapeError("Mlp layer widths must be positive");

  std::vector<ParamDesc> layout;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const auto in = widths_[l];
    const auto out = widths_[l + 1];
    layout.push_back({"layer" + std::to_string(l) + ".weight", {out, in}});
    weight_offset_.push_back(offset);
    offset += out * in;
    layout.push_back({"layer" + std::to_string(l) + ".bias", {out}});
    bias_offset_.push_back(offset);
    offset += out;
  }
  params_ = ParamVector(std::move(layout));
}

Mlp Mlp::random(std::vector<std::size_t> widths, Random& rng) {
  Mlp net(std::move(widths));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.widths_[l]));
    const auto out = net.widths_[l + 1];
    const auto n = out * net.widths_[l] + out;  // weights then bias are contiguous
    for (std::size_t i = 0; i < n; ++i)
      net.params_[net.weight_offset_[l] + i] = rng.uniform(-bound, bound);
  }
  return net;
}

namespace {

// Near zero: a convergent of Lambert's continued fraction, built with the
// three-term recurrence so only one division remains. Elsewhere
// 1 - 2 / (e^{2x} + 1), which saturates to +-1 without overflow trouble.
template <class In, class Out>
void tanh_block(const In& a, Out&& out) {
  using Block = Eigen::Array<double, In::RowsAtCompileTime, 1>;
  const Block x2 = a.square();
  Block num_prev = Block::Zero(a.size()), num = a;
  Block den_prev = Block::Ones(a.size()), den = den_prev;
  for (int k = 2; k <= 8; ++k) {
    const Block n = (2.0 * k - 1.0) * num + x2 * num_prev;
    const Block d = (2.0 * k - 1.0) * den + x2 * den_prev;
    num_prev = num, num = n;
    den_prev = den, den = d;
  }
  out = (x2 < 0.25).select(num / den, 1.0 - 2.0 / ((2.0 * a).exp() + 1.0));
}

}  // namespace

Matrix tanh_elementwise(const Matrix& x) {
  constexpr Eigen::Index kBlock = 64;
  using Fixed = Eigen::Array<double, kBlock, 1>;
  Matrix y(x.rows(), x.cols());
  const Eigen::Index n = x.size();
  Eigen::Index i = 0;
  for (; i + kBlock <= n; i += kBlock)
    tanh_block(Eigen::Map<const Fixed>(x.data() + i), Eigen::Map<Fixed>(y.data() + i));
  if (i < n) {
    using Dynamic = Eigen::Array<double, Eigen::Dynamic, 1, 0, kBlock, 1>;
    tanh_block(Dynamic(Eigen::Map<const Eigen::ArrayXd>(x.data() + i, n - i)),
               Eigen::Map<Eigen::ArrayXd>(y.data() + i, n - i));
  }
  return y;
}

Matrix Mlp::forward(const Matrix& inputs, MlpTrace* trace) const {
  if (static_cast<std::size_t>(inputs.rows()) != input_dim()) {
    throw ShapeError("Mlp::forward: input has " + std::to_string(inputs.rows()) +
                     " rows, expected " + std::to_string(input_dim()));
  }
  if (trace) {
    trace->activations.clear();
    trace->activations.reserve(num_layers() + 1);
    trace->activations.push_back(inputs);
  }
  Matrix x = inputs;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths_[l]);
    const auto out = static_cast<Eigen::Index>(widths_[l + 1]);
    Eigen::Map<const RowMajor> w(params_.data() + weight_offset_[l], out, in);
    Eigen::Map<const Vector> b(params_.data() + bias_offset_[l], out);
    Matrix z = w * x;
    z.colwise() += b;
    if (l + 1 < num_layers()) z = tanh_elementwise(z);
    if (!z.allFinite()) throw NumericError("Mlp::forward: non-finite activation in layer " + std::to_string(l));
    x = std::move(z);
    if (trace) trace->activations.push_back(x);
  }
  return x;
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  if (input.size() != input_dim()) {
    throw ShapeError("Mlp::forward: input length " + std::to_string(input.size()) + ", expected " +
                     std::to_string(input_dim()));
  }
  Matrix x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  Matrix y = forward(x);
  return {y.data(), y.data() + y.size()};
}

Matrix Mlp::backward(const MlpTrace& trace, const Matrix& output_grad,
                     std::span<double> param_grad) const {
  if (trace.activations.size() != num_layers() + 1)
    throw ShapeError("Mlp::backward: trace does not belong to this network");
  const auto batch = trace.activations.front().cols();
  if (static_cast<std::size_t>(output_grad.rows()) != output_dim() || output_grad.cols() != batch)
    throw ShapeError("Mlp::backward: output gradient shape mismatch");
  const bool want_params = !param_grad.empty();
  if (want_params && param_grad.size() != params_.size())
    throw ShapeError("Mlp::backward: parameter gradient buffer has wrong length");

  Matrix delta = output_grad;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(widths_[l]);
    const auto out = static_cast<Eigen::Index>(widths_[l + 1]);
    if (l + 1 < num_layers()) {
      const auto& a = trace.activations[l + 1];
      delta.array() *= 1.0 - a.array().square();
    }
    if (!delta.allFinite())
      throw NumericError("Mlp::backward: non-finite gradient in layer " + std::to_string(l));
    if (want_params) {
      Eigen::Map<RowMajor> dw(param_grad.data() + weight_offset_[l], out, in);
      Eigen::Map<Vector> db(param_grad.data() + bias_offset_[l], out);
      dw.noalias() += delta * trace.activations[l].transpose();
      db += delta.rowwise().sum();
    }
    Eigen::Map<const RowMajor> w(params_.data() + weight_offset_[l], out, in);
    Matrix next = w.transpose() * delta;
    delta = std::move(next);
  }
  return delta;
}

MlpGradient Mlp::backward(std::span<const double> input, std::span<const double> output_grad) const {
  if (input.size() != input_dim() || output_grad.size() != output_dim())
    throw ShapeError("Mlp::backward: input or output gradient length mismatch");
  MlpTrace trace;
  Matrix x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  forward(x, &trace);
  Matrix dy = Eigen::Map<const Vector>(output_grad.data(), static_cast<Eigen::Index>(output_grad.size()));
  MlpGradient g{params_.zeros_like(), {}};
  Matrix dx = backward(trace, dy, g.params.values());
  g.input.assign(dx.data(), dx.data() + dx.size());
  return g;
}

AdamState::AdamState(std::size_t n, AdamConfig cfg)
    : config(cfg), first_moment(n, 0.0), second_moment(n, 0.0) {
  if (!(cfg.lr > 0 && cfg.beta1 > 0 && cfg.beta1 < 1 && cfg.beta2 > 0 && cfg.beta2 < 1 && cfg.eps > 0))
    throw std::invalid_argument("AdamState: hyperparameters out of range");
}

void adam_step(AdamState& state, ParamVector& params, const ParamVector& grads) {
  const auto n = params.size();
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n)
    throw ShapeError("adam_step: parameter, gradient and moment lengths differ");
  const auto& c = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

void polyak_update(ParamVector& target, const ParamVector& online, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak_update: tau must lie in [0, 1]");
  if (target.size() != online.size()) throw ShapeError("polyak_update: parameter lengths differ");
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = tau * online[i] + (1.0 - tau) * target[i];
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ShapeError("relative_error: length mismatch");
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  if (scale < floor) return 0.0;
  return std::sqrt(diff) / scale;
}

}  // namespace sdsra
