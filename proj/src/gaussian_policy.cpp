#include "sdsra/gaussian_policy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sdsra/errors.hpp"

namespace sdsra {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Matrix column(std::span<const double> v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_vector(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

GaussianPolicy::GaussianPolicy(Mlp trunk, bool squash) : trunk_(std::move(trunk)), squash_(squash) {
  if (trunk_.output_dim() % 2 != 0)
    throw ShapeError("GaussianPolicy: trunk output must hold a mean and a log-std per action dimension");
}

GaussianPolicy GaussianPolicy::create(std::size_t state_dim, std::size_t action_dim,
                                      std::span<const std::size_t> hidden, bool squash, Random& rng) {
  std::vector<std::size_t> widths{state_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(2 * action_dim);
  return GaussianPolicy(Mlp::random(std::move(widths), rng), squash);
}

PolicyHeads GaussianPolicy::heads(const Matrix& states) const {
  PolicyHeads h;
  Matrix out = trunk_.forward(states, &h.trace);
  const auto da = static_cast<Eigen::Index>(action_dim());
  h.mean = out.topRows(da);
  const auto raw = out.bottomRows(da).array();
  h.live = ((raw >= kLogStdMin) && (raw <= kLogStdMax)).cast<double>();
  h.log_std = raw.max(kLogStdMin).min(kLogStdMax).matrix();
  return h;
}

SampleBatch GaussianPolicy::sample(const PolicyHeads& h, const Matrix& noise) const {
  if (noise.rows() != h.mean.rows() || noise.cols() != h.mean.cols())
    throw ShapeError("GaussianPolicy::sample: noise shape does not match the batch");
  SampleBatch s;
  s.noise = noise;
  s.pre_squash = h.mean.array() + h.log_std.array().exp() * noise.array();
  s.log_prob = (-0.5 * noise.array().square() - h.log_std.array() - kHalfLog2Pi).colwise().sum().transpose();
  if (squash_) {
    s.actions = s.pre_squash.array().tanh();
    s.log_prob -= s.pre_squash.unaryExpr([](double u) { return log_one_minus_tanh_sq(u); })
                      .colwise()
                      .sum()
                      .transpose();
  } else {
    s.actions = s.pre_squash;
  }
  if (!s.log_prob.allFinite()) throw NumericError("GaussianPolicy::sample: non-finite log-probability");
  return s;
}

Matrix GaussianPolicy::pre_squash_of(const Matrix& actions) const {
  if (!squash_) return actions;
  if ((actions.array().abs() >= 1.0).any())
    throw std::domain_error("GaussianPolicy::log_prob: squashed action on or outside (-1, 1)");
  return actions.array().atanh();
}

Vector GaussianPolicy::log_prob(const PolicyHeads& h, const Matrix& actions) const {
  if (actions.rows() != h.mean.rows() || actions.cols() != h.mean.cols())
    throw ShapeError("GaussianPolicy::log_prob: action shape does not match the batch");
  const Matrix u = pre_squash_of(actions);
  const auto z = (u - h.mean).array() / h.log_std.array().exp();
  Vector lp = (-0.5 * z.square() - h.log_std.array() - kHalfLog2Pi).colwise().sum().transpose();
  if (squash_) lp -= u.unaryExpr([](double x) { return log_one_minus_tanh_sq(x); }).colwise().sum().transpose();
  return lp;
}

Vector GaussianPolicy::entropy(const PolicyHeads& h) const {
  return ((0.5 + kHalfLog2Pi) + h.log_std.array()).colwise().sum().transpose();
}

Matrix GaussianPolicy::mean_action(const PolicyHeads& h) const {
  if (squash_) return h.mean.array().tanh();
  return h.mean;
}

HeadGrads GaussianPolicy::reparam_grads(const PolicyHeads& h, const SampleBatch& draw,
                                        const Vector& d_log_prob, const Matrix& d_action) const {
  // dL/du = dL/da * da/du + dL/dlogp * dlogp/du, where the squash correction
  // -log(1 - tanh(u)^2) has derivative 2 tanh(u).
  const auto a = draw.actions.array();
  const auto g_lp = d_log_prob.transpose().replicate(h.mean.rows(), 1).array();
  Eigen::ArrayXXd d_u = d_action.array();
  if (squash_) d_u = d_u * (1.0 - a.square()) + g_lp * 2.0 * a;
  HeadGrads g;
  g.mean = d_u.matrix();
  g.log_std = (d_u * h.log_std.array().exp() * draw.noise.array() - g_lp).matrix();
  return g;
}

HeadGrads GaussianPolicy::log_prob_grads(const PolicyHeads& h, const Matrix& actions,
                                         const Vector& d_log_prob) const {
  const Matrix u = pre_squash_of(actions);
  const auto sigma = h.log_std.array().exp();
  const Eigen::ArrayXXd z = (u - h.mean).array() / sigma;
  const auto g_lp = d_log_prob.transpose().replicate(h.mean.rows(), 1).array();
  HeadGrads g;
  g.mean = (g_lp * z / sigma).matrix();
  g.log_std = (g_lp * (z.square() - 1.0)).matrix();
  return g;
}

void GaussianPolicy::backward(const PolicyHeads& h, const HeadGrads& grads, std::span<double> param_grad) const {
  const auto da = h.mean.rows();
  Matrix d_out(2 * da, h.mean.cols());
  d_out.topRows(da) = grads.mean;
  d_out.bottomRows(da) = (grads.log_std.array() * h.live).matrix();
  trunk_.backward(h.trace, d_out, param_grad);
}

ActionSample GaussianPolicy::sample_with_noise(std::span<const double> state, std::span<const double> noise) const {
  if (noise.size() != action_dim()) throw ShapeError("GaussianPolicy::sample: noise length mismatch");
  const auto h = heads(column(state));
  const auto s = sample(h, column(noise));
  return {to_vector(s.actions), to_vector(s.pre_squash), s.log_prob(0), to_vector(s.noise)};
}

ActionSample GaussianPolicy::sample(std::span<const double> state, Random& rng) const {
  std::vector<double> noise(action_dim());
  for (auto& e : noise) e = rng.gaussian();
  return sample_with_noise(state, noise);
}

double GaussianPolicy::log_prob(std::span<const double> state, std::span<const double> action) const {
  if (action.size() != action_dim()) throw ShapeError("GaussianPolicy::log_prob: action length mismatch");
  return log_prob(heads(column(state)), column(action))(0);
}

double GaussianPolicy::entropy(std::span<const double> state) const { return entropy(heads(column(state)))(0); }

double GaussianPolicy::entropy_estimate(std::span<const double> state, Random& rng, std::size_t samples) const {
  if (samples == 0) throw std::invalid_argument("entropy_estimate: need at least one sample");
  const auto h = heads(column(state));
  const auto n = static_cast<Eigen::Index>(samples);
  Matrix noise(h.mean.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = rng.gaussian();
  PolicyHeads wide{h.mean.replicate(1, n), h.log_std.replicate(1, n), h.live.replicate(1, n), {}};
  return -sample(wide, noise).log_prob.mean();
}

std::vector<double> GaussianPolicy::mean_action(std::span<const double> state) const {
  return to_vector(mean_action(heads(column(state))));
}

}  // namespace sdsra
