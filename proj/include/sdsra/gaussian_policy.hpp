#pragma once

#include <span>
#include <vector>

#include "sdsra/nn.hpp"
#include "sdsra/random.hpp"

namespace sdsra {

struct ActionSample {
  std::vector<double> action;
  std::vector<double> pre_squash;
  double log_prob = 0.0;
  std::vector<double> noise;
};

/// Trunk outputs for a batch of states, kept for back-propagation.
struct PolicyHeads {
  Matrix mean;            // action_dim x B
  Matrix log_std;         // clamped to [kLogStdMin, kLogStdMax]
  Eigen::ArrayXXd live;   // 1 where log_std was inside the clamp, 0 where it was cut
  MlpTrace trace;
};

/// Reparameterised draws for a batch: u = mean + std * noise, action = tanh(u) when squashed.
struct SampleBatch {
  Matrix noise;
  Matrix pre_squash;
  Matrix actions;
  Vector log_prob;
};

/// Upstream gradient with respect to the mean and log-std heads.
struct HeadGrads {
  Matrix mean;
  Matrix log_std;
};

/// Diagonal Gaussian policy whose trunk maps a state to [mean, log_std].
class GaussianPolicy {
 public:
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;

  GaussianPolicy() = default;
  GaussianPolicy(Mlp trunk, bool squash);

  /// state_dim -> hidden... -> 2 * action_dim, uniform fan-in init.
  static GaussianPolicy create(std::size_t state_dim, std::size_t action_dim,
                               std::span<const std::size_t> hidden, bool squash, Random& rng);

  std::size_t state_dim() const { return trunk_.input_dim(); }
  std::size_t action_dim() const { return trunk_.output_dim() / 2; }
  bool squashed() const { return squash_; }

  Mlp& trunk() { return trunk_; }
  const Mlp& trunk() const { return trunk_; }
  ParamVector& params() { return trunk_.params(); }
  const ParamVector& params() const { return trunk_.params(); }

  ActionSample sample(std::span<const double> state, Random& rng) const;
  ActionSample sample_with_noise(std::span<const double> state, std::span<const double> noise) const;
  double log_prob(std::span<const double> state, std::span<const double> action) const;
  /// Closed-form diagonal Gaussian entropy (pre-squash when squashing is on).
  double entropy(std::span<const double> state) const;
  /// Monte-Carlo estimate -E[log_prob] of the distribution actually sampled.
  double entropy_estimate(std::span<const double> state, Random& rng, std::size_t samples) const;
  std::vector<double> mean_action(std::span<const double> state) const;

  // Batched building blocks used by the losses.
  PolicyHeads heads(const Matrix& states) const;
  SampleBatch sample(const PolicyHeads& heads, const Matrix& noise) const;
  Vector log_prob(const PolicyHeads& heads, const Matrix& actions) const;
  Vector entropy(const PolicyHeads& heads) const;
  Matrix mean_action(const PolicyHeads& heads) const;

  /// Head gradients of L given dL/dlog_prob (per sample) and dL/daction for a
  /// reparameterised draw; noise is held fixed.
  HeadGrads reparam_grads(const PolicyHeads& heads, const SampleBatch& draw, const Vector& d_log_prob,
                          const Matrix& d_action) const;
  /// Head gradients of L given dL/dlog_prob for log-densities of fixed actions.
  HeadGrads log_prob_grads(const PolicyHeads& heads, const Matrix& actions, const Vector& d_log_prob) const;

  /// Accumulates parameter gradients for the given head gradients.
  void backward(const PolicyHeads& heads, const HeadGrads& grads, std::span<double> param_grad) const;

 private:
  Matrix pre_squash_of(const Matrix& actions) const;

  Mlp trunk_;
  bool squash_ = true;
};

/// log(1 - tanh(u)^2) without cancellation for large |u|.
double log_one_minus_tanh_sq(double u);

}  // namespace sdsra
