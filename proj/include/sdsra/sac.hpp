#pragma once

#include <span>

#include "sdsra/gaussian_policy.hpp"
#include "sdsra/nn.hpp"

namespace sdsra {

/// Twin soft Q-networks over (state, action) and their Polyak-tracked targets.
struct CriticPair {
  Mlp q1, q2;
  Mlp target_q1, target_q2;
  double gamma = 0.99;
  double alpha = 0.2;
  double tau = 0.005;

  /// Online critics drawn from `rng`; targets start as exact copies.
  static CriticPair create(std::size_t state_dim, std::size_t action_dim, std::span<const std::size_t> hidden,
                           double gamma, double alpha, double tau, Random& rng);
  void validate() const;
};

/// Column-major replay batch, one transition per column.
struct TransitionBatch {
  Matrix states;
  Matrix actions;
  Vector rewards;
  Matrix next_states;
  Vector dones;  // 1.0 for terminal transitions

  Eigen::Index size() const { return states.cols(); }
};

struct NextActionSamples {
  Matrix actions;
  Vector log_prob;
};

/// Stacks states over actions: the critic input layout.
Matrix critic_input(const Matrix& states, const Matrix& actions);

/// Elementwise min of the two target critics.
Vector min_target_q(const CriticPair& critics, const Matrix& states, const Matrix& actions);
/// Elementwise min of the two online critics.
Vector min_q(const CriticPair& critics, const Matrix& states, const Matrix& actions);

/// y = r + gamma (1 - done) (min_j Q'_j(s', a') - alpha log pi(a'|s'))
Vector td_target(const CriticPair& critics, const TransitionBatch& batch, const NextActionSamples& next);

struct CriticLoss {
  double loss1 = 0.0;
  double loss2 = 0.0;
  ParamVector grad1;
  ParamVector grad2;
};

/// Mean squared error of each online critic against fixed targets.
CriticLoss critic_loss(const CriticPair& critics, const TransitionBatch& batch, const Vector& targets);

struct PolicyLoss {
  double loss = 0.0;
  ParamVector grad;
};

/// E_s[alpha log pi(a~|s) - min_j Q_j(s, a~)] with a~ reparameterised by `noise`.
PolicyLoss policy_loss_reparam(const CriticPair& critics, const GaussianPolicy& policy, const Matrix& states,
                               const Matrix& noise);

/// Score-function surrogate -E[log pi(a|s) Q_1(s, a)] over replayed actions,
/// whose gradient is minus the plain likelihood-ratio estimator.
PolicyLoss policy_loss_score_function(const CriticPair& critics, const GaussianPolicy& policy,
                                      const Matrix& states, const Matrix& actions);

void soft_update(CriticPair& critics);

}  // namespace sdsra
