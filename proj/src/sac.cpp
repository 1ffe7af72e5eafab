#include "sdsra/sac.hpp"

#include <stdexcept>

#include "sdsra/errors.hpp"

namespace sdsra {

CriticPair CriticPair::create(std::size_t state_dim, std::size_t action_dim, std::span<const std::size_t> hidden,
                              double gamma, double alpha, double tau, Random& rng) {
  std::vector<std::size_t> widths{state_dim + action_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  CriticPair c;
  c.q1 = Mlp::random(widths, rng);
  c.q2 = Mlp::random(widths, rng);
  c.target_q1 = c.q1;
  c.target_q2 = c.q2;
  c.gamma = gamma;
  c.alpha = alpha;
  c.tau = tau;
  c.validate();
  return c;
}

void CriticPair::validate() const {
  if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("CriticPair: gamma must lie in [0, 1)");
  if (!(alpha > 0)) throw std::invalid_argument("CriticPair: alpha must be positive");
  if (!(tau > 0 && tau <= 1)) throw std::invalid_argument("CriticPair: tau must lie in (0, 1]");
}

Matrix critic_input(const Matrix& states, const Matrix& actions) {
  if (states.cols() != actions.cols()) throw ShapeError("critic_input: state and action batch sizes differ");
  Matrix x(states.rows() + actions.rows(), states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

Vector min_target_q(const CriticPair& c, const Matrix& states, const Matrix& actions) {
  const Matrix x = critic_input(states, actions);
  return c.target_q1.forward(x).row(0).transpose().cwiseMin(c.target_q2.forward(x).row(0).transpose());
}

Vector min_q(const CriticPair& c, const Matrix& states, const Matrix& actions) {
  const Matrix x = critic_input(states, actions);
  return c.q1.forward(x).row(0).transpose().cwiseMin(c.q2.forward(x).row(0).transpose());
}

Vector td_target(const CriticPair& c, const TransitionBatch& batch, const NextActionSamples& next) {
  const auto b = batch.size();
  if (b == 0) throw std::invalid_argument("td_target: empty batch");
  if (batch.rewards.size() != b || batch.dones.size() != b || next.actions.cols() != b || next.log_prob.size() != b)
    throw ShapeError("td_target: batch fields differ in length");
  const Vector soft_next = min_target_q(c, batch.next_states, next.actions) - c.alpha * next.log_prob;
  Vector y = batch.rewards.array() + c.gamma * (1.0 - batch.dones.array()) * soft_next.array();
  if (!y.allFinite()) throw NumericError("td_target: non-finite target");
  return y;
}

CriticLoss critic_loss(const CriticPair& c, const TransitionBatch& batch, const Vector& targets) {
  const auto b = batch.size();
  if (b == 0) throw std::invalid_argument("critic_loss: empty batch");
  if (targets.size() != b) throw ShapeError("critic_loss: one target per transition required");
  const Matrix x = critic_input(batch.states, batch.actions);
  CriticLoss out;
  auto one = [&](const Mlp& q, double& loss, ParamVector& grad) {
    MlpTrace trace;
    const Matrix pred = q.forward(x, &trace);
    const Matrix err = pred - targets.transpose();
    loss = err.squaredNorm() / static_cast<double>(b);
    grad = q.params().zeros_like();
    q.backward(trace, (2.0 / static_cast<double>(b)) * err, grad.values());
  };
  one(c.q1, out.loss1, out.grad1);
  one(c.q2, out.loss2, out.grad2);
  return out;
}

PolicyLoss policy_loss_reparam(const CriticPair& c, const GaussianPolicy& policy, const Matrix& states,
                               const Matrix& noise) {
  const auto b = states.cols();
  if (b == 0) throw std::invalid_argument("policy_loss_reparam: empty batch");
  const auto heads = policy.heads(states);
  const auto draw = policy.sample(heads, noise);
  const Matrix x = critic_input(states, draw.actions);

  MlpTrace t1, t2;
  const Matrix v1 = c.q1.forward(x, &t1);
  const Matrix v2 = c.q2.forward(x, &t2);
  const double inv_b = 1.0 / static_cast<double>(b);

  // d(-min Q)/dQ routes -1/B to whichever critic is smaller per sample.
  Matrix g1 = Matrix::Zero(1, b), g2 = Matrix::Zero(1, b);
  double q_sum = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    if (v1(0, i) <= v2(0, i)) {
      g1(0, i) = -inv_b;
      q_sum += v1(0, i);
    } else {
      g2(0, i) = -inv_b;
      q_sum += v2(0, i);
    }
  }
  const Matrix dx = c.q1.backward(t1, g1, {}) + c.q2.backward(t2, g2, {});
  const Matrix d_action = dx.bottomRows(static_cast<Eigen::Index>(policy.action_dim()));
  const Vector d_log_prob = Vector::Constant(b, c.alpha * inv_b);

  PolicyLoss out;
  out.loss = c.alpha * draw.log_prob.mean() - q_sum * inv_b;
  out.grad = policy.params().zeros_like();
  policy.backward(heads, policy.reparam_grads(heads, draw, d_log_prob, d_action), out.grad.values());
  return out;
}

PolicyLoss policy_loss_score_function(const CriticPair& c, const GaussianPolicy& policy, const Matrix& states,
                                      const Matrix& actions) {
  const auto b = states.cols();
  if (b == 0) throw std::invalid_argument("policy_loss_score_function: empty batch");
  const Vector q = c.q1.forward(critic_input(states, actions)).row(0).transpose();
  const auto heads = policy.heads(states);
  const Vector lp = policy.log_prob(heads, actions);
  const double inv_b = 1.0 / static_cast<double>(b);

  PolicyLoss out;
  out.loss = -(lp.array() * q.array()).sum() * inv_b;
  out.grad = policy.params().zeros_like();
  const Vector d_log_prob = -q * inv_b;
  policy.backward(heads, policy.log_prob_grads(heads, actions, d_log_prob), out.grad.values());
  return out;
}

void soft_update(CriticPair& c) {
  polyak_update(c.target_q1.params(), c.q1.params(), c.tau);
  polyak_update(c.target_q2.params(), c.q2.params(), c.tau);
}

}  // namespace sdsra
