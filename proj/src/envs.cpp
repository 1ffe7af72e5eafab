#include "sdsra/envs.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sdsra/errors.hpp"
#include "sdsra/random.hpp"

namespace sdsra {

namespace {
constexpr std::uint64_t kResetStream = 0x5eed;
}

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double x = std::fmod(theta + std::numbers::pi, two_pi);
  if (x < 0) x += two_pi;
  return x - std::numbers::pi;
}

void EnvSpec::validate() const {
  if (state_dim == 0 || action_dim == 0) throw std::invalid_argument("EnvSpec: dimensions must be positive");
  if (action_low.size() != action_dim || action_high.size() != action_dim)
    throw ShapeError("EnvSpec: one bound per action dimension");
  for (std::size_t i = 0; i < action_dim; ++i)
    if (!(action_low[i] < action_high[i])) throw std::invalid_argument("EnvSpec: action low must be below high");
}

std::vector<double> Env::clamp_action(std::span<const double> action) {
  const auto& s = spec();
  if (action.size() != s.action_dim) throw ShapeError("Env::step: action dimension mismatch");
  std::vector<double> out(action.begin(), action.end());
  bool clamped = false;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) throw NumericError("Env::step: non-finite action");
    const double c = std::clamp(out[i], s.action_low[i], s.action_high[i]);
    clamped |= c != out[i];
    out[i] = c;
  }
  if (clamped && !warned_) {
    std::cerr << "warning: action outside bounds was clamped\n";
    warned_ = true;
  }
  return out;
}

Pendulum::Pendulum() {
  spec_ = {3, 1, {-kMaxTorque}, {kMaxTorque}, 200};
}

std::vector<double> Pendulum::reset(std::uint64_t seed) {
  Random rng(seed, kResetStream);
  theta_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
  theta_dot_ = rng.uniform(-1.0, 1.0);
  steps_ = 0;
  return observation();
}

void Pendulum::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  steps_ = 0;
}

std::vector<double> Pendulum::observation() const { return {std::cos(theta_), std::sin(theta_), theta_dot_}; }

double Pendulum::energy() const {
  return 0.5 * theta_dot_ * theta_dot_ + 3.0 * kGravity / (2.0 * kLength) * std::cos(theta_);
}

StepResult Pendulum::step(std::span<const double> action) {
  const double u = clamp_action(action)[0];
  const double angle = wrap_angle(theta_);
  const double cost = angle * angle + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

  theta_dot_ += kDt * (3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) + 3.0 * u / (kMass * kLength * kLength));
  theta_dot_ = std::clamp(theta_dot_, -kMaxSpeed, kMaxSpeed);
  theta_ += kDt * theta_dot_;
  ++steps_;

  const bool limit = steps_ >= spec_.max_steps;
  return {observation(), -cost, limit, limit};
}

PointMass2D::PointMass2D() {
  spec_ = {6, 2, {-1.0, -1.0}, {1.0, 1.0}, 200};
}

std::vector<double> PointMass2D::reset(std::uint64_t seed) {
  Random rng(seed, kResetStream);
  position_ = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  velocity_ = {0.0, 0.0};
  const double angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
  goal_ = {kGoalRadius * std::cos(angle), kGoalRadius * std::sin(angle)};
  steps_ = 0;
  return observation();
}

void PointMass2D::set_state(std::span<const double> position, std::span<const double> velocity,
                            std::span<const double> goal) {
  if (position.size() != 2 || velocity.size() != 2 || goal.size() != 2)
    throw ShapeError("PointMass2D::set_state: expected 2-D vectors");
  position_.assign(position.begin(), position.end());
  velocity_.assign(velocity.begin(), velocity.end());
  goal_.assign(goal.begin(), goal.end());
  steps_ = 0;
}

std::vector<double> PointMass2D::observation() const {
  return {position_[0], position_[1], velocity_[0], velocity_[1], goal_[0] - position_[0], goal_[1] - position_[1]};
}

StepResult PointMass2D::step(std::span<const double> action) {
  const auto a = clamp_action(action);
  double dist2 = 0;
  for (int i = 0; i < 2; ++i) {
    velocity_[i] += kDt * a[i];
    position_[i] += kDt * velocity_[i];
    if (std::abs(position_[i]) > kBound) {
      position_[i] = std::clamp(position_[i], -kBound, kBound);
      velocity_[i] = 0.0;
    }
    dist2 += (position_[i] - goal_[i]) * (position_[i] - goal_[i]);
  }
  ++steps_;
  const double reward = -dist2 - 0.01 * (a[0] * a[0] + a[1] * a[1]);
  const bool limit = steps_ >= spec_.max_steps;
  return {observation(), reward, limit, limit};
}

std::unique_ptr<Env> make_env(std::string_view name) {
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "pointmass") return std::make_unique<PointMass2D>();
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

}  // namespace sdsra
