#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace sdsra {

struct EnvSpec {
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> action_low;
  std::vector<double> action_high;
  std::size_t max_steps = 0;

  void validate() const;
};

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;
  /// The episode ended on the step limit rather than in a terminal state.
  bool truncated = false;
};

class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  /// Out-of-bound actions are clamped (warned once per env); non-finite ones throw.
  virtual StepResult step(std::span<const double> action) = 0;
  virtual std::vector<double> observation() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

 protected:
  std::vector<double> clamp_action(std::span<const double> action);

 private:
  bool warned_ = false;
};

/// Torque-driven pendulum, theta = 0 upright. Observation (cos, sin, theta_dot).
class Pendulum final : public Env {
 public:
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;

  Pendulum();

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> observation() const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<Pendulum>(*this); }

  void set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }
  /// 0.5 theta_dot^2 + (3g / 2l) cos(theta): conserved by the unforced continuous dynamics.
  double energy() const;

 private:
  EnvSpec spec_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
  std::size_t steps_ = 0;
};

/// Planar double integrator chasing a per-episode goal.
/// Observation (position, velocity, goal - position).
class PointMass2D final : public Env {
 public:
  static constexpr double kDt = 0.05;
  static constexpr double kBound = 5.0;
  static constexpr double kGoalRadius = 2.0;

  PointMass2D();

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> observation() const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointMass2D>(*this); }

  void set_state(std::span<const double> position, std::span<const double> velocity, std::span<const double> goal);
  std::span<const double> position() const { return position_; }
  std::span<const double> goal() const { return goal_; }

 private:
  EnvSpec spec_;
  std::vector<double> position_{0.0, 0.0};
  std::vector<double> velocity_{0.0, 0.0};
  std::vector<double> goal_{0.0, 0.0};
  std::size_t steps_ = 0;
};

/// `pendulum` or `pointmass`.
std::unique_ptr<Env> make_env(std::string_view name);

/// Angle wrapped into [-pi, pi).
double wrap_angle(double theta);

}  // namespace sdsra
