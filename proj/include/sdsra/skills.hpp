#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sdsra/gaussian_policy.hpp"
#include "sdsra/random.hpp"

namespace sdsra {

struct Skill {
  GaussianPolicy policy;
  double relevance = 0.0;
  std::size_t id = 0;
};

/// Stable softmax of logits / temperature.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

/// Categorical draw from a probability vector.
std::size_t sample_categorical(std::span<const double> probs, Random& rng);

/// N skills with global relevance scores, selected through a softmax.
class SkillSet {
 public:
  SkillSet(std::vector<Skill> skills, double beta, double temperature);

  std::size_t size() const { return skills_.size(); }
  Skill& operator[](std::size_t i) { return skills_[i]; }
  const Skill& operator[](std::size_t i) const { return skills_[i]; }
  std::vector<Skill>& skills() { return skills_; }
  const std::vector<Skill>& skills() const { return skills_; }

  double beta() const { return beta_; }
  double temperature() const { return temperature_; }

  std::vector<double> relevance() const;
  void set_relevance(std::span<const double> scores);

  std::vector<double> selection_probs() const;
  std::size_t select_skill(Random& rng) const;

  /// r_i <- (1 - eta) r_i + eta z_i, z = population z-score of the reported
  /// performances. Skills without a performance value keep their score and
  /// are left out of the z-scoring.
  void update_relevance(std::span<const std::optional<double>> performance, double eta);

  /// Index of the highest relevance, lowest index on ties.
  std::size_t best_skill() const;

 private:
  std::vector<Skill> skills_;
  double beta_;
  double temperature_;
};

/// Population z-score; a constant (or single-element) vector maps to zeros.
std::vector<double> z_score(std::span<const double> values);

struct SkillBatch {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> target_actions;
  std::vector<std::vector<double>> predicted_actions;
};

/// Mean over the batch of squared Euclidean distance between predicted and target actions.
double prediction_error(const SkillBatch& batch);

struct SkillLoss {
  double loss = 0.0;
  double prediction_error = 0.0;
  double entropy = 0.0;     // batch-mean closed-form entropy
  Matrix predicted_actions;
  ParamVector grad;
};

/// loss = mean_m ||mean_action(s_m) - a_m||^2 + beta * mean_m H(pi(.|s_m)).
SkillLoss skill_loss(const GaussianPolicy& skill, const Matrix& states, const Matrix& target_actions, double beta);

}  // namespace sdsra
