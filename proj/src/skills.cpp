#include "sdsra/skills.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sdsra/errors.hpp"

namespace sdsra {

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  if (!(temperature > 0)) throw std::invalid_argument("softmax: temperature must be positive");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - top) / temperature);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

std::size_t sample_categorical(std::span<const double> probs, Random& rng) {
  const double u = rng.uniform(0.0, 1.0);
  double acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // u landed in the rounding slack above the cumulative sum.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0) return i;
  return 0;
}

SkillSet::SkillSet(std::vector<Skill> skills, double beta, double temperature)
    : skills_(std::move(skills)), beta_(beta), temperature_(temperature) {
  if (skills_.empty()) throw std::invalid_argument("SkillSet: need at least one skill");
  if (!(temperature_ > 0)) throw std::invalid_argument("SkillSet: softmax temperature must be positive");
  for (std::size_t i = 0; i < skills_.size(); ++i) {
    skills_[i].id = i;
    if (!std::isfinite(skills_[i].relevance)) throw NumericError("SkillSet: non-finite relevance");
  }
}

std::vector<double> SkillSet::relevance() const {
  std::vector<double> r;
  r.reserve(skills_.size());
  for (const auto& s : skills_) r.push_back(s.relevance);
  return r;
}

void SkillSet::set_relevance(std::span<const double> scores) {
  if (scores.size() != skills_.size()) throw ShapeError("SkillSet::set_relevance: length mismatch");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericError("SkillSet::set_relevance: non-finite score");
    skills_[i].relevance = scores[i];
  }
}

std::vector<double> SkillSet::selection_probs() const { return softmax(relevance(), temperature_); }

std::size_t SkillSet::select_skill(Random& rng) const {
  return sample_categorical(selection_probs(), rng);
}

std::size_t SkillSet::best_skill() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < skills_.size(); ++i)
    if (skills_[i].relevance > skills_[best].relevance) best = i;
  return best;
}

std::vector<double> z_score(std::span<const double> values) {
  std::vector<double> z(values.size(), 0.0);
  if (values.size() < 2) return z;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 0)) return z;
  for (std::size_t i = 0; i < values.size(); ++i) z[i] = (values[i] - mean) / sd;
  return z;
}

void SkillSet::update_relevance(std::span<const std::optional<double>> performance, double eta) {
  if (performance.size() != skills_.size()) throw ShapeError("update_relevance: one performance entry per skill");
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("update_relevance: eta must lie in (0, 1]");
  std::vector<double> present;
  std::vector<std::size_t> which;
  for (std::size_t i = 0; i < performance.size(); ++i) {
    if (!performance[i]) continue;
    if (!std::isfinite(*performance[i])) throw NumericError("update_relevance: non-finite performance");
    present.push_back(*performance[i]);
    which.push_back(i);
  }
  const auto z = z_score(present);
  for (std::size_t k = 0; k < which.size(); ++k) {
    auto& r = skills_[which[k]].relevance;
    r = (1.0 - eta) * r + eta * z[k];
  }
}

double prediction_error(const SkillBatch& batch) {
  const auto m = batch.predicted_actions.size();
  if (m == 0) throw std::invalid_argument("prediction_error: empty batch");
  if (batch.target_actions.size() != m || (!batch.states.empty() && batch.states.size() != m))
    throw ShapeError("prediction_error: batch lists differ in length");
  double total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& p = batch.predicted_actions[i];
    const auto& a = batch.target_actions[i];
    if (p.size() != a.size()) throw ShapeError("prediction_error: action dimension mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) total += (p[j] - a[j]) * (p[j] - a[j]);
  }
  return total / static_cast<double>(m);
}

SkillLoss skill_loss(const GaussianPolicy& skill, const Matrix& states, const Matrix& target_actions, double beta) {
  const auto m = states.cols();
  if (m == 0) throw std::invalid_argument("skill_loss: empty batch");
  if (target_actions.cols() != m || static_cast<std::size_t>(target_actions.rows()) != skill.action_dim())
    throw ShapeError("skill_loss: target actions do not match the batch");

  const auto heads = skill.heads(states);
  SkillLoss out;
  out.predicted_actions = skill.mean_action(heads);
  const Matrix diff = out.predicted_actions - target_actions;
  const double inv_m = 1.0 / static_cast<double>(m);
  out.prediction_error = diff.squaredNorm() * inv_m;
  out.entropy = skill.entropy(heads).mean();
  out.loss = out.prediction_error + beta * out.entropy;

  HeadGrads g;
  g.mean = 2.0 * inv_m * diff;
  if (skill.squashed()) g.mean.array() *= 1.0 - out.predicted_actions.array().square();
  g.log_std = Matrix::Constant(heads.log_std.rows(), m, beta * inv_m);
  out.grad = skill.params().zeros_like();
  skill.backward(heads, g, out.grad.values());
  return out;
}

}  // namespace sdsra
