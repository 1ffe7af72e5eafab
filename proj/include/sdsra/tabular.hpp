#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sdsra/random.hpp"

namespace sdsra::tabular {

/// Row-stochastic table indexed (row, column).
struct Table {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Table() = default;
  Table(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
};

/// Soft Q-values, indexed (state, action).
using QTable = Table;

/// pi(a|s), indexed (state, action).
struct TabularPolicy : Table {
  using Table::Table;
  static TabularPolicy uniform(std::size_t states, std::size_t actions);
  static TabularPolicy random(std::size_t states, std::size_t actions, Random& rng);
  void validate() const;
};

struct TabularMDP {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> transitions;  // P(s'|s,a) at [(s * A + a) * S + s']
  Table rewards;                    // r(s, a)
  double gamma = 0.9;
  double alpha = 1.0;

  double p(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions[(s * num_actions + a) * num_states + next];
  }
  void validate() const;

  static TabularMDP random(std::size_t states, std::size_t actions, double gamma, double alpha, Random& rng);
};

/// (T^pi Q)(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) sum_a' pi(a'|s') (Q(s',a') - alpha log pi(a'|s')),
/// with 0 log 0 = 0.
QTable soft_backup(const TabularMDP& mdp, const TabularPolicy& policy, const QTable& q);

/// V(s) = sum_a pi(a|s) (Q(s,a) - alpha log pi(a|s)).
std::vector<double> soft_values(const TabularMDP& mdp, const TabularPolicy& policy, const QTable& q);

/// Iterates soft_backup from Q = 0 until successive iterates differ by < tol in sup norm.
QTable soft_policy_evaluation(const TabularMDP& mdp, const TabularPolicy& policy, double tol = 1e-10);

/// Boltzmann policy pi'(a|s) proportional to exp(Q(s,a) / alpha).
TabularPolicy soft_policy_improvement(const TabularMDP& mdp, const QTable& q);

struct PolicyIterationResult {
  TabularPolicy policy;
  QTable q;
  /// Soft values of each evaluated policy, in iteration order.
  std::vector<std::vector<double>> value_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

PolicyIterationResult soft_policy_iteration(const TabularMDP& mdp, double tol = 1e-10, std::size_t max_iters = 1000,
                                            std::optional<TabularPolicy> initial = std::nullopt);

double sup_distance(const Table& a, const Table& b);
/// Largest per-state total-variation distance between two policies.
double total_variation(const TabularPolicy& a, const TabularPolicy& b);

/// Shannon entropy in nats with 0 log 0 = 0.
double entropy(std::span<const double> p);

struct MixtureEntropy {
  double mixture = 0.0;             // H(sum_i w_i p_i)
  double weighted_components = 0.0; // sum_i w_i H(p_i)
  std::vector<double> components;   // H(p_i)
  bool exceeds_max_component = false;
};

MixtureEntropy mixture_entropy_gap(std::span<const double> weights, std::span<const std::vector<double>> distributions);

}  // namespace sdsra::tabular
