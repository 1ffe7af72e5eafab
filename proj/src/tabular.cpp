#include "sdsra/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sdsra/errors.hpp"

namespace sdsra::tabular {

namespace {

constexpr double kSimplexTol = 1e-12;

void check_simplex(std::span<const double> p, const char* what) {
  double total = 0;
  for (double v : p) {
    if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > kSimplexTol) throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
}

double xlogx(double p) { return p > 0 ? p * std::log(p) : 0.0; }

std::vector<double> random_simplex(std::size_t n, Random& rng) {
  std::vector<double> p(n);
  double total = 0;
  for (auto& v : p) {
    v = -std::log(rng.uniform(1e-12, 1.0));  // exponential draws give a uniform point on the simplex
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace

TabularPolicy TabularPolicy::uniform(std::size_t states, std::size_t actions) {
  return TabularPolicy(states, actions, 1.0 / static_cast<double>(actions));
}

TabularPolicy TabularPolicy::random(std::size_t states, std::size_t actions, Random& rng) {
  TabularPolicy pi(states, actions);
  for (std::size_t s = 0; s < states; ++s) {
    const auto row = random_simplex(actions, rng);
    std::copy(row.begin(), row.end(), pi.row(s).begin());
  }
  return pi;
}

void TabularPolicy::validate() const {
  if (rows == 0 || cols == 0 || values.size() != rows * cols) throw ShapeError("TabularPolicy: bad shape");
  for (std::size_t s = 0; s < rows; ++s) check_simplex(row(s), "TabularPolicy");
}

void TabularMDP::validate() const {
  if (num_states == 0 || num_actions == 0) throw std::invalid_argument("TabularMDP: empty state or action set");
  if (transitions.size() != num_states * num_actions * num_states) throw ShapeError("TabularMDP: transition tensor shape");
  if (rewards.rows != num_states || rewards.cols != num_actions) throw ShapeError("TabularMDP: reward table shape");
  if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("TabularMDP: gamma must lie in [0, 1)");
  if (!(alpha > 0)) throw std::invalid_argument("TabularMDP: alpha must be positive");
  for (std::size_t i = 0; i < num_states * num_actions; ++i)
    check_simplex({transitions.data() + i * num_states, num_states}, "TabularMDP transition");
  for (double r : rewards.values)
    if (!std::isfinite(r)) throw std::invalid_argument("TabularMDP: non-finite reward");
}

TabularMDP TabularMDP::random(std::size_t states, std::size_t actions, double gamma, double alpha, Random& rng) {
  TabularMDP m;
  m.num_states = states;
  m.num_actions = actions;
  m.gamma = gamma;
  m.alpha = alpha;
  m.rewards = Table(states, actions);
  for (auto& r : m.rewards.values) r = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < states * actions; ++i) {
    const auto row = random_simplex(states, rng);
    m.transitions.insert(m.transitions.end(), row.begin(), row.end());
  }
  return m;
}

std::vector<double> soft_values(const TabularMDP& mdp, const TabularPolicy& policy, const QTable& q) {
  std::vector<double> v(mdp.num_states, 0.0);
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      const double p = policy(s, a);
      if (p > 0) v[s] += p * q(s, a) - mdp.alpha * xlogx(p);
    }
  return v;
}

QTable soft_backup(const TabularMDP& mdp, const TabularPolicy& policy, const QTable& q) {
  mdp.validate();
  policy.validate();
  if (policy.rows != mdp.num_states || policy.cols != mdp.num_actions || q.rows != mdp.num_states ||
      q.cols != mdp.num_actions)
    throw ShapeError("soft_backup: table shapes do not match the MDP");
  const auto v = soft_values(mdp, policy, q);
  QTable out(mdp.num_states, mdp.num_actions);
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      double expect = 0;
      for (std::size_t n = 0; n < mdp.num_states; ++n) expect += mdp.p(s, a, n) * v[n];
      out(s, a) = mdp.rewards(s, a) + mdp.gamma * expect;
    }
  return out;
}

double sup_distance(const Table& a, const Table& b) {
  if (a.values.size() != b.values.size()) throw ShapeError("sup_distance: shape mismatch");
  double d = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

double total_variation(const TabularPolicy& a, const TabularPolicy& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("total_variation: shape mismatch");
  double worst = 0;
  for (std::size_t s = 0; s < a.rows; ++s) {
    double tv = 0;
    for (std::size_t k = 0; k < a.cols; ++k) tv += std::abs(a(s, k) - b(s, k));
    worst = std::max(worst, 0.5 * tv);
  }
  return worst;
}

QTable soft_policy_evaluation(const TabularMDP& mdp, const TabularPolicy& policy, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("soft_policy_evaluation: tol must be positive");
  QTable q(mdp.num_states, mdp.num_actions);
  for (;;) {
    QTable next = soft_backup(mdp, policy, q);
    const double delta = sup_distance(next, q);
    q = std::move(next);
    if (delta < tol) return q;
  }
}

TabularPolicy soft_policy_improvement(const TabularMDP& mdp, const QTable& q) {
  if (!(mdp.alpha > 0)) throw std::invalid_argument("soft_policy_improvement: alpha must be positive");
  TabularPolicy pi(q.rows, q.cols);
  for (std::size_t s = 0; s < q.rows; ++s) {
    const auto row = q.row(s);
    const double top = *std::max_element(row.begin(), row.end());
    double total = 0;
    for (std::size_t a = 0; a < q.cols; ++a) {
      pi(s, a) = std::exp((row[a] - top) / mdp.alpha);
      total += pi(s, a);
    }
    for (std::size_t a = 0; a < q.cols; ++a) pi(s, a) /= total;
  }
  return pi;
}

PolicyIterationResult soft_policy_iteration(const TabularMDP& mdp, double tol, std::size_t max_iters,
                                            std::optional<TabularPolicy> initial) {
  PolicyIterationResult r;
  r.policy = initial ? std::move(*initial) : TabularPolicy::uniform(mdp.num_states, mdp.num_actions);
  r.policy.validate();
  for (r.iterations = 1; r.iterations <= max_iters; ++r.iterations) {
    r.q = soft_policy_evaluation(mdp, r.policy, tol);
    r.value_trace.push_back(soft_values(mdp, r.policy, r.q));
    auto improved = soft_policy_improvement(mdp, r.q);
    const double change = total_variation(improved, r.policy);
    if (change < tol) {
      r.converged = true;
      return r;
    }
    r.policy = std::move(improved);
  }
  r.iterations = max_iters;
  return r;
}

double entropy(std::span<const double> p) {
  double h = 0;
  for (double v : p) h -= xlogx(v);
  return h;
}

MixtureEntropy mixture_entropy_gap(std::span<const double> weights, std::span<const std::vector<double>> distributions) {
  if (weights.empty() || weights.size() != distributions.size())
    throw std::invalid_argument("mixture_entropy_gap: one weight per distribution required");
  check_simplex(weights, "mixture_entropy_gap weights");
  const auto k = distributions.front().size();
  std::vector<double> mix(k, 0.0);
  MixtureEntropy out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto& p = distributions[i];
    if (p.size() != k) throw ShapeError("mixture_entropy_gap: distributions differ in support size");
    check_simplex(p, "mixture_entropy_gap distribution");
    for (std::size_t j = 0; j < k; ++j) mix[j] += weights[i] * p[j];
    out.components.push_back(entropy(p));
    out.weighted_components += weights[i] * out.components.back();
  }
  out.mixture = entropy(mix);
  out.exceeds_max_component = out.mixture >= *std::max_element(out.components.begin(), out.components.end());
  return out;
}

}  // namespace sdsra::tabular
