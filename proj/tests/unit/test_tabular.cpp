#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "sdsra/random.hpp"
#include "sdsra/tabular.hpp"
#include "sdsra/tabular_verify.hpp"

using namespace sdsra;
using namespace sdsra::tabular;

namespace {

TabularMDP one_state(std::vector<double> r, double gamma, double alpha) {
  TabularMDP m;
  m.num_states = 1;
  m.num_actions = r.size();
  m.transitions.assign(r.size(), 1.0);
  m.rewards = Table(1, r.size());
  for (std::size_t a = 0; a < r.size(); ++a) m.rewards(0, a) = r[a];
  m.gamma = gamma;
  m.alpha = alpha;
  return m;
}

// Q = r + gamma P Pi (Q - alpha log pi), solved directly.
QTable linear_solve(const TabularMDP& m, const TabularPolicy& pi) {
  const auto S = m.num_states, A = m.num_actions, n = S * A;
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs(n);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const auto row = s * A + a;
      rhs(row) = m.rewards(s, a);
      for (std::size_t s2 = 0; s2 < S; ++s2)
        for (std::size_t a2 = 0; a2 < A; ++a2) {
          const double w = m.gamma * m.p(s, a, s2) * pi(s2, a2);
          lhs(row, s2 * A + a2) -= w;
          if (pi(s2, a2) > 0) rhs(row) -= w * m.alpha * std::log(pi(s2, a2));
        }
    }
  const Eigen::VectorXd q = lhs.partialPivLu().solve(rhs);
  QTable out(S, A);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = q(i);
  return out;
}

}  // namespace

TEST_CASE("soft backup with gamma 0 is the reward") {
  Random rng(1);
  auto m = TabularMDP::random(3, 2, 0.0, 0.7, rng);
  QTable q(3, 2, 5.0);
  CHECK(soft_backup(m, TabularPolicy::random(3, 2, rng), q).values == m.rewards.values);
}

TEST_CASE("one-state soft backup by hand") {
  const auto m = one_state({1.0, 0.0}, 0.5, 1.0);
  const auto t = soft_backup(m, TabularPolicy::uniform(1, 2), QTable(1, 2));
  CHECK(t(0, 0) == doctest::Approx(1.0 + 0.5 * std::log(2.0)).epsilon(1e-15));
  CHECK(t(0, 1) == doctest::Approx(0.34657359).epsilon(1e-8));
}

TEST_CASE("soft policy evaluation with gamma 0 returns the reward") {
  const auto m = one_state({1.0, -2.0}, 0.0, 1.0);
  CHECK(soft_policy_evaluation(m, TabularPolicy::uniform(1, 2)).values == m.rewards.values);
}

TEST_CASE("soft policy evaluation matches a direct linear solve") {
  const auto m = one_state({1.0, 0.0}, 0.5, 1.0);
  const auto pi = TabularPolicy::uniform(1, 2);
  const auto q = soft_policy_evaluation(m, pi);
  CHECK(sup_distance(q, linear_solve(m, pi)) < 1e-9);
  CHECK(q(0, 0) == doctest::Approx(1.0 + 0.5 * (1.0 + 2.0 * std::log(2.0))).epsilon(1e-9));

  Random rng(2);
  for (int k = 0; k < 20; ++k) {
    const auto mdp = TabularMDP::random(1 + rng.index(5), 2 + rng.index(4), rng.uniform(0.1, 0.9), rng.uniform(0.1, 2), rng);
    const auto policy = TabularPolicy::random(mdp.num_states, mdp.num_actions, rng);
    CHECK(sup_distance(soft_policy_evaluation(mdp, policy), linear_solve(mdp, policy)) < 1e-8);
  }
}

TEST_CASE("soft policy evaluation agrees with Monte-Carlo soft returns") {
  Random rng(3);
  const auto m = TabularMDP::random(3, 2, 0.8, 0.5, rng);
  const auto pi = TabularPolicy::random(3, 2, rng);
  const auto q = soft_policy_evaluation(m, pi);

  auto draw = [&](std::span<const double> p) {
    double u = rng.uniform(0, 1);
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      if (u < p[i]) return i;
      u -= p[i];
    }
    return p.size() - 1;
  };
  const std::size_t horizon = 100;  // 0.8^100 ~ 2e-10
  const std::size_t episodes = 10'000;
  for (std::size_t s0 = 0; s0 < 3; ++s0) {
    double sum = 0, sum2 = 0;
    for (std::size_t e = 0; e < episodes; ++e) {
      std::size_t s = s0, a = 0;
      double ret = m.rewards(s, a), disc = 1;
      for (std::size_t t = 1; t < horizon; ++t) {
        s = draw(std::span<const double>(m.transitions.data() + (s * 2 + a) * 3, 3));
        a = draw(pi.row(s));
        disc *= m.gamma;
        ret += disc * (m.rewards(s, a) - m.alpha * std::log(pi(s, a)));
      }
      sum += ret;
      sum2 += ret * ret;
    }
    const double mean = sum / episodes;
    const double se = std::sqrt((sum2 / episodes - mean * mean) / episodes);
    CHECK(std::abs(mean - q(s0, 0)) < 3 * se);
  }
}

TEST_CASE("soft policy improvement is a Boltzmann distribution") {
  const auto m = one_state({0.0, 0.0}, 0.5, 1.0);
  QTable q(1, 2);
  q(0, 0) = q(0, 1) = 3.0;
  auto pi = soft_policy_improvement(m, q);
  CHECK(pi(0, 0) == doctest::Approx(0.5));
  q(0, 0) = 1.0;
  q(0, 1) = 0.0;
  pi = soft_policy_improvement(m, q);
  CHECK(pi(0, 0) == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(pi(0, 1) == doctest::Approx(0.268941).epsilon(1e-6));
  const auto hot = one_state({0.0, 0.0, 0.0}, 0.5, 1e3);
  QTable spread(1, 3);
  spread.values = {1.0, -0.5, 0.3};
  const auto flat = soft_policy_improvement(hot, spread);
  for (double p : flat.values) CHECK(std::abs(p - 1.0 / 3.0) < 1e-3);
}

TEST_CASE("bandit closed form") {
  const auto m = one_state({1.0, 0.0}, 0.0, 1.0);
  const auto r = soft_policy_iteration(m);
  CHECK(r.converged);
  CHECK(std::abs(soft_values(m, r.policy, r.q)[0] - std::log(1 + std::exp(1.0))) < 1e-9);
  CHECK(std::abs(r.policy(0, 0) - 0.731058578630005) < 1e-9);

  const auto again = soft_policy_iteration(m, 1e-10, 1000, r.policy);
  CHECK(again.iterations == 1);
  CHECK(sup_distance(again.q, r.q) < 1e-12);
}

TEST_CASE("soft policy iteration with gamma 0 stops after one improvement") {
  Random rng(4);
  const auto m = TabularMDP::random(4, 3, 0.0, 0.5, rng);
  const auto r = soft_policy_iteration(m);
  CHECK(r.converged);
  CHECK(r.q.values == m.rewards.values);
}

TEST_CASE("mixture entropy") {
  const std::vector<double> w{0.5, 0.5};
  const std::vector<std::vector<double>> same{{0.2, 0.8}, {0.2, 0.8}};
  auto m = mixture_entropy_gap(w, same);
  CHECK(m.mixture == doctest::Approx(m.components[0]).epsilon(1e-15));

  const std::vector<std::vector<double>> disjoint{{1.0, 0.0}, {0.0, 1.0}};
  m = mixture_entropy_gap(w, disjoint);
  CHECK(m.mixture == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(m.weighted_components == 0.0);

  const std::vector<double> skew{0.01, 0.99};
  const std::vector<std::vector<double>> counter{{0.5, 0.5}, {1.0, 0.0}};
  m = mixture_entropy_gap(skew, counter);
  // mixture (0.995, 0.005)
  CHECK(m.mixture == doctest::Approx(-(0.995 * std::log(0.995) + 0.005 * std::log(0.005))).epsilon(1e-12));
  CHECK(m.mixture == doctest::Approx(0.031479).epsilon(1e-4));
  CHECK(m.mixture < m.components[0]);
  CHECK_FALSE(m.exceeds_max_component);
  CHECK(m.mixture >= m.weighted_components);
}

TEST_CASE("verification suite passes and logs the counterexample") {
  const auto report = run_tabular_verify(1, 100, 10'000);
  std::ostringstream os;
  report.print(os);
  CHECK_MESSAGE(report.passed(), os.str());
  CHECK(report.rows.size() == 9);
  CHECK_FALSE(report.observations.empty());
}
