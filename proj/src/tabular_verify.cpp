#include "sdsra/tabular_verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "sdsra/random.hpp"
#include "sdsra/tabular.hpp"

namespace sdsra::tabular {

bool VerifyReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed; });
}

void VerifyReport::print(std::ostream& out) const {
  char line[256];
  std::snprintf(line, sizeof line, "%-34s %-6s %s\n", "check", "result", "detail");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-34s %-6s %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str());
    out << line;
  }
  for (const auto& o : observations) out << "observation: " << o << "\n";
  std::snprintf(line, sizeof line, "%.2f s\n", seconds);
  out << line;
}

namespace {

std::string fmt(const char* format, double a, double b = 0, double c = 0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

QTable random_q(std::size_t s, std::size_t a, Random& rng) {
  QTable q(s, a);
  for (auto& v : q.values) v = rng.uniform(-10.0, 10.0);
  return q;
}

std::vector<double> random_distribution(std::size_t n, Random& rng, bool sparse) {
  std::vector<double> p(n, 0.0);
  if (sparse) {
    p[rng.index(n)] = 1.0;
    return p;
  }
  double total = 0;
  for (auto& v : p) {
    v = -std::log(rng.uniform(1e-12, 1.0));
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace

VerifyReport run_tabular_verify(std::uint64_t seed, std::size_t cases, std::size_t mixture_instances,
                                const VerifyTolerances& tol) {
  const auto start = std::chrono::steady_clock::now();
  VerifyReport report;
  Random rng(seed, 201);

  double worst_contraction = -1e300;  // max of ratio - gamma
  double worst_monotone = 0;          // largest per-state decrease of soft value
  double worst_residual = 0;
  double worst_invariance = 0;
  double worst_dominance = 0;         // largest Q^pi - Q* excess
  std::size_t unconverged = 0;
  std::size_t max_rounds = 0;

  for (std::size_t k = 0; k < cases; ++k) {
    const auto ns = 1 + rng.index(6);
    const auto na = 2 + rng.index(5);
    const double gamma = rng.uniform(0.5, 0.95);
    const double alpha = rng.uniform(0.1, 2.0);
    const auto mdp = TabularMDP::random(ns, na, gamma, alpha, rng);

    const auto pi = TabularPolicy::random(ns, na, rng);
    const auto q1 = random_q(ns, na, rng), q2 = random_q(ns, na, rng);
    const double ratio = sup_distance(soft_backup(mdp, pi, q1), soft_backup(mdp, pi, q2)) / sup_distance(q1, q2);
    worst_contraction = std::max(worst_contraction, ratio - gamma);

    const auto result = soft_policy_iteration(mdp, tol.evaluation_tol, 1000, TabularPolicy::random(ns, na, rng));
    if (!result.converged) ++unconverged;
    max_rounds = std::max(max_rounds, result.iterations);
    for (std::size_t i = 1; i < result.value_trace.size(); ++i)
      for (std::size_t s = 0; s < ns; ++s)
        worst_monotone = std::max(worst_monotone, result.value_trace[i - 1][s] - result.value_trace[i][s]);

    worst_residual = std::max(worst_residual, sup_distance(soft_backup(mdp, result.policy, result.q), result.q));
    worst_invariance = std::max(worst_invariance, total_variation(soft_policy_improvement(mdp, result.q), result.policy));

    for (int r = 0; r < 50; ++r) {
      const auto q_pi = soft_policy_evaluation(mdp, TabularPolicy::random(ns, na, rng), tol.evaluation_tol);
      for (std::size_t i = 0; i < q_pi.values.size(); ++i)
        worst_dominance = std::max(worst_dominance, q_pi.values[i] - result.q.values[i]);
    }
  }

  const auto n = static_cast<double>(cases);
  report.rows.push_back({"contraction", worst_contraction <= tol.contraction_slack,
                         fmt("max(ratio - gamma) = %.3e over %.0f MDPs", worst_contraction, n)});
  report.rows.push_back({"monotone_improvement", worst_monotone <= tol.monotone_slack,
                         fmt("largest soft-value decrease %.3e", worst_monotone)});
  report.rows.push_back({"policy_iteration_converged", unconverged == 0,
                         fmt("%.0f unconverged, at most %.0f rounds", static_cast<double>(unconverged),
                             static_cast<double>(max_rounds))});
  report.rows.push_back({"fixed_point_residual", worst_residual < tol.residual,
                         fmt("max ||T Q* - Q*|| = %.3e", worst_residual)});
  report.rows.push_back({"improvement_invariance", worst_invariance < tol.residual,
                         fmt("max TV(improve(Q*), pi*) = %.3e", worst_invariance)});
  report.rows.push_back({"dominance_50_random_policies", worst_dominance <= tol.dominance_slack,
                         fmt("max(Q^pi - Q*) = %.3e", worst_dominance)});

  {
    TabularMDP bandit;
    bandit.num_states = 1;
    bandit.num_actions = 2;
    bandit.transitions = {1.0, 1.0};
    bandit.rewards = Table(1, 2);
    bandit.rewards(0, 0) = 1.0;
    bandit.gamma = 0.0;
    bandit.alpha = 1.0;
    const auto r = soft_policy_iteration(bandit, tol.evaluation_tol);
    const double v = soft_values(bandit, r.policy, r.q)[0];
    const double v_star = std::log(1.0 + std::exp(1.0));
    const double p0 = std::exp(1.0) / (1.0 + std::exp(1.0));
    const double err = std::max({std::abs(v - v_star), std::abs(r.policy(0, 0) - p0), std::abs(r.policy(0, 1) - (1 - p0))});
    report.rows.push_back({"bandit_anchor", err < tol.anchor,
                           fmt("V* = %.9f, pi = (%.6f, %.6f)", v, r.policy(0, 0), r.policy(0, 1))});
  }

  {
    Random mix_rng(seed, 202);
    double worst_gap = 0;  // largest violation sum w H - H(mix)
    std::size_t counterexamples = 0;
    for (std::size_t k = 0; k < mixture_instances; ++k) {
      const auto components = 2 + mix_rng.index(5);
      const auto support = 2 + mix_rng.index(5);
      const auto w = random_distribution(components, mix_rng, false);
      std::vector<std::vector<double>> dists;
      for (std::size_t i = 0; i < components; ++i)
        dists.push_back(random_distribution(support, mix_rng, mix_rng.uniform(0, 1) < 0.3));
      const auto m = mixture_entropy_gap(w, dists);
      worst_gap = std::max(worst_gap, m.weighted_components - m.mixture);
      if (!m.exceeds_max_component) ++counterexamples;
    }
    report.rows.push_back({"mixture_jensen_bound", worst_gap <= tol.jensen_slack,
                           fmt("%.0f instances, max(sum w H_i - H_mix) = %.3e",
                               static_cast<double>(mixture_instances), worst_gap)});

    const std::vector<double> w{0.01, 0.99};
    const std::vector<std::vector<double>> d{{0.5, 0.5}, {1.0, 0.0}};
    const auto m = mixture_entropy_gap(w, d);
    report.observations.push_back(
        fmt("H(mix) >= max_i H_i fails on %.0f of the random instances", static_cast<double>(counterexamples)));
    report.observations.push_back(fmt("counterexample w=(0.01,0.99), p1=(0.5,0.5), p2=(1,0): H_mix = %.6f < H_1 = %.6f",
                                      m.mixture, m.components[0]));
    report.rows.push_back({"mixture_max_claim_counterexample", !m.exceeds_max_component && counterexamples > 0,
                           "H(mix) >= max_i H_i refuted by a logged instance"});
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace sdsra::tabular
