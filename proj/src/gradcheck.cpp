#include "sdsra/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include "sdsra/gaussian_policy.hpp"
#include "sdsra/nn.hpp"
#include "sdsra/random.hpp"
#include "sdsra/sac.hpp"
#include "sdsra/skills.hpp"

namespace sdsra {

std::vector<double> finite_difference(const std::function<double()>& loss, std::span<double> params, double step) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = loss();
    params[i] = saved - step;
    const double down = loss();
    params[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

bool GradcheckReport::passed() const {
  return std::all_of(categories.begin(), categories.end(), [](const auto& c) { return c.failures == 0; });
}

void GradcheckReport::print(std::ostream& out) const {
  char line[160];
  std::snprintf(line, sizeof line, "%-26s %6s %8s %12s  %s\n", "category", "cases", "failed", "worst_rel", "result");
  out << line;
  for (const auto& c : categories) {
    std::snprintf(line, sizeof line, "%-26s %6zu %8zu %12.3e  %s\n", c.name.c_str(), c.cases, c.failures,
                  c.worst_error, c.failures == 0 ? "PASS" : "FAIL");
    out << line;
  }
  std::snprintf(line, sizeof line, "step %.0e, tolerance %.0e, %.2f s\n", step, tolerance, seconds);
  out << line;
}

namespace {

Matrix random_matrix(Random& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = scale * rng.uniform(-1.0, 1.0);
  return m;
}

Matrix gaussian_matrix(Random& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.gaussian();
  return m;
}

std::vector<double> random_vector(Random& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.uniform(-1.0, 1.0);
  return v;
}

std::size_t pick(Random& rng, std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); }

std::vector<std::size_t> random_hidden(Random& rng) {
  std::vector<std::size_t> h{pick(rng, 2, 8)};
  if (rng.uniform(0, 1) < 0.5) h.push_back(pick(rng, 2, 8));
  return h;
}

class Checker {
 public:
  Checker(GradcheckReport& report, double step, double tol) : report_(report), step_(step), tol_(tol) {}

  template <class Case>
  void run(const std::string& name, std::size_t cases, Random& rng, Case make_case) {
    GradcheckCategory cat{name, cases, 0, 0.0};
    for (std::size_t k = 0; k < cases; ++k) {
      const double err = make_case(rng, k);
      cat.worst_error = std::max(cat.worst_error, err);
      if (!(err < tol_)) ++cat.failures;
    }
    report_.categories.push_back(cat);
  }

  double compare(std::span<const double> analytic, const std::function<double()>& loss, std::span<double> params) const {
    const auto numeric = finite_difference(loss, params, step_);
    return relative_error(analytic, numeric);
  }

 private:
  GradcheckReport& report_;
  double step_;
  double tol_;
};

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t cases, double step, double tolerance) {
  const auto start = std::chrono::steady_clock::now();
  GradcheckReport report;
  report.step = step;
  report.tolerance = tolerance;
  Checker check(report, step, tolerance);

  // Shapes the agent instantiates by default (pendulum and pointmass nets).
  const std::vector<std::vector<std::size_t>> repo_shapes{
      {3, 64, 64, 2}, {4, 64, 64, 1}, {6, 64, 64, 4}, {8, 64, 64, 1}};

  Random mlp_rng(seed, 101);
  check.run("mlp_loss", cases, mlp_rng, [&](Random& rng, std::size_t k) {
    std::vector<std::size_t> widths;
    if (k % 25 == 0) {
      widths = repo_shapes[(k / 25) % repo_shapes.size()];
    } else {
      widths = {pick(rng, 1, 5)};
      for (auto h : random_hidden(rng)) widths.push_back(h);
      widths.push_back(pick(rng, 1, 4));
    }
    Mlp net = Mlp::random(widths, rng);
    const auto x = random_vector(rng, net.input_dim(), 2.0);
    const auto w = random_vector(rng, net.output_dim());
    const auto g = net.backward(x, w);
    auto loss = [&] {
      const auto y = net.forward(x);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
      return s;
    };
    return check.compare(g.params.values(), loss, net.params().values());
  });

  auto log_prob_case = [&](bool squash) {
    return [&check, squash](Random& rng, std::size_t) {
      const auto ds = pick(rng, 1, 4), da = pick(rng, 1, 3);
      const auto hidden = random_hidden(rng);
      auto policy = GaussianPolicy::create(ds, da, hidden, squash, rng);
      const Matrix s = random_matrix(rng, static_cast<Eigen::Index>(ds), 1, 2.0);
      const Matrix a = random_matrix(rng, static_cast<Eigen::Index>(da), 1, squash ? 0.95 : 2.0);
      const auto heads = policy.heads(s);
      auto grad = policy.params().zeros_like();
      policy.backward(heads, policy.log_prob_grads(heads, a, Vector::Ones(1)), grad.values());
      auto loss = [&] { return policy.log_prob(policy.heads(s), a)(0); };
      return check.compare(grad.values(), loss, policy.params().values());
    };
  };
  Random lp_rng(seed, 102), lps_rng(seed, 103);
  check.run("log_prob", cases, lp_rng, log_prob_case(false));
  check.run("log_prob_squashed", cases, lps_rng, log_prob_case(true));

  Random rs_rng(seed, 104);
  check.run("reparam_sample", cases, rs_rng, [&](Random& rng, std::size_t k) {
    const bool squash = k % 2 == 0;
    const auto ds = pick(rng, 1, 4), da = pick(rng, 1, 3);
    auto policy = GaussianPolicy::create(ds, da, random_hidden(rng), squash, rng);
    const auto b = static_cast<Eigen::Index>(pick(rng, 1, 4));
    const Matrix s = random_matrix(rng, static_cast<Eigen::Index>(ds), b, 2.0);
    const Matrix noise = gaussian_matrix(rng, static_cast<Eigen::Index>(da), b);
    const Matrix w = random_matrix(rng, static_cast<Eigen::Index>(da), b);
    // L = sum_b log_prob_b + <w, actions>
    const auto heads = policy.heads(s);
    const auto draw = policy.sample(heads, noise);
    auto grad = policy.params().zeros_like();
    policy.backward(heads, policy.reparam_grads(heads, draw, Vector::Ones(b), w), grad.values());
    auto loss = [&] {
      const auto d = policy.sample(policy.heads(s), noise);
      return d.log_prob.sum() + (w.array() * d.actions.array()).sum();
    };
    return check.compare(grad.values(), loss, policy.params().values());
  });

  Random sk_rng(seed, 105);
  check.run("skill_loss", cases, sk_rng, [&](Random& rng, std::size_t) {
    const auto ds = pick(rng, 1, 4), da = pick(rng, 1, 3);
    auto skill = GaussianPolicy::create(ds, da, random_hidden(rng), rng.uniform(0, 1) < 0.7, rng);
    const auto m = static_cast<Eigen::Index>(pick(rng, 1, 6));
    const Matrix s = random_matrix(rng, static_cast<Eigen::Index>(ds), m, 2.0);
    const Matrix targets = random_matrix(rng, static_cast<Eigen::Index>(da), m, 0.9);
    const double beta = rng.uniform(-0.5, 0.5);
    const auto result = skill_loss(skill, s, targets, beta);
    auto loss = [&] { return skill_loss(skill, s, targets, beta).loss; };
    return check.compare(result.grad.values(), loss, skill.params().values());
  });

  Random cl_rng(seed, 106);
  check.run("critic_loss", cases, cl_rng, [&](Random& rng, std::size_t) {
    const auto ds = pick(rng, 1, 4), da = pick(rng, 1, 3);
    auto critics = CriticPair::create(ds, da, random_hidden(rng), 0.9, 0.2, 0.005, rng);
    const auto b = static_cast<Eigen::Index>(pick(rng, 1, 6));
    TransitionBatch batch{random_matrix(rng, static_cast<Eigen::Index>(ds), b, 2.0),
                          random_matrix(rng, static_cast<Eigen::Index>(da), b), Vector::Zero(b),
                          Matrix::Zero(static_cast<Eigen::Index>(ds), b), Vector::Zero(b)};
    Vector targets(b);
    for (Eigen::Index i = 0; i < b; ++i) targets(i) = rng.uniform(-3.0, 3.0);
    const auto result = critic_loss(critics, batch, targets);
    const double e1 = check.compare(result.grad1.values(), [&] { return critic_loss(critics, batch, targets).loss1; },
                                    critics.q1.params().values());
    const double e2 = check.compare(result.grad2.values(), [&] { return critic_loss(critics, batch, targets).loss2; },
                                    critics.q2.params().values());
    return std::max(e1, e2);
  });

  Random pl_rng(seed, 107);
  check.run("policy_loss_reparam", cases, pl_rng, [&](Random& rng, std::size_t) {
    const auto ds = pick(rng, 1, 4), da = pick(rng, 1, 3);
    const auto hidden = random_hidden(rng);
    auto critics = CriticPair::create(ds, da, hidden, 0.9, rng.uniform(0.05, 1.0), 0.005, rng);
    auto policy = GaussianPolicy::create(ds, da, hidden, true, rng);
    const auto b = static_cast<Eigen::Index>(pick(rng, 1, 6));
    const Matrix s = random_matrix(rng, static_cast<Eigen::Index>(ds), b, 2.0);
    const Matrix noise = gaussian_matrix(rng, static_cast<Eigen::Index>(da), b);
    const auto result = policy_loss_reparam(critics, policy, s, noise);
    auto loss = [&] { return policy_loss_reparam(critics, policy, s, noise).loss; };
    return check.compare(result.grad.values(), loss, policy.params().values());
  });

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace sdsra
