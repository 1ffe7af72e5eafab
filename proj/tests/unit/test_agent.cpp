#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "sdsra/agent.hpp"
#include "sdsra/envs.hpp"
#include "sdsra/random.hpp"
#include "sdsra/run_log.hpp"

using namespace sdsra;

namespace {

AgentConfig small(Mode mode, std::size_t skills = 4) {
  AgentConfig c;
  c.mode = mode;
  c.num_skills = skills;
  c.hidden = {16};
  c.batch_size = 32;
  c.warmup_steps = 64;
  c.buffer_capacity = 10'000;
  c.skill_update_interval = 100;
  c.skill_grad_steps = 5;
  c.seed = 7;
  return c;
}

TrainOptions short_run(std::size_t steps) {
  TrainOptions o;
  o.total_steps = steps;
  o.log_interval = 100;
  o.eval_interval = 200;
  o.eval_episodes = 1;
  return o;
}

std::vector<std::string> csv_lines(const RunLog& log) {
  std::vector<std::string> out;
  for (const auto& r : log.records) out.push_back(csv_line(r));
  return out;
}

bool same_params(const Agent& a, const Agent& b) {
  if (a.policy().params() != b.policy().params()) return false;
  if (a.critics().q1.params() != b.critics().q1.params() || a.critics().q2.params() != b.critics().q2.params())
    return false;
  if (a.critics().target_q1.params() != b.critics().target_q1.params() ||
      a.critics().target_q2.params() != b.critics().target_q2.params())
    return false;
  if (a.skills().size() != b.skills().size() || a.skills().relevance() != b.skills().relevance()) return false;
  for (std::size_t i = 0; i < a.skills().size(); ++i)
    if (a.skill_policy(i).params() != b.skill_policy(i).params()) return false;
  return true;
}

}  // namespace

TEST_CASE("same seed and config give identical logs and parameters") {
  Pendulum env_a, env_b;
  Agent a(small(Mode::kSdsra), env_a.spec()), b(small(Mode::kSdsra), env_b.spec());
  const auto la = a.train(env_a, short_run(400));
  const auto lb = b.train(env_b, short_run(400));
  CHECK(csv_lines(la) == csv_lines(lb));
  REQUIRE(la.evals.size() == 2);
  CHECK(la.evals[1].mean_return == lb.evals[1].mean_return);
  CHECK(same_params(a, b));
  CHECK(a.gradient_steps() == 400 - 63);
}

TEST_CASE("a different seed changes the run") {
  Pendulum env_a, env_b;
  auto cb = small(Mode::kSac);
  cb.seed = 8;
  Agent a(small(Mode::kSac), env_a.spec()), b(cb, env_b.spec());
  a.train(env_a, short_run(150));
  b.train(env_b, short_run(150));
  CHECK_FALSE(same_params(a, b));
}

TEST_CASE("zero training steps leave an empty log and an untouched agent") {
  Pendulum env;
  Agent a(small(Mode::kSdsra), env.spec()), ref(small(Mode::kSdsra), env.spec());
  const auto log = a.train(env, short_run(0));
  CHECK(log.records.empty());
  CHECK(log.evals.empty());
  CHECK(a.env_steps() == 0);
  CHECK(same_params(a, ref));
}

TEST_CASE("target critics start equal to the online critics") {
  Agent a(small(Mode::kSdsra), Pendulum().spec());
  CHECK(a.critics().target_q1.params() == a.critics().q1.params());
  CHECK(a.critics().target_q2.params() == a.critics().q2.params());
  CHECK(a.critics().q1.params() != a.critics().q2.params());
}

TEST_CASE("sac mode always reports skill 0") {
  Pendulum env;
  Agent a(small(Mode::kSac, 4), env.spec());
  CHECK(a.selection_probs() == std::vector<double>{1.0});
  const auto log = a.train(env, short_run(300));
  for (const auto& r : log.records) {
    CHECK(r.active_skill == 0);
    CHECK(r.relevance == std::vector<double>{0.0});
  }
}

TEST_CASE("four equally relevant skills are picked uniformly") {
  Pendulum env;
  Agent a(small(Mode::kSdsra, 4), env.spec());
  const auto s = env.reset(3);
  std::vector<std::size_t> counts(4);
  const int n = 10'000;
  for (int k = 0; k < n; ++k) ++counts[a.act(s).skill_index];
  for (auto c : counts) {
    CHECK(c / double(n) >= 0.22);
    CHECK(c / double(n) <= 0.28);
  }
}

TEST_CASE("warm-up actions are uniform in the normalised box, then the policy acts") {
  Pendulum env;
  auto c = small(Mode::kSac);
  c.warmup_steps = 2000;
  Agent a(c, env.spec());
  const auto s = env.reset(1);
  double lo = 1, hi = -1;
  for (int k = 0; k < 2000; ++k) {
    const auto act = a.act(s);
    lo = std::min(lo, act.action[0]);
    hi = std::max(hi, act.action[0]);
    CHECK(std::abs(act.action[0]) <= 1.0);
  }
  CHECK(lo < -0.99);
  CHECK(hi > 0.99);
  CHECK(a.scale_action(std::vector<double>{-1.0})[0] == -2.0);
  CHECK(a.scale_action(std::vector<double>{1.0})[0] == 2.0);
  CHECK(a.scale_action(std::vector<double>{0.0})[0] == 0.0);
}

TEST_CASE("evaluation is deterministic and changes nothing") {
  Pendulum env;
  Agent a(small(Mode::kSdsra), env.spec());
  a.train(env, short_run(200));
  Agent snapshot = a;
  const auto obs = env.observation();
  const auto r1 = a.evaluate(env, 2);
  const auto r2 = a.evaluate(env, 2);
  CHECK(r1.mean_return == r2.mean_return);
  CHECK(r1.mean_entropy == r2.mean_entropy);
  CHECK(env.observation() == obs);
  CHECK(same_params(a, snapshot));
  CHECK_THROWS_AS(a.evaluate(env, 0), std::invalid_argument);
}

TEST_CASE("a zero-output policy evaluates like the zero-torque rollout") {
  Pendulum env;
  Agent a(small(Mode::kSac), env.spec());
  a.policy().params().fill(0.0);
  const std::size_t episodes = 3;
  double total = 0;
  for (std::size_t k = 0; k < episodes; ++k) {
    Pendulum sim;
    sim.reset(eval_episode_seed(k));
    for (;;) {
      const auto r = sim.step(std::vector<double>{0.0});
      total += r.reward;
      if (r.done) break;
    }
  }
  const auto e = a.evaluate(env, episodes);
  CHECK(e.mean_return == doctest::Approx(total / episodes).epsilon(1e-12));
  // log_std head is 0 everywhere: entropy of a unit Gaussian.
  CHECK(e.mean_entropy == doctest::Approx(0.5 * std::log(2 * std::numbers::pi * std::numbers::e)).epsilon(1e-12));
}

TEST_CASE("one aliased skill reproduces soft actor-critic exactly") {
  auto sac = small(Mode::kSac);
  auto one = small(Mode::kSdsra, 1);
  one.skill_update_interval = 0;
  PointMass2D env_a, env_b;
  Agent a(sac, env_a.spec()), b(one, env_b.spec());
  CHECK(b.skills_alias_policy());
  const auto la = a.train(env_a, short_run(400));
  const auto lb = b.train(env_b, short_run(400));
  REQUIRE(la.records.size() == lb.records.size());
  std::size_t compared = 0;
  for (std::size_t i = 0; i < la.records.size(); ++i) {
    const auto &ra = la.records[i], &rb = lb.records[i];
    REQUIRE(ra.loss_q1.has_value() == rb.loss_q1.has_value());
    if (!ra.loss_q1) continue;
    CHECK(std::abs(*ra.loss_q1 - *rb.loss_q1) <= 1e-12);
    CHECK(std::abs(*ra.loss_q2 - *rb.loss_q2) <= 1e-12);
    CHECK(std::abs(*ra.loss_pi - *rb.loss_pi) <= 1e-12);
    CHECK(std::abs(*ra.j_integrated - *rb.j_integrated) <= 1e-12);
    ++compared;
  }
  CHECK(compared > 0);
  CHECK(same_params(a, b));
}

TEST_CASE("integrated objective matches a per-state recomputation") {
  PointMass2D env;
  Agent a(small(Mode::kSdsra, 3), env.spec());
  a.train(env, short_run(300));
  Random rng(5, 0);
  const Eigen::Index b = 12;
  Matrix states(6, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const auto obs = env.reset(rng.next_u64());
    states.col(c) = Eigen::Map<const Vector>(obs.data(), 6);
  }
  std::vector<Matrix> noise;
  for (int i = 0; i < 3; ++i) {
    Matrix z(2, b);
    for (Eigen::Index c = 0; c < b; ++c) z(0, c) = rng.gaussian(), z(1, c) = rng.gaussian();
    noise.push_back(z);
  }
  const auto probs = a.selection_probs();
  const double alpha = a.critics().alpha;
  double expected = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    double q_sum = 0, h_sum = 0;
    for (Eigen::Index c = 0; c < b; ++c) {
      const std::vector<double> s(states.col(c).data(), states.col(c).data() + 6);
      const std::vector<double> z(noise[i].col(c).data(), noise[i].col(c).data() + 2);
      const auto draw = a.skill_policy(i).sample_with_noise(s, z);
      std::vector<double> sa = s;
      sa.insert(sa.end(), draw.action.begin(), draw.action.end());
      q_sum += std::min(a.critics().q1.forward(sa)[0], a.critics().q2.forward(sa)[0]);
      h_sum += a.skill_policy(i).entropy(s);
    }
    expected += probs[i] * (q_sum / b + alpha * h_sum / b);
  }
  CHECK(a.integrated_objective_estimate(states, noise) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("a skill phase raises the relevance of the skill whose actions score higher") {
  // Critic Q = tanh(action); skill 0 pushes +1, skill 1 pushes -1.
  Pendulum env;
  AgentConfig c = small(Mode::kSdsra, 2);
  c.hidden = {1};
  c.warmup_steps = 0;
  c.grad_steps_per_iter = 0;
  c.skill_grad_steps = 0;
  Agent a(c, env.spec());
  for (auto* q : {&a.critics().q1, &a.critics().q2}) {
    q->params().fill(0.0);
    q->params()[3] = 1.0;  // action input weight
    q->params()[5] = 1.0;  // output weight
  }
  for (std::size_t i = 0; i < 2; ++i) {
    auto& p = a.skills()[i].policy.params();
    p.fill(0.0);
    p[6] = i == 0 ? 3.0 : -3.0;  // mean bias
    p[7] = -5.0;                 // log_std bias
  }
  a.train(env, short_run(100));
  const auto r = a.skills().relevance();
  CHECK(r[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(a.selection_probs()[0] > 0.5);
  CHECK(a.skills().best_skill() == 0);
}

TEST_CASE("skill phases are a no-op in sac mode") {
  Pendulum env;
  Agent a(small(Mode::kSac), env.spec());
  a.train(env, short_run(250));
  Agent snapshot = a;
  a.skill_update_phase();
  CHECK(same_params(a, snapshot));
}

TEST_CASE("a gradient step waits for a full batch") {
  Agent a(small(Mode::kSac), Pendulum().spec());
  CHECK_FALSE(a.gradient_step().has_value());
  for (int k = 0; k < 32; ++k) a.store({{1, 0, 0}, {0.5}, -1.0, {1, 0, 0}, false, 0});
  const auto loss = a.gradient_step();
  REQUIRE(loss.has_value());
  CHECK(std::isfinite(loss->loss_q1));
  CHECK(a.gradient_steps() == 1);
}

TEST_CASE("bad inputs are rejected") {
  Agent a(small(Mode::kSdsra, 2), Pendulum().spec());
  CHECK_THROWS_AS(a.act(std::vector<double>{1.0, 0.0}), ShapeError);
  CHECK_THROWS_AS(a.store({{1, 0, 0}, {0.5}, 0.0, {1, 0, 0}, false, 2}), std::out_of_range);
  PointMass2D wrong;
  CHECK_THROWS_AS(a.train(wrong, short_run(10)), ShapeError);
  auto bad = small(Mode::kSdsra, 9);
  CHECK_THROWS_AS(Agent(bad, Pendulum().spec()), std::invalid_argument);
}

TEST_CASE("save and load restore every network and the relevance scores") {
  PointMass2D env;
  Agent a(small(Mode::kSdsra, 2), env.spec());
  a.train(env, short_run(300));
  const auto dir = std::filesystem::temp_directory_path() / "sdsra_agent_ckpt";
  std::filesystem::remove_all(dir);
  a.save(dir);
  auto other = small(Mode::kSdsra, 2);
  other.seed = 99;
  Agent b(other, env.spec());
  CHECK_FALSE(same_params(a, b));
  b.load(dir);
  CHECK(same_params(a, b));
  CHECK(a.evaluate(env, 1).mean_return == b.evaluate(env, 1).mean_return);

  Agent c(small(Mode::kSdsra, 3), env.spec());
  CHECK_THROWS(c.load(dir));
  std::filesystem::remove_all(dir);
}
