#include "sdsra/agent.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "sdsra/checkpoint.hpp"

namespace sdsra {

namespace {

enum Stream : std::uint64_t {
  kInit = 1,
  kAct = 2,
  kSelect = 3,
  kReplay = 4,
  kNoise = 5,
  kSkill = 6,
  kDiag = 7,
  kEpisode = 8,
  kEvalMixture = 9,
};

// Clamp applied to replayed actions before the score-function log-density;
// tanh rounds to exactly +-1 for large pre-squash values.
constexpr double kActionEdge = 1.0 - 1e-9;

Matrix gaussian_matrix(Random& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.gaussian();
  return m;
}

}  // namespace

std::uint64_t eval_episode_seed(std::size_t k) { return 1'000'003ULL * (k + 1); }

void AgentConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("AgentConfig: ") + what);
  };
  require(num_skills >= 1 && num_skills <= kMaxSkills, "num_skills must lie in [1, 8]");
  require(std::isfinite(relevance_init), "relevance_init must be finite");
  require(temperature > 0, "temperature must be positive");
  require(std::isfinite(beta), "beta must be finite");
  require(eta > 0 && eta <= 1, "eta must lie in (0, 1]");
  require(alpha > 0, "alpha must be positive");
  require(gamma >= 0 && gamma < 1, "gamma must lie in [0, 1)");
  require(tau > 0 && tau <= 1, "tau must lie in (0, 1]");
  require(lr > 0, "lr must be positive");
  require(batch_size >= 1, "batch_size must be positive");
  require(buffer_capacity >= 1, "buffer_capacity must be positive");
  require(env_steps_per_iter >= 1, "env_steps_per_iter must be positive");
  require(!hidden.empty(), "hidden needs at least one layer");
  for (auto h : hidden) require(h > 0, "hidden widths must be positive");
}

double integrated_objective(const CriticPair& critics, std::span<const GaussianPolicy* const> policies,
                            std::span<const double> probs, const Matrix& states, std::span<const Matrix> noise) {
  if (policies.size() != probs.size() || noise.size() != probs.size())
    throw ShapeError("integrated_objective: one policy, probability and noise block per skill");
  double j = 0;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const auto heads = policies[i]->heads(states);
    const auto draw = policies[i]->sample(heads, noise[i]);
    const double q_bar = min_q(critics, states, draw.actions).mean();
    const double h_bar = policies[i]->entropy(heads).mean();
    j += probs[i] * (q_bar + critics.alpha * h_bar);
  }
  return j;
}

Agent::Agent(AgentConfig config, EnvSpec spec)
    : config_((config.validate(), std::move(config))),
      spec_((spec.validate(), std::move(spec))),
      init_rng_(config_.seed, kInit),
      act_rng_(config_.seed, kAct),
      select_rng_(config_.seed, kSelect),
      replay_rng_(config_.seed, kReplay),
      noise_rng_(config_.seed, kNoise),
      skill_rng_(config_.seed, kSkill),
      diag_rng_(config_.seed, kDiag),
      episode_rng_(config_.seed, kEpisode),
      policy_(GaussianPolicy::create(spec_.state_dim, spec_.action_dim, config_.hidden, true, init_rng_)),
      policy_opt_(policy_.params().size(), {config_.lr}),
      critics_(CriticPair::create(spec_.state_dim, spec_.action_dim, config_.hidden, config_.gamma, config_.alpha,
                                  config_.tau, init_rng_)),
      q1_opt_(critics_.q1.params().size(), {config_.lr}),
      q2_opt_(critics_.q2.params().size(), {config_.lr}),
      skills_([this] {
        const bool alias = config_.mode == Mode::kSac || config_.skill_update_interval == 0;
        std::vector<Skill> s;
        for (std::size_t i = 0; i < config_.effective_skills(); ++i) {
          auto p = alias ? policy_
                         : GaussianPolicy::create(spec_.state_dim, spec_.action_dim, config_.hidden, true, init_rng_);
          s.push_back({std::move(p), config_.relevance_init, i});
        }
        return SkillSet(std::move(s), config_.beta, config_.temperature);
      }()),
      alias_(config_.mode == Mode::kSac || config_.skill_update_interval == 0),
      buffer_(config_.buffer_capacity, spec_.state_dim, spec_.action_dim),
      interval_(skills_.size()) {
  for (const auto& s : skills_.skills()) skill_opts_.emplace_back(s.policy.params().size(), AdamConfig{config_.lr});
}

const GaussianPolicy& Agent::skill_policy(std::size_t i) const {
  if (i >= skills_.size()) throw std::out_of_range("Agent::skill_policy: no such skill");
  return alias_ ? policy_ : skills_[i].policy;
}

std::vector<double> Agent::selection_probs() const { return skills_.selection_probs(); }

double Agent::behaviour_entropy(std::span<const double> state) const {
  if (config_.mode == Mode::kSac) return policy_.entropy(state);
  const auto probs = selection_probs();
  double h = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) h += probs[i] * skill_policy(i).entropy(state);
  return h;
}

std::vector<double> Agent::scale_action(std::span<const double> normalized) const {
  std::vector<double> out(normalized.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = spec_.action_low[i] + 0.5 * (normalized[i] + 1.0) * (spec_.action_high[i] - spec_.action_low[i]);
  return out;
}

ActResult Agent::act(std::span<const double> state) {
  if (state.size() != spec_.state_dim) throw ShapeError("Agent::act: state dimension mismatch");
  ActResult r;
  r.skill_index = config_.mode == Mode::kSdsra ? skills_.select_skill(select_rng_) : 0;
  if (env_steps_ < config_.warmup_steps) {
    r.action.resize(spec_.action_dim);
    for (auto& a : r.action) a = act_rng_.uniform(-1.0, 1.0);
  } else {
    r.action = skill_policy(r.skill_index).sample(state, act_rng_).action;
  }
  r.entropy = behaviour_entropy(state);
  return r;
}

void Agent::store(const Transition& t) {
  if (t.skill_index >= skills_.size()) throw std::out_of_range("Agent::store: skill index does not exist");
  buffer_.store(t);
}

std::optional<LossRecord> Agent::gradient_step() {
  const auto b = config_.batch_size;
  if (buffer_.size() < b) {
    if (!warned_short_buffer_) {
      std::cerr << "notice: gradient step skipped, buffer holds " << buffer_.size() << " < batch " << b << "\n";
      warned_short_buffer_ = true;
    }
    return std::nullopt;
  }
  const auto da = static_cast<Eigen::Index>(spec_.action_dim);
  const auto bi = static_cast<Eigen::Index>(b);
  LossRecord rec;
  try {
    const auto slots = buffer_.sample_slots(replay_rng_, b);
    const auto batch = buffer_.gather(slots);

    const auto next_heads = policy_.heads(batch.next_states);
    const auto next_draw = policy_.sample(next_heads, gaussian_matrix(noise_rng_, da, bi));
    const Vector targets = td_target(critics_, batch, {next_draw.actions, next_draw.log_prob});

    auto cl = critic_loss(critics_, batch, targets);
    adam_step(q1_opt_, critics_.q1.params(), cl.grad1);
    adam_step(q2_opt_, critics_.q2.params(), cl.grad2);
    rec.loss_q1 = cl.loss1;
    rec.loss_q2 = cl.loss2;

    PolicyLoss pl;
    if (config_.policy_loss == PolicyLossKind::kReparam) {
      pl = policy_loss_reparam(critics_, policy_, batch.states, gaussian_matrix(noise_rng_, da, bi));
    } else {
      const Matrix actions = batch.actions.cwiseMax(-kActionEdge).cwiseMin(kActionEdge);
      pl = policy_loss_score_function(critics_, policy_, batch.states, actions);
    }
    adam_step(policy_opt_, policy_.params(), pl.grad);
    rec.loss_pi = pl.loss;

    soft_update(critics_);
    last_batch_states_ = batch.states;
  } catch (const NumericError& e) {
    throw TrainingAborted(e.what(), state_dump());
  }
  if (!std::isfinite(rec.loss_q1) || !std::isfinite(rec.loss_q2) || !std::isfinite(rec.loss_pi) ||
      !policy_.params().all_finite() || !critics_.q1.params().all_finite() || !critics_.q2.params().all_finite()) {
    last_losses_ = rec;
    throw TrainingAborted("non-finite loss or parameter after gradient step " + std::to_string(grad_steps_ + 1),
                          state_dump());
  }
  ++grad_steps_;
  last_losses_ = rec;
  return rec;
}

void Agent::skill_update_phase() {
  if (config_.mode != Mode::kSdsra || alias_) return;
  const auto n = skills_.size();
  const auto ds = static_cast<Eigen::Index>(spec_.state_dim);
  const auto da = static_cast<Eigen::Index>(spec_.action_dim);
  std::vector<std::optional<double>> performance(n);
  try {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& data = interval_[i];
      if (data.count == 0) continue;
      const auto count = static_cast<Eigen::Index>(data.count);
      const Eigen::Map<const Matrix> states(data.states.data(), ds, count);
      const Eigen::Map<const Matrix> actions(data.actions.data(), da, count);

      auto& skill = skills_[i].policy;
      const auto m = std::min(config_.batch_size, data.count);
      Matrix batch(ds, static_cast<Eigen::Index>(m));
      for (std::size_t step = 0; step < config_.skill_grad_steps; ++step) {
        for (Eigen::Index c = 0; c < batch.cols(); ++c) batch.col(c) = states.col(static_cast<Eigen::Index>(skill_rng_.index(data.count)));
        const Matrix targets = policy_.mean_action(policy_.heads(batch));
        const auto loss = skill_loss(skill, batch, targets, skills_.beta());
        if (!std::isfinite(loss.loss)) throw NumericError("non-finite skill loss for skill " + std::to_string(i));
        adam_step(skill_opts_[i], skill.params(), loss.grad);
      }
      performance[i] = min_q(critics_, states, actions).mean();
    }
    skills_.update_relevance(performance, config_.eta);
  } catch (const NumericError& e) {
    throw TrainingAborted(e.what(), state_dump());
  }
  for (auto& d : interval_) d = SkillData{};
}

std::optional<double> Agent::current_j_integrated() {
  if (last_batch_states_.size() == 0) return std::nullopt;
  std::vector<Matrix> noise;
  for (std::size_t i = 0; i < skills_.size(); ++i)
    noise.push_back(gaussian_matrix(diag_rng_, static_cast<Eigen::Index>(spec_.action_dim), last_batch_states_.cols()));
  return integrated_objective_estimate(last_batch_states_, noise);
}

double Agent::integrated_objective_estimate(const Matrix& states, std::span<const Matrix> noise) const {
  std::vector<const GaussianPolicy*> policies;
  for (std::size_t i = 0; i < skills_.size(); ++i) policies.push_back(&skill_policy(i));
  const auto probs = selection_probs();
  return integrated_objective(critics_, policies, probs, states, noise);
}

RunLog Agent::train(Env& env, const TrainOptions& options) {
  RunLog log;
  if (options.total_steps == 0) return log;
  if (env.spec().state_dim != spec_.state_dim || env.spec().action_dim != spec_.action_dim)
    throw ShapeError("Agent::train: environment does not match the agent");
  if (options.log_interval == 0) throw std::invalid_argument("Agent::train: log_interval must be positive");

  const bool skill_phases = config_.mode == Mode::kSdsra && !alias_;
  const std::size_t ready = std::max(config_.warmup_steps, config_.batch_size);

  std::size_t episode = 0;
  std::vector<double> state = env.reset(episode_rng_.next_u64());
  double ep_return = 0, ep_entropy = 0;
  std::size_t ep_len = 0;
  double window_entropy = 0;
  std::size_t window_len = 0;
  std::size_t last_skill = 0;

  auto make_record = [&](std::optional<double> ret, double entropy) {
    LogRecord r;
    r.step = env_steps_;
    r.episode = episode;
    r.episode_return = ret;
    r.entropy = entropy;
    r.active_skill = last_skill;
    if (last_losses_) {
      r.loss_q1 = last_losses_->loss_q1;
      r.loss_q2 = last_losses_->loss_q2;
      r.loss_pi = last_losses_->loss_pi;
    }
    r.j_integrated = current_j_integrated();
    r.relevance = skills_.relevance();
    return r;
  };

  for (std::size_t t = 0; t < options.total_steps; ++t) {
    const bool from_policy = env_steps_ >= config_.warmup_steps;
    auto a = act(state);
    auto res = env.step(scale_action(a.action));
    store({state, a.action, res.reward, res.state, res.done && !res.truncated, a.skill_index});
    ++env_steps_;
    last_skill = a.skill_index;

    if (skill_phases && from_policy) {
      auto& d = interval_[a.skill_index];
      d.states.insert(d.states.end(), state.begin(), state.end());
      d.actions.insert(d.actions.end(), a.action.begin(), a.action.end());
      ++d.count;
    }

    if (buffer_.size() >= ready && env_steps_ % config_.env_steps_per_iter == 0)
      for (std::size_t g = 0; g < config_.grad_steps_per_iter; ++g) gradient_step();

    if (skill_phases && env_steps_ % config_.skill_update_interval == 0) skill_update_phase();

    ep_return += res.reward;
    ep_entropy += a.entropy;
    window_entropy += a.entropy;
    ++ep_len;
    ++window_len;
    state = std::move(res.state);

    if (res.done) {
      log.records.push_back(make_record(ep_return, ep_entropy / static_cast<double>(ep_len)));
      ++episode;
      state = env.reset(episode_rng_.next_u64());
      ep_return = ep_entropy = 0;
      ep_len = 0;
    }
    if (env_steps_ % options.log_interval == 0) {
      log.records.push_back(make_record(std::nullopt, window_entropy / static_cast<double>(window_len)));
      window_entropy = 0;
      window_len = 0;
    }
    if (options.eval_interval > 0 && env_steps_ % options.eval_interval == 0) {
      const auto e = evaluate(env, options.eval_episodes);
      log.evals.push_back({env_steps_, e.mean_return, e.mean_entropy});
    }
  }
  return log;
}

EvalResult Agent::evaluate(const Env& env, std::size_t episodes) const {
  if (episodes == 0) throw std::invalid_argument("Agent::evaluate: episodes must be positive");
  auto sim = env.clone();
  Random mixture_rng(config_.seed, kEvalMixture);
  const bool mixture = config_.mode == Mode::kSdsra && config_.eval_policy == EvalPolicy::kMixture;
  const auto& greedy = config_.mode == Mode::kSac ? policy_ : skill_policy(skills_.best_skill());

  double total_return = 0, total_entropy = 0;
  std::size_t total_steps = 0;
  for (std::size_t k = 0; k < episodes; ++k) {
    auto state = sim->reset(eval_episode_seed(k));
    for (;;) {
      std::vector<double> action;
      if (mixture) {
        const auto i = skills_.select_skill(mixture_rng);
        action = skill_policy(i).sample(state, mixture_rng).action;
      } else {
        action = greedy.mean_action(state);
      }
      total_entropy += behaviour_entropy(state);
      ++total_steps;
      auto res = sim->step(scale_action(action));
      total_return += res.reward;
      state = std::move(res.state);
      if (res.done) break;
    }
  }
  return {total_return / static_cast<double>(episodes), total_entropy / static_cast<double>(total_steps)};
}

std::string Agent::state_dump() const {
  std::ostringstream os;
  os.precision(17);
  os << "env_steps " << env_steps_ << "\ngradient_steps " << grad_steps_ << "\n";
  if (last_losses_)
    os << "last_losses " << last_losses_->loss_q1 << " " << last_losses_->loss_q2 << " " << last_losses_->loss_pi
       << "\n";
  os << "relevance";
  for (double r : skills_.relevance()) os << " " << r;
  os << "\nfinite policy " << policy_.params().all_finite() << " q1 " << critics_.q1.params().all_finite() << " q2 "
     << critics_.q2.params().all_finite() << " target_q1 " << critics_.target_q1.params().all_finite()
     << " target_q2 " << critics_.target_q2.params().all_finite() << "\n";
  for (std::size_t i = 0; i < skills_.size() && !alias_; ++i)
    os << "finite skill " << i << " " << skills_[i].policy.params().all_finite() << "\n";
  return os.str();
}

void Agent::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_params_file(policy_.params(), dir / "policy.ckpt");
  save_params_file(critics_.q1.params(), dir / "q1.ckpt");
  save_params_file(critics_.q2.params(), dir / "q2.ckpt");
  save_params_file(critics_.target_q1.params(), dir / "q1_target.ckpt");
  save_params_file(critics_.target_q2.params(), dir / "q2_target.ckpt");
  if (!alias_)
    for (std::size_t i = 0; i < skills_.size(); ++i)
      save_params_file(skills_[i].policy.params(), dir / ("skill_" + std::to_string(i) + ".ckpt"));
  ParamVector relevance({{"relevance", {skills_.size()}}}, skills_.relevance());
  save_params_file(relevance, dir / "relevance.ckpt");
}

void Agent::load(const std::filesystem::path& dir) {
  auto policy = policy_.params();
  auto q1 = critics_.q1.params(), q2 = critics_.q2.params();
  auto tq1 = critics_.target_q1.params(), tq2 = critics_.target_q2.params();
  load_params_file(policy, dir / "policy.ckpt");
  load_params_file(q1, dir / "q1.ckpt");
  load_params_file(q2, dir / "q2.ckpt");
  load_params_file(tq1, dir / "q1_target.ckpt");
  load_params_file(tq2, dir / "q2_target.ckpt");
  std::vector<ParamVector> skill_params;
  if (!alias_)
    for (std::size_t i = 0; i < skills_.size(); ++i) {
      skill_params.push_back(skills_[i].policy.params());
      load_params_file(skill_params.back(), dir / ("skill_" + std::to_string(i) + ".ckpt"));
    }
  ParamVector relevance({{"relevance", {skills_.size()}}});
  load_params_file(relevance, dir / "relevance.ckpt");

  policy_.params() = std::move(policy);
  critics_.q1.params() = std::move(q1);
  critics_.q2.params() = std::move(q2);
  critics_.target_q1.params() = std::move(tq1);
  critics_.target_q2.params() = std::move(tq2);
  for (std::size_t i = 0; i < skill_params.size(); ++i) skills_[i].policy.params() = std::move(skill_params[i]);
  skills_.set_relevance(relevance.values());
}

}  // namespace sdsra
