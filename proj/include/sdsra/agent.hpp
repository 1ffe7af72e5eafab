#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdsra/envs.hpp"
#include "sdsra/errors.hpp"
#include "sdsra/gaussian_policy.hpp"
#include "sdsra/nn.hpp"
#include "sdsra/random.hpp"
#include "sdsra/replay.hpp"
#include "sdsra/sac.hpp"
#include "sdsra/skills.hpp"

namespace sdsra {

inline constexpr std::size_t kMaxSkills = 8;

enum class Mode { kSdsra, kSac };
enum class PolicyLossKind { kReparam, kScoreFunction };
enum class EvalPolicy { kBestSkill, kMixture };

struct AgentConfig {
  Mode mode = Mode::kSdsra;
  std::size_t num_skills = 4;
  double relevance_init = 0.0;
  double temperature = 1.0;
  double beta = -0.1;
  double eta = 0.1;
  /// Environment steps between skill phases; 0 disables skill phases.
  std::size_t skill_update_interval = 1000;
  /// skill_loss updates each skill takes per phase.
  std::size_t skill_grad_steps = 1000;
  double alpha = 0.2;
  double gamma = 0.99;
  double tau = 0.005;
  double lr = 3e-4;
  std::size_t batch_size = 256;
  std::size_t buffer_capacity = 1'000'000;
  std::size_t warmup_steps = 1000;
  std::size_t env_steps_per_iter = 1;
  std::size_t grad_steps_per_iter = 1;
  std::vector<std::size_t> hidden{64, 64};
  std::uint64_t seed = 0;
  PolicyLossKind policy_loss = PolicyLossKind::kReparam;
  EvalPolicy eval_policy = EvalPolicy::kBestSkill;

  void validate() const;
  bool operator==(const AgentConfig&) const = default;
  /// Skill count actually instantiated: sac mode always runs a single slot.
  std::size_t effective_skills() const { return mode == Mode::kSac ? 1 : num_skills; }
};

struct LossRecord {
  double loss_q1 = 0.0;
  double loss_q2 = 0.0;
  double loss_pi = 0.0;
};

struct ActResult {
  std::vector<double> action;  // in [-1, 1]^d, rescaled to the env bounds on step
  std::size_t skill_index = 0;
  double entropy = 0.0;        // entropy estimate of the acting policy at this state
};

struct LogRecord {
  std::size_t step = 0;
  std::size_t episode = 0;
  std::optional<double> episode_return;  // empty on log-interval records
  double entropy = 0.0;
  std::size_t active_skill = 0;
  std::optional<double> loss_q1, loss_q2, loss_pi, j_integrated;
  std::vector<double> relevance;
};

struct EvalRecord {
  std::size_t step = 0;
  double mean_return = 0.0;
  double mean_entropy = 0.0;
};

struct RunLog {
  std::vector<LogRecord> records;
  std::vector<EvalRecord> evals;
};

struct TrainOptions {
  std::size_t total_steps = 0;
  std::size_t log_interval = 1000;
  std::size_t eval_interval = 0;  // 0 disables periodic evaluation
  std::size_t eval_episodes = 5;
};

struct EvalResult {
  double mean_return = 0.0;
  double mean_entropy = 0.0;
};

/// Training aborted on a non-finite quantity; `dump` describes the agent state.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, std::string dump) : NumericError(what), dump_(std::move(dump)) {}
  const std::string& dump() const { return dump_; }

 private:
  std::string dump_;
};

/// Reset seed of evaluation episode k; identical for every agent and call.
std::uint64_t eval_episode_seed(std::size_t k);

/// sum_i P(i) (mean_s min_j Q_j(s, a_i(s)) + alpha * mean_s H(pi_i(.|s))), one
/// reparameterised action per state and skill drawn with `noise[i]`.
double integrated_objective(const CriticPair& critics, std::span<const GaussianPolicy* const> policies,
                            std::span<const double> probs, const Matrix& states, std::span<const Matrix> noise);

/// Soft actor-critic with an optional softmax-selected skill set driving behaviour.
class Agent {
 public:
  Agent(AgentConfig config, EnvSpec spec);

  const AgentConfig& config() const { return config_; }
  const EnvSpec& env_spec() const { return spec_; }

  ActResult act(std::span<const double> state);
  void store(const Transition& t);
  std::optional<LossRecord> gradient_step();
  void skill_update_phase();
  RunLog train(Env& env, const TrainOptions& options);
  EvalResult evaluate(const Env& env, std::size_t episodes) const;

  /// Policy used when skill i acts. Skills alias the global policy when skill
  /// phases are disabled.
  const GaussianPolicy& skill_policy(std::size_t i) const;
  bool skills_alias_policy() const { return alias_; }
  std::vector<double> selection_probs() const;
  /// Entropy of the behaviour policy at a state: sum_i P(i) H(pi_i), or H(pi_phi) in sac mode.
  double behaviour_entropy(std::span<const double> state) const;
  double integrated_objective_estimate(const Matrix& states, std::span<const Matrix> noise) const;

  const GaussianPolicy& policy() const { return policy_; }
  GaussianPolicy& policy() { return policy_; }
  const CriticPair& critics() const { return critics_; }
  CriticPair& critics() { return critics_; }
  const SkillSet& skills() const { return skills_; }
  SkillSet& skills() { return skills_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::size_t env_steps() const { return env_steps_; }
  std::size_t gradient_steps() const { return grad_steps_; }

  std::vector<double> scale_action(std::span<const double> normalized) const;

  void save(const std::filesystem::path& dir) const;
  void load(const std::filesystem::path& dir);

 private:
  struct SkillData {
    std::vector<double> states;
    std::vector<double> actions;
    std::size_t count = 0;
  };

  std::optional<double> current_j_integrated();
  std::string state_dump() const;

  AgentConfig config_;
  EnvSpec spec_;
  Random init_rng_, act_rng_, select_rng_, replay_rng_, noise_rng_, skill_rng_, diag_rng_, episode_rng_;
  GaussianPolicy policy_;
  AdamState policy_opt_;
  CriticPair critics_;
  AdamState q1_opt_, q2_opt_;
  SkillSet skills_;
  std::vector<AdamState> skill_opts_;
  bool alias_ = false;
  ReplayBuffer buffer_;
  std::vector<SkillData> interval_;
  std::optional<LossRecord> last_losses_;
  Matrix last_batch_states_;
  std::size_t env_steps_ = 0;
  std::size_t grad_steps_ = 0;
  bool warned_short_buffer_ = false;
};

}  // namespace sdsra
