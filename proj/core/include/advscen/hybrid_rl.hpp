#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "advscen/autodiff.hpp"
#include "advscen/metrics.hpp"
#include "advscen/nn.hpp"
#include "advscen/policies.hpp"
#include "advscen/replay_buffer.hpp"
#include "advscen/traffic_sim.hpp"

namespace advscen {

struct TrainConfig {
  double beta = 1.0;                 ///< regulariser scale
  double gamma = 0.99;
  double sim_real_ratio = 1.0;       ///< kRatioInf for simulation only
  std::size_t batch_size = 256;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double lr_alpha = 3e-4;
  double tau = 0.005;
  bool auto_alpha = true;
  double alpha = 0.2;                ///< fixed value, or the starting value when automatic
  double reward_scale = 1.0;         ///< rewards are multiplied by this inside the critic targets
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t total_steps = 10000;   ///< gradient steps
  std::size_t steps_per_epoch = 1000;///< evaluation interval
  std::size_t warm_start = 1000;     ///< random-action environment steps before updates
  std::size_t updates_per_step = 1;
  std::size_t sim_capacity = 1'000'000;
  std::size_t real_capacity = 0;     ///< 0: size of the offline corpus
  std::size_t eval_episodes = 20;
  bool eval_stochastic = false;
  std::size_t log_interval = 100;
  std::uint64_t seed = 0;
};

/// Throws ConfigError on beta < 0, gamma outside (0, 1), batch_size < 2,
/// non-positive rates, tau outside (0, 1], or a negative / NaN ratio.
void validate(const TrainConfig& cfg);

/// Softmax of q; the closed-form optimum of the inner regularisation problem.
Eigen::VectorXd d_star(const Eigen::VectorXd& q);

/// Mini-batch in network coordinates: states encoded, actions in [-1, 1].
struct Batch {
  Eigen::MatrixXd s;       ///< state_dim x n
  Eigen::MatrixXd a;       ///< action_dim x n
  Eigen::RowVectorXd r;    ///< raw rewards
  Eigen::MatrixXd s_next;  ///< state_dim x n
  Eigen::RowVectorXd done;
  Eigen::Index size() const { return s.cols(); }
};
Batch make_batch(const std::vector<const Transition*>& records, const nn::Bounds& bounds,
                 const EnvConfig& cfg);
/// Column-wise concatenation.
Batch concat(const Batch& a, const Batch& b);

/// Online critics, their Polyak-averaged targets, the actor and temperature.
struct SacAgent {
  LearnedPolicy policy;  ///< actor network and role metadata
  nn::Mlp q1, q2, q1_target, q2_target;
  double log_alpha = 0.0;
  nn::OptState actor_opt, q1_opt, q2_opt, alpha_opt;

  double alpha() const;
  double target_entropy() const { return -static_cast<double>(policy.action_dim()); }
};
SacAgent make_agent(Role role, std::size_t n_bv, const TrainConfig& cfg, Rng& rng);

/// Unit-box bounds used for the actor's squashed distribution.
nn::Bounds unit_bounds(std::size_t dim);

/// Q(s, a) for one critic on a batch (1 x n).
Eigen::RowVectorXd critic_values(const nn::Mlp& q, const Eigen::MatrixXd& s, const Eigen::MatrixXd& a);

/// y = scale·r + gamma (1 - done) [min(Q1', Q2')(s', a') - alpha log pi(a'|s')],
/// with a' = squash(mu + sigma·noise) from the current actor.
Eigen::RowVectorXd bellman_targets(const SacAgent& agent, const Batch& batch, double gamma,
                                   double alpha, double reward_scale, const Eigen::MatrixXd& noise);

struct CriticLoss {
  double loss = 0.0;        ///< regulariser plus Bellman term
  double reg_term = 0.0;    ///< beta·[mean_real Q - (LSE_sim Q - log|sim|)]
  double bellman = 0.0;     ///< 0.5·mean squared Bellman error over sim and real
  double mean_q_real = 0.0;
  double mean_q_sim = 0.0;
  double lse_sim = 0.0;     ///< LSE_sim Q - log|sim|
  std::vector<Eigen::MatrixXd> grads;
};

/// Loss of one critic. Either part may be empty: without real samples the
/// penalty term drops out, without sim samples the soft-maximum term does.
CriticLoss critic_loss_rehho(const nn::Mlp& q, const Batch& sim, const Batch& real,
                             const Eigen::RowVectorXd& y_sim, const Eigen::RowVectorXd& y_real,
                             double beta);

/// Differentiable critic used by the actor objective.
using TapedCritic = std::function<ad::Var(ad::Tape&, ad::Var state, ad::Var unit_action)>;
TapedCritic frozen_critic(const nn::Mlp& q);

struct ActorLoss {
  double loss = 0.0;
  double mean_log_pi = 0.0;  ///< unit-box log density of the sampled actions
  std::vector<Eigen::MatrixXd> grads;
};
/// mean[alpha log pi(a|s) - min(Q1, Q2)(s, a)] with reparameterised a.
ActorLoss actor_loss(const nn::Mlp& actor, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& noise, double alpha, const TapedCritic& q1,
                     const TapedCritic& q2);

/// One temperature step toward the target entropy; returns the new log alpha.
double alpha_step(double log_alpha, double mean_log_pi, double target_entropy, nn::OptState& st);

/// Statistics of one gradient step.
struct UpdateStats {
  double loss_critic = 0.0;
  double loss_actor = 0.0;
  double reg_term = 0.0;
  double mean_q_real = 0.0;
  double mean_q_sim = 0.0;
  double alpha = 0.0;
};
/// Critic, actor, temperature and target updates on one mixed batch.
/// Throws TrainingError on a non-finite loss.
UpdateStats sac_update(SacAgent& agent, const MixedBatch& batch, const TrainConfig& cfg,
                       const EnvConfig& env, Rng& rng);

// --- training loops ---------------------------------------------------------------

using AvFactory = std::function<std::unique_ptr<AvController>()>;
using BvFactory = std::function<std::unique_ptr<BvController>()>;

struct TrainEnv {
  EnvConfig env;
  InitSource init = SyntheticInit{};
  std::size_t n_bv = 1;
  AvFactory av;  ///< opponent while training BVs
  BvFactory bv;  ///< opponent while training the AV
};

struct LogRow {
  std::size_t step = 0;
  std::string phase;
  double loss_critic = 0.0;
  double loss_actor = 0.0;
  double reg_term = 0.0;
  double mean_q_real = 0.0;
  double mean_q_sim = 0.0;
  double alpha = 0.0;
  std::optional<MetricsReport> eval;
};
void write_log_header(std::ostream& out);
void write_log_row(const LogRow& row, std::ostream& out);

/// Owns the agent, both buffers, the rollout state and all random streams.
class Trainer {
 public:
  Trainer(Role role, TrainConfig cfg, TrainEnv env, ReplayBuffer offline);

  /// One environment step (when the ratio allows simulation) and the gradient updates.
  UpdateStats step();
  /// Runs until `total_steps` gradient steps, evaluating every steps_per_epoch.
  std::vector<LogRow> run(const std::function<void(const LogRow&)>& on_row = {});
  /// Evaluation of the current actor against the configured opponent.
  MetricsReport evaluate(std::size_t episodes, std::uint64_t seed) const;

  /// Replaces the opponent and starts a fresh episode.
  void set_opponent(AvFactory av);
  void set_opponent(BvFactory bv);

  const SacAgent& agent() const { return agent_; }
  SacAgent& agent() { return agent_; }
  const TrainConfig& config() const { return cfg_; }
  const TrainEnv& env() const { return env_; }
  std::size_t steps_done() const { return steps_; }
  std::size_t env_steps() const { return env_steps_; }
  const ReplayBuffer& sim_buffer() const { return sim_; }
  const ReplayBuffer& real_buffer() const { return real_; }
  /// Number of mini-batch draws that touched the offline buffer.
  std::size_t offline_reads() const { return real_.reads(); }

  void save_state(std::ostream& out) const;
  /// Restores a state written by save_state into a trainer built with the same configuration.
  void load_state(std::istream& in);

 private:
  void env_step(bool random_action);
  void begin_episode();
  std::vector<double> act(const Scene& scene, bool random_action);

  Role role_;
  TrainConfig cfg_;
  TrainEnv env_;
  SacAgent agent_;
  ReplayBuffer sim_;
  ReplayBuffer real_;
  Rng update_rng_;
  Rng env_rng_;
  std::unique_ptr<AvController> av_;
  std::unique_ptr<BvController> bv_;
  Scene scene_;
  bool in_episode_ = false;
  std::size_t steps_ = 0;
  std::size_t env_steps_ = 0;
  bool warmed_ = false;
};

/// Reads the offline store into a buffer sized per cfg.real_capacity.
ReplayBuffer offline_buffer(const std::vector<Transition>& data, const TrainConfig& cfg);

/// BV training with the regularised critic.
std::vector<LogRow> train_bv(Trainer& trainer, const std::function<void(const LogRow&)>& on_row = {});
/// Plain SAC for the AV: beta = 0, simulation only, AV reward.
TrainConfig av_sac_config(TrainConfig cfg);

struct FinetuneResult {
  std::vector<LogRow> log;
};
/// Alternates BV phases (AV frozen) and AV phases (latest BV policy), each
/// phase_len gradient steps. Every step evaluates the AV against `yardstick`
/// BVs and records reward and speed. Phase tags are "bv" and "av".
FinetuneResult finetune_alternate(Trainer& bv_trainer, Trainer& av_trainer, std::size_t phases,
                                  std::size_t phase_len, const BvFactory& yardstick,
                                  std::size_t eval_episodes, std::uint64_t eval_seed,
                                  const std::function<void(const LogRow&)>& on_row = {});

}  // namespace advscen
