#include "advscen/hybrid_rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "advscen/errors.hpp"

namespace advscen {

void validate(const TrainConfig& cfg) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) throw ConfigError("beta must be >= 0");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (std::isnan(cfg.sim_real_ratio) || cfg.sim_real_ratio < 0.0) {
    throw ConfigError("sim/real ratio must be non-negative");
  }
  if (cfg.batch_size < 2) throw ConfigError("batch_size must be >= 2");
  positive(cfg.lr_actor, "lr_actor");
  positive(cfg.lr_critic, "lr_critic");
  positive(cfg.lr_alpha, "lr_alpha");
  positive(cfg.alpha, "alpha");
  positive(cfg.reward_scale, "reward_scale");
  if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (cfg.hidden.empty() || std::find(cfg.hidden.begin(), cfg.hidden.end(), 0u) != cfg.hidden.end()) {
    throw ConfigError("hidden layer sizes must be positive");
  }
  if (cfg.steps_per_epoch == 0 || cfg.log_interval == 0 || cfg.updates_per_step == 0) {
    throw ConfigError("steps_per_epoch, log_interval and updates_per_step must be positive");
  }
  if (cfg.sim_capacity == 0) throw ConfigError("simulation buffer capacity must be positive");
}

Eigen::VectorXd d_star(const Eigen::VectorXd& q) {
  if (q.size() == 0) return q;
  const double m = q.maxCoeff();
  Eigen::VectorXd w = (q.array() - m).exp().matrix();
  return w / w.sum();
}

Batch make_batch(const std::vector<const Transition*>& records, const nn::Bounds& bounds,
                 const EnvConfig& cfg) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(records.size());
  if (n == 0) return b;
  const auto sd = static_cast<Eigen::Index>(records.front()->s.size());
  const auto ad = static_cast<Eigen::Index>(records.front()->a.size());
  if (ad != bounds.lo.size()) throw StructuralError("batch actions do not match the action bounds");
  b.s.resize(sd, n);
  b.s_next.resize(sd, n);
  b.a.resize(ad, n);
  b.r.resize(n);
  b.done.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = *records[static_cast<std::size_t>(j)];
    if (static_cast<Eigen::Index>(t.s.size()) != sd || static_cast<Eigen::Index>(t.a.size()) != ad) {
      throw StructuralError("ragged transition batch");
    }
    b.s.col(j) = encode_state(t.s, cfg);
    b.s_next.col(j) = encode_state(t.s_next, cfg);
    const nn::Vector a = Eigen::Map<const nn::Vector>(t.a.data(), ad);
    b.a.col(j) = to_unit(a, bounds).cwiseMax(-1.0).cwiseMin(1.0);
    b.r(j) = t.r;
    b.done(j) = t.done ? 1.0 : 0.0;
  }
  return b;
}

Batch concat(const Batch& a, const Batch& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  Batch c;
  auto hcat = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd z(x.rows(), x.cols() + y.cols());
    z << x, y;
    return z;
  };
  c.s = hcat(a.s, b.s);
  c.a = hcat(a.a, b.a);
  c.s_next = hcat(a.s_next, b.s_next);
  c.r.resize(a.size() + b.size());
  c.r << a.r, b.r;
  c.done.resize(a.size() + b.size());
  c.done << a.done, b.done;
  return c;
}

double SacAgent::alpha() const { return std::exp(log_alpha); }

SacAgent make_agent(Role role, std::size_t n_bv, const TrainConfig& cfg, Rng& rng) {
  SacAgent ag;
  ag.policy.role = role;
  ag.policy.n_bv = n_bv;
  const std::size_t sd = ag.policy.state_dim();
  const std::size_t ad = ag.policy.action_dim();
  std::vector<std::size_t> actor_sizes{sd};
  std::vector<std::size_t> critic_sizes{sd + ad};
  for (std::size_t h : cfg.hidden) {
    actor_sizes.push_back(h);
    critic_sizes.push_back(h);
  }
  actor_sizes.push_back(2 * ad);
  critic_sizes.push_back(1);
  ag.policy.net = nn::Mlp::random(actor_sizes, nn::Activation::relu, rng);
  ag.q1 = nn::Mlp::random(critic_sizes, nn::Activation::relu, rng);
  ag.q2 = nn::Mlp::random(critic_sizes, nn::Activation::relu, rng);
  ag.q1_target = ag.q1;
  ag.q2_target = ag.q2;
  ag.log_alpha = std::log(cfg.alpha);
  ag.actor_opt = nn::OptState::for_params(ag.policy.net.params(), cfg.lr_actor);
  ag.q1_opt = nn::OptState::for_params(ag.q1.params(), cfg.lr_critic);
  ag.q2_opt = nn::OptState::for_params(ag.q2.params(), cfg.lr_critic);
  ag.alpha_opt = nn::OptState::for_params({Eigen::MatrixXd::Zero(1, 1)}, cfg.lr_alpha);
  return ag;
}

nn::Bounds unit_bounds(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {nn::Vector::Constant(d, -1.0), nn::Vector::Constant(d, 1.0)};
}

namespace {

Eigen::MatrixXd stack(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
  Eigen::MatrixXd in(s.rows() + a.rows(), s.cols());
  in << s, a;
  return in;
}

// Reparameterised unit-box actions and log densities for every column.
void sample_actions(const nn::Mlp& actor, const Eigen::MatrixXd& s, const Eigen::MatrixXd& noise,
                    Eigen::MatrixXd& actions, Eigen::RowVectorXd& log_pi) {
  const Eigen::MatrixXd out = actor.forward(s);
  const Eigen::Index d = out.rows() / 2;
  if (noise.rows() != d || noise.cols() != s.cols()) throw StructuralError("noise has the wrong shape");
  const nn::Bounds ub = unit_bounds(static_cast<std::size_t>(d));
  actions.resize(d, s.cols());
  log_pi.resize(s.cols());
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    const nn::GaussianHead head = nn::split_head(out.col(j));
    const nn::SquashedSample smp = nn::squash_with_noise(head, ub, noise.col(j));
    actions.col(j) = smp.action;
    log_pi(j) = smp.log_prob;
  }
}

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
  }
  return m;
}

}  // namespace

Eigen::RowVectorXd critic_values(const nn::Mlp& q, const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
  return q.forward(stack(s, a)).row(0);
}

Eigen::RowVectorXd bellman_targets(const SacAgent& agent, const Batch& batch, double gamma,
                                   double alpha, double reward_scale, const Eigen::MatrixXd& noise) {
  Eigen::MatrixXd a_next;
  Eigen::RowVectorXd log_pi;
  sample_actions(agent.policy.net, batch.s_next, noise, a_next, log_pi);
  const Eigen::RowVectorXd q1 = critic_values(agent.q1_target, batch.s_next, a_next);
  const Eigen::RowVectorXd q2 = critic_values(agent.q2_target, batch.s_next, a_next);
  const Eigen::RowVectorXd soft = q1.cwiseMin(q2) - alpha * log_pi;
  return (reward_scale * batch.r.array() +
          gamma * (1.0 - batch.done.array()) * soft.array()).matrix();
}

CriticLoss critic_loss_rehho(const nn::Mlp& q, const Batch& sim, const Batch& real,
                             const Eigen::RowVectorXd& y_sim, const Eigen::RowVectorXd& y_real,
                             double beta) {
  const Eigen::Index n_sim = sim.size();
  const Eigen::Index n_real = real.size();
  if (n_sim + n_real == 0) throw TrainingError("critic loss on an empty batch");
  if (y_sim.size() != n_sim || y_real.size() != n_real) {
    throw StructuralError("one Bellman target per sample required");
  }
  ad::Tape tape;
  const nn::Mlp::Binding bind = q.bind(tape, true);
  std::optional<ad::Var> q_sim, q_real, err;
  if (n_sim > 0) {
    q_sim = q.forward(bind, tape.constant(stack(sim.s, sim.a)));
    err = ad::sum(ad::square(ad::sub(*q_sim, tape.constant(y_sim))));
  }
  if (n_real > 0) {
    q_real = q.forward(bind, tape.constant(stack(real.s, real.a)));
    const ad::Var e = ad::sum(ad::square(ad::sub(*q_real, tape.constant(y_real))));
    err = err ? ad::add(*err, e) : e;
  }
  const ad::Var bellman = ad::scale(*err, 0.5 / static_cast<double>(n_sim + n_real));

  CriticLoss out;
  std::optional<ad::Var> reg;
  if (n_real > 0) {
    const ad::Var m = ad::mean(*q_real);
    out.mean_q_real = m.scalar();
    reg = m;
  }
  if (n_sim > 0) {
    const ad::Var lse = ad::add_scalar(ad::logsumexp(*q_sim), -std::log(static_cast<double>(n_sim)));
    out.mean_q_sim = q_sim->value().mean();
    out.lse_sim = lse.scalar();
    reg = reg ? ad::sub(*reg, lse) : ad::neg(lse);
  }
  ad::Var loss = bellman;
  if (beta != 0.0) loss = ad::add(ad::scale(*reg, beta), bellman);
  tape.backward(loss);
  out.loss = loss.scalar();
  out.bellman = bellman.scalar();
  out.reg_term = beta * reg->scalar();
  out.grads = bind.gradients();
  return out;
}

TapedCritic frozen_critic(const nn::Mlp& q) {
  return [&q](ad::Tape& tape, ad::Var s, ad::Var a) {
    const nn::Mlp::Binding bind = q.bind(tape, false);
    return q.forward(bind, ad::vstack(s, a));
  };
}

ActorLoss actor_loss(const nn::Mlp& actor, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& noise, double alpha, const TapedCritic& q1,
                     const TapedCritic& q2) {
  if (states.cols() == 0) throw TrainingError("actor loss on an empty batch");
  ad::Tape tape;
  const nn::Mlp::Binding bind = actor.bind(tape, true);
  const ad::Var s = tape.constant(states);
  const ad::Var out = actor.forward(bind, s);
  const nn::TapedSample smp =
      nn::taped_squashed_sample(out, noise, unit_bounds(static_cast<std::size_t>(out.rows() / 2)));
  const ad::Var qmin = ad::min(q1(tape, s, smp.unit_action), q2(tape, s, smp.unit_action));
  const ad::Var loss = ad::mean(ad::sub(ad::scale(smp.log_prob, alpha), qmin));
  tape.backward(loss);
  ActorLoss r;
  r.loss = loss.scalar();
  r.mean_log_pi = smp.log_prob.value().mean();
  r.grads = bind.gradients();
  return r;
}

double alpha_step(double log_alpha, double mean_log_pi, double target_entropy, nn::OptState& st) {
  // L(log a) = -log a · (mean log pi + target entropy)
  std::vector<Eigen::MatrixXd> p{Eigen::MatrixXd::Constant(1, 1, log_alpha)};
  const std::vector<Eigen::MatrixXd> g{Eigen::MatrixXd::Constant(1, 1, -(mean_log_pi + target_entropy))};
  nn::opt_step(p, g, st);
  return p[0](0, 0);
}

UpdateStats sac_update(SacAgent& agent, const MixedBatch& mb, const TrainConfig& cfg,
                       const EnvConfig& env, Rng& rng) {
  const nn::Bounds bounds = role_bounds(agent.policy.role, agent.policy.n_bv, env);
  const Batch sim = make_batch(mb.sim, bounds, env);
  const Batch real = make_batch(mb.real, bounds, env);
  const Batch all = concat(sim, real);
  const auto d = static_cast<Eigen::Index>(agent.policy.action_dim());
  const double alpha = agent.alpha();

  const Eigen::RowVectorXd y =
      bellman_targets(agent, all, cfg.gamma, alpha, cfg.reward_scale, standard_normal(d, all.size(), rng));
  const Eigen::RowVectorXd y_sim = y.head(sim.size());
  const Eigen::RowVectorXd y_real = y.tail(real.size());

  UpdateStats st;
  const CriticLoss l1 = critic_loss_rehho(agent.q1, sim, real, y_sim, y_real, cfg.beta);
  const CriticLoss l2 = critic_loss_rehho(agent.q2, sim, real, y_sim, y_real, cfg.beta);
  st.loss_critic = 0.5 * (l1.loss + l2.loss);
  st.reg_term = 0.5 * (l1.reg_term + l2.reg_term);
  st.mean_q_real = l1.mean_q_real;
  st.mean_q_sim = l1.mean_q_sim;
  if (!std::isfinite(st.loss_critic)) {
    throw TrainingError("non-finite critic loss (reg " + std::to_string(st.reg_term) + ", mean Q sim " +
                        std::to_string(st.mean_q_sim) + ", mean Q real " +
                        std::to_string(st.mean_q_real) + ")");
  }
  nn::opt_step(agent.q1.params(), l1.grads, agent.q1_opt);
  nn::opt_step(agent.q2.params(), l2.grads, agent.q2_opt);

  const ActorLoss la = actor_loss(agent.policy.net, all.s, standard_normal(d, all.size(), rng), alpha,
                                  frozen_critic(agent.q1), frozen_critic(agent.q2));
  if (!std::isfinite(la.loss)) throw TrainingError("non-finite actor loss");
  nn::opt_step(agent.policy.net.params(), la.grads, agent.actor_opt);
  st.loss_actor = la.loss;

  if (cfg.auto_alpha) {
    agent.log_alpha = alpha_step(agent.log_alpha, la.mean_log_pi, agent.target_entropy(), agent.alpha_opt);
  }
  st.alpha = agent.alpha();
  nn::polyak(agent.q1_target, agent.q1, cfg.tau);
  nn::polyak(agent.q2_target, agent.q2, cfg.tau);
  return st;
}

// --- logging ---------------------------------------------------------------------

void write_log_header(std::ostream& out) {
  out << "step,phase,loss_critic,loss_actor,reg_term,mean_q_real,mean_q_sim,alpha,eval_cr,eval_cps,"
         "eval_cpm,av_avg_reward,av_avg_speed\n";
}

void write_log_row(const LogRow& row, std::ostream& out) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g", row.step,
                row.phase.c_str(), row.loss_critic, row.loss_actor, row.reg_term, row.mean_q_real,
                row.mean_q_sim, row.alpha);
  out << buf;
  if (row.eval) {
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%.10g,%.10g\n", row.eval->cr, row.eval->cps,
                  row.eval->cpm_per_100m, row.eval->av_avg_reward, row.eval->av_avg_speed);
    out << buf;
  } else {
    out << ",,,,,\n";
  }
}

// --- trainer ---------------------------------------------------------------------

namespace {

// AV driven by an externally chosen action.
class ScriptedAv final : public AvController {
 public:
  VehicleAction next;
  VehicleAction act(const Scene&, Rng&) override { return next; }
};

bool uses_sim(const TrainConfig& cfg) { return cfg.sim_real_ratio > 0.0; }
bool uses_real(const TrainConfig& cfg) { return !std::isinf(cfg.sim_real_ratio); }

}  // namespace

ReplayBuffer offline_buffer(const std::vector<Transition>& data, const TrainConfig& cfg) {
  ReplayBuffer buf(cfg.real_capacity > 0 ? cfg.real_capacity : std::max<std::size_t>(data.size(), 1));
  for (const auto& t : data) buf.push(t);
  return buf;
}

Trainer::Trainer(Role role, TrainConfig cfg, TrainEnv env, ReplayBuffer offline)
    : role_(role),
      cfg_(std::move(cfg)),
      env_(std::move(env)),
      sim_(cfg_.sim_capacity),
      real_(std::move(offline)),
      update_rng_(derive_seed(cfg_.seed, 1)),
      env_rng_(derive_seed(cfg_.seed, 2)) {
  validate(cfg_);
  validate(env_.env);
  if (env_.n_bv < 1 || env_.n_bv > kMaxBvs) throw ConfigError("n_bv must lie in [1, 4]");
  if (uses_real(cfg_) && real_.empty()) {
    throw ConfigError("offline data is required unless the sim/real ratio is infinite");
  }
  if (role_ == Role::bv && uses_sim(cfg_) && !env_.av) throw ConfigError("BV training needs an AV model");
  if (role_ == Role::av && uses_sim(cfg_) && !env_.bv) throw ConfigError("AV training needs a BV model");
  Rng init_rng(derive_seed(cfg_.seed, 0));
  agent_ = make_agent(role_, env_.n_bv, cfg_, init_rng);
  if (env_.av) av_ = env_.av();
  if (env_.bv) bv_ = env_.bv();
}

void Trainer::set_opponent(AvFactory av) {
  env_.av = std::move(av);
  av_ = env_.av();
  in_episode_ = false;
}

void Trainer::set_opponent(BvFactory bv) {
  env_.bv = std::move(bv);
  bv_ = env_.bv();
  in_episode_ = false;
}

void Trainer::begin_episode() {
  scene_ = env_reset(env_.env, env_.init, env_rng_);
  if (scene_.bv_count() != env_.n_bv) {
    throw StructuralError("initial scene holds " + std::to_string(scene_.bv_count()) +
                          " BVs, the agent expects " + std::to_string(env_.n_bv));
  }
  if (av_) av_->reset(scene_, env_rng_);
  if (bv_) bv_->reset(scene_, env_rng_);
  in_episode_ = true;
}

std::vector<double> Trainer::act(const Scene& scene, bool random_action) {
  if (random_action) {
    const nn::Bounds b = role_bounds(role_, env_.n_bv, env_.env);
    std::vector<double> a(static_cast<std::size_t>(b.lo.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = uniform(env_rng_, b.lo(static_cast<Eigen::Index>(i)), b.hi(static_cast<Eigen::Index>(i)));
    }
    return a;
  }
  return learned_policy_adapter(agent_.policy, flatten_scene(scene), ActMode::stochastic, env_rng_,
                                env_.env);
}

void Trainer::env_step(bool random_action) {
  if (!in_episode_) begin_episode();
  const std::vector<double> a = act(scene_, random_action);
  Transition tr;
  tr.s = flatten_scene(scene_);
  StepOutcome out;
  if (role_ == Role::bv) {
    out = advscen::env_step(scene_, unflatten_actions(a), *av_, env_.env, env_rng_);
    for (const auto& ba : out.bv_actions) {
      tr.a.push_back(ba.dv);
      tr.a.push_back(ba.dtheta);
    }
    tr.r = out.bv_reward;
  } else {
    ScriptedAv driver;
    driver.next = {a[0], a[1]};
    const std::vector<VehicleAction> bv_actions = bv_->act(scene_, env_rng_);
    out = advscen::env_step(scene_, bv_actions, driver, env_.env, env_rng_);
    tr.a = {out.av_action.dv, out.av_action.dtheta};
    tr.r = out.av_reward;
  }
  // The horizon is a time limit, not a terminal state of the task.
  tr.done = out.terminal() && out.event != Event::horizon;
  tr.s_next = flatten_scene(out.next_scene);
  sim_.push(std::move(tr));
  scene_ = std::move(out.next_scene);
  if (out.terminal()) in_episode_ = false;
  ++env_steps_;
}

UpdateStats Trainer::step() {
  if (uses_sim(cfg_)) {
    if (!warmed_) {
      const BatchSplit split = split_batch(cfg_.batch_size, cfg_.sim_real_ratio);
      const std::size_t warm = std::max(cfg_.warm_start, split.sim);
      while (sim_.size() < warm && env_steps_ < warm) env_step(true);
      warmed_ = true;
    }
    env_step(false);
  }
  UpdateStats st;
  for (std::size_t u = 0; u < cfg_.updates_per_step; ++u) {
    const MixedBatch mb = mixed_batch(sim_, real_, cfg_.sim_real_ratio, cfg_.batch_size, update_rng_);
    st = sac_update(agent_, mb, cfg_, env_.env, update_rng_);
  }
  ++steps_;
  return st;
}

MetricsReport Trainer::evaluate(std::size_t episodes, std::uint64_t seed) const {
  const ActMode mode = cfg_.eval_stochastic ? ActMode::stochastic : ActMode::deterministic;
  std::vector<EpisodeLog> logs;
  if (role_ == Role::bv) {
    if (!env_.av) throw ConfigError("evaluation needs an AV model");
    auto av = env_.av();
    auto bvs = make_learned_bvs(agent_.policy, mode, env_.env);
    logs = run_evaluation(*av, *bvs, episodes, env_.env, env_.init, seed);
  } else {
    if (!env_.bv) throw ConfigError("evaluation needs a BV model");
    auto av = make_learned_av(agent_.policy, mode, env_.env);
    auto bvs = env_.bv();
    logs = run_evaluation(*av, *bvs, episodes, env_.env, env_.init, seed);
  }
  return compute_metrics(logs);
}

std::vector<LogRow> Trainer::run(const std::function<void(const LogRow&)>& on_row) {
  std::vector<LogRow> rows;
  const std::string phase = role_ == Role::bv ? "bv" : "av";
  while (steps_ < cfg_.total_steps) {
    const UpdateStats st = step();
    const bool eval = steps_ % cfg_.steps_per_epoch == 0 || steps_ == cfg_.total_steps;
    if (!eval && steps_ % cfg_.log_interval != 0) continue;
    LogRow row{steps_, phase, st.loss_critic, st.loss_actor, st.reg_term, st.mean_q_real, st.mean_q_sim, st.alpha, {}};
    if (eval && cfg_.eval_episodes > 0) row.eval = evaluate(cfg_.eval_episodes, derive_seed(cfg_.seed, 99));
    if (on_row) on_row(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

constexpr char kStateMagic[8] = {'A', 'D', 'V', 'S', 'T', 'R', 'N', '\0'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("truncated trainer state", 0);
  return v;
}
void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1u << 24)) throw ParseError("implausible string in trainer state", 0);
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw ParseError("truncated trainer state", 0);
  return s;
}
std::string rng_text(const Rng& r) {
  std::ostringstream ss;
  ss << r;
  return ss.str();
}
void rng_restore(Rng& r, const std::string& text) {
  std::istringstream ss(text);
  ss >> r;
  if (!ss) throw ParseError("bad random state in trainer state", 0);
}

}  // namespace

void Trainer::save_state(std::ostream& out) const {
  out.write(kStateMagic, 8);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(role_));
  put<std::uint64_t>(out, env_.n_bv);
  put<std::uint64_t>(out, steps_);
  put<std::uint64_t>(out, env_steps_);
  put<std::uint8_t>(out, warmed_ ? 1 : 0);
  put<std::uint8_t>(out, in_episode_ ? 1 : 0);
  put<std::int64_t>(out, scene_.t);
  const std::vector<double> flat = in_episode_ ? flatten_scene(scene_) : std::vector<double>{};
  put<std::uint64_t>(out, flat.size());
  for (double v : flat) put<double>(out, v);
  put_string(out, rng_text(update_rng_));
  put_string(out, rng_text(env_rng_));
  put<double>(out, agent_.log_alpha);
  for (const nn::Mlp* net : {&agent_.policy.net, &agent_.q1, &agent_.q2, &agent_.q1_target, &agent_.q2_target}) {
    nn::save_mlp(*net, out);
  }
  for (const nn::OptState* st : {&agent_.actor_opt, &agent_.q1_opt, &agent_.q2_opt, &agent_.alpha_opt}) {
    nn::save_opt_state(*st, out);
  }
  sim_.save(out);
  real_.save(out);
}

void Trainer::load_state(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kStateMagic, 8) != 0) {
    throw ParseError("not a trainer state file", 0);
  }
  if (get<std::uint32_t>(in) != 1) throw ParseError("unsupported trainer state version", 0);
  if (get<std::uint32_t>(in) != static_cast<std::uint32_t>(role_) || get<std::uint64_t>(in) != env_.n_bv) {
    throw StructuralError("trainer state was written for a different role or BV count");
  }
  steps_ = get<std::uint64_t>(in);
  env_steps_ = get<std::uint64_t>(in);
  warmed_ = get<std::uint8_t>(in) != 0;
  in_episode_ = get<std::uint8_t>(in) != 0;
  const auto t = get<std::int64_t>(in);
  std::vector<double> flat(get<std::uint64_t>(in));
  for (double& v : flat) v = get<double>(in);
  rng_restore(update_rng_, get_string(in));
  rng_restore(env_rng_, get_string(in));
  agent_.log_alpha = get<double>(in);
  const std::vector<std::size_t> actor_sizes = agent_.policy.net.sizes();
  const std::vector<std::size_t> critic_sizes = agent_.q1.sizes();
  agent_.policy.net = nn::load_mlp(in, actor_sizes);
  agent_.q1 = nn::load_mlp(in, critic_sizes);
  agent_.q2 = nn::load_mlp(in, critic_sizes);
  agent_.q1_target = nn::load_mlp(in, critic_sizes);
  agent_.q2_target = nn::load_mlp(in, critic_sizes);
  agent_.actor_opt = nn::load_opt_state(in);
  agent_.q1_opt = nn::load_opt_state(in);
  agent_.q2_opt = nn::load_opt_state(in);
  agent_.alpha_opt = nn::load_opt_state(in);
  sim_ = ReplayBuffer::load(in);
  real_ = ReplayBuffer::load(in);
  if (in_episode_) {
    scene_ = unflatten_scene(flat);
    scene_.t = t;
    // Opponents restart from the saved scene; stateless drivers resume exactly.
    Rng scratch(0);
    if (env_.av) {
      av_ = env_.av();
      av_->reset(scene_, scratch);
    }
    if (env_.bv) {
      bv_ = env_.bv();
      bv_->reset(scene_, scratch);
    }
  }
}

std::vector<LogRow> train_bv(Trainer& trainer, const std::function<void(const LogRow&)>& on_row) {
  return trainer.run(on_row);
}

TrainConfig av_sac_config(TrainConfig cfg) {
  cfg.beta = 0.0;
  cfg.sim_real_ratio = kRatioInf;
  return cfg;
}

FinetuneResult finetune_alternate(Trainer& bv_trainer, Trainer& av_trainer, std::size_t phases,
                                  std::size_t phase_len, const BvFactory& yardstick,
                                  std::size_t eval_episodes, std::uint64_t eval_seed,
                                  const std::function<void(const LogRow&)>& on_row) {
  if (!yardstick) throw ConfigError("fine-tuning needs a yardstick BV model");
  FinetuneResult res;
  const EnvConfig& env = av_trainer.env().env;
  std::size_t step = 0;
  for (std::size_t p = 0; p < phases; ++p) {
    const bool bv_phase = p % 2 == 0;
    if (bv_phase) {
      LearnedPolicy frozen = av_trainer.agent().policy;
      const EnvConfig cfg = bv_trainer.env().env;
      bv_trainer.set_opponent(AvFactory([frozen, cfg] {
        return make_learned_av(frozen, ActMode::deterministic, cfg);
      }));
    } else {
      LearnedPolicy latest = bv_trainer.agent().policy;
      const EnvConfig cfg = av_trainer.env().env;
      av_trainer.set_opponent(BvFactory([latest, cfg] {
        return make_learned_bvs(latest, ActMode::stochastic, cfg);
      }));
    }
    Trainer& tr = bv_phase ? bv_trainer : av_trainer;
    for (std::size_t k = 0; k < phase_len; ++k) {
      const UpdateStats st = tr.step();
      LogRow row{++step, bv_phase ? "bv" : "av", st.loss_critic, st.loss_actor, st.reg_term,
                 st.mean_q_real, st.mean_q_sim, st.alpha, {}};
      if (eval_episodes > 0) {
        auto av = make_learned_av(av_trainer.agent().policy, ActMode::deterministic, env);
        auto bvs = yardstick();
        row.eval = compute_metrics(
            run_evaluation(*av, *bvs, eval_episodes, env, av_trainer.env().init, eval_seed));
      }
      if (on_row) on_row(row);
      res.log.push_back(std::move(row));
    }
  }
  return res;
}

}  // namespace advscen
