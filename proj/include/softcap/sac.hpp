#pragma once

// Soft Actor-Critic: tanh-squashed Gaussian policy, twin critics with
// Polyak-averaged targets, learned entropy temperature, uniform replay.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "softcap/env.hpp"
#include "softcap/neural.hpp"

namespace softcap::sac {

using nn::DenseParams;
using nn::Matrix;

struct TrainConfig {
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t batch_size = 1024;
  int train_freq = 4;
  int gradient_steps = 1;
  double lr = 3e-4;
  int episodes = 40000;
  std::int64_t warmup_steps = 5000;
  std::uint64_t seed = 1;
  std::vector<std::size_t> hidden{256, 256};
  std::size_t buffer_capacity = 1'000'000;
  double target_entropy = -static_cast<double>(kActionDim);
  double initial_log_alpha = 0.0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  void validate() const;
};

/// Seedable generator whose full state (including the cached normal
/// deviate) round-trips through a string.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  double uniform(double lo, double hi);
  double normal() { return normal_(engine_); }
  std::size_t index(std::size_t n);
  std::uint64_t next_u64() { return engine_(); }
  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// ---------------------------------------------------------------- replay --

struct Batch {
  Matrix obs;
  Matrix actions;
  std::vector<double> rewards;
  Matrix next_obs;
  std::vector<double> terminal;

  std::size_t size() const { return rewards.size(); }
};

class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim);

  void add(std::span<const double> obs, std::span<const double> action, double reward,
           std::span<const double> next_obs, bool terminal);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  /// Uniform draws, with replacement, over filled slots.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  Batch gather(std::span<const std::size_t> slots) const;
  Batch sample(std::size_t n, Rng& rng) const { return gather(sample_indices(n, rng)); }
  double reward_at(std::size_t slot) const { return rewards_.at(slot); }

  void write(std::ostream& os) const;
  void read(std::istream& is);

 private:
  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t action_dim_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::vector<double> obs_, actions_, rewards_, next_obs_, terminal_;
};

// ---------------------------------------------------------------- policy --

struct PolicyNet {
  DenseParams net;  // obs -> hidden -> 2 * action_dim (means, then log-stds)
  std::size_t action_dim = kActionDim;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
};

PolicyNet make_policy(std::uint64_t seed, std::size_t obs_dim, std::size_t action_dim,
                      std::span<const std::size_t> hidden, double log_std_min = -20.0, double log_std_max = 2.0);

struct PolicyHead {
  Matrix mean;
  Matrix log_std;  // clamped
  Matrix raw_log_std;
  nn::ForwardCache cache;
};

PolicyHead policy_forward(const PolicyNet& policy, const Matrix& obs);

struct SquashedSample {
  Matrix pre_tanh;  // u = mean + std * noise
  Matrix action;    // tanh(u)
  std::vector<double> log_prob;
};

/// log(1 - tanh(u)^2) in the overflow-free form 2 (log 2 - u - softplus(-2u)).
double log_one_minus_tanh_sq(double u);

/// Reparameterized draw with caller-supplied standard normal noise.
SquashedSample squash_sample(const PolicyHead& head, const Matrix& noise);

/// Log-density of a squashed Gaussian at action a in (-1, 1), per row.
double squashed_log_prob(std::span<const double> mean, std::span<const double> log_std, std::span<const double> action);

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

ActionSample sample_action(const PolicyNet& policy, std::span<const double> obs, Rng& rng);
std::vector<double> deterministic_action(const PolicyNet& policy, std::span<const double> obs);

// --------------------------------------------------------------- critics --

struct TwinCritics {
  DenseParams q1, q2;
  DenseParams target1, target2;
};

TwinCritics make_critics(std::uint64_t seed, std::size_t obs_dim, std::size_t action_dim,
                         std::span<const std::size_t> hidden);

Matrix critic_input(const Matrix& obs, const Matrix& actions);

/// y = r + gamma (1 - terminal) (min(Q1', Q2') - alpha log pi(a'|s')), with
/// a' drawn from the policy at next_obs using `next_noise` and the target copies.
std::vector<double> critic_target(const Batch& batch, const TwinCritics& critics, const PolicyNet& policy,
                                  double alpha, double gamma, const Matrix& next_noise);

struct LossAndGrad {
  double loss = 0.0;
  DenseParams grad;
};

/// 1/2 mean((Q(s,a) - y)^2) and its parameter gradient.
LossAndGrad critic_loss(const DenseParams& critic, const Matrix& inputs, std::span<const double> y);

/// mean(alpha log pi(a|s) - min_j Q_j(s, a)) with a = tanh(mean + std * noise),
/// gradient with respect to the policy parameters only.
LossAndGrad policy_loss(const PolicyNet& policy, const DenseParams& q1, const DenseParams& q2, const Matrix& obs,
                        const Matrix& noise, double alpha);

/// -mean(log_alpha * (log_prob + target_entropy)) differentiated in log_alpha.
double temperature_gradient(std::span<const double> log_probs, double target_entropy);

/// target = tau * online + (1 - tau) * target, element-wise.
void soft_update(const DenseParams& online, DenseParams& target, double tau);

// ----------------------------------------------------------------- agent --

struct UpdateStats {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double policy_loss = 0.0;
  double alpha = 0.0;
  double temperature_loss = 0.0;
};

class Agent {
 public:
  Agent(std::size_t obs_dim, std::size_t action_dim, const TrainConfig& config);

  /// One gradient step on the temperature, both critics and the policy,
  /// followed by the soft target update.
  UpdateStats update(const Batch& batch, Rng& rng);

  double alpha() const;
  const TrainConfig& config() const { return config_; }

  PolicyNet policy;
  nn::AdamState policy_opt;
  TwinCritics critics;
  nn::AdamState q1_opt, q2_opt;
  double log_alpha = 0.0;
  nn::ScalarAdam alpha_opt;
  std::int64_t updates = 0;

  void write(std::ostream& os) const;
  void read(std::istream& is);

 private:
  TrainConfig config_;
};

// --------------------------------------------------------------- training --

struct EpisodeMetrics {
  int episode = 0;
  std::int64_t total_steps = 0;
  double episode_return = 0.0;
  RewardTerms term_sums;
  int longest_streak = 0;
  bool success = false;
  double critic_loss = 0.0;  // mean of both critics over this episode's updates
  double policy_loss = 0.0;
  double alpha = 0.0;
  std::int64_t updates = 0;
};

std::string metrics_header();
std::string metrics_row(const EpisodeMetrics& m);

/// Per-episode environment seed derived from the run seed.
std::uint64_t episode_seed(std::uint64_t run_seed, std::int64_t episode);

class Trainer {
 public:
  Trainer(EnvConfig env_config, TrainConfig config);

  /// Plays one full episode, learning as configured. Throws
  /// nn::NonFiniteError naming the global step when training diverges.
  EpisodeMetrics run_episode();

  int episodes_done() const { return episodes_done_; }
  std::int64_t total_steps() const { return total_steps_; }
  const Agent& agent() const { return agent_; }
  Agent& agent() { return agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  SoftCaptureEnv& env() { return env_; }

  /// Everything needed to continue bit-identically: networks, optimizer
  /// states, temperature, replay contents, generator state and counters.
  void save_state(std::ostream& os) const;
  void load_state(std::istream& is);

 private:
  EnvConfig env_config_;
  TrainConfig config_;
  SoftCaptureEnv env_;
  Agent agent_;
  ReplayBuffer buffer_;
  Rng rng_;
  int episodes_done_ = 0;
  std::int64_t total_steps_ = 0;
};

/// Runs config.episodes episodes, calling on_episode after each one.
void train(const EnvConfig& env_config, const TrainConfig& config,
           const std::function<void(const EpisodeMetrics&)>& on_episode);

}  // namespace softcap::sac
