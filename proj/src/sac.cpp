#include "softcap/sac.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "softcap/binary_io.hpp"

namespace softcap::sac {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Matrix gaussian_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.normal();
  return m;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw nn::NonFiniteError(std::string(what) + " is not finite");
}

void write_adam(std::ostream& os, const nn::AdamState& s) {
  nn::write_params(os, s.m);
  nn::write_params(os, s.v);
  io::write_u64(os, static_cast<std::uint64_t>(s.t));
}

nn::AdamState read_adam(std::istream& is) {
  nn::AdamState s;
  s.m = nn::read_params(is);
  s.v = nn::read_params(is);
  s.t = static_cast<std::int64_t>(io::read_u64(is));
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("TrainConfig: ") + what);
  };
  require(gamma > 0.0 && gamma < 1.0, "gamma must be in (0, 1)");
  require(tau > 0.0 && tau <= 1.0, "tau must be in (0, 1]");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(train_freq >= 1, "train_freq must be >= 1");
  require(gradient_steps >= 1, "gradient_steps must be >= 1");
  require(lr > 0.0 && std::isfinite(lr), "lr must be positive");
  require(episodes >= 0, "episodes must be >= 0");
  require(warmup_steps >= 0, "warmup_steps must be >= 0");
  require(!hidden.empty(), "hidden must list at least one layer");
  for (auto h : hidden) require(h >= 1, "hidden sizes must be >= 1");
  require(buffer_capacity >= 1, "buffer_capacity must be >= 1");
  require(std::isfinite(target_entropy) && std::isfinite(initial_log_alpha), "temperature settings must be finite");
  require(log_std_min < log_std_max, "log_std_min must be < log_std_max");
}

// ------------------------------------------------------------------ Rng --

double Rng::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

std::size_t Rng::index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

std::string Rng::state() const {
  std::ostringstream os;
  os.precision(17);
  os << engine_ << ' ' << normal_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> engine_ >> normal_;
  if (!is) throw io::FormatError("corrupt generator state");
}

// --------------------------------------------------------------- replay --

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim)
    : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::add(std::span<const double> obs, std::span<const double> action, double reward,
                       std::span<const double> next_obs, bool terminal) {
  if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_ || action.size() != action_dim_)
    throw nn::ShapeError("ReplayBuffer::add: transition shape mismatch");
  if (size_ < capacity_) {
    obs_.insert(obs_.end(), obs.begin(), obs.end());
    actions_.insert(actions_.end(), action.begin(), action.end());
    rewards_.push_back(reward);
    next_obs_.insert(next_obs_.end(), next_obs.begin(), next_obs.end());
    terminal_.push_back(terminal ? 1.0 : 0.0);
    ++size_;
  } else {
    std::copy(obs.begin(), obs.end(), obs_.begin() + cursor_ * obs_dim_);
    std::copy(action.begin(), action.end(), actions_.begin() + cursor_ * action_dim_);
    rewards_[cursor_] = reward;
    std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + cursor_ * obs_dim_);
    terminal_[cursor_] = terminal ? 1.0 : 0.0;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("ReplayBuffer::sample: buffer is empty");
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.index(size_);
  return idx;
}

Batch ReplayBuffer::gather(std::span<const std::size_t> slots) const {
  Batch b;
  const std::size_t n = slots.size();
  b.obs.resize(n, obs_dim_);
  b.actions.resize(n, action_dim_);
  b.next_obs.resize(n, obs_dim_);
  b.rewards.resize(n);
  b.terminal.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t s = slots[r];
    if (s >= size_) throw std::out_of_range("ReplayBuffer::gather: slot not filled");
    std::copy_n(obs_.begin() + s * obs_dim_, obs_dim_, b.obs.row(r).begin());
    std::copy_n(actions_.begin() + s * action_dim_, action_dim_, b.actions.row(r).begin());
    std::copy_n(next_obs_.begin() + s * obs_dim_, obs_dim_, b.next_obs.row(r).begin());
    b.rewards[r] = rewards_[s];
    b.terminal[r] = terminal_[s];
  }
  return b;
}

void ReplayBuffer::write(std::ostream& os) const {
  os.write("SCRB", 4);
  io::write_u32(os, 1);
  for (auto v : {capacity_, obs_dim_, action_dim_, cursor_, size_}) io::write_u64(os, v);
  io::write_f64s(os, obs_);
  io::write_f64s(os, actions_);
  io::write_f64s(os, rewards_);
  io::write_f64s(os, next_obs_);
  io::write_f64s(os, terminal_);
}

void ReplayBuffer::read(std::istream& is) {
  io::expect_magic(is, "SCRB");
  if (io::read_u32(is) != 1) throw io::FormatError("unsupported replay buffer version");
  const auto capacity = io::read_u64(is), obs_dim = io::read_u64(is), action_dim = io::read_u64(is);
  const auto cursor = io::read_u64(is), size = io::read_u64(is);
  if (capacity != capacity_ || obs_dim != obs_dim_ || action_dim != action_dim_)
    throw io::FormatError("replay buffer shape does not match the configuration");
  if (size > capacity || cursor >= capacity) throw io::FormatError("replay buffer counters out of range");
  cursor_ = cursor;
  size_ = size;
  obs_.assign(size * obs_dim, 0.0);
  actions_.assign(size * action_dim, 0.0);
  rewards_.assign(size, 0.0);
  next_obs_.assign(size * obs_dim, 0.0);
  terminal_.assign(size, 0.0);
  io::read_f64s(is, obs_);
  io::read_f64s(is, actions_);
  io::read_f64s(is, rewards_);
  io::read_f64s(is, next_obs_);
  io::read_f64s(is, terminal_);
}

// --------------------------------------------------------------- policy --

PolicyNet make_policy(std::uint64_t seed, std::size_t obs_dim, std::size_t action_dim,
                      std::span<const std::size_t> hidden, double log_std_min, double log_std_max) {
  std::vector<std::size_t> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2 * action_dim);
  return {nn::init_params(seed, sizes), action_dim, log_std_min, log_std_max};
}

PolicyHead policy_forward(const PolicyNet& policy, const Matrix& obs) {
  if (policy.net.out_dim() != 2 * policy.action_dim) throw nn::ShapeError("policy output width must be 2 * action_dim");
  PolicyHead h;
  const Matrix out = nn::forward(policy.net, obs, nn::OutputActivation::kLinear, &h.cache);
  const std::size_t n = obs.rows, a = policy.action_dim;
  h.mean.resize(n, a);
  h.log_std.resize(n, a);
  h.raw_log_std.resize(n, a);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < a; ++k) {
      h.mean(i, k) = out(i, k);
      h.raw_log_std(i, k) = out(i, a + k);
      h.log_std(i, k) = std::clamp(out(i, a + k), policy.log_std_min, policy.log_std_max);
    }
  return h;
}

double log_one_minus_tanh_sq(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

SquashedSample squash_sample(const PolicyHead& head, const Matrix& noise) {
  const std::size_t n = head.mean.rows, a = head.mean.cols;
  if (noise.rows != n || noise.cols != a) throw nn::ShapeError("squash_sample: noise shape mismatch");
  SquashedSample s;
  s.pre_tanh.resize(n, a);
  s.action.resize(n, a);
  s.log_prob.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double lp = 0.0;
    for (std::size_t k = 0; k < a; ++k) {
      const double eps = noise(i, k);
      const double ls = head.log_std(i, k);
      const double u = head.mean(i, k) + std::exp(ls) * eps;
      s.pre_tanh(i, k) = u;
      s.action(i, k) = std::tanh(u);
      lp += -0.5 * eps * eps - ls - kHalfLog2Pi - log_one_minus_tanh_sq(u);
    }
    s.log_prob[i] = lp;
  }
  return s;
}

double squashed_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action) {
  double lp = 0.0;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double u = std::atanh(action[k]);
    const double z = (u - mean[k]) / std::exp(log_std[k]);
    lp += -0.5 * z * z - log_std[k] - kHalfLog2Pi - log_one_minus_tanh_sq(u);
  }
  return lp;
}

ActionSample sample_action(const PolicyNet& policy, std::span<const double> obs, Rng& rng) {
  Matrix o(1, obs.size());
  std::copy(obs.begin(), obs.end(), o.data.begin());
  const PolicyHead head = policy_forward(policy, o);
  const Matrix noise = gaussian_noise(1, policy.action_dim, rng);
  const SquashedSample s = squash_sample(head, noise);
  return {s.action.data, s.log_prob[0]};
}

std::vector<double> deterministic_action(const PolicyNet& policy, std::span<const double> obs) {
  Matrix o(1, obs.size());
  std::copy(obs.begin(), obs.end(), o.data.begin());
  const PolicyHead head = policy_forward(policy, o);
  std::vector<double> a(policy.action_dim);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::tanh(head.mean(0, k));
  return a;
}

// -------------------------------------------------------------- critics --

TwinCritics make_critics(std::uint64_t seed, std::size_t obs_dim, std::size_t action_dim,
                         std::span<const std::size_t> hidden) {
  std::vector<std::size_t> sizes{obs_dim + action_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  TwinCritics c;
  c.q1 = nn::init_params(seed, sizes);
  c.q2 = nn::init_params(seed + 1, sizes);
  c.target1 = c.q1;
  c.target2 = c.q2;
  return c;
}

Matrix critic_input(const Matrix& obs, const Matrix& actions) {
  if (obs.rows != actions.rows) throw nn::ShapeError("critic_input: row mismatch");
  Matrix x(obs.rows, obs.cols + actions.cols);
  for (std::size_t i = 0; i < obs.rows; ++i) {
    auto row = x.row(i);
    std::copy(obs.row(i).begin(), obs.row(i).end(), row.begin());
    std::copy(actions.row(i).begin(), actions.row(i).end(), row.begin() + static_cast<std::ptrdiff_t>(obs.cols));
  }
  return x;
}

std::vector<double> critic_target(const Batch& batch, const TwinCritics& critics, const PolicyNet& policy,
                                  double alpha, double gamma, const Matrix& next_noise) {
  const PolicyHead head = policy_forward(policy, batch.next_obs);
  const SquashedSample next = squash_sample(head, next_noise);
  const Matrix x = critic_input(batch.next_obs, next.action);
  const Matrix t1 = nn::forward(critics.target1, x, nn::OutputActivation::kLinear);
  const Matrix t2 = nn::forward(critics.target2, x, nn::OutputActivation::kLinear);
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double soft_value = std::min(t1.data[i], t2.data[i]) - alpha * next.log_prob[i];
    y[i] = batch.rewards[i] + gamma * (1.0 - batch.terminal[i]) * soft_value;
  }
  return y;
}

LossAndGrad critic_loss(const DenseParams& critic, const Matrix& inputs, std::span<const double> y) {
  nn::ForwardCache cache;
  const Matrix q = nn::forward(critic, inputs, nn::OutputActivation::kLinear, &cache);
  const std::size_t n = q.rows;
  if (y.size() != n || q.cols != 1) throw nn::ShapeError("critic_loss: target/output shape mismatch");
  Matrix dq(n, 1);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double err = q.data[i] - y[i];
    loss += 0.5 * err * err;
    dq.data[i] = err / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  require_finite(loss, "critic loss");
  return {loss, nn::backward(critic, cache, dq).params};
}

LossAndGrad policy_loss(const PolicyNet& policy, const DenseParams& q1, const DenseParams& q2, const Matrix& obs,
                        const Matrix& noise, double alpha) {
  const PolicyHead head = policy_forward(policy, obs);
  const SquashedSample s = squash_sample(head, noise);
  const Matrix x = critic_input(obs, s.action);
  nn::ForwardCache c1, c2;
  const Matrix v1 = nn::forward(q1, x, nn::OutputActivation::kLinear, &c1);
  const Matrix v2 = nn::forward(q2, x, nn::OutputActivation::kLinear, &c2);

  const std::size_t n = obs.rows, a = policy.action_dim;
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix pick1(n, 1), pick2(n, 1);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool first = v1.data[i] <= v2.data[i];
    pick1.data[i] = first ? 1.0 : 0.0;
    pick2.data[i] = first ? 0.0 : 1.0;
    loss += alpha * s.log_prob[i] - (first ? v1.data[i] : v2.data[i]);
  }
  loss *= inv_n;
  require_finite(loss, "policy loss");

  const Matrix dx1 = nn::backward(q1, c1, pick1).input;
  const Matrix dx2 = nn::backward(q2, c2, pick2).input;
  Matrix d_out(n, 2 * a);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < a; ++k) {
      const std::size_t col = obs.cols + k;
      const double dq_da = dx1(i, col) + dx2(i, col);
      const double act = s.action(i, k);
      const double d_u = (alpha * 2.0 * act - dq_da * (1.0 - act * act)) * inv_n;
      d_out(i, k) = d_u;
      const double raw = head.raw_log_std(i, k);
      const bool clamped = raw < policy.log_std_min || raw > policy.log_std_max;
      d_out(i, a + k) = clamped ? 0.0 : d_u * std::exp(head.log_std(i, k)) * noise(i, k) - alpha * inv_n;
    }
  return {loss, nn::backward(policy.net, head.cache, d_out).params};
}

double temperature_gradient(std::span<const double> log_probs, double target_entropy) {
  double acc = 0.0;
  for (double lp : log_probs) acc += lp + target_entropy;
  return -acc / static_cast<double>(log_probs.size());
}

void soft_update(const DenseParams& online, DenseParams& target, double tau) {
  if (online.sizes() != target.sizes()) throw nn::ShapeError("soft_update: shape mismatch");
  for (std::size_t l = 0; l < online.layers.size(); ++l) {
    auto blend = [tau](const std::vector<double>& src, std::vector<double>& dst) {
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = tau * src[i] + (1.0 - tau) * dst[i];
    };
    blend(online.layers[l].weight.data, target.layers[l].weight.data);
    blend(online.layers[l].bias, target.layers[l].bias);
  }
}

// ---------------------------------------------------------------- agent --

Agent::Agent(std::size_t obs_dim, std::size_t action_dim, const TrainConfig& config) : config_(config) {
  config_.validate();
  policy = make_policy(config.seed * 3 + 11, obs_dim, action_dim, config.hidden, config.log_std_min,
                       config.log_std_max);
  critics = make_critics(config.seed * 3 + 101, obs_dim, action_dim, config.hidden);
  policy_opt = nn::AdamState::for_params(policy.net);
  q1_opt = nn::AdamState::for_params(critics.q1);
  q2_opt = nn::AdamState::for_params(critics.q2);
  log_alpha = config.initial_log_alpha;
}

double Agent::alpha() const { return std::exp(log_alpha); }

UpdateStats Agent::update(const Batch& batch, Rng& rng) {
  const std::size_t n = batch.size();
  const Matrix noise = gaussian_noise(n, policy.action_dim, rng);
  const Matrix next_noise = gaussian_noise(n, policy.action_dim, rng);
  const nn::AdamConfig adam{config_.lr};
  UpdateStats stats;

  const double alpha_now = alpha();
  {
    const PolicyHead head = policy_forward(policy, batch.obs);
    const SquashedSample s = squash_sample(head, noise);
    double mean_term = 0.0;
    for (double lp : s.log_prob) mean_term += lp + config_.target_entropy;
    mean_term /= static_cast<double>(n);
    stats.temperature_loss = -log_alpha * mean_term;
    alpha_opt.step(log_alpha, temperature_gradient(s.log_prob, config_.target_entropy), adam);
  }

  const std::vector<double> y = critic_target(batch, critics, policy, alpha_now, config_.gamma, next_noise);
  const Matrix x = critic_input(batch.obs, batch.actions);
  LossAndGrad l1 = critic_loss(critics.q1, x, y);
  LossAndGrad l2 = critic_loss(critics.q2, x, y);
  nn::adam_step(critics.q1, l1.grad, q1_opt, adam);
  nn::adam_step(critics.q2, l2.grad, q2_opt, adam);

  LossAndGrad pl = policy_loss(policy, critics.q1, critics.q2, batch.obs, noise, alpha_now);
  nn::adam_step(policy.net, pl.grad, policy_opt, adam);

  soft_update(critics.q1, critics.target1, config_.tau);
  soft_update(critics.q2, critics.target2, config_.tau);
  ++updates;

  stats.critic1_loss = l1.loss;
  stats.critic2_loss = l2.loss;
  stats.policy_loss = pl.loss;
  stats.alpha = alpha();
  return stats;
}

void Agent::write(std::ostream& os) const {
  os.write("SCAG", 4);
  io::write_u32(os, 1);
  io::write_u64(os, policy.action_dim);
  io::write_f64(os, policy.log_std_min);
  io::write_f64(os, policy.log_std_max);
  nn::write_params(os, policy.net);
  write_adam(os, policy_opt);
  for (const auto* p : {&critics.q1, &critics.q2, &critics.target1, &critics.target2}) nn::write_params(os, *p);
  write_adam(os, q1_opt);
  write_adam(os, q2_opt);
  io::write_f64(os, log_alpha);
  io::write_f64(os, alpha_opt.m);
  io::write_f64(os, alpha_opt.v);
  io::write_u64(os, static_cast<std::uint64_t>(alpha_opt.t));
  io::write_u64(os, static_cast<std::uint64_t>(updates));
}

void Agent::read(std::istream& is) {
  io::expect_magic(is, "SCAG");
  if (io::read_u32(is) != 1) throw io::FormatError("unsupported agent version");
  PolicyNet p;
  p.action_dim = io::read_u64(is);
  p.log_std_min = io::read_f64(is);
  p.log_std_max = io::read_f64(is);
  p.net = nn::read_params(is);
  if (p.net.sizes() != policy.net.sizes()) throw io::FormatError("policy shape does not match the configuration");
  nn::AdamState popt = read_adam(is);
  TwinCritics c;
  for (auto* dst : {&c.q1, &c.q2, &c.target1, &c.target2}) *dst = nn::read_params(is);
  if (c.q1.sizes() != critics.q1.sizes() || c.target2.sizes() != critics.q1.sizes())
    throw io::FormatError("critic shape does not match the configuration");
  nn::AdamState o1 = read_adam(is), o2 = read_adam(is);
  policy = std::move(p);
  policy_opt = std::move(popt);
  critics = std::move(c);
  q1_opt = std::move(o1);
  q2_opt = std::move(o2);
  log_alpha = io::read_f64(is);
  alpha_opt.m = io::read_f64(is);
  alpha_opt.v = io::read_f64(is);
  alpha_opt.t = static_cast<std::int64_t>(io::read_u64(is));
  updates = static_cast<std::int64_t>(io::read_u64(is));
}

// ------------------------------------------------------------- training --

std::string metrics_header() {
  return "episode,total_steps,return,r_dist,r_align,r_surr,r_contact,longest_streak,success,critic_loss,policy_loss,"
         "alpha,updates";
}

std::string metrics_row(const EpisodeMetrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g,%.17g,%lld", m.episode,
                static_cast<long long>(m.total_steps), m.episode_return, m.term_sums.dist, m.term_sums.align,
                m.term_sums.surr, m.term_sums.contact, m.longest_streak, m.success ? 1 : 0, m.critic_loss,
                m.policy_loss, m.alpha, static_cast<long long>(m.updates));
  return buf;
}

std::uint64_t episode_seed(std::uint64_t run_seed, std::int64_t episode) {
  // splitmix64 finalizer over (seed, episode)
  std::uint64_t z = run_seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(episode) + 0xD1B54A32D192ED03ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Trainer::Trainer(EnvConfig env_config, TrainConfig config)
    : env_config_(std::move(env_config)),
      config_(std::move(config)),
      env_(env_config_),
      agent_(env_config_.obs_dim(), kActionDim, config_),
      buffer_(config_.buffer_capacity, env_config_.obs_dim(), kActionDim),
      rng_(config_.seed) {}

EpisodeMetrics Trainer::run_episode() {
  EpisodeMetrics m;
  m.episode = episodes_done_ + 1;
  Observation obs = env_.reset(episode_seed(config_.seed, episodes_done_));
  std::vector<double> rewards;
  rewards.reserve(static_cast<std::size_t>(env_config_.episode_length));
  double critic_sum = 0.0, policy_sum = 0.0;
  std::int64_t updates = 0;

  std::vector<double> action(kActionDim);
  while (!env_.done()) {
    if (total_steps_ < config_.warmup_steps) {
      for (double& a : action) a = rng_.uniform(-1.0, 1.0);
    } else {
      action = sample_action(agent_.policy, obs, rng_).action;
    }
    StepResult r = env_.step(action);
    // Episodes only end on the time limit, which is not a terminal state.
    buffer_.add(obs, action, r.reward, r.obs, false);
    ++total_steps_;

    if (total_steps_ > config_.warmup_steps && total_steps_ % config_.train_freq == 0) {
      for (int g = 0; g < config_.gradient_steps; ++g) {
        const Batch batch = buffer_.sample(config_.batch_size, rng_);
        try {
          const UpdateStats s = agent_.update(batch, rng_);
          critic_sum += 0.5 * (s.critic1_loss + s.critic2_loss);
          policy_sum += s.policy_loss;
          ++updates;
        } catch (const nn::NonFiniteError& e) {
          throw nn::NonFiniteError(std::string(e.what()) + " at step " + std::to_string(total_steps_));
        }
      }
    }
    m.term_sums.dist += r.terms.dist;
    m.term_sums.align += r.terms.align;
    m.term_sums.surr += r.terms.surr;
    m.term_sums.contact += r.terms.contact;
    m.episode_return += r.reward;
    rewards.push_back(r.reward);
    obs = std::move(r.obs);
  }
  ++episodes_done_;
  m.total_steps = total_steps_;
  m.longest_streak = longest_streak(rewards, env_config_.success_reward_threshold);
  m.success = m.longest_streak >= env_config_.success_streak_length;
  m.updates = updates;
  if (updates > 0) {
    m.critic_loss = critic_sum / static_cast<double>(updates);
    m.policy_loss = policy_sum / static_cast<double>(updates);
  }
  m.alpha = agent_.alpha();
  return m;
}

void Trainer::save_state(std::ostream& os) const {
  os.write("SCTR", 4);
  io::write_u32(os, 1);
  io::write_u64(os, static_cast<std::uint64_t>(episodes_done_));
  io::write_u64(os, static_cast<std::uint64_t>(total_steps_));
  io::write_string(os, rng_.state());
  agent_.write(os);
  buffer_.write(os);
}

void Trainer::load_state(std::istream& is) {
  io::expect_magic(is, "SCTR");
  if (io::read_u32(is) != 1) throw io::FormatError("unsupported trainer state version");
  const auto episodes = io::read_u64(is);
  const auto steps = io::read_u64(is);
  Rng rng;
  rng.set_state(io::read_string(is, 1 << 20));
  agent_.read(is);
  buffer_.read(is);
  episodes_done_ = static_cast<int>(episodes);
  total_steps_ = static_cast<std::int64_t>(steps);
  rng_ = rng;
}

void train(const EnvConfig& env_config, const TrainConfig& config,
           const std::function<void(const EpisodeMetrics&)>& on_episode) {
  Trainer trainer(env_config, config);
  for (int e = 0; e < config.episodes; ++e) on_episode(trainer.run_episode());
}

}  // namespace softcap::sac
