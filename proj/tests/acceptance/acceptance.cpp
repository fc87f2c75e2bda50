// Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed
// here rather than taken from flags so a green run means the same thing
// everywhere. Exit status is nonzero when any gating criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "softcap/harness.hpp"
#include "support/oracles.hpp"

using namespace softcap;
using nn::DenseParams;
using nn::Matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Quat random_orientation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Quat{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(r, c);
  for (double& v : m.data) v = u(rng);
  return m;
}

Matrix normal_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (double& v : m.data) v = n(rng);
  return m;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------------ 1 --

Outcome reward_bounds() {
  const EnvConfig cfg;
  SoftCaptureEnv env(cfg);
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(0, 1);
  int violations = 0, surrounded = 0, touching = 0;
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 100000; ++i) {
    if (i % 100 == 0) env.reset(rng());
    WorldState w = env.world();
    // Offsets from metres away down to enveloping the target.
    const double scale = std::pow(10.0, -3.0 + 3.5 * u(rng));
    w.gripper.pose.position = w.target.pose.position + random_vec(rng, -scale, scale);
    w.gripper.pose.orientation = random_orientation(rng);
    w.target.pose.orientation = random_orientation(rng);
    w.contact_force = u(rng) < 0.3 ? 50.0 * u(rng) : 0.0;
    const RewardTerms t = compute_reward(w, cfg);
    const double r = t.total();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    const bool ok = r >= -1.0 && r <= 3.0 && t.dist > 0.0 && t.dist <= 1.0 && t.align > 0.0 && t.align <= 1.0 &&
                    (t.surr == 0.0 || t.surr == 1.0) && (t.contact == 0.0 || t.contact == -1.0);
    violations += !ok;
    surrounded += t.surr == 1.0;
    touching += t.contact == -1.0;
  }
  return {violations == 0 && surrounded > 0 && touching > 0,
          fmt("100000 states, %d violations, reward range [%.4f, %.4f], %d surrounded, %d in contact", violations, lo,
              hi, surrounded, touching)};
}

// ------------------------------------------------------------------ 2 --

Outcome maximum_reward() {
  const EnvConfig cfg;
  WorldState w;
  w.gripper = make_gripper(cfg.gripper);
  w.target.inertia_diag = box_inertia(1.0, cfg.target_half_extents);
  w.target_half_extents = cfg.target_half_extents;
  w.target.pose.position = {0.0004, -0.0003, 0.0005};
  w.target.pose.orientation = Quat::from_axis_angle({0, 0, 1}, 4e-4);
  const double pos_err = norm(w.target.pose.position);
  const double rot_err = norm(orientation_error(w.gripper.pose.orientation, w.target.pose.orientation));

  int corners_in = 0;
  for (const Vec3& c : w.target_box().corners_world())
    corners_in += contains_point(w.gripper.finger_region, w.gripper.pose, c, cfg.containment_margin);
  const bool no_contact = detect_contacts(w.gripper, w.target_box()).empty();
  const RewardTerms t = compute_reward(w, cfg);
  const double expected = 3.0 - std::tanh(pos_err) - std::tanh(rot_err);
  const bool pass = pos_err < 1e-3 && rot_err < 1e-3 && corners_in >= 1 && no_contact && t.surr == 1.0 &&
                    t.contact == 0.0 && t.total() > 2.99 && std::abs(t.total() - expected) < 1e-12;
  return {pass, fmt("reward %.12f, 3 - tanh residuals %.12f, %d corners contained, contact %s", t.total(), expected,
                    corners_in, no_contact ? "none" : "present")};
}

// ------------------------------------------------------------------ 3 --

Outcome conservation() {
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  double worst_l = 0, worst_e = 0;
  bool momentum_exact = true;
  for (int trial = 0; trial < 10; ++trial) {
    RigidBody b;
    b.mass = u(rng);
    b.inertia_diag = {u(rng), u(rng), u(rng)};
    b.pose.orientation = random_orientation(rng);
    b.pose.position = random_vec(rng, -1, 1);
    b.lin_vel = random_vec(rng, -0.5, 0.5);
    b.ang_vel = random_vec(rng, -2, 2);
    const Vec3 l0 = b.angular_momentum_world();
    const double e0 = b.rotational_energy();
    const Vec3 p0 = b.lin_vel * b.mass;
    for (int i = 0; i < 500; ++i) b = step_free_body(b, 1.0 / 240);
    worst_l = std::max(worst_l, norm(b.angular_momentum_world() - l0) / norm(l0));
    worst_e = std::max(worst_e, std::abs(b.rotational_energy() - e0) / e0);
    momentum_exact = momentum_exact && (b.lin_vel * b.mass == p0);
  }
  return {worst_l < 1e-4 && worst_e < 1e-4 && momentum_exact,
          fmt("10 rollouts x 500 steps: max |dL|/|L| %.3e, max |dE|/E %.3e, linear momentum %s", worst_l, worst_e,
              momentum_exact ? "exact" : "drifted")};
}

// ------------------------------------------------------------------ 4 --

Outcome contact_correctness() {
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> u(0, 1);
  const double dt = 1.0 / 240;
  double worst_rel = 0, worst_sep = 1e9, worst_bias = 0;
  for (int trial = 0; trial < 20; ++trial) {
    RigidBody target;
    target.mass = 0.5 + 1.5 * u(rng);
    const Vec3 h{0.03, 0.03, 0.04};
    target.inertia_diag = box_inertia(target.mass, h);
    target.pose.orientation = random_orientation(rng);
    target.pose.position = random_vec(rng, -0.2, 0.2);
    const Obb box{target.pose, h};
    // Central impact along the box's local -x face normal.
    const Vec3 n = quat_rotate(target.pose.orientation, {1, 0, 0});
    const Vec3 point = target.pose.position - n * h.x;
    const double v_target = 0.05 * u(rng);
    const double v_gripper = 0.1 + 0.5 * u(rng);
    target.lin_vel = n * v_target;
    const PointVelocity gripper = [&](const Vec3&) { return n * v_gripper; };

    SolverParams no_bias;
    no_bias.baumgarte = 0.0;
    const std::array<Contact, 1> c{Contact{point, n, 0.0}};
    const auto [after, res] = resolve_contacts(target, box, c, gripper, dt, no_bias);
    const double j_closed = target.mass * (v_gripper - v_target);
    worst_rel = std::max(worst_rel, std::abs(res.total_normal_impulse - j_closed) / j_closed);
    worst_sep = std::min(worst_sep, dot(after.lin_vel + cross(after.ang_vel_world(), point - after.pose.position) -
                                            gripper(point), n));

    // The position bias on its own: beta * depth / dt more approach speed.
    const double depth = 0.002 * u(rng);
    const std::array<Contact, 1> deep{Contact{point, n, depth}};
    const auto biased = resolve_contacts(target, box, deep, gripper, dt);
    const double j_bias = target.mass * (v_gripper - v_target + SolverParams{}.baumgarte * depth / dt);
    worst_bias = std::max(worst_bias, std::abs(biased.second.total_normal_impulse - j_bias) / j_bias);
  }
  return {worst_rel < 0.01 && worst_sep >= -1e-6 && worst_bias < 0.01,
          fmt("20 central impacts: max |j - m dv|/j %.3e, min post-contact normal velocity %.3e m/s, bias term error "
              "%.3e",
              worst_rel, worst_sep, worst_bias)};
}

// ------------------------------------------------------------------ 5 --

// Vertices of the finger region for a geometry: chain sphere centers and
// three palm points between the finger bases.
std::vector<Vec3> finger_region_vertices(const GripperGeometry& geo, const GripperBody& g) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < 9; ++i) pts.push_back(g.collision_spheres[i].center_body);
  const double circumradius = (geo.finger_clearance + 2 * geo.finger_radius) / std::numbers::sqrt3;
  const double palm_z = -0.75 * geo.finger_span;
  for (int f = 0; f < 3; ++f) {
    const double a = -std::numbers::pi / 2 + f * 2 * std::numbers::pi / 3;
    pts.push_back({0.3 * circumradius * std::cos(a), 0.3 * circumradius * std::sin(a), palm_z});
  }
  return pts;
}

Outcome containment_equivalence() {
  std::mt19937_64 rng(5005);
  std::uniform_real_distribution<double> u(0, 1);
  int cases = 0, agree = 0, inside = 0, skipped = 0;
  while (cases < 1000) {
    GripperGeometry geo;
    geo.finger_clearance = 0.08 + 0.15 * u(rng);
    geo.finger_radius = 0.006 + 0.012 * u(rng);
    geo.finger_span = 0.06 + 0.12 * u(rng);
    const GripperBody g = make_gripper(geo);
    const std::vector<Vec3> verts = finger_region_vertices(geo, g);
    const Pose pose{random_vec(rng, -0.5, 0.5), random_orientation(rng)};
    Vec3 lo{1e9, 1e9, 1e9}, hi{-1e9, -1e9, -1e9};
    for (const Vec3& v : verts)
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
    // Bounding box grown by a fifth on each side.
    Vec3 local;
    for (int k = 0; k < 3; ++k) {
      const double pad = 0.2 * (hi[k] - lo[k]);
      local[k] = std::uniform_real_distribution<double>(lo[k] - pad, hi[k] + pad)(rng);
    }
    double face = 1e9;
    for (const auto& hs : g.finger_region.half_spaces()) face = std::min(face, std::abs(dot(hs.normal, local) - hs.offset));
    if (face < 1e-6) {
      ++skipped;
      continue;
    }
    const bool want = oracle::in_hull_by_simplices(verts, local);
    const bool got = contains_point(g.finger_region, pose, pose.to_world(local), 0.0);
    agree += want == got;
    inside += want;
    ++cases;
  }
  return {agree == cases, fmt("%d/%d agree (%d inside, %d near-face points skipped)", agree, cases, inside, skipped)};
}

// ------------------------------------------------------------------ 6 --

struct GradTally {
  int checked = 0, bad = 0;
  double worst = 0;

  void add(double analytic, double numeric) {
    ++checked;
    if (!oracle::grad_close(analytic, numeric)) ++bad;
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
};

void check_params(DenseParams& params, const DenseParams& grad, const std::function<double()>& loss, GradTally& t) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto nw = oracle::central_difference(params.layers[l].weight.data, loss);
    const auto nb = oracle::central_difference(params.layers[l].bias, loss);
    for (std::size_t i = 0; i < nw.size(); ++i) t.add(grad.layers[l].weight.data[i], nw[i]);
    for (std::size_t i = 0; i < nb.size(); ++i) t.add(grad.layers[l].bias[i], nb[i]);
  }
}

Outcome gradient_correctness() {
  std::mt19937_64 rng(6006);
  GradTally net, logp, critic, actor, temp;

  for (int trial = 0; trial < 4; ++trial) {
    DenseParams p = nn::init_params(rng(), std::vector<std::size_t>{5, 12, 12, 3});
    for (auto& l : p.layers)
      for (double& b : l.bias) b = std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
    const auto act = trial % 2 ? nn::OutputActivation::kTanh : nn::OutputActivation::kLinear;
    Matrix x = random_matrix(4, 5, rng);
    const Matrix c = random_matrix(4, 3, rng);
    nn::ForwardCache cache;
    nn::forward(p, x, act, &cache);
    const nn::Gradients g = nn::backward(p, cache, c);
    auto loss = [&] {
      const Matrix y = nn::forward(p, x, act);
      double s = 0;
      for (std::size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * c.data[i];
      return s;
    };
    check_params(p, g.params, loss, net);
    const auto nx = oracle::central_difference(x.data, loss);
    for (std::size_t i = 0; i < nx.size(); ++i) net.add(g.input.data[i], nx[i]);
  }

  const std::size_t obs_dim = 6, act_dim = 3;
  const std::vector<std::size_t> hidden{10, 10};
  sac::PolicyNet policy = sac::make_policy(rng(), obs_dim, act_dim, hidden);
  sac::TwinCritics critics = sac::make_critics(rng(), obs_dim, act_dim, hidden);
  sac::Batch batch;
  batch.obs = random_matrix(4, obs_dim, rng);
  batch.actions = random_matrix(4, act_dim, rng, 0.9);
  batch.next_obs = random_matrix(4, obs_dim, rng);
  batch.rewards = {0.5, 2.1, -0.7, 1.3};
  batch.terminal = {0, 0, 0, 0};
  const Matrix noise = normal_matrix(4, act_dim, rng);
  const double alpha = 0.4;

  // A constant critic leaves only the entropy term: the gradient of mean log pi.
  DenseParams flat;
  flat.layers.push_back(nn::DenseLayer{Matrix(1, obs_dim + act_dim), {1.5}});
  const auto lp = sac::policy_loss(policy, flat, flat, batch.obs, noise, 1.0);
  check_params(policy.net, lp.grad,
               [&] { return sac::policy_loss(policy, flat, flat, batch.obs, noise, 1.0).loss; }, logp);

  const Matrix x = sac::critic_input(batch.obs, batch.actions);
  const auto y = sac::critic_target(batch, critics, policy, alpha, 0.99, noise);
  for (DenseParams* q : {&critics.q1, &critics.q2}) {
    const auto cg = sac::critic_loss(*q, x, y);
    check_params(*q, cg.grad, [&] { return sac::critic_loss(*q, x, y).loss; }, critic);
  }
  const auto pg = sac::policy_loss(policy, critics.q1, critics.q2, batch.obs, noise, alpha);
  check_params(policy.net, pg.grad,
               [&] { return sac::policy_loss(policy, critics.q1, critics.q2, batch.obs, noise, alpha).loss; }, actor);

  std::vector<double> log_alpha{-0.3};
  const std::vector<double> lps{1.2, -0.4, 3.3, 0.1};
  const auto nt = oracle::central_difference(log_alpha, [&] {
    double s = 0;
    for (double v : lps) s -= log_alpha[0] * (v - 3.0);
    return s / 4;
  });
  temp.add(sac::temperature_gradient(lps, -3.0), nt[0]);

  const int bad = net.bad + logp.bad + critic.bad + actor.bad + temp.bad;
  const int total = net.checked + logp.checked + critic.checked + actor.checked + temp.checked;
  return {bad == 0, fmt("%d/%d partials within 1e-4 rel (1e-8 abs): nets %d, log-prob %d, critic %d, policy %d, "
                        "temperature %d; worst rel %.2e",
                        total - bad, total, net.checked, logp.checked, critic.checked, actor.checked, temp.checked,
                        std::max({net.worst, logp.worst, critic.worst, actor.worst}))};
}

// ------------------------------------------------------------------ 7 --

double param_distance(const DenseParams& a, const DenseParams& b) {
  double s = 0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t i = 0; i < a.layers[l].weight.data.size(); ++i)
      s += std::pow(a.layers[l].weight.data[i] - b.layers[l].weight.data[i], 2);
    for (std::size_t i = 0; i < a.layers[l].bias.size(); ++i) s += std::pow(a.layers[l].bias[i] - b.layers[l].bias[i], 2);
  }
  return std::sqrt(s);
}

Outcome sac_mechanics() {
  std::mt19937_64 rng(7007);
  std::vector<std::string> failed;
  const std::size_t obs_dim = 5, act_dim = 2;
  const std::vector<std::size_t> hidden{16, 16};
  const sac::PolicyNet policy = sac::make_policy(rng(), obs_dim, act_dim, hidden);
  const sac::TwinCritics critics = sac::make_critics(rng(), obs_dim, act_dim, hidden);
  sac::Batch b;
  b.obs = random_matrix(8, obs_dim, rng);
  b.actions = random_matrix(8, act_dim, rng, 0.9);
  b.next_obs = random_matrix(8, obs_dim, rng);
  b.rewards.assign(8, 1.0);
  b.terminal.assign(8, 0.0);
  const Matrix noise = normal_matrix(8, act_dim, rng);

  // Twin minimum: raising either copy leaves targets and policy loss unchanged.
  sac::TwinCritics same = critics;
  same.target2 = same.target1;
  same.q2 = same.q1;
  const auto base_y = sac::critic_target(b, same, policy, 0.2, 0.99, noise);
  const auto base_pl = sac::policy_loss(policy, same.q1, same.q2, b.obs, noise, 0.2);
  bool twin_ok = true;
  for (int which = 0; which < 2; ++which) {
    sac::TwinCritics raised = same;
    (which ? raised.target2 : raised.target1).layers.back().bias[0] += 10.0;
    (which ? raised.q2 : raised.q1).layers.back().bias[0] += 10.0;
    twin_ok = twin_ok && sac::critic_target(b, raised, policy, 0.2, 0.99, noise) == base_y;
    const auto pl = sac::policy_loss(policy, raised.q1, raised.q2, b.obs, noise, 0.2);
    twin_ok = twin_ok && pl.loss == base_pl.loss && pl.grad == base_pl.grad;
  }
  if (!twin_ok) failed.push_back("twin-min");

  // Temperature stays positive even when pushed hard from both sides.
  bool alpha_ok = true;
  for (double start : {-30.0, 5.0}) {
    sac::TrainConfig cfg;
    cfg.hidden = hidden;
    cfg.initial_log_alpha = start;
    cfg.lr = 0.05;
    sac::Agent agent(obs_dim, act_dim, cfg);
    sac::Rng r(11);
    for (int i = 0; i < 100; ++i) {
      const auto s = agent.update(b, r);
      alpha_ok = alpha_ok && s.alpha > 0.0 && agent.alpha() > 0.0 && std::isfinite(agent.alpha());
      const auto head = sac::policy_forward(agent.policy, b.obs);
      for (double v : head.log_std.data) alpha_ok = alpha_ok && v >= cfg.log_std_min && v <= cfg.log_std_max;
    }
  }
  if (!alpha_ok) failed.push_back("alpha/log-std during updates");

  // Soft update decays the gap geometrically.
  const DenseParams online = nn::init_params(rng(), std::vector<std::size_t>{4, 8, 1});
  DenseParams target = nn::init_params(rng(), std::vector<std::size_t>{4, 8, 1});
  const double d0 = param_distance(online, target);
  double worst_decay = 0;
  for (int n = 1; n <= 2000; ++n) {
    sac::soft_update(online, target, 0.005);
    worst_decay = std::max(worst_decay, std::abs(param_distance(online, target) - d0 * std::pow(0.995, n)));
  }
  if (worst_decay > 1e-9) failed.push_back("soft update");

  // Replay draws are uniform over filled slots.
  sac::ReplayBuffer buf(10, 1, 1);
  for (int i = 0; i < 10; ++i) {
    const std::array<double, 1> o{double(i)}, a{0.0};
    buf.add(o, a, 0.0, o, false);
  }
  std::array<double, 10> freq{};
  sac::Rng r(13);
  const std::size_t draws = 1000000;
  for (std::size_t idx : buf.sample_indices(draws, r)) freq[idx] += 1.0;
  double worst_freq = 0;
  for (double f : freq) worst_freq = std::max(worst_freq, std::abs(f / (draws / 10.0) - 1.0));
  if (worst_freq > 0.01) failed.push_back("replay uniformity");

  // Log-std clamp holds for wildly large raw outputs.
  bool clamp_ok = true;
  for (double raw : {-500.0, 500.0}) {
    sac::PolicyNet p = policy;
    for (std::size_t k = act_dim; k < 2 * act_dim; ++k) p.net.layers.back().bias[k] = raw;
    const auto head = sac::policy_forward(p, b.obs);
    for (double v : head.log_std.data) clamp_ok = clamp_ok && v >= -20.0 && v <= 2.0;
    const auto s = sac::squash_sample(head, noise);
    for (std::size_t i = 0; i < s.action.data.size(); ++i) clamp_ok = clamp_ok && std::abs(s.action.data[i]) <= 1.0;
    for (double v : s.log_prob) clamp_ok = clamp_ok && !std::isnan(v);
  }
  if (!clamp_ok) failed.push_back("log-std clamp");

  std::string names;
  for (const auto& f : failed) names += " " + f;
  return {failed.empty(),
          fmt("twin-min %s, alpha positive %s, max soft-update gap error %.2e, max replay deviation %.3f%%, clamp %s%s",
              twin_ok ? "ok" : "broken", alpha_ok ? "ok" : "broken", worst_decay, 100 * worst_freq,
              clamp_ok ? "ok" : "broken", failed.empty() ? "" : ("; failed:" + names).c_str())};
}

// ------------------------------------------------------------------ 8 --

Outcome determinism(const std::filesystem::path& work) {
  harness::RunConfig cfg;
  cfg.train.episodes = 20;
  cfg.train.hidden = {64, 64};
  cfg.train.batch_size = 128;
  cfg.train.warmup_steps = 2000;
  cfg.train.buffer_capacity = 20000;
  cfg.checkpoint_every = 10;
  std::ostringstream log;
  std::string metrics[2], ckpt[2];
  for (int run = 0; run < 2; ++run) {
    cfg.out_dir = work / ("determinism_" + std::to_string(run));
    std::filesystem::remove_all(cfg.out_dir);
    harness::run_train(cfg, log);
    metrics[run] = slurp(cfg.out_dir / "metrics.csv");
    ckpt[run] = slurp(cfg.out_dir / "checkpoint.bin");
  }
  const auto rows = std::count(metrics[0].begin(), metrics[0].end(), '\n') - 1;
  const bool same = metrics[0] == metrics[1] && ckpt[0] == ckpt[1] && rows == 20;

  // Matched seeds and actions: only the force channel may differ.
  EnvConfig plain, tactile;
  tactile.tactile_enabled = true;
  std::mt19937_64 rng(8008);
  std::uniform_real_distribution<double> u(-1, 1);
  int mismatches = 0, force_steps = 0, steps = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    SoftCaptureEnv a(plain), b(tactile);
    Observation oa = a.reset(seed), ob = b.reset(seed);
    mismatches += oa.size() != 39 || ob.size() != 40 || !std::equal(oa.begin(), oa.end(), ob.begin());
    while (!a.done()) {
      std::array<double, kActionDim> act;
      for (auto& v : act) v = u(rng);
      // Steer one finger chain onto the target so the force channel is exercised.
      const std::array<double, 3> aim{0.0, 0.1, 0.0};
      for (std::size_t k = 0; k < 3; ++k) act[k] = std::clamp(30.0 * (oa[24 + k] - aim[k]) + 0.3 * act[k], -1.0, 1.0);
      const StepResult ra = a.step(act), rb = b.step(act);
      oa = ra.obs;
      mismatches += !std::equal(ra.obs.begin(), ra.obs.end(), rb.obs.begin()) || ra.reward != rb.reward;
      force_steps += rb.obs[39] != 0.0;
      ++steps;
    }
  }
  return {same && mismatches == 0,
          fmt("metrics %s over %ld rows, checkpoints %s; tactile vs plain: %d/%d steps differ outside entry 39 "
              "(%d steps with nonzero force)",
              metrics[0] == metrics[1] ? "byte-identical" : "DIFFER", static_cast<long>(rows),
              ckpt[0] == ckpt[1] ? "byte-identical" : "DIFFER", mismatches, steps, force_steps)};
}

// ------------------------------------------------------------------ 9 --

Outcome learning_signal() {
  const EnvConfig env = diagnostic_translation_config();
  sac::TrainConfig cfg;
  cfg.episodes = 200;
  cfg.hidden = {64, 64};
  cfg.batch_size = 128;
  cfg.lr = 1e-3;
  cfg.train_freq = 1;
  cfg.warmup_steps = 5000;
  // Three live action dimensions; a short horizon suits the dense reward.
  cfg.gamma = 0.9;
  cfg.target_entropy = -3.0;
  cfg.seed = 1;
  std::vector<double> returns;
  const auto t0 = std::chrono::steady_clock::now();
  sac::train(env, cfg, [&](const sac::EpisodeMetrics& m) { returns.push_back(m.episode_return); });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += returns[static_cast<std::size_t>(i)] / 10;
    last += returns[returns.size() - 10 + static_cast<std::size_t>(i)] / 10;
  }
  const double ratio = last / first;
  return {ratio >= 1.5 && seconds <= 900.0,
          fmt("first-10 mean return %.1f, last-10 mean %.1f, ratio %.3f (need >= 1.5), %.0f s (limit 900)", first, last,
              ratio, seconds)};
}

// ----------------------------------------------------------------- 10 --

Outcome long_compare(const std::filesystem::path& work) {
  harness::RunConfig cfg;
  cfg.mode = harness::Mode::kCompare;
  cfg.train.episodes = 2000;
  cfg.eval_episodes = 100;
  cfg.out_dir = work / "compare_2000";
  std::ostringstream log;
  const auto rows = harness::run_compare(cfg, log);
  return {true, fmt("tactile success %.3f, no tactile success %.3f over %d eval episodes (no ordering asserted)",
                    rows[0].eval.success_rate, rows[1].eval.success_rate, rows[0].eval.episodes)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"softcap acceptance run"};
  std::set<int> only;
  bool long_mode = false;
  std::string work = (std::filesystem::temp_directory_path() / "softcap_acceptance").string();
  app.add_option("--only", only, "Run just these criteria")->delimiter(',')->check(CLI::Range(1, 10));
  app.add_flag("--long", long_mode, "Also run the 2000-episode tactile comparison (hours)");
  app.add_option("--work", work, "Scratch directory for training runs");
  CLI11_PARSE(app, argc, argv);

  const std::filesystem::path work_dir(work);
  std::filesystem::create_directories(work_dir);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "reward bounds", reward_bounds},
      {2, "maximum reward", maximum_reward},
      {3, "torque-free conservation", conservation},
      {4, "contact impulse", contact_correctness},
      {5, "containment oracle", containment_equivalence},
      {6, "gradients", gradient_correctness},
      {7, "SAC mechanics", sac_mechanics},
      {8, "determinism", [&] { return determinism(work_dir); }},
      {9, "learning signal", learning_signal},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("criterion %d %-26s %s  %s  [%.1fs]\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), s);
    std::fflush(stdout);
  }

  if (only.empty() || only.count(10)) {
    if (long_mode) {
      try {
        const Outcome o = long_compare(work_dir);
        std::printf("criterion 10 %-26s INFO  %s\n", "2000-episode comparison", o.detail.c_str());
      } catch (const std::exception& e) {
        std::printf("criterion 10 %-26s INFO  did not complete: %s\n", "2000-episode comparison", e.what());
      }
    } else {
      std::printf("criterion 10 %-26s SKIP  non-gating; pass --long to train both arms for 2000 episodes\n",
                  "2000-episode comparison");
    }
  }
  std::printf("%s: %d gating failure(s)\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
