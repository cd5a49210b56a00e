#include "lica/envs.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace lica {

namespace {

double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

void check_actions(const std::string& env, const std::vector<int>& joint,
                   int n_agents, int n_actions) {
  if (static_cast<int>(joint.size()) != n_agents)
    throw std::invalid_argument(env + ": expected " + std::to_string(n_agents) +
                                " actions, got " + std::to_string(joint.size()));
  for (int a : joint)
    if (a < 0 || a >= n_actions)
      throw std::invalid_argument(env + ": action index " + std::to_string(a) +
                                  " out of range [0," + std::to_string(n_actions) + ")");
}

Vec2 spawn(Rng& rng) {
  return {rng.uniform(particles::kSpawnLo, particles::kSpawnHi),
          rng.uniform(particles::kSpawnLo, particles::kSpawnHi)};
}

void integrate(Vec2& pos, Vec2& vel, const Vec2& force) {
  vel.x = vel.x * (1.0 - particles::kDamping) + force.x * particles::kDt;
  vel.y = vel.y * (1.0 - particles::kDamping) + force.y * particles::kDt;
  pos.x += vel.x * particles::kDt;
  pos.y += vel.y * particles::kDt;
}

}  // namespace

namespace particles {
Vec2 action_force(int action, double magnitude) {
  switch (action) {
    case 0: return {0.0, magnitude};   // up
    case 1: return {0.0, -magnitude};  // down
    case 2: return {-magnitude, 0.0};  // left
    case 3: return {magnitude, 0.0};   // right
    default: return {0.0, 0.0};        // stop
  }
}
}  // namespace particles

// ---- traffic junction ----------------------------------------------------

TrafficJunctionEnv::TrafficJunctionEnv() {
  spec_.n_agents = 2;
  spec_.n_actions = 2;
  spec_.obs_dim = 1;
  spec_.state_dim = 1;
  spec_.max_steps = 1;
  spec_.gamma = 0.99;
}

void TrafficJunctionEnv::reset(Rng&) { done_ = false; }

StepResult TrafficJunctionEnv::step(const std::vector<int>& joint_action) {
  check_actions("traffic_junction", joint_action, 2, 2);
  if (done_) throw std::runtime_error("traffic_junction: episode already ended");
  done_ = true;
  StepResult r;
  r.reward = joint_action[0] != joint_action[1] ? 1.0 : 0.0;
  r.terminated = true;
  r.next_state = state();
  r.next_obs = {observe(0), observe(1)};
  r.info["optimal"] = r.reward;
  return r;
}

Tensor TrafficJunctionEnv::state() const { return Tensor({1}, {1.0}); }

Tensor TrafficJunctionEnv::observe(int agent) const {
  if (agent < 0 || agent >= 2)
    throw std::invalid_argument("traffic_junction: bad agent id " + std::to_string(agent));
  return Tensor({1}, {1.0});
}

// ---- cooperative navigation ------------------------------------------------

CoopNavEnv::CoopNavEnv(int n_agents, int max_steps) {
  if (n_agents < 2) throw std::invalid_argument("coop_nav: need at least 2 agents");
  spec_.n_agents = n_agents;
  spec_.n_actions = particles::kNumActions;
  spec_.obs_dim = 2 + 2 * (n_agents - 1) + 2 * n_agents;  // vel + others + landmarks
  spec_.state_dim = 6 * n_agents;  // positions, velocities, landmark positions
  spec_.max_steps = max_steps;
  spec_.gamma = 0.9;
}

void CoopNavEnv::reset(Rng& rng) {
  const int n = spec_.n_agents;
  agent_pos.assign(static_cast<std::size_t>(n), {});
  agent_vel.assign(static_cast<std::size_t>(n), {});
  landmark_pos.assign(static_cast<std::size_t>(n), {});
  for (auto& p : agent_pos) p = spawn(rng);
  for (auto& p : landmark_pos) p = spawn(rng);
  t_ = 0;
}

double CoopNavEnv::reward_now() const {
  const int n = spec_.n_agents;
  double reward = 0.0;
  for (int l = 0; l < n; ++l) {
    double best = 1e300;
    for (int a = 0; a < n; ++a)
      best = std::min(best, dist(landmark_pos[static_cast<std::size_t>(l)],
                                 agent_pos[static_cast<std::size_t>(a)]));
    reward -= best;
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (dist(agent_pos[static_cast<std::size_t>(a)],
               agent_pos[static_cast<std::size_t>(b)]) < 2.0 * particles::kAgentRadius)
        reward -= 1.0;  // -1 per colliding pair
  return reward;
}

StepResult CoopNavEnv::step(const std::vector<int>& joint_action) {
  const int n = spec_.n_agents;
  check_actions("coop_nav", joint_action, n, spec_.n_actions);
  for (int a = 0; a < n; ++a)
    integrate(agent_pos[static_cast<std::size_t>(a)], agent_vel[static_cast<std::size_t>(a)],
              particles::action_force(joint_action[static_cast<std::size_t>(a)],
                                      particles::kForce));
  ++t_;
  StepResult r;
  r.reward = reward_now();
  r.terminated = false;  // coop-nav only ever truncates at the step limit
  r.next_state = state();
  for (int a = 0; a < n; ++a) r.next_obs.push_back(observe(a));
  int collisions = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (dist(agent_pos[static_cast<std::size_t>(a)],
               agent_pos[static_cast<std::size_t>(b)]) < 2.0 * particles::kAgentRadius)
        ++collisions;
  r.info["collisions"] = static_cast<double>(collisions);
  return r;
}

Tensor CoopNavEnv::state() const {
  std::vector<double> s;
  for (const auto& p : agent_pos) { s.push_back(p.x); s.push_back(p.y); }
  for (const auto& v : agent_vel) { s.push_back(v.x); s.push_back(v.y); }
  for (const auto& p : landmark_pos) { s.push_back(p.x); s.push_back(p.y); }
  return Tensor({spec_.state_dim}, std::move(s));
}

Tensor CoopNavEnv::observe(int agent) const {
  const int n = spec_.n_agents;
  if (agent < 0 || agent >= n)
    throw std::invalid_argument("coop_nav: bad agent id " + std::to_string(agent));
  const auto ai = static_cast<std::size_t>(agent);
  std::vector<double> o;
  o.push_back(agent_vel[ai].x);
  o.push_back(agent_vel[ai].y);
  for (int b = 0; b < n; ++b) {
    if (b == agent) continue;
    o.push_back(agent_pos[static_cast<std::size_t>(b)].x - agent_pos[ai].x);
    o.push_back(agent_pos[static_cast<std::size_t>(b)].y - agent_pos[ai].y);
  }
  for (const auto& l : landmark_pos) {
    o.push_back(l.x - agent_pos[ai].x);
    o.push_back(l.y - agent_pos[ai].y);
  }
  return Tensor({spec_.obs_dim}, std::move(o));
}

// ---- predator-prey ---------------------------------------------------------

PredatorPreyEnv::PredatorPreyEnv(int max_steps) {
  spec_.n_agents = 3;
  spec_.n_actions = particles::kNumActions;
  spec_.obs_dim = 2 + 2 + 2 + 4 + 4;  // vel, pos, prey, 2 obstacles, 2 others
  spec_.state_dim = 6 + 6 + 2 + 2 + 4;
  spec_.max_steps = max_steps;
  spec_.gamma = 0.99;
}

void PredatorPreyEnv::reset(Rng& rng) {
  predator_pos.assign(3, {});
  predator_vel.assign(3, {});
  obstacle_pos.assign(2, {});
  for (auto& p : predator_pos) p = spawn(rng);
  prey_pos = spawn(rng);
  prey_vel = {};
  for (auto& p : obstacle_pos) p = spawn(rng);
  prey_rng_ = Rng(rng.next_u64());
  t_ = 0;
  done_ = false;
}

StepResult PredatorPreyEnv::step(const std::vector<int>& joint_action) {
  check_actions("predator_prey", joint_action, 3, spec_.n_actions);
  if (done_) throw std::runtime_error("predator_prey: episode already ended");
  for (int a = 0; a < 3; ++a)
    integrate(predator_pos[static_cast<std::size_t>(a)],
              predator_vel[static_cast<std::size_t>(a)],
              particles::action_force(joint_action[static_cast<std::size_t>(a)],
                                      particles::kForce));
  const int prey_action = prey_rng_.randint(particles::kNumActions);
  integrate(prey_pos, prey_vel,
            particles::action_force(prey_action, particles::kPreyForce));
  ++t_;

  double min_dist = 1e300;
  for (const auto& p : predator_pos) min_dist = std::min(min_dist, dist(p, prey_pos));
  StepResult r;
  r.reward = -min_dist;
  if (min_dist < particles::kCaptureRadius) {
    r.reward += particles::kCaptureBonus;
    r.terminated = true;
    done_ = true;
  }
  r.info["captured"] = r.terminated ? 1.0 : 0.0;
  r.next_state = state();
  for (int a = 0; a < 3; ++a) r.next_obs.push_back(observe(a));
  return r;
}

Tensor PredatorPreyEnv::state() const {
  std::vector<double> s;
  for (const auto& p : predator_pos) { s.push_back(p.x); s.push_back(p.y); }
  for (const auto& v : predator_vel) { s.push_back(v.x); s.push_back(v.y); }
  s.push_back(prey_pos.x);
  s.push_back(prey_pos.y);
  s.push_back(prey_vel.x);
  s.push_back(prey_vel.y);
  for (const auto& p : obstacle_pos) { s.push_back(p.x); s.push_back(p.y); }
  return Tensor({spec_.state_dim}, std::move(s));
}

Tensor PredatorPreyEnv::observe(int agent) const {
  if (agent < 0 || agent >= 3)
    throw std::invalid_argument("predator_prey: bad agent id " + std::to_string(agent));
  const auto ai = static_cast<std::size_t>(agent);
  std::vector<double> o;
  o.push_back(predator_vel[ai].x);
  o.push_back(predator_vel[ai].y);
  o.push_back(predator_pos[ai].x);
  o.push_back(predator_pos[ai].y);
  o.push_back(prey_pos.x - predator_pos[ai].x);
  o.push_back(prey_pos.y - predator_pos[ai].y);
  for (const auto& ob : obstacle_pos) {
    o.push_back(ob.x - predator_pos[ai].x);
    o.push_back(ob.y - predator_pos[ai].y);
  }
  for (int b = 0; b < 3; ++b) {
    if (b == agent) continue;
    o.push_back(predator_pos[static_cast<std::size_t>(b)].x - predator_pos[ai].x);
    o.push_back(predator_pos[static_cast<std::size_t>(b)].y - predator_pos[ai].y);
  }
  return Tensor({spec_.obs_dim}, std::move(o));
}

std::unique_ptr<Env> make_env(const std::string& name, int n_agents, int max_steps) {
  if (name == "traffic_junction") return std::make_unique<TrafficJunctionEnv>();
  if (name == "coop_nav") return std::make_unique<CoopNavEnv>(n_agents, max_steps);
  if (name == "predator_prey") return std::make_unique<PredatorPreyEnv>(max_steps);
  throw std::invalid_argument("unknown environment '" + name +
                              "' (expected traffic_junction, coop_nav or predator_prey)");
}

void dump_step_jsonl(std::ostream& os, int t, const Tensor& state,
                     const std::vector<Tensor>& obs,
                     const std::vector<int>& actions, double reward,
                     bool terminated) {
  nlohmann::json j;
  j["t"] = t;
  j["state"] = state.data();
  std::vector<std::vector<double>> obs_rows;
  for (const auto& o : obs) obs_rows.push_back(o.data());
  j["obs"] = obs_rows;
  j["actions"] = actions;
  j["reward"] = reward;
  j["terminated"] = terminated;
  os << j.dump() << "\n";
}

}  // namespace lica
