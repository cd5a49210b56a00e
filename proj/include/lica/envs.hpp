#pragma once

#include <array>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "lica/rng.hpp"
#include "lica/tensor.hpp"

namespace lica {

// Desk-scale cooperative Dec-POMDP environments behind one contract.
// All agents receive the same shared reward each step.

struct EnvSpec {
  int n_agents = 0;
  int n_actions = 0;
  int obs_dim = 0;
  int state_dim = 0;
  int max_steps = 1;
  double gamma = 0.99;
};

struct StepResult {
  Tensor next_state;
  std::vector<Tensor> next_obs;
  double reward = 0.0;
  bool terminated = false;  // natural end (not time-limit truncation)
  std::map<std::string, double> info;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual void reset(Rng& rng) = 0;
  virtual StepResult step(const std::vector<int>& joint_action) = 0;
  virtual Tensor state() const = 0;
  virtual Tensor observe(int agent) const = 0;
  virtual std::string name() const = 0;
};

// ---- 1-step traffic junction (two vehicles, pass/wait) -------------------
// Reward 1 when the two agents choose different actions, 0 otherwise; the
// episode always ends after one step. Observations are a dummy constant;
// agent identity reaches the (shared) policy through the standard id-append.

constexpr int kPass = 0;
constexpr int kWait = 1;

class TrafficJunctionEnv : public Env {
 public:
  TrafficJunctionEnv();
  const EnvSpec& spec() const override { return spec_; }
  void reset(Rng& rng) override;
  StepResult step(const std::vector<int>& joint_action) override;
  Tensor state() const override;
  Tensor observe(int agent) const override;
  std::string name() const override { return "traffic_junction"; }

 private:
  EnvSpec spec_;
  bool done_ = false;
};

// ---- particle environments ------------------------------------------------
// Discrete-time velocity-integrator physics with explicit constants:
//   v <- v*(1-damping) + force*dt,  p <- p + v*dt
// damping 0.5, force magnitude 1.0 per action, dt 0.1, agent radius 0.05
// (collision = center distance < sum of radii), spawn region [-1,1]^2.
// These constants are this artifact's own; no numeric parity with any
// external simulator is claimed.

struct Vec2 {
  double x = 0.0, y = 0.0;
};

namespace particles {
constexpr double kDamping = 0.5;
constexpr double kForce = 1.0;
constexpr double kDt = 0.1;
constexpr double kAgentRadius = 0.05;
constexpr double kSpawnLo = -1.0;
constexpr double kSpawnHi = 1.0;
constexpr double kPreyForce = 1.3;      // the prey is faster
constexpr double kCaptureRadius = 0.1;  // any predator this close captures
constexpr double kCaptureBonus = 10.0;
constexpr double kObstacleRadius = 0.2;  // observation feature only
constexpr int kNumActions = 5;           // up, down, left, right, stop
Vec2 action_force(int action, double magnitude);
}  // namespace particles

// n agents must cover n landmarks; shared reward is the negative sum over
// landmarks of the distance to the nearest agent, minus 1 per colliding
// agent pair. Episodes run to the step limit (default 200).
class CoopNavEnv : public Env {
 public:
  explicit CoopNavEnv(int n_agents = 3, int max_steps = 200);
  const EnvSpec& spec() const override { return spec_; }
  void reset(Rng& rng) override;
  StepResult step(const std::vector<int>& joint_action) override;
  Tensor state() const override;
  Tensor observe(int agent) const override;
  std::string name() const override { return "coop_nav"; }

  double reward_now() const;  // reward of the current configuration

  // public for tests that construct specific configurations
  std::vector<Vec2> agent_pos, agent_vel, landmark_pos;

 private:
  EnvSpec spec_;
  int t_ = 0;
};

// 3 predators chase a faster, uniformly random prey among 2 obstacles.
// Shared reward is minus the distance from the prey to the closest
// predator; capture (any predator within the capture radius) adds a bonus
// and ends the episode.
class PredatorPreyEnv : public Env {
 public:
  explicit PredatorPreyEnv(int max_steps = 200);
  const EnvSpec& spec() const override { return spec_; }
  void reset(Rng& rng) override;
  StepResult step(const std::vector<int>& joint_action) override;
  Tensor state() const override;
  Tensor observe(int agent) const override;
  std::string name() const override { return "predator_prey"; }

  std::vector<Vec2> predator_pos, predator_vel, obstacle_pos;
  Vec2 prey_pos, prey_vel;

 private:
  EnvSpec spec_;
  Rng prey_rng_;  // internal stream split off the reset rng
  int t_ = 0;
  bool done_ = false;
};

std::unique_ptr<Env> make_env(const std::string& name, int n_agents, int max_steps);

// One JSONL line per step: {"t":..,"state":[..],"obs":[[..],..],
// "actions":[..],"reward":..,"terminated":..}.
void dump_step_jsonl(std::ostream& os, int t, const Tensor& state,
                     const std::vector<Tensor>& obs,
                     const std::vector<int>& actions, double reward,
                     bool terminated);

}  // namespace lica
