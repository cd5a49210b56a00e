#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lica/config.hpp"
#include "lica/envs.hpp"
#include "lica/nets.hpp"
#include "lica/rng.hpp"
#include "lica/tensor.hpp"

namespace lica {

enum class EntropyMode { adaptive, vanilla };
enum class InputMode { distribution_params, gumbel_st };

EntropyMode entropy_mode_from_string(const std::string& s);
InputMode input_mode_from_string(const std::string& s);
CriticKind critic_kind_from_string(const std::string& s);

// Floor on the detached entropy denominator of the adaptive coefficient;
// the raw 1/H blows up as policies approach determinism.
constexpr double kAdaptiveEntropyFloor = 1e-3;

struct StepOpts {
  double gamma = 0.99;
  double lambda = 0.8;
  EntropyMode entropy_mode = EntropyMode::adaptive;
  double entropy_coeff = 0.06;
  InputMode input_mode = InputMode::distribution_params;
  double gumbel_temperature = 1.0;
  double grad_clip = 10.0;
};
StepOpts step_opts(const TrainConfig& c);

// ---- episode storage ------------------------------------------------------

struct Episode {
  std::vector<Tensor> states;              // [t], each {state_dim}
  std::vector<std::vector<Tensor>> obs;    // [t][agent], each {obs_dim}
  std::vector<std::vector<int>> actions;   // [t][agent]
  std::vector<double> rewards;             // [t]
  bool terminated = false;                 // natural end at the last step
  Tensor final_state;                      // s_{T+1}
  std::vector<Tensor> final_obs;           // z_{T+1}
  std::vector<int> bootstrap_actions;      // u_{T+1} sampled on truncation
  int length() const { return static_cast<int>(rewards.size()); }
};

struct EpisodeBatch {
  EnvSpec spec;
  bool shared_policy = false;  // agent id appended to policy inputs
  std::vector<Episode> episodes;
  int max_length() const;
  long total_steps() const;
};

int policy_input_dim(const EnvSpec& spec, bool shared);
// Row {1, obs_dim (+ n for the id one-hot when shared)}.
Tensor policy_input(const Tensor& obs, int agent, bool shared, int n_agents);

// ---- rollout ---------------------------------------------------------------

using EnvFactory = std::function<std::unique_ptr<Env>()>;

struct RolloutOpts {
  int episodes = 32;
  bool greedy = false;
  std::uint64_t seed = 0;
  std::uint64_t stream = stream::kRollout;
  std::uint64_t iteration = 0;
  int workers = 1;
};

// Episodes are assigned to workers by index; per-episode RNG streams are
// derived from (seed, stream, iteration, episode), so results are identical
// for any worker count.
EpisodeBatch rollout(const EnvFactory& factory, const PolicyParams& policy,
                     const RolloutOpts& opts);

// ---- optimizer --------------------------------------------------------------

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<std::vector<double>> m, v;
};

AdamState make_adam(const std::vector<Tensor*>& params, double lr);
// Rescales gradients so their joint L2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_global_norm(const std::vector<Tensor*>& params, double max_norm);
void adam_step(const std::vector<Tensor*>& params, AdamState& state);

// ---- TD(lambda) targets ------------------------------------------------------

// Recursive targets: y[T-1] = r[T-1] (+ gamma * bootstrap_q if truncated);
// y[t] = r[t] + gamma * (lambda * y[t+1] + (1-lambda) * q_next[t]) where
// q_next[t] = Q(s_{t+2-1}, u_{t+1}) evaluated by the target critic on the
// sampled next action. q_next.size() == rewards.size() - 1.
std::vector<double> td_lambda_from_q(const std::vector<double>& rewards,
                                     const std::vector<double>& q_next,
                                     bool terminated, double bootstrap_q,
                                     double gamma, double lambda);

std::vector<std::vector<double>> batch_td_targets(const EpisodeBatch& batch,
                                                  const CriticParams& target_critic,
                                                  double gamma, double lambda);

Tensor onehot_row(int idx, int k);                         // {1, k}
std::vector<double> joint_onehot(const std::vector<int>& actions, int k);

// ---- entropy regularization ---------------------------------------------------

Tensor entropy(const Tensor& p);       // {k} or {1,k} -> scalar, natural log
Tensor entropy_rows(const Tensor& p);  // (B,k) -> (B)

// Loss term (to be minimized). Vanilla: -coeff * H(p). Adaptive:
// -(coeff / max(stop_gradient(H(p)), floor)) * H(p), so the gradient w.r.t.
// p_i is coeff * (log p_i + 1) / H(p).
Tensor entropy_regularizer(const Tensor& p, EntropyMode mode, double coeff);

// Per-row effective coefficients for batched use; adaptive coefficients are
// computed from detached per-row entropies.
std::vector<double> entropy_coeff_rows(const std::vector<double>& h_values,
                                       EntropyMode mode, double coeff);

// ---- joint action input ---------------------------------------------------------

// distribution_params: concat of the per-agent probability rows (B, n*k).
// gumbel_st: per-agent straight-through Gumbel-Softmax samples: one-hot
// forward, softmax((log p + g)/temperature) backward.
Tensor joint_action_input(const std::vector<Tensor>& per_agent_probs,
                          InputMode mode, Rng* rng, double temperature);

// ---- gradient steps ----------------------------------------------------------------

struct CriticStepStats {
  double loss = 0.0;       // pre-step MSE over valid steps
  double grad_norm = 0.0;  // pre-clip global norm
};

CriticStepStats critic_step(const EpisodeBatch& batch, CriticParams& critic,
                            AdamState& opt,
                            const std::vector<std::vector<double>>& targets,
                            double grad_clip);

struct PolicyStepStats {
  double objective = 0.0;     // pre-step value of the maximized objective
  double mean_entropy = 0.0;  // batch mean per-agent policy entropy
  double grad_norm = 0.0;
};

// One ascent step on (1/N) sum_t [ Q(s_t, joint input) + (1/n) sum_a H-term ].
// The critic is frozen: it enters the graph as constants, so its parameters
// receive no gradient and are unchanged.
PolicyStepStats policy_step(const EpisodeBatch& batch, PolicyParams& policy,
                            const CriticParams& critic, AdamState& opt,
                            const StepOpts& opts, Rng& gumbel_rng);

// ---- full optimization loop -----------------------------------------------------------

struct TrainState {
  PolicyParams policy;
  CriticParams critic;
  CriticParams target_critic;
  AdamState policy_opt;
  AdamState critic_opt;
  long critic_steps = 0;
  Rng run_rng;
};

TrainState init_train_state(const TrainConfig& cfg);
EnvFactory env_factory(const TrainConfig& cfg);

struct EvalRecord {
  int step = 0;
  long episodes = 0;  // training episodes consumed so far
  double mean_reward = 0.0;   // per-step reward, averaged over eval episodes
  double mean_return = 0.0;   // per-episode summed reward
  double mean_entropy = 0.0;  // from the latest training batch
  double critic_loss = 0.0;
  std::map<std::string, double> extra;  // capture_rate / optimal_rate
};

struct TrainHooks {
  std::function<void(const EvalRecord&)> on_eval;
  std::function<void(int, TrainState&)> on_checkpoint;
  std::function<void(int, TrainState&)> on_iteration;
};

std::vector<EvalRecord> train_loop(const TrainConfig& cfg, TrainState& state,
                                   const TrainHooks& hooks = {}, int workers = 1);

EvalRecord evaluate_policy(const TrainConfig& cfg, const PolicyParams& policy,
                           int episodes, bool greedy, std::uint64_t iteration,
                           int workers);

}  // namespace lica
