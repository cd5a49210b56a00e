#pragma once

#include <functional>
#include <vector>

#include "lica/training.hpp"

namespace lica {

// COMA counterfactual-advantage baseline for the credit-assignment study.
// The centralized critic maps (state, other agents' actions, agent id) to a
// per-action Q vector for the queried agent. The agent's own action block is
// zero-masked so one network serves every agent.

struct ComaCriticParams {
  int n_agents = 0;
  int n_actions = 0;
  int state_dim = 0;
  LayerParams l1, l2, l3;  // input -> h -> h -> n_actions, ReLU between
};

ComaCriticParams make_coma_critic(int state_dim, int n_agents, int n_actions,
                                  int hidden, Rng& rng);
void visit_params(ComaCriticParams& p, const std::string& prefix, const ParamVisitor& v);

int coma_input_dim(const ComaCriticParams& p);

// One critic input row: [state, joint one-hot with agent's block zeroed,
// agent one-hot].
std::vector<double> coma_input_row(const ComaCriticParams& p,
                                   const std::vector<double>& state,
                                   const std::vector<int>& joint, int agent);

// (R, input_dim) -> (R, n_actions)
Tensor coma_q_rows(const ComaCriticParams& p, const Tensor& input_rows);

// A^a = q(u) - sum_u' pi[u'] q(u with agent's slot replaced by u'), for any
// joint action-value function.
double counterfactual_advantage(const std::function<double(const std::vector<int>&)>& q_joint,
                                const std::vector<int>& joint, int agent,
                                const std::vector<double>& pi_agent);

// Net-backed variant using the critic's per-action Q vector.
double coma_counterfactual_advantage(const ComaCriticParams& critic,
                                     const Tensor& state,
                                     const std::vector<int>& joint, int agent,
                                     const std::vector<double>& pi_agent);

struct ComaState {
  PolicyParams policy;
  ComaCriticParams critic;
  ComaCriticParams target_critic;
  AdamState policy_opt;
  AdamState critic_opt;
  long critic_steps = 0;
};

ComaState init_coma_state(const TrainConfig& cfg);

// Per-agent TD(lambda) targets; bootstrap uses the target critic's Q for the
// agent's sampled next action.
std::vector<std::vector<std::vector<double>>> coma_td_targets(
    const EpisodeBatch& batch, const ComaCriticParams& target_critic,
    double gamma, double lambda);

CriticStepStats coma_critic_step(const EpisodeBatch& batch, ComaCriticParams& critic,
                                 AdamState& opt,
                                 const std::vector<std::vector<std::vector<double>>>& targets,
                                 double grad_clip);

// One ascent step on mean over (step, agent) of A^a log pi^a(u^a) plus the
// same entropy regularizer options as the main policy step. Advantages are
// treated as constants.
PolicyStepStats coma_policy_step(const EpisodeBatch& batch, PolicyParams& policy,
                                 const ComaCriticParams& critic, AdamState& opt,
                                 const StepOpts& opts);

struct ComaHooks {
  std::function<void(const EvalRecord&)> on_eval;
  std::function<void(int, ComaState&)> on_iteration;
};

std::vector<EvalRecord> coma_train_loop(const TrainConfig& cfg, ComaState& state,
                                        const ComaHooks& hooks = {}, int workers = 1);

}  // namespace lica
