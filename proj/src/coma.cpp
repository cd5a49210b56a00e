#include "lica/coma.hpp"

#include <cmath>
#include <stdexcept>

namespace lica {

ComaCriticParams make_coma_critic(int state_dim, int n_agents, int n_actions,
                                  int hidden, Rng& rng) {
  ComaCriticParams p;
  p.n_agents = n_agents;
  p.n_actions = n_actions;
  p.state_dim = state_dim;
  const int in = state_dim + n_agents * n_actions + n_agents;
  p.l1 = make_layer(in, hidden, rng);
  p.l2 = make_layer(hidden, hidden, rng);
  p.l3 = make_layer(hidden, n_actions, rng);
  return p;
}

void visit_params(ComaCriticParams& p, const std::string& prefix, const ParamVisitor& v) {
  visit_params(p.l1, prefix + ".l1", v);
  visit_params(p.l2, prefix + ".l2", v);
  visit_params(p.l3, prefix + ".l3", v);
}

int coma_input_dim(const ComaCriticParams& p) {
  return p.state_dim + p.n_agents * p.n_actions + p.n_agents;
}

std::vector<double> coma_input_row(const ComaCriticParams& p,
                                   const std::vector<double>& state,
                                   const std::vector<int>& joint, int agent) {
  std::vector<double> row = state;
  for (int a = 0; a < p.n_agents; ++a)
    for (int u = 0; u < p.n_actions; ++u)
      row.push_back(a != agent && joint[static_cast<std::size_t>(a)] == u ? 1.0 : 0.0);
  for (int a = 0; a < p.n_agents; ++a) row.push_back(a == agent ? 1.0 : 0.0);
  return row;
}

Tensor coma_q_rows(const ComaCriticParams& p, const Tensor& input_rows) {
  if (input_rows.dim(1) != coma_input_dim(p))
    throw std::invalid_argument("coma_q_rows: input width " +
                                shape_str(input_rows.shape()) + " does not match " +
                                std::to_string(coma_input_dim(p)));
  Tensor h = relu(affine(p.l2, relu(affine(p.l1, input_rows))));
  return affine(p.l3, h);
}

double counterfactual_advantage(
    const std::function<double(const std::vector<int>&)>& q_joint,
    const std::vector<int>& joint, int agent, const std::vector<double>& pi_agent) {
  double baseline = 0.0;
  std::vector<int> alt = joint;
  for (std::size_t u = 0; u < pi_agent.size(); ++u) {
    alt[static_cast<std::size_t>(agent)] = static_cast<int>(u);
    baseline += pi_agent[u] * q_joint(alt);
  }
  return q_joint(joint) - baseline;
}

double coma_counterfactual_advantage(const ComaCriticParams& critic,
                                     const Tensor& state,
                                     const std::vector<int>& joint, int agent,
                                     const std::vector<double>& pi_agent) {
  std::vector<double> row = coma_input_row(critic, state.data(), joint, agent);
  Tensor q = coma_q_rows(critic, Tensor({1, coma_input_dim(critic)}, std::move(row)));
  auto q_of = [&](const std::vector<int>& j) {
    return q.data()[static_cast<std::size_t>(j[static_cast<std::size_t>(agent)])];
  };
  return counterfactual_advantage(q_of, joint, agent, pi_agent);
}

ComaState init_coma_state(const TrainConfig& cfg) {
  validate_config(cfg);
  ComaState st;
  EnvSpec spec;
  {
    auto env = env_factory(cfg)();
    spec = env->spec();
  }
  PolicySpec ps;
  ps.n_agents = spec.n_agents;
  ps.shared = cfg.share_params;
  ps.input_dim = policy_input_dim(spec, cfg.share_params);
  ps.hidden = cfg.hidden;
  ps.n_actions = spec.n_actions;
  ps.use_gru = cfg.use_gru;
  Rng policy_rng(derive_seed(cfg.seed, stream::kInit, 1));
  st.policy = make_policy(ps, policy_rng);
  Rng critic_rng(derive_seed(cfg.seed, stream::kInit, 2));
  st.critic = make_coma_critic(spec.state_dim, spec.n_agents, spec.n_actions,
                               cfg.critic_hidden, critic_rng);
  st.target_critic = cloned(st.critic);
  st.policy_opt = make_adam(param_tensors(st.policy), cfg.policy_lr);
  st.critic_opt = make_adam(param_tensors(st.critic), cfg.critic_lr);
  return st;
}

namespace {

// Q rows for every (episode, step, agent) triple, flattened in that order.
Tensor coma_inputs_for_steps(const ComaCriticParams& p, const EpisodeBatch& batch,
                             bool next_step) {
  std::vector<double> rows;
  for (const auto& ep : batch.episodes) {
    const int t0 = next_step ? 1 : 0;
    for (int t = t0; t < ep.length(); ++t)
      for (int a = 0; a < p.n_agents; ++a) {
        auto row = coma_input_row(p, ep.states[static_cast<std::size_t>(t)].data(),
                                  ep.actions[static_cast<std::size_t>(t)], a);
        rows.insert(rows.end(), row.begin(), row.end());
      }
    if (next_step && !ep.terminated)
      for (int a = 0; a < p.n_agents; ++a) {
        auto row = coma_input_row(p, ep.final_state.data(), ep.bootstrap_actions, a);
        rows.insert(rows.end(), row.begin(), row.end());
      }
  }
  const int width = coma_input_dim(p);
  const int r = static_cast<int>(rows.size()) / width;
  return Tensor({std::max(r, 1), width},
                rows.empty() ? std::vector<double>(static_cast<std::size_t>(width), 0.0)
                             : std::move(rows));
}

}  // namespace

std::vector<std::vector<std::vector<double>>> coma_td_targets(
    const EpisodeBatch& batch, const ComaCriticParams& target_critic,
    double gamma, double lambda) {
  const int n = target_critic.n_agents;
  // Evaluate Q(s_{t+1}, ., a)[u^a_{t+1}] for every next step in one pass.
  bool any_next = false;
  for (const auto& ep : batch.episodes)
    if (ep.length() > 1 || !ep.terminated) any_next = true;
  std::vector<double> q_chosen;  // per (episode, next step, agent)
  if (any_next) {
    Tensor q = coma_q_rows(target_critic, coma_inputs_for_steps(target_critic, batch, true));
    std::size_t row = 0;
    for (const auto& ep : batch.episodes) {
      for (int t = 1; t < ep.length(); ++t)
        for (int a = 0; a < n; ++a)
          q_chosen.push_back(q.at(static_cast<int>(row++),
                                  ep.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)]));
      if (!ep.terminated)
        for (int a = 0; a < n; ++a)
          q_chosen.push_back(q.at(static_cast<int>(row++),
                                  ep.bootstrap_actions[static_cast<std::size_t>(a)]));
    }
  }
  std::vector<std::vector<std::vector<double>>> targets;
  std::size_t idx = 0;
  for (const auto& ep : batch.episodes) {
    std::vector<std::vector<double>> per_agent(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> q_next(static_cast<std::size_t>(n));
    for (int t = 1; t < ep.length(); ++t)
      for (int a = 0; a < n; ++a) q_next[static_cast<std::size_t>(a)].push_back(q_chosen[idx++]);
    std::vector<double> boot(static_cast<std::size_t>(n), 0.0);
    if (!ep.terminated)
      for (int a = 0; a < n; ++a) boot[static_cast<std::size_t>(a)] = q_chosen[idx++];
    for (int a = 0; a < n; ++a)
      per_agent[static_cast<std::size_t>(a)] =
          td_lambda_from_q(ep.rewards, q_next[static_cast<std::size_t>(a)], ep.terminated,
                           boot[static_cast<std::size_t>(a)], gamma, lambda);
    targets.push_back(std::move(per_agent));
  }
  return targets;
}

CriticStepStats coma_critic_step(const EpisodeBatch& batch, ComaCriticParams& critic,
                                 AdamState& opt,
                                 const std::vector<std::vector<std::vector<double>>>& targets,
                                 double grad_clip) {
  const int n = critic.n_agents, k = critic.n_actions;
  std::vector<double> ys, masks;
  for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
    const auto& ep = batch.episodes[e];
    for (int t = 0; t < ep.length(); ++t)
      for (int a = 0; a < n; ++a) {
        ys.push_back(targets[e][static_cast<std::size_t>(a)][static_cast<std::size_t>(t)]);
        for (int u = 0; u < k; ++u)
          masks.push_back(ep.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)] == u
                              ? 1.0 : 0.0);
      }
  }
  const int rows = static_cast<int>(ys.size());
  Tensor inputs = coma_inputs_for_steps(critic, batch, false);
  Tensor chosen_mask({rows, k}, std::move(masks));
  Tensor y({rows}, std::move(ys));

  Tape tape;
  ComaCriticParams wcritic = watched(tape, critic);
  Tensor q = coma_q_rows(wcritic, inputs);
  Tensor q_sel = sum(mul(q, chosen_mask), 1);
  Tensor loss = mean(square(add(q_sel, scale(y, -1.0))));
  if (!std::isfinite(loss.value()))
    throw std::runtime_error("coma_critic_step: non-finite loss over " +
                             std::to_string(rows) + " rows");
  tape.backward(loss);
  auto params = param_tensors(critic);
  const double norm = clip_global_norm(params, grad_clip);
  adam_step(params, opt);
  return {loss.value(), norm};
}

PolicyStepStats coma_policy_step(const EpisodeBatch& batch, PolicyParams& policy,
                                 const ComaCriticParams& critic, AdamState& opt,
                                 const StepOpts& opts) {
  const int b = static_cast<int>(batch.episodes.size());
  const int n = batch.spec.n_agents;
  const int k = batch.spec.n_actions;
  const int tmax = batch.max_length();
  const long total = batch.total_steps();
  const int in_dim = policy_input_dim(batch.spec, batch.shared_policy);
  const int h = agent_net(policy, 0).fc_in.w.dim(1);

  // Advantages are plain numbers: the critic stays out of the policy graph.
  Tensor q_all = coma_q_rows(critic, coma_inputs_for_steps(critic, batch, false));

  Tape tape;
  PolicyParams wpolicy = watched(tape, policy);
  std::vector<Tensor> hidden(static_cast<std::size_t>(n), Tensor::zeros({b, h}));
  Tensor objective = Tensor::scalar(0.0);
  double entropy_sum = 0.0;

  // Row index of (episode, t, agent) in q_all.
  std::vector<long> row_base(batch.episodes.size(), 0);
  {
    long r = 0;
    for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
      row_base[e] = r;
      r += static_cast<long>(batch.episodes[e].length()) * n;
    }
  }

  auto obs_matrix = [&](int t, int agent) {
    std::vector<double> rows(static_cast<std::size_t>(b) * in_dim, 0.0);
    for (int e = 0; e < b; ++e) {
      const auto& ep = batch.episodes[static_cast<std::size_t>(e)];
      if (t >= ep.length()) continue;
      const auto& o = ep.obs[static_cast<std::size_t>(t)][static_cast<std::size_t>(agent)].data();
      auto it = rows.begin() + static_cast<std::ptrdiff_t>(e) * in_dim;
      std::copy(o.begin(), o.end(), it);
      if (batch.shared_policy) it[static_cast<std::ptrdiff_t>(o.size()) + agent] = 1.0;
    }
    return Tensor({b, in_dim}, std::move(rows));
  };

  for (int t = 0; t < tmax; ++t) {
    std::vector<double> mask(static_cast<std::size_t>(b), 0.0);
    for (int e = 0; e < b; ++e)
      if (t < batch.episodes[static_cast<std::size_t>(e)].length())
        mask[static_cast<std::size_t>(e)] = 1.0;
    Tensor mask_col({b}, mask);

    for (int a = 0; a < n; ++a) {
      auto [probs, h2] = policy_forward(agent_net(wpolicy, a), obs_matrix(t, a),
                                        hidden[static_cast<std::size_t>(a)]);
      hidden[static_cast<std::size_t>(a)] = h2;

      std::vector<double> adv(static_cast<std::size_t>(b), 0.0);
      std::vector<double> chosen(static_cast<std::size_t>(b) * k, 0.0);
      for (int e = 0; e < b; ++e) {
        const auto& ep = batch.episodes[static_cast<std::size_t>(e)];
        if (t >= ep.length()) continue;
        const long row = row_base[static_cast<std::size_t>(e)] +
                         static_cast<long>(t) * n + a;
        const int u = ep.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)];
        double baseline = 0.0;
        for (int uu = 0; uu < k; ++uu)
          baseline += probs.at(e, uu) * q_all.at(static_cast<int>(row), uu);
        adv[static_cast<std::size_t>(e)] = q_all.at(static_cast<int>(row), u) - baseline;
        chosen[static_cast<std::size_t>(e * k + u)] = 1.0;
      }
      Tensor logp_sel = sum(mul(lica::log(probs), Tensor({b, k}, std::move(chosen))), 1);
      objective = add(objective, sum(mul(mul(Tensor({b}, adv), logp_sel), mask_col)));

      Tensor hr = entropy_rows(probs);
      const std::vector<double> hv = hr.data();
      Tensor coeffs({b}, entropy_coeff_rows(hv, opts.entropy_mode, opts.entropy_coeff));
      objective = add(objective, sum(mul(mul(coeffs, hr), mask_col)));
      for (int e = 0; e < b; ++e)
        entropy_sum += hv[static_cast<std::size_t>(e)] * mask[static_cast<std::size_t>(e)];
    }
  }

  Tensor loss = scale(objective, -1.0 / (static_cast<double>(total) * n));
  if (!std::isfinite(loss.value()))
    throw std::runtime_error("coma_policy_step: non-finite objective");
  tape.backward(loss);
  auto params = param_tensors(policy);
  const double norm = clip_global_norm(params, opts.grad_clip);
  adam_step(params, opt);
  PolicyStepStats stats;
  stats.objective = objective.value() / (static_cast<double>(total) * n);
  stats.mean_entropy = entropy_sum / (static_cast<double>(total) * n);
  stats.grad_norm = norm;
  return stats;
}

std::vector<EvalRecord> coma_train_loop(const TrainConfig& cfg, ComaState& state,
                                        const ComaHooks& hooks, int workers) {
  validate_config(cfg);
  const StepOpts opts = step_opts(cfg);
  const EnvFactory factory = env_factory(cfg);
  std::vector<EvalRecord> records;
  for (int iter = 1; iter <= cfg.total_steps; ++iter) {
    RolloutOpts ro;
    ro.episodes = cfg.batch_size;
    ro.seed = cfg.seed;
    ro.stream = stream::kRollout;
    ro.iteration = static_cast<std::uint64_t>(iter);
    ro.workers = workers;
    EpisodeBatch batch = rollout(factory, state.policy, ro);

    auto targets = coma_td_targets(batch, state.target_critic, cfg.gamma, cfg.lambda);
    CriticStepStats cstats =
        coma_critic_step(batch, state.critic, state.critic_opt, targets, cfg.grad_clip);
    state.critic_steps += 1;
    PolicyStepStats pstats =
        coma_policy_step(batch, state.policy, state.critic, state.policy_opt, opts);
    if (state.critic_steps % cfg.target_sync_interval == 0)
      copy_params(state.critic, state.target_critic);

    if (hooks.on_iteration) hooks.on_iteration(iter, state);
    if (iter % cfg.eval_interval == 0 || iter == cfg.total_steps) {
      EvalRecord rec = evaluate_policy(cfg, state.policy, cfg.eval_episodes, false,
                                       static_cast<std::uint64_t>(iter), workers);
      rec.step = iter;
      rec.episodes = static_cast<long>(iter) * cfg.batch_size;
      rec.mean_entropy = pstats.mean_entropy;
      rec.critic_loss = cstats.loss;
      records.push_back(rec);
      if (hooks.on_eval) hooks.on_eval(rec);
    }
  }
  return records;
}

}  // namespace lica
