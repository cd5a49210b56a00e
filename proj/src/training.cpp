#include "lica/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace lica {

EntropyMode entropy_mode_from_string(const std::string& s) {
  if (s == "adaptive") return EntropyMode::adaptive;
  if (s == "vanilla") return EntropyMode::vanilla;
  throw std::invalid_argument("unknown entropy mode '" + s +
                              "' (expected adaptive or vanilla)");
}

InputMode input_mode_from_string(const std::string& s) {
  if (s == "distribution_params") return InputMode::distribution_params;
  if (s == "gumbel_st") return InputMode::gumbel_st;
  throw std::invalid_argument("unknown input mode '" + s +
                              "' (expected distribution_params or gumbel_st)");
}

CriticKind critic_kind_from_string(const std::string& s) {
  if (s == "mixing") return CriticKind::mixing;
  if (s == "mlp") return CriticKind::mlp;
  throw std::invalid_argument("unknown critic '" + s + "' (expected mixing or mlp)");
}

StepOpts step_opts(const TrainConfig& c) {
  StepOpts o;
  o.gamma = c.gamma;
  o.lambda = c.lambda;
  o.entropy_mode = entropy_mode_from_string(c.entropy_mode);
  o.entropy_coeff = c.entropy_coeff;
  o.input_mode = input_mode_from_string(c.input_mode);
  o.gumbel_temperature = c.gumbel_temperature;
  o.grad_clip = c.grad_clip;
  return o;
}

int EpisodeBatch::max_length() const {
  int m = 0;
  for (const auto& e : episodes) m = std::max(m, e.length());
  return m;
}

long EpisodeBatch::total_steps() const {
  long n = 0;
  for (const auto& e : episodes) n += e.length();
  return n;
}

int policy_input_dim(const EnvSpec& spec, bool shared) {
  return spec.obs_dim + (shared ? spec.n_agents : 0);
}

Tensor policy_input(const Tensor& obs, int agent, bool shared, int n_agents) {
  std::vector<double> row = obs.data();
  if (shared) {
    for (int i = 0; i < n_agents; ++i) row.push_back(i == agent ? 1.0 : 0.0);
  }
  return Tensor({1, static_cast<int>(row.size())}, std::move(row));
}

// ---- rollout ---------------------------------------------------------------

namespace {

int policy_hidden_dim(const PolicyParams& p) { return agent_net(p, 0).fc_in.w.dim(1); }

int argmax_row(const std::vector<double>& v, std::size_t off, int k) {
  int best = 0;
  for (int i = 1; i < k; ++i)
    if (v[off + static_cast<std::size_t>(i)] > v[off + static_cast<std::size_t>(best)])
      best = i;
  return best;
}

Episode run_episode(Env& env, const PolicyParams& policy, Rng act_rng, Rng env_rng,
                    bool greedy) {
  const EnvSpec& spec = env.spec();
  const int n = spec.n_agents, k = spec.n_actions;
  const int h = policy_hidden_dim(policy);
  env.reset(env_rng);
  Episode ep;
  std::vector<Tensor> hidden(static_cast<std::size_t>(n), Tensor::zeros({1, h}));
  for (int t = 0; t < spec.max_steps; ++t) {
    ep.states.push_back(env.state());
    std::vector<Tensor> obs_t;
    std::vector<int> act_t;
    for (int a = 0; a < n; ++a) {
      Tensor ob = env.observe(a);
      Tensor in = policy_input(ob, a, policy.shared, n);
      auto [probs, h2] = policy_forward(agent_net(policy, a), in, hidden[static_cast<std::size_t>(a)]);
      hidden[static_cast<std::size_t>(a)] = h2;
      const int act = greedy ? argmax_row(probs.data(), 0, k)
                             : act_rng.categorical(probs.data());
      obs_t.push_back(std::move(ob));
      act_t.push_back(act);
    }
    StepResult res = env.step(act_t);
    ep.obs.push_back(std::move(obs_t));
    ep.actions.push_back(act_t);
    ep.rewards.push_back(res.reward);
    ep.final_state = res.next_state;
    ep.final_obs = res.next_obs;
    if (res.terminated) {
      ep.terminated = true;
      break;
    }
  }
  if (!ep.terminated) {
    // Sample u_{T+1} for the truncation bootstrap of the TD targets.
    for (int a = 0; a < n; ++a) {
      Tensor in = policy_input(ep.final_obs[static_cast<std::size_t>(a)], a, policy.shared, n);
      auto [probs, h2] = policy_forward(agent_net(policy, a), in, hidden[static_cast<std::size_t>(a)]);
      (void)h2;
      ep.bootstrap_actions.push_back(greedy ? argmax_row(probs.data(), 0, k)
                                            : act_rng.categorical(probs.data()));
    }
  }
  return ep;
}

}  // namespace

EpisodeBatch rollout(const EnvFactory& factory, const PolicyParams& policy,
                     const RolloutOpts& opts) {
  EpisodeBatch batch;
  batch.shared_policy = policy.shared;
  batch.episodes.resize(static_cast<std::size_t>(opts.episodes));
  {
    auto probe = factory();
    batch.spec = probe->spec();
  }
  const int workers = std::max(1, std::min(opts.workers, opts.episodes));
  auto work = [&](int w) {
    auto env = factory();
    for (int e = w; e < opts.episodes; e += workers) {
      Rng act_rng(derive_seed(opts.seed, opts.stream, opts.iteration,
                              2 * static_cast<std::uint64_t>(e)));
      Rng env_rng(derive_seed(opts.seed, opts.stream, opts.iteration,
                              2 * static_cast<std::uint64_t>(e) + 1));
      batch.episodes[static_cast<std::size_t>(e)] =
          run_episode(*env, policy, act_rng, env_rng, opts.greedy);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return batch;
}

// ---- optimizer ----------------------------------------------------------------

AdamState make_adam(const std::vector<Tensor*>& params, double lr) {
  AdamState s;
  s.lr = lr;
  for (const Tensor* p : params) {
    s.m.emplace_back(static_cast<std::size_t>(p->numel()), 0.0);
    s.v.emplace_back(static_cast<std::size_t>(p->numel()), 0.0);
  }
  return s;
}

double clip_global_norm(const std::vector<Tensor*>& params, double max_norm) {
  double sq = 0.0;
  for (Tensor* p : params)
    if (p->has_grad())
      for (double g : p->grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Tensor* p : params)
      if (p->has_grad())
        for (double& g : p->grad_buffer()) g *= s;
  }
  return norm;
}

void adam_step(const std::vector<Tensor*>& params, AdamState& state) {
  if (params.size() != state.m.size())
    throw std::invalid_argument("adam_step: optimizer state does not match params");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor* p = params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    auto& data = p->data();
    const bool hg = p->has_grad();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = hg ? p->grad()[j] : 0.0;
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      data[j] -= state.lr * mh / (std::sqrt(vh) + state.eps);
    }
  }
}

// ---- TD(lambda) -----------------------------------------------------------------

std::vector<double> td_lambda_from_q(const std::vector<double>& rewards,
                                     const std::vector<double>& q_next,
                                     bool terminated, double bootstrap_q,
                                     double gamma, double lambda) {
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("td_lambda: gamma " + std::to_string(gamma) +
                                " out of range [0,1)");
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("td_lambda: lambda " + std::to_string(lambda) +
                                " out of range [0,1]");
  const std::size_t T = rewards.size();
  if (T == 0) return {};
  if (q_next.size() + 1 != T)
    throw std::invalid_argument("td_lambda: q_next must have T-1 entries");
  std::vector<double> y(T);
  y[T - 1] = rewards[T - 1] + (terminated ? 0.0 : gamma * bootstrap_q);
  for (std::size_t t = T - 1; t-- > 0;)
    y[t] = rewards[t] + gamma * (lambda * y[t + 1] + (1.0 - lambda) * q_next[t]);
  return y;
}

Tensor onehot_row(int idx, int k) {
  std::vector<double> v(static_cast<std::size_t>(k), 0.0);
  v[static_cast<std::size_t>(idx)] = 1.0;
  return Tensor({1, k}, std::move(v));
}

std::vector<double> joint_onehot(const std::vector<int>& actions, int k) {
  std::vector<double> v(actions.size() * static_cast<std::size_t>(k), 0.0);
  for (std::size_t a = 0; a < actions.size(); ++a)
    v[a * static_cast<std::size_t>(k) + static_cast<std::size_t>(actions[a])] = 1.0;
  return v;
}

std::vector<std::vector<double>> batch_td_targets(const EpisodeBatch& batch,
                                                  const CriticParams& target_critic,
                                                  double gamma, double lambda) {
  const int k = batch.spec.n_actions;
  const int sd = batch.spec.state_dim;
  const int jd = batch.spec.n_agents * k;
  // Rows: Q(s_{t+1}, u_{t+1}) for every non-final step, then one bootstrap
  // row per truncated episode.
  std::vector<double> states, joints;
  for (const auto& ep : batch.episodes) {
    for (int t = 1; t < ep.length(); ++t) {
      const auto& s = ep.states[static_cast<std::size_t>(t)].data();
      states.insert(states.end(), s.begin(), s.end());
      const auto j = joint_onehot(ep.actions[static_cast<std::size_t>(t)], k);
      joints.insert(joints.end(), j.begin(), j.end());
    }
    if (!ep.terminated) {
      const auto& s = ep.final_state.data();
      states.insert(states.end(), s.begin(), s.end());
      const auto j = joint_onehot(ep.bootstrap_actions, k);
      joints.insert(joints.end(), j.begin(), j.end());
    }
  }
  std::vector<double> q_values;
  const int rows = static_cast<int>(states.size()) / std::max(1, sd);
  if (rows > 0) {
    Tensor S({rows, sd}, std::move(states));
    Tensor U({rows, jd}, std::move(joints));
    q_values = critic_forward(target_critic, S, U).data();
  }
  std::vector<std::vector<double>> targets;
  std::size_t row = 0;
  for (const auto& ep : batch.episodes) {
    std::vector<double> q_next;
    for (int t = 1; t < ep.length(); ++t) q_next.push_back(q_values[row++]);
    double boot = 0.0;
    if (!ep.terminated) boot = q_values[row++];
    targets.push_back(
        td_lambda_from_q(ep.rewards, q_next, ep.terminated, boot, gamma, lambda));
  }
  return targets;
}

// ---- entropy ---------------------------------------------------------------------

Tensor entropy(const Tensor& p) {
  if (p.rank() > 2 || (p.rank() == 2 && p.dim(0) != 1))
    throw std::invalid_argument("entropy: expected a single probability vector, got " +
                                shape_str(p.shape()));
  return scale(sum(mul(p, lica::log(p))), -1.0);
}

Tensor entropy_rows(const Tensor& p) {
  if (p.rank() != 2)
    throw std::invalid_argument("entropy_rows: expected (B,k), got " +
                                shape_str(p.shape()));
  return scale(sum(mul(p, lica::log(p)), 1), -1.0);
}

Tensor entropy_regularizer(const Tensor& p, EntropyMode mode, double coeff) {
  Tensor h = entropy(p);
  if (mode == EntropyMode::vanilla) return scale(h, -coeff);
  const double denom = std::max(stop_gradient(h).value(), kAdaptiveEntropyFloor);
  return scale(h, -(coeff / denom));
}

std::vector<double> entropy_coeff_rows(const std::vector<double>& h_values,
                                       EntropyMode mode, double coeff) {
  std::vector<double> out(h_values.size(), coeff);
  if (mode == EntropyMode::adaptive)
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = coeff / std::max(h_values[i], kAdaptiveEntropyFloor);
  return out;
}

// ---- joint action input -------------------------------------------------------------

Tensor joint_action_input(const std::vector<Tensor>& per_agent_probs,
                          InputMode mode, Rng* rng, double temperature) {
  if (per_agent_probs.empty())
    throw std::invalid_argument("joint_action_input: no agents");
  if (mode == InputMode::distribution_params) return concat(per_agent_probs, 1);
  if (rng == nullptr)
    throw std::invalid_argument("joint_action_input: gumbel_st requires an rng");
  std::vector<Tensor> parts;
  for (const Tensor& p : per_agent_probs) {
    const int rows = p.dim(0), k = p.dim(1);
    std::vector<double> noise(static_cast<std::size_t>(rows * k));
    for (auto& v : noise) v = rng->gumbel();
    Tensor z = add(lica::log(p), Tensor({rows, k}, std::move(noise)));
    Tensor soft = softmax(scale(z, 1.0 / temperature), 1);
    // Straight-through: one-hot forward, soft backward.
    std::vector<double> shift(static_cast<std::size_t>(rows * k));
    for (int r = 0; r < rows; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * static_cast<std::size_t>(k);
      const int best = argmax_row(z.data(), off, k);
      for (int i = 0; i < k; ++i)
        shift[off + static_cast<std::size_t>(i)] =
            (i == best ? 1.0 : 0.0) - soft.data()[off + static_cast<std::size_t>(i)];
    }
    parts.push_back(add(Tensor({rows, k}, std::move(shift)), soft));
  }
  return concat(parts, 1);
}

// ---- gradient steps -----------------------------------------------------------------

CriticStepStats critic_step(const EpisodeBatch& batch, CriticParams& critic,
                            AdamState& opt,
                            const std::vector<std::vector<double>>& targets,
                            double grad_clip) {
  if (targets.size() != batch.episodes.size())
    throw std::invalid_argument("critic_step: targets do not match batch");
  const int k = batch.spec.n_actions;
  const int sd = batch.spec.state_dim;
  const int jd = batch.spec.n_agents * k;
  std::vector<double> states, joints, ys;
  for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
    const auto& ep = batch.episodes[e];
    if (static_cast<int>(targets[e].size()) != ep.length())
      throw std::invalid_argument("critic_step: target length mismatch");
    for (int t = 0; t < ep.length(); ++t) {
      const auto& s = ep.states[static_cast<std::size_t>(t)].data();
      states.insert(states.end(), s.begin(), s.end());
      const auto j = joint_onehot(ep.actions[static_cast<std::size_t>(t)], k);
      joints.insert(joints.end(), j.begin(), j.end());
      ys.push_back(targets[e][static_cast<std::size_t>(t)]);
    }
  }
  const int rows = static_cast<int>(ys.size());
  Tensor S({rows, sd}, std::move(states));
  Tensor U({rows, jd}, std::move(joints));
  Tensor Y({rows}, std::move(ys));

  Tape tape;
  CriticParams wcritic = watched(tape, critic);
  Tensor q = reshape(critic_forward(wcritic, S, U), {rows});
  Tensor loss = mean(square(add(q, scale(Y, -1.0))));
  if (!std::isfinite(loss.value()))
    throw std::runtime_error("critic_step: non-finite loss " +
                             std::to_string(loss.value()) + " over " +
                             std::to_string(rows) + " steps");
  tape.backward(loss);
  auto params = param_tensors(critic);
  const double norm = clip_global_norm(params, grad_clip);
  adam_step(params, opt);
  return {loss.value(), norm};
}

namespace {

Tensor state_matrix(const EpisodeBatch& batch, int t) {
  const int b = static_cast<int>(batch.episodes.size());
  const int sd = batch.spec.state_dim;
  std::vector<double> rows(static_cast<std::size_t>(b * sd), 0.0);
  for (int e = 0; e < b; ++e) {
    const auto& ep = batch.episodes[static_cast<std::size_t>(e)];
    if (t < ep.length()) {
      const auto& s = ep.states[static_cast<std::size_t>(t)].data();
      std::copy(s.begin(), s.end(), rows.begin() + static_cast<std::ptrdiff_t>(e) * sd);
    }
  }
  return Tensor({b, sd}, std::move(rows));
}

Tensor obs_matrix(const EpisodeBatch& batch, int t, int agent, int in_dim) {
  const int b = static_cast<int>(batch.episodes.size());
  const int n = batch.spec.n_agents;
  std::vector<double> rows(static_cast<std::size_t>(b * in_dim), 0.0);
  for (int e = 0; e < b; ++e) {
    const auto& ep = batch.episodes[static_cast<std::size_t>(e)];
    if (t >= ep.length()) continue;
    const auto& o = ep.obs[static_cast<std::size_t>(t)][static_cast<std::size_t>(agent)].data();
    auto it = rows.begin() + static_cast<std::ptrdiff_t>(e) * in_dim;
    std::copy(o.begin(), o.end(), it);
    if (batch.shared_policy) it[static_cast<std::ptrdiff_t>(o.size()) + agent] = 1.0;
  }
  return Tensor({b, in_dim}, std::move(rows));
}

}  // namespace

PolicyStepStats policy_step(const EpisodeBatch& batch, PolicyParams& policy,
                            const CriticParams& critic, AdamState& opt,
                            const StepOpts& opts, Rng& gumbel_rng) {
  const int b = static_cast<int>(batch.episodes.size());
  const int n = batch.spec.n_agents;
  const int tmax = batch.max_length();
  const long total = batch.total_steps();
  const int in_dim = policy_input_dim(batch.spec, batch.shared_policy);
  const int h = policy_hidden_dim(policy);

  Tape tape;
  PolicyParams wpolicy = watched(tape, policy);
  std::vector<Tensor> hidden(static_cast<std::size_t>(n), Tensor::zeros({b, h}));
  Tensor objective = Tensor::scalar(0.0);
  double entropy_sum = 0.0;

  for (int t = 0; t < tmax; ++t) {
    std::vector<double> mask(static_cast<std::size_t>(b), 0.0);
    for (int e = 0; e < b; ++e)
      if (t < batch.episodes[static_cast<std::size_t>(e)].length())
        mask[static_cast<std::size_t>(e)] = 1.0;
    Tensor mask_col({b}, mask);

    std::vector<Tensor> probs;
    for (int a = 0; a < n; ++a) {
      auto [p, h2] = policy_forward(agent_net(wpolicy, a), obs_matrix(batch, t, a, in_dim),
                                    hidden[static_cast<std::size_t>(a)]);
      hidden[static_cast<std::size_t>(a)] = h2;
      probs.push_back(p);
    }
    Tensor joint = joint_action_input(probs, opts.input_mode, &gumbel_rng,
                                      opts.gumbel_temperature);
    // The critic params are plain constants here: no gradient reaches them.
    Tensor q = reshape(critic_forward(critic, state_matrix(batch, t), joint), {b});
    objective = add(objective, sum(mul(q, mask_col)));

    for (int a = 0; a < n; ++a) {
      Tensor hr = entropy_rows(probs[static_cast<std::size_t>(a)]);
      const std::vector<double> hv = hr.data();
      Tensor coeffs({b}, entropy_coeff_rows(hv, opts.entropy_mode, opts.entropy_coeff));
      Tensor term = sum(mul(mul(coeffs, hr), mask_col));
      objective = add(objective, scale(term, 1.0 / n));
      for (int e = 0; e < b; ++e)
        entropy_sum += hv[static_cast<std::size_t>(e)] * mask[static_cast<std::size_t>(e)];
    }
  }

  Tensor loss = scale(objective, -1.0 / static_cast<double>(total));
  if (!std::isfinite(loss.value()))
    throw std::runtime_error("policy_step: non-finite objective " +
                             std::to_string(objective.value()) + " over " +
                             std::to_string(total) + " steps");
  tape.backward(loss);
  auto params = param_tensors(policy);
  const double norm = clip_global_norm(params, opts.grad_clip);
  adam_step(params, opt);
  PolicyStepStats stats;
  stats.objective = objective.value() / static_cast<double>(total);
  stats.mean_entropy = entropy_sum / (static_cast<double>(total) * n);
  stats.grad_norm = norm;
  return stats;
}

// ---- full loop -------------------------------------------------------------------------

EnvFactory env_factory(const TrainConfig& cfg) {
  return [cfg]() { return make_env(cfg.env, cfg.n_agents, cfg.max_steps); };
}

TrainState init_train_state(const TrainConfig& cfg) {
  validate_config(cfg);
  TrainState st;
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
  st.critic = make_critic(critic_kind_from_string(cfg.critic), spec.state_dim,
                          spec.n_agents * spec.n_actions, cfg.critic_hidden,
                          cfg.hyper_hidden, critic_rng);
  st.target_critic = cloned(st.critic);
  st.policy_opt = make_adam(param_tensors(st.policy), cfg.policy_lr);
  st.critic_opt = make_adam(param_tensors(st.critic), cfg.critic_lr);
  st.run_rng = Rng(derive_seed(cfg.seed, stream::kRun, 0));
  return st;
}

EvalRecord evaluate_policy(const TrainConfig& cfg, const PolicyParams& policy,
                           int episodes, bool greedy, std::uint64_t iteration,
                           int workers) {
  if (episodes < 1)
    throw std::invalid_argument("evaluate_policy: need at least 1 episode");
  RolloutOpts ro;
  ro.episodes = episodes;
  ro.greedy = greedy;
  ro.seed = cfg.seed;
  ro.stream = stream::kEval;
  ro.iteration = iteration;
  ro.workers = workers;
  EpisodeBatch batch = rollout(env_factory(cfg), policy, ro);
  EvalRecord rec;
  double reward_sum = 0.0, return_sum = 0.0, terminated = 0.0;
  for (const auto& ep : batch.episodes) {
    double ret = 0.0;
    for (double r : ep.rewards) ret += r;
    reward_sum += ret;
    return_sum += ret;
    terminated += ep.terminated ? 1.0 : 0.0;
  }
  rec.mean_reward = reward_sum / static_cast<double>(batch.total_steps());
  rec.mean_return = return_sum / static_cast<double>(episodes);
  if (cfg.env == "predator_prey")
    rec.extra["capture_rate"] = terminated / static_cast<double>(episodes);
  if (cfg.env == "traffic_junction")
    rec.extra["optimal_rate"] = rec.mean_return;
  return rec;
}

std::vector<EvalRecord> train_loop(const TrainConfig& cfg, TrainState& state,
                                   const TrainHooks& hooks, int workers) {
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

    auto targets = batch_td_targets(batch, state.target_critic, cfg.gamma, cfg.lambda);
    CriticStepStats cstats =
        critic_step(batch, state.critic, state.critic_opt, targets, cfg.grad_clip);
    state.critic_steps += 1;

    Rng gumbel_rng(derive_seed(cfg.seed, stream::kGumbel, static_cast<std::uint64_t>(iter)));
    PolicyStepStats pstats = policy_step(batch, state.policy, state.critic,
                                         state.policy_opt, opts, gumbel_rng);

    if (state.critic_steps % cfg.target_sync_interval == 0)
      copy_params(state.critic, state.target_critic);
    state.run_rng.next_u64();

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
      if (hooks.on_checkpoint) hooks.on_checkpoint(iter, state);
    }
  }
  return records;
}

}  // namespace lica
