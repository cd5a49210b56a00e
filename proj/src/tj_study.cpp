#include "lica/tj_study.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "lica/coma.hpp"
#include "lica/training.hpp"

namespace lica {

Algo algo_from_string(const std::string& s) {
  if (s == "lica") return Algo::lica;
  if (s == "coma") return Algo::coma;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected lica or coma)");
}

TrainConfig tj_study_config(Algo algo) {
  TrainConfig c;
  c.env = "traffic_junction";
  c.n_agents = 2;
  c.max_steps = 1;
  c.gamma = 0.99;
  c.lambda = 0.0;  // one-step episodes: targets are the rewards either way
  c.batch_size = 32;
  c.grad_clip = 10.0;
  c.target_sync_interval = 200;
  c.eval_interval = 1000000;  // the study reads policies directly
  c.eval_episodes = 1;
  c.hidden = 64;
  c.critic_hidden = 64;
  c.hyper_hidden = 64;
  c.use_gru = false;
  c.share_params = true;
  c.input_mode = "distribution_params";
  c.entropy_mode = "adaptive";
  c.entropy_coeff = 0.02;
  if (algo == Algo::lica) {
    c.critic = "mixing";
    c.policy_lr = 0.02;
    c.critic_lr = 0.05;
  } else {
    // COMA: best of the swept policy learning rates on this study.
    c.critic = "mlp";  // unused by the COMA critic itself; kept valid
    c.policy_lr = 0.02;
    c.critic_lr = 0.05;
  }
  return c;
}

double tj_optimal_mass(const PolicyParams& policy) {
  TrafficJunctionEnv env;
  std::vector<std::vector<double>> probs;
  const int h = agent_net(policy, 0).fc_in.w.dim(1);
  for (int a = 0; a < 2; ++a) {
    Tensor in = policy_input(env.observe(a), a, policy.shared, 2);
    auto [p, hid] = policy_forward(agent_net(policy, a), in, Tensor::zeros({1, h}));
    (void)hid;
    probs.push_back(p.data());
  }
  return probs[0][kPass] * probs[1][kWait] + probs[0][kWait] * probs[1][kPass];
}

TjStudyResult tj_study(const TjStudyOptions& opts) {
  if (opts.inits < 1) throw std::invalid_argument("tj_study: --inits must be >= 1");
  if (opts.steps < 1) throw std::invalid_argument("tj_study: --steps must be >= 1");
  // curves[init][step]
  std::vector<std::vector<double>> curves(
      static_cast<std::size_t>(opts.inits),
      std::vector<double>(static_cast<std::size_t>(opts.steps), 0.0));

  auto run_init = [&](int init) {
    TrainConfig cfg = opts.config;
    cfg.total_steps = opts.steps;
    cfg.seed = derive_seed(opts.seed, 0x7153, static_cast<std::uint64_t>(init));
    auto& curve = curves[static_cast<std::size_t>(init)];
    if (opts.algo == Algo::lica) {
      TrainState st = init_train_state(cfg);
      TrainHooks hooks;
      hooks.on_iteration = [&](int iter, TrainState& s) {
        curve[static_cast<std::size_t>(iter - 1)] = tj_optimal_mass(s.policy);
      };
      train_loop(cfg, st, hooks, 1);
    } else {
      ComaState st = init_coma_state(cfg);
      ComaHooks hooks;
      hooks.on_iteration = [&](int iter, ComaState& s) {
        curve[static_cast<std::size_t>(iter - 1)] = tj_optimal_mass(s.policy);
      };
      coma_train_loop(cfg, st, hooks, 1);
    }
  };

  const int workers = std::max(1, std::min(opts.workers, opts.inits));
  if (workers == 1) {
    for (int i = 0; i < opts.inits; ++i) run_init(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        for (int i = w; i < opts.inits; i += workers) run_init(i);
      });
    for (auto& t : pool) t.join();
  }

  TjStudyResult res;
  for (int s = 0; s < opts.steps; ++s) {
    double m = 0.0;
    for (int i = 0; i < opts.inits; ++i)
      m += curves[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)];
    m /= static_cast<double>(opts.inits);
    double var = 0.0;
    for (int i = 0; i < opts.inits; ++i) {
      const double d = curves[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] - m;
      var += d * d;
    }
    var /= static_cast<double>(opts.inits);
    res.mean.push_back(m);
    res.stddev.push_back(std::sqrt(var));
  }
  return res;
}

void write_tj_csv(std::ostream& os, const TjStudyResult& r) {
  os << "step,mean,std\n";
  for (std::size_t i = 0; i < r.mean.size(); ++i)
    os << (i + 1) << "," << r.mean[i] << "," << r.stddev[i] << "\n";
}

}  // namespace lica
