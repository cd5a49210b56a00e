#include "lica/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lica/coma.hpp"
#include "lica/nets.hpp"
#include "lica/training.hpp"

namespace lica {

double finite_diff_check(const std::vector<Tensor*>& leaves,
                         const std::function<Tensor(Tape*)>& loss_fn,
                         const FdOptions& opts) {
  // Analytic pass.
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss = loss_fn(&tape);
    tape.backward(loss);
    for (Tensor* t : leaves) {
      if (t->has_grad()) analytic.push_back(t->grad());
      else analytic.emplace_back(static_cast<std::size_t>(t->numel()), 0.0);
    }
  }
  double max_err = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor* leaf = leaves[li];
    std::vector<int> coords;
    const int n = leaf->numel();
    if (opts.max_coords_per_leaf > 0 && n > opts.max_coords_per_leaf) {
      for (int c = 0; c < opts.max_coords_per_leaf; ++c)
        coords.push_back(opts.coord_rng->randint(n));
    } else {
      coords.resize(static_cast<std::size_t>(n));
      for (int c = 0; c < n; ++c) coords[static_cast<std::size_t>(c)] = c;
    }
    for (int c : coords) {
      auto& data = leaf->data();
      const double saved = data[static_cast<std::size_t>(c)];
      data[static_cast<std::size_t>(c)] = saved + opts.step;
      const double up = loss_fn(nullptr).value();
      data[static_cast<std::size_t>(c)] = saved - opts.step;
      const double dn = loss_fn(nullptr).value();
      data[static_cast<std::size_t>(c)] = saved;
      const double numeric = (up - dn) / (2.0 * opts.step);
      const double a = analytic[li][static_cast<std::size_t>(c)];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : d) v = rng.uniform(lo, hi);
  return Tensor(shape, std::move(d));
}

// Values bounded away from zero so relu kinks are never straddled by the
// finite-difference step.
Tensor random_signed(const Shape& shape, Rng& rng) {
  std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : d) {
    const double mag = 0.2 + rng.uniform() * 1.3;
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return Tensor(shape, std::move(d));
}

Tensor random_probs(int rows, int k, Rng& rng) {
  std::vector<double> d(static_cast<std::size_t>(rows * k));
  for (int r = 0; r < rows; ++r) {
    double z = 0.0;
    for (int i = 0; i < k; ++i) {
      const std::size_t idx = static_cast<std::size_t>(r * k + i);
      d[idx] = 0.05 + rng.uniform();
      z += d[idx];
    }
    for (int i = 0; i < k; ++i) d[static_cast<std::size_t>(r * k + i)] /= z;
  }
  return Tensor({rows, k}, std::move(d));
}

// Weighted sum makes every output coordinate matter in the scalar loss.
Tensor weighted_sum(const Tensor& out, const Tensor& weights) {
  return sum(mul(out, weights));
}

using CaseFn = std::function<double(Rng&)>;

GradCheckReport run_case(const std::string& name, std::uint64_t seed, int instances,
                         const CaseFn& one) {
  GradCheckReport rep;
  rep.name = name;
  rep.instances = instances;
  Rng rng(derive_seed(seed, std::hash<std::string>{}(name)));
  for (int i = 0; i < instances; ++i)
    rep.max_rel_err = std::max(rep.max_rel_err, one(rng));
  return rep;
}

template <typename P>
double check_params_fn(
    P& params, std::vector<Tensor*> extra_leaves,
    const std::function<Tensor(const P&, const std::vector<Tensor>&)>& forward_loss,
    Rng& rng, int max_coords = -1) {
  std::vector<Tensor*> leaves = param_tensors(params);
  for (Tensor* t : extra_leaves) leaves.push_back(t);
  FdOptions opts;
  opts.max_coords_per_leaf = max_coords;
  opts.coord_rng = &rng;
  return finite_diff_check(
      leaves,
      [&](Tape* tape) {
        std::vector<Tensor> extras;
        for (Tensor* t : extra_leaves) extras.push_back(tape ? tape->watch(*t) : *t);
        if (tape) {
          P w = watched(*tape, params);
          return forward_loss(w, extras);
        }
        return forward_loss(params, extras);
      },
      opts);
}

double check_policy_objective(Rng& rng) {
  // Tiny synthetic batch: 2 episodes, up to 3 steps, 2 agents, 3 actions.
  EnvSpec spec;
  spec.n_agents = 2;
  spec.n_actions = 3;
  spec.obs_dim = 4;
  spec.state_dim = 5;
  spec.max_steps = 3;
  EpisodeBatch batch;
  batch.spec = spec;
  batch.shared_policy = false;
  for (int e = 0; e < 2; ++e) {
    Episode ep;
    const int len = 2 + e;
    for (int t = 0; t < len; ++t) {
      ep.states.push_back(random_tensor({spec.state_dim}, rng, -1, 1));
      std::vector<Tensor> obs;
      std::vector<int> act;
      for (int a = 0; a < spec.n_agents; ++a) {
        obs.push_back(random_tensor({spec.obs_dim}, rng, -1, 1));
        act.push_back(rng.randint(spec.n_actions));
      }
      ep.obs.push_back(std::move(obs));
      ep.actions.push_back(std::move(act));
      ep.rewards.push_back(rng.uniform(-1, 1));
    }
    ep.terminated = true;
    batch.episodes.push_back(std::move(ep));
  }

  PolicySpec ps;
  ps.n_agents = 2;
  ps.shared = false;
  ps.input_dim = spec.obs_dim;
  ps.hidden = 6;
  ps.n_actions = spec.n_actions;
  PolicyParams policy = make_policy(ps, rng);
  // Break the zero-bias symmetry so gradients are generic.
  for (Tensor* t : param_tensors(policy))
    for (double& v : t->data()) v += rng.uniform(-0.3, 0.3);
  CriticParams critic = make_critic(CriticKind::mixing, spec.state_dim,
                                    spec.n_agents * spec.n_actions, 4, 5, rng);

  // The objective of the policy step with vanilla entropy (the adaptive
  // coefficient is defined through a stop-gradient, so only the vanilla form
  // is a plain scalar function of theta).
  auto objective = [&](const PolicyParams& p) {
    const int b = 2;
    const long total = batch.total_steps();
    Tensor obj = Tensor::scalar(0.0);
    std::vector<Tensor> hidden(2, Tensor::zeros({b, ps.hidden}));
    for (int t = 0; t < batch.max_length(); ++t) {
      std::vector<double> mask(2, 0.0);
      for (int e = 0; e < b; ++e)
        if (t < batch.episodes[static_cast<std::size_t>(e)].length())
          mask[static_cast<std::size_t>(e)] = 1.0;
      Tensor mask_col({b}, mask);
      std::vector<Tensor> probs;
      for (int a = 0; a < 2; ++a) {
        std::vector<double> rows(static_cast<std::size_t>(b * spec.obs_dim), 0.0);
        for (int e = 0; e < b; ++e) {
          const auto& ep = batch.episodes[static_cast<std::size_t>(e)];
          if (t < ep.length()) {
            const auto& o = ep.obs[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)].data();
            std::copy(o.begin(), o.end(),
                      rows.begin() + static_cast<std::ptrdiff_t>(e) * spec.obs_dim);
          }
        }
        auto [pr, h2] = policy_forward(agent_net(p, a), Tensor({b, spec.obs_dim}, rows),
                                       hidden[static_cast<std::size_t>(a)]);
        hidden[static_cast<std::size_t>(a)] = h2;
        probs.push_back(pr);
      }
      Tensor joint = joint_action_input(probs, InputMode::distribution_params, nullptr, 1.0);
      std::vector<double> srow(static_cast<std::size_t>(b * spec.state_dim), 0.0);
      for (int e = 0; e < b; ++e) {
        const auto& ep = batch.episodes[static_cast<std::size_t>(e)];
        if (t < ep.length()) {
          const auto& s = ep.states[static_cast<std::size_t>(t)].data();
          std::copy(s.begin(), s.end(),
                    srow.begin() + static_cast<std::ptrdiff_t>(e) * spec.state_dim);
        }
      }
      Tensor q = reshape(critic_forward(critic, Tensor({b, spec.state_dim}, srow), joint), {b});
      obj = add(obj, sum(mul(q, mask_col)));
      for (int a = 0; a < 2; ++a) {
        Tensor hr = entropy_rows(probs[static_cast<std::size_t>(a)]);
        obj = add(obj, scale(sum(mul(hr, mask_col)), 0.07 / 2.0));
      }
    }
    return scale(obj, 1.0 / static_cast<double>(total));
  };
  return check_params_fn<PolicyParams>(
      policy, {},
      [&](const PolicyParams& pp, const std::vector<Tensor>&) { return objective(pp); },
      rng, 6);
}

}  // namespace

std::vector<GradCheckReport> gradcheck_suite(std::uint64_t seed, int instances) {
  std::vector<GradCheckReport> reports;
  auto add_case = [&](const std::string& name, const CaseFn& fn) {
    reports.push_back(run_case(name, seed, instances, fn));
  };

  auto check_leaves = [](std::vector<Tensor*> leaves,
                         const std::function<Tensor(std::vector<Tensor>)>& build) {
    return finite_diff_check(leaves, [&](Tape* tape) {
      std::vector<Tensor> ins;
      for (Tensor* t : leaves) ins.push_back(tape ? tape->watch(*t) : *t);
      return build(std::move(ins));
    });
  };

  add_case("op.matmul", [&](Rng& rng) {
    const int m = 2 + rng.randint(3), k = 2 + rng.randint(3), n = 2 + rng.randint(3);
    Tensor a = random_signed({m, k}, rng), b = random_signed({k, n}, rng);
    Tensor w = random_signed({m, n}, rng);
    return check_leaves({&a, &b}, [&](std::vector<Tensor> in) {
      return weighted_sum(matmul(in[0], in[1]), w);
    });
  });
  add_case("op.row_matmul", [&](Rng& rng) {
    const int rows = 2 + rng.randint(2), in_d = 2 + rng.randint(2), cols = 2 + rng.randint(2);
    Tensor a = random_signed({rows, in_d}, rng);
    Tensor wf = random_signed({rows, in_d * cols}, rng);
    Tensor w = random_signed({rows, cols}, rng);
    return check_leaves({&a, &wf}, [&](std::vector<Tensor> in) {
      return weighted_sum(row_matmul(in[0], in[1], cols), w);
    });
  });
  add_case("op.add", [&](Rng& rng) {
    Tensor a = random_signed({3, 4}, rng), b = random_signed({3, 4}, rng);
    Tensor w = random_signed({3, 4}, rng);
    return check_leaves({&a, &b}, [&](std::vector<Tensor> in) {
      return weighted_sum(add(in[0], in[1]), w);
    });
  });
  add_case("op.mul", [&](Rng& rng) {
    Tensor a = random_signed({3, 4}, rng), b = random_signed({3, 4}, rng);
    Tensor w = random_signed({3, 4}, rng);
    return check_leaves({&a, &b}, [&](std::vector<Tensor> in) {
      return weighted_sum(mul(in[0], in[1]), w);
    });
  });
  add_case("op.relu", [&](Rng& rng) {
    Tensor a = random_signed({2, 5}, rng);
    Tensor w = random_signed({2, 5}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(relu(in[0]), w);
    });
  });
  add_case("op.tanh", [&](Rng& rng) {
    Tensor a = random_signed({2, 5}, rng);
    Tensor w = random_signed({2, 5}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(lica::tanh(in[0]), w);
    });
  });
  add_case("op.sigmoid", [&](Rng& rng) {
    Tensor a = random_signed({2, 5}, rng);
    Tensor w = random_signed({2, 5}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(sigmoid(in[0]), w);
    });
  });
  add_case("op.softmax", [&](Rng& rng) {
    const int axis = rng.randint(2);
    Tensor a = random_signed({3, 4}, rng);
    Tensor w = random_signed({3, 4}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(softmax(in[0], axis), w);
    });
  });
  add_case("op.log", [&](Rng& rng) {
    Tensor a = random_tensor({2, 5}, rng, 0.2, 2.0);
    Tensor w = random_signed({2, 5}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(lica::log(in[0]), w);
    });
  });
  add_case("op.square", [&](Rng& rng) {
    Tensor a = random_signed({2, 5}, rng);
    Tensor w = random_signed({2, 5}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(square(in[0]), w);
    });
  });
  add_case("op.scale", [&](Rng& rng) {
    const double c = rng.uniform(-2, 2);
    Tensor a = random_signed({2, 5}, rng);
    Tensor w = random_signed({2, 5}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(scale(in[0], c), w);
    });
  });
  add_case("op.sum", [&](Rng& rng) {
    Tensor a = random_signed({3, 4}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) { return sum(in[0]); });
  });
  add_case("op.sum_axis", [&](Rng& rng) {
    const int axis = rng.randint(2);
    Tensor a = random_signed({3, 4}, rng);
    Tensor w = random_signed(axis == 0 ? Shape{4} : Shape{3}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(sum(in[0], axis), w);
    });
  });
  add_case("op.mean", [&](Rng& rng) {
    Tensor a = random_signed({3, 4}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) { return mean(in[0]); });
  });
  add_case("op.mean_axis", [&](Rng& rng) {
    const int axis = rng.randint(2);
    Tensor a = random_signed({3, 4}, rng);
    Tensor w = random_signed(axis == 0 ? Shape{4} : Shape{3}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(mean(in[0], axis), w);
    });
  });
  add_case("op.concat", [&](Rng& rng) {
    const int axis = rng.randint(2);
    Tensor a = random_signed({2, 3}, rng);
    Tensor b = random_signed(axis == 0 ? Shape{3, 3} : Shape{2, 2}, rng);
    Tensor w = random_signed(axis == 0 ? Shape{5, 3} : Shape{2, 5}, rng);
    return check_leaves({&a, &b}, [&](std::vector<Tensor> in) {
      return weighted_sum(concat({in[0], in[1]}, axis), w);
    });
  });
  add_case("op.slice", [&](Rng& rng) {
    Tensor a = random_signed({3, 5}, rng);
    const int begin = rng.randint(3), end = begin + 1 + rng.randint(5 - begin - 1);
    Tensor w = random_signed({3, end - begin}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(slice(in[0], 1, begin, end), w);
    });
  });
  add_case("op.reshape", [&](Rng& rng) {
    Tensor a = random_signed({3, 4}, rng);
    Tensor w = random_signed({2, 6}, rng);
    return check_leaves({&a}, [&](std::vector<Tensor> in) {
      return weighted_sum(reshape(in[0], {2, 6}), w);
    });
  });

  // Network forwards: gradients w.r.t. parameters and inputs.
  add_case("net.policy_feedforward", [&](Rng& rng) {
    PolicySpec ps{1, true, 5, 6, 4, false};
    PolicyParams p = make_policy(ps, rng);
    for (Tensor* t : param_tensors(p))
      for (double& v : t->data()) v += rng.uniform(-0.3, 0.3);
    Tensor obs = random_signed({2, 5}, rng);
    Tensor w = random_signed({2, 4}, rng);
    Tensor hid = Tensor::zeros({2, 6});
    return check_params_fn<PolicyParams>(
        p, {&obs},
        [&](const PolicyParams& pp, const std::vector<Tensor>& ex) {
          return weighted_sum(policy_forward(pp.nets[0], ex[0], hid).first, w);
        },
        rng);
  });
  add_case("net.policy_gru", [&](Rng& rng) {
    PolicySpec ps{1, true, 5, 6, 4, true};
    PolicyParams p = make_policy(ps, rng);
    for (Tensor* t : param_tensors(p))
      for (double& v : t->data()) v += rng.uniform(-0.3, 0.3);
    Tensor obs = random_signed({2, 5}, rng);
    Tensor hid = random_signed({2, 6}, rng);
    Tensor w = random_signed({2, 4}, rng);
    return check_params_fn<PolicyParams>(
        p, {&obs, &hid},
        [&](const PolicyParams& pp, const std::vector<Tensor>& ex) {
          return weighted_sum(policy_forward(pp.nets[0], ex[0], ex[1]).first, w);
        },
        rng);
  });
  add_case("net.gru_cell", [&](Rng& rng) {
    PolicySpec ps{1, true, 4, 5, 2, true};
    PolicyParams p = make_policy(ps, rng);
    for (Tensor* t : param_tensors(p))
      for (double& v : t->data()) v += rng.uniform(-0.3, 0.3);
    Tensor x = random_signed({2, 4}, rng);
    Tensor hid = random_signed({2, 5}, rng);
    Tensor w = random_signed({2, 5}, rng);
    return check_params_fn<PolicyParams>(
        p, {&x, &hid},
        [&](const PolicyParams& pp, const std::vector<Tensor>& ex) {
          Tensor xin = relu(affine(pp.nets[0].fc_in, ex[0]));
          return weighted_sum(gru_cell(*pp.nets[0].gru, xin, ex[1]), w);
        },
        rng);
  });
  add_case("net.mixing_critic", [&](Rng& rng) {
    CriticParams c = make_critic(CriticKind::mixing, 3, 4, 4, 5, rng);
    for (Tensor* t : param_tensors(c))
      for (double& v : t->data()) v += rng.uniform(-0.3, 0.3);
    Tensor s = random_signed({2, 3}, rng);
    Tensor u = random_probs(2, 4, rng);
    Tensor w = random_signed({2, 1}, rng);
    return check_params_fn<CriticParams>(
        c, {&s, &u},
        [&](const CriticParams& cc, const std::vector<Tensor>& ex) {
          return weighted_sum(critic_forward(cc, ex[0], ex[1]), w);
        },
        rng);
  });
  add_case("net.mlp_critic", [&](Rng& rng) {
    CriticParams c = make_critic(CriticKind::mlp, 3, 4, 6, 0, rng);
    for (Tensor* t : param_tensors(c))
      for (double& v : t->data()) v += rng.uniform(-0.3, 0.3);
    Tensor s = random_signed({2, 3}, rng);
    Tensor u = random_probs(2, 4, rng);
    Tensor w = random_signed({2, 1}, rng);
    return check_params_fn<CriticParams>(
        c, {&s, &u},
        [&](const CriticParams& cc, const std::vector<Tensor>& ex) {
          return weighted_sum(critic_forward(cc, ex[0], ex[1]), w);
        },
        rng);
  });
  add_case("objective.policy", [&](Rng& rng) { return check_policy_objective(rng); });

  return reports;
}

bool gradcheck_passed(const std::vector<GradCheckReport>& reports, double tol) {
  for (const auto& r : reports)
    if (!(r.max_rel_err < tol)) return false;
  return true;
}

}  // namespace lica
