#include "lica/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace lica {

Tensor affine(const LayerParams& p, const Tensor& x) {
  Tensor y = matmul(x, p.w);
  Tensor ones = Tensor::full({x.dim(0), 1}, 1.0);
  return add(y, matmul(ones, p.b));
}

Tensor gru_cell(const GruParams& p, const Tensor& x, const Tensor& h) {
  Tensor ones = Tensor::full({x.dim(0), 1}, 1.0);
  auto gate_pre = [&](const Tensor& w, const Tensor& u, const Tensor& b,
                      const Tensor& hh) {
    return add(add(matmul(x, w), matmul(hh, u)), matmul(ones, b));
  };
  Tensor z = sigmoid(gate_pre(p.wz, p.uz, p.bz, h));
  Tensor r = sigmoid(gate_pre(p.wr, p.ur, p.br, h));
  Tensor c = lica::tanh(add(add(matmul(x, p.wc), matmul(mul(r, h), p.uc)),
                            matmul(ones, p.bc)));
  Tensor one_minus_z = add(Tensor::full(z.shape(), 1.0), scale(z, -1.0));
  return add(mul(one_minus_z, h), mul(z, c));
}

const PolicyNetParams& agent_net(const PolicyParams& p, int agent) {
  return p.shared ? p.nets[0] : p.nets[static_cast<std::size_t>(agent)];
}

PolicyNetParams& agent_net(PolicyParams& p, int agent) {
  return p.shared ? p.nets[0] : p.nets[static_cast<std::size_t>(agent)];
}

std::pair<Tensor, Tensor> policy_forward(const PolicyNetParams& p,
                                         const Tensor& obs, const Tensor& hidden) {
  if (obs.rank() != 2 || obs.dim(1) != p.fc_in.w.dim(0))
    throw std::invalid_argument(
        "policy_forward: observation width " + shape_str(obs.shape()) +
        " does not match input layer " + shape_str(p.fc_in.w.shape()));
  Tensor x = relu(affine(p.fc_in, obs));
  Tensor new_hidden = hidden;
  Tensor feat = x;
  if (p.gru) {
    new_hidden = gru_cell(*p.gru, x, hidden);
    feat = new_hidden;
  }
  Tensor probs = softmax(affine(p.fc_out, feat), 1);
  return {probs, new_hidden};
}

Tensor hyper_forward(const HyperHead& h, const Tensor& state) {
  return affine(h.l2, relu(affine(h.l1, state)));
}

CriticOut mixing_critic_forward_full(const MixingCriticParams& p,
                                     const Tensor& state, const Tensor& joint) {
  if (joint.rank() != 2 || joint.dim(1) != p.joint_dim)
    throw std::invalid_argument(
        "mixing_critic_forward: joint action input " + shape_str(joint.shape()) +
        " does not match joint_dim " + std::to_string(p.joint_dim));
  Tensor w1 = hyper_forward(p.w1, state);          // (B, joint_dim*hidden)
  Tensor nu = row_matmul(joint, w1, p.hidden);     // (B, hidden)
  Tensor h = relu(add(nu, hyper_forward(p.b1, state)));
  Tensor w2 = hyper_forward(p.w2, state);          // (B, hidden)
  Tensor q = add(row_matmul(h, w2, 1), hyper_forward(p.b2, state));
  return {q, nu};
}

Tensor mixing_critic_forward(const MixingCriticParams& p, const Tensor& state,
                             const Tensor& joint) {
  return mixing_critic_forward_full(p, state, joint).q;
}

CriticOut mlp_critic_forward_full(const MlpCriticParams& p, const Tensor& state,
                                  const Tensor& joint) {
  if (state.dim(1) + joint.dim(1) != p.l1.w.dim(0))
    throw std::invalid_argument(
        "mlp_critic_forward: concat width " +
        std::to_string(state.dim(1) + joint.dim(1)) + " does not match layer " +
        shape_str(p.l1.w.shape()));
  Tensor nu = affine(p.l1, concat({state, joint}, 1));
  Tensor h = relu(affine(p.l2, relu(nu)));
  return {affine(p.l3, h), nu};
}

Tensor mlp_critic_forward(const MlpCriticParams& p, const Tensor& state,
                          const Tensor& joint) {
  return mlp_critic_forward_full(p, state, joint).q;
}

CriticOut critic_forward_full(const CriticParams& p, const Tensor& state,
                              const Tensor& joint) {
  return p.kind == CriticKind::mixing ? mixing_critic_forward_full(p.mix, state, joint)
                                      : mlp_critic_forward_full(p.mlp, state, joint);
}

Tensor critic_forward(const CriticParams& p, const Tensor& state,
                      const Tensor& joint) {
  return critic_forward_full(p, state, joint).q;
}

Tensor init_weight(int fan_in, int fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(static_cast<std::size_t>(fan_in) * fan_out);
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor({fan_in, fan_out}, std::move(data));
}

Tensor zero_bias(int out) { return Tensor::zeros({1, out}); }

LayerParams make_layer(int in, int out, Rng& rng) {
  return {init_weight(in, out, rng), zero_bias(out)};
}

namespace {

GruParams make_gru(int in, int hidden, Rng& rng) {
  GruParams g;
  g.wz = init_weight(in, hidden, rng);
  g.uz = init_weight(hidden, hidden, rng);
  g.bz = zero_bias(hidden);
  g.wr = init_weight(in, hidden, rng);
  g.ur = init_weight(hidden, hidden, rng);
  g.br = zero_bias(hidden);
  g.wc = init_weight(in, hidden, rng);
  g.uc = init_weight(hidden, hidden, rng);
  g.bc = zero_bias(hidden);
  return g;
}

HyperHead make_hyper_head(int state_dim, int hyper_hidden, int out, Rng& rng) {
  return {make_layer(state_dim, hyper_hidden, rng), make_layer(hyper_hidden, out, rng)};
}

}  // namespace

PolicyParams make_policy(const PolicySpec& s, Rng& rng) {
  PolicyParams p;
  p.shared = s.shared;
  p.n_agents = s.n_agents;
  const int copies = s.shared ? 1 : s.n_agents;
  for (int i = 0; i < copies; ++i) {
    PolicyNetParams net;
    net.fc_in = make_layer(s.input_dim, s.hidden, rng);
    if (s.use_gru) net.gru = make_gru(s.hidden, s.hidden, rng);
    net.fc_out = make_layer(s.hidden, s.n_actions, rng);
    p.nets.push_back(std::move(net));
  }
  return p;
}

CriticParams make_critic(CriticKind kind, int state_dim, int joint_dim,
                         int hidden, int hyper_hidden, Rng& rng) {
  CriticParams c;
  c.kind = kind;
  c.state_dim = state_dim;
  c.joint_dim = joint_dim;
  if (kind == CriticKind::mixing) {
    c.mix.joint_dim = joint_dim;
    c.mix.hidden = hidden;
    c.mix.w1 = make_hyper_head(state_dim, hyper_hidden, joint_dim * hidden, rng);
    c.mix.b1 = make_hyper_head(state_dim, hyper_hidden, hidden, rng);
    c.mix.w2 = make_hyper_head(state_dim, hyper_hidden, hidden, rng);
    c.mix.b2 = make_hyper_head(state_dim, hyper_hidden, 1, rng);
  } else {
    c.mlp.l1 = make_layer(state_dim + joint_dim, hidden, rng);
    c.mlp.l2 = make_layer(hidden, hidden, rng);
    c.mlp.l3 = make_layer(hidden, 1, rng);
  }
  return c;
}

void visit_params(LayerParams& p, const std::string& prefix, const ParamVisitor& v) {
  v(prefix + ".w", p.w);
  v(prefix + ".b", p.b);
}

void visit_params(GruParams& p, const std::string& prefix, const ParamVisitor& v) {
  v(prefix + ".wz", p.wz);
  v(prefix + ".uz", p.uz);
  v(prefix + ".bz", p.bz);
  v(prefix + ".wr", p.wr);
  v(prefix + ".ur", p.ur);
  v(prefix + ".br", p.br);
  v(prefix + ".wc", p.wc);
  v(prefix + ".uc", p.uc);
  v(prefix + ".bc", p.bc);
}

void visit_params(PolicyNetParams& p, const std::string& prefix, const ParamVisitor& v) {
  visit_params(p.fc_in, prefix + ".fc_in", v);
  if (p.gru) visit_params(*p.gru, prefix + ".gru", v);
  visit_params(p.fc_out, prefix + ".fc_out", v);
}

void visit_params(PolicyParams& p, const std::string& prefix, const ParamVisitor& v) {
  for (std::size_t i = 0; i < p.nets.size(); ++i)
    visit_params(p.nets[i], prefix + ".net" + std::to_string(i), v);
}

void visit_params(HyperHead& p, const std::string& prefix, const ParamVisitor& v) {
  visit_params(p.l1, prefix + ".l1", v);
  visit_params(p.l2, prefix + ".l2", v);
}

void visit_params(MixingCriticParams& p, const std::string& prefix, const ParamVisitor& v) {
  visit_params(p.w1, prefix + ".w1", v);
  visit_params(p.b1, prefix + ".b1", v);
  visit_params(p.w2, prefix + ".w2", v);
  visit_params(p.b2, prefix + ".b2", v);
}

void visit_params(MlpCriticParams& p, const std::string& prefix, const ParamVisitor& v) {
  visit_params(p.l1, prefix + ".l1", v);
  visit_params(p.l2, prefix + ".l2", v);
  visit_params(p.l3, prefix + ".l3", v);
}

void visit_params(CriticParams& p, const std::string& prefix, const ParamVisitor& v) {
  if (p.kind == CriticKind::mixing) visit_params(p.mix, prefix + ".mix", v);
  else visit_params(p.mlp, prefix + ".mlp", v);
}

}  // namespace lica
