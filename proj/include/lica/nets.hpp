#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lica/rng.hpp"
#include "lica/tensor.hpp"

namespace lica {

// Network parameter collections and forward passes. All forwards operate on
// row batches: inputs are (B x width) matrices, outputs (B x width) — B = 1
// recovers the single-sample case.

struct LayerParams {
  Tensor w;  // (in, out)
  Tensor b;  // (1, out)
};

// x:(B,in) -> (B,out). Bias is applied via ones(B,1) * b so no broadcast
// rule is needed.
Tensor affine(const LayerParams& p, const Tensor& x);

struct GruParams {
  Tensor wz, uz, bz;  // update gate
  Tensor wr, ur, br;  // reset gate
  Tensor wc, uc, bc;  // candidate
};

// h' = (1-z)*h + z*c with z = sig(xWz + hUz + bz), r = sig(xWr + hUr + br),
// c = tanh(xWc + (r*h)Uc + bc).
Tensor gru_cell(const GruParams& p, const Tensor& x, const Tensor& h);

struct PolicyNetParams {
  LayerParams fc_in;                 // obs -> hidden, ReLU
  std::optional<GruParams> gru;      // hidden -> hidden (recurrent mode)
  LayerParams fc_out;                // hidden -> n_actions
};

struct PolicyParams {
  bool shared = true;
  int n_agents = 1;
  std::vector<PolicyNetParams> nets;  // size 1 when shared, else n_agents
};

const PolicyNetParams& agent_net(const PolicyParams& p, int agent);
PolicyNetParams& agent_net(PolicyParams& p, int agent);

// Returns (action_probs, new_hidden). Feedforward nets pass hidden through.
std::pair<Tensor, Tensor> policy_forward(const PolicyNetParams& p,
                                         const Tensor& obs,
                                         const Tensor& hidden);

// ---- centralized critics ----------------------------------------------

// One-hidden-layer ReLU net generating a flat parameter block from state.
struct HyperHead {
  LayerParams l1, l2;
};
Tensor hyper_forward(const HyperHead& h, const Tensor& state);

struct MixingCriticParams {
  int joint_dim = 0;  // sum of per-agent action counts
  int hidden = 0;     // h
  HyperHead w1;       // state -> joint_dim * hidden
  HyperHead b1;       // state -> hidden
  HyperHead w2;       // state -> hidden
  HyperHead b2;       // state -> 1
};

struct CriticOut {
  Tensor q;   // (B,1)
  Tensor nu;  // first mixed representation (pre-bias, pre-ReLU)
};

// q = relu(u . W1(s) + b1(s)) . W2(s) + b2(s); nu = u . W1(s).
CriticOut mixing_critic_forward_full(const MixingCriticParams& p,
                                     const Tensor& state, const Tensor& joint);
Tensor mixing_critic_forward(const MixingCriticParams& p, const Tensor& state,
                             const Tensor& joint);

struct MlpCriticParams {
  LayerParams l1, l2, l3;  // concat(s,u) -> h -> h -> 1, ReLU between
};

CriticOut mlp_critic_forward_full(const MlpCriticParams& p, const Tensor& state,
                                  const Tensor& joint);
Tensor mlp_critic_forward(const MlpCriticParams& p, const Tensor& state,
                          const Tensor& joint);

enum class CriticKind { mixing, mlp };

struct CriticParams {
  CriticKind kind = CriticKind::mixing;
  int state_dim = 0;
  int joint_dim = 0;
  MixingCriticParams mix;
  MlpCriticParams mlp;
};

Tensor critic_forward(const CriticParams& p, const Tensor& state,
                      const Tensor& joint);
CriticOut critic_forward_full(const CriticParams& p, const Tensor& state,
                              const Tensor& joint);

// ---- initialization -----------------------------------------------------

// Weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)); biases zero.
Tensor init_weight(int fan_in, int fan_out, Rng& rng);
Tensor zero_bias(int out);
LayerParams make_layer(int in, int out, Rng& rng);

struct PolicySpec {
  int n_agents = 1;
  bool shared = true;
  int input_dim = 1;  // observation width including appended agent id
  int hidden = 64;
  int n_actions = 2;
  bool use_gru = false;
};

PolicyParams make_policy(const PolicySpec& s, Rng& rng);
CriticParams make_critic(CriticKind kind, int state_dim, int joint_dim,
                         int hidden, int hyper_hidden, Rng& rng);

// ---- parameter traversal & checkpoints ----------------------------------

using ParamVisitor = std::function<void(const std::string&, Tensor&)>;

void visit_params(LayerParams& p, const std::string& prefix, const ParamVisitor& v);
void visit_params(GruParams& p, const std::string& prefix, const ParamVisitor& v);
void visit_params(PolicyNetParams& p, const std::string& prefix, const ParamVisitor& v);
void visit_params(PolicyParams& p, const std::string& prefix, const ParamVisitor& v);
void visit_params(HyperHead& p, const std::string& prefix, const ParamVisitor& v);
void visit_params(MixingCriticParams& p, const std::string& prefix, const ParamVisitor& v);
void visit_params(MlpCriticParams& p, const std::string& prefix, const ParamVisitor& v);
void visit_params(CriticParams& p, const std::string& prefix, const ParamVisitor& v);

template <typename P>
std::vector<Tensor*> param_tensors(P& p) {
  std::vector<Tensor*> out;
  visit_params(p, "", [&out](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

// Tracked clone: same storages, every tensor watched on the tape.
template <typename P>
P watched(Tape& tape, const P& p) {
  P c = p;
  visit_params(c, "", [&tape](const std::string&, Tensor& t) { t = tape.watch(t); });
  return c;
}

// Deep copy: fresh storages with identical values, no tape linkage.
template <typename P>
P cloned(const P& p) {
  P c = p;
  visit_params(c, "", [](const std::string&, Tensor& t) { t = t.detached(); });
  return c;
}

// Copies parameter values from src into dst (shapes must match). Used for
// target-critic sync.
template <typename P>
void copy_params(const P& src, P& dst) {
  P s = src;  // visit needs mutable refs; storages are shared, values only read
  std::vector<Tensor*> sv = param_tensors(s), dv = param_tensors(dst);
  if (sv.size() != dv.size())
    throw std::invalid_argument("copy_params: structure mismatch");
  for (std::size_t i = 0; i < sv.size(); ++i) dv[i]->data() = sv[i]->data();
}

}  // namespace lica
