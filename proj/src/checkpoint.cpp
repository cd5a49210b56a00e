#include "lica/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace lica {

namespace {

template <typename P>
void params_to_json(nlohmann::json& out, const std::string& prefix, const P& params) {
  P p = params;  // visit takes mutable refs; values are only read
  visit_params(p, prefix, [&out](const std::string& name, Tensor& t) {
    nlohmann::json e;
    e["shape"] = t.shape();
    e["data"] = t.data();
    out[name] = std::move(e);
  });
}

template <typename P>
void params_from_json(const nlohmann::json& in, const std::string& prefix, P& params) {
  visit_params(params, prefix, [&in](const std::string& name, Tensor& t) {
    if (!in.contains(name))
      throw std::invalid_argument("checkpoint: missing parameter '" + name + "'");
    const auto& e = in.at(name);
    const Shape shape = e.at("shape").get<Shape>();
    if (shape != t.shape())
      throw std::invalid_argument("checkpoint: shape mismatch for '" + name + "': file " +
                                  shape_str(shape) + " vs model " + shape_str(t.shape()));
    t.data() = e.at("data").get<std::vector<double>>();
  });
}

}  // namespace

nlohmann::json checkpoint_to_json(const TrainConfig& cfg, TrainState& state, long step) {
  nlohmann::json j;
  j["format"] = "lica-checkpoint-v1";
  nlohmann::json meta;
  meta["config_hash"] = config_hash(cfg);
  meta["config_toml"] = serialize_toml(config_to_toml(cfg));
  meta["step"] = step;
  meta["rng_state"] = state.run_rng.state();
  j["meta"] = std::move(meta);
  nlohmann::json params;
  params_to_json(params, "policy", state.policy);
  params_to_json(params, "critic", state.critic);
  params_to_json(params, "target_critic", state.target_critic);
  j["params"] = std::move(params);
  return j;
}

void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                     TrainState& state, long step) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  f << checkpoint_to_json(cfg, state, step).dump(0) << "\n";
}

LoadedCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format") != "lica-checkpoint-v1")
    throw std::invalid_argument("checkpoint: unknown format");
  LoadedCheckpoint out;
  const auto& meta = j.at("meta");
  out.config = config_from_toml(parse_toml(meta.at("config_toml").get<std::string>()));
  out.step = meta.at("step").get<long>();
  out.state = init_train_state(out.config);
  out.state.run_rng.set_state(meta.at("rng_state").get<std::string>());
  const auto& params = j.at("params");
  params_from_json(params, "policy", out.state.policy);
  params_from_json(params, "critic", out.state.critic);
  params_from_json(params, "target_critic", out.state.target_critic);
  return out;
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  f >> j;
  return checkpoint_from_json(j);
}

}  // namespace lica
