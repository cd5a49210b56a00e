#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lica {

// ---- minimal TOML subset -------------------------------------------------
// Two-level tables ([section] + key = value), values: string, bool, integer,
// float. Enough for experiment configs; parse -> serialize -> parse is the
// identity on parsed tables.

struct TomlValue {
  enum class Type { boolean, integer, floating, string };
  Type type = Type::string;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;

  static TomlValue of(bool v);
  static TomlValue of(std::int64_t v);
  static TomlValue of(double v);
  static TomlValue of(const std::string& v);
  bool operator==(const TomlValue& o) const;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& text);
std::string serialize_toml(const TomlTable& table);

// "section.key=value" (value parsed as TOML scalar; bare words are strings)
void apply_override(TomlTable& table, const std::string& dotted_assignment);

// ---- experiment configuration --------------------------------------------

struct TrainConfig {
  // [env]
  std::string env = "coop_nav";  // traffic_junction | coop_nav | predator_prey
  int n_agents = 3;
  int max_steps = 200;  // episode step limit

  // [train]
  double gamma = 0.99;
  double lambda = 0.8;
  int batch_size = 32;
  double policy_lr = 0.0025;
  double critic_lr = 0.0005;
  double grad_clip = 10.0;
  int target_sync_interval = 200;
  int total_steps = 200;  // training iterations (one critic + one policy step each)
  int eval_interval = 20;
  int eval_episodes = 32;
  std::uint64_t seed = 1;

  // [model]
  std::string critic = "mixing";  // mixing | mlp
  int hidden = 64;                // policy hidden width
  int critic_hidden = 64;         // width of the generated critic layer
  int hyper_hidden = 64;          // hidden width of the weight-generating nets
  bool use_gru = false;
  bool share_params = true;

  // [policy]
  std::string input_mode = "distribution_params";  // | gumbel_st
  double gumbel_temperature = 1.0;

  // [entropy]
  std::string entropy_mode = "adaptive";  // | vanilla
  double entropy_coeff = 0.06;
};

TrainConfig config_from_toml(const TomlTable& t);
TomlTable config_to_toml(const TrainConfig& c);
TrainConfig load_config_file(const std::string& path,
                             const std::vector<std::string>& overrides = {});
void validate_config(const TrainConfig& c);
std::string config_hash(const TrainConfig& c);  // FNV-1a of canonical TOML

}  // namespace lica
