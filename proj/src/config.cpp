#include "lica/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lica {

TomlValue TomlValue::of(bool v) {
  TomlValue t;
  t.type = Type::boolean;
  t.b = v;
  return t;
}
TomlValue TomlValue::of(std::int64_t v) {
  TomlValue t;
  t.type = Type::integer;
  t.i = v;
  return t;
}
TomlValue TomlValue::of(double v) {
  TomlValue t;
  t.type = Type::floating;
  t.d = v;
  return t;
}
TomlValue TomlValue::of(const std::string& v) {
  TomlValue t;
  t.type = Type::string;
  t.s = v;
  return t;
}

bool TomlValue::operator==(const TomlValue& o) const {
  if (type != o.type) return false;
  switch (type) {
    case Type::boolean: return b == o.b;
    case Type::integer: return i == o.i;
    case Type::floating: return d == o.d;
    case Type::string: return s == o.s;
  }
  return false;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (c == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_scalar(const std::string& raw, int line_no) {
  const std::string v = trim(raw);
  if (v.empty())
    throw std::invalid_argument("toml: empty value at line " + std::to_string(line_no));
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw std::invalid_argument("toml: unterminated string at line " +
                                  std::to_string(line_no));
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size() && (v[i + 1] == '"' || v[i + 1] == '\\')) {
        out.push_back(v[i + 1]);
        ++i;
      } else {
        out.push_back(v[i]);
      }
    }
    return TomlValue::of(out);
  }
  if (v == "true") return TomlValue::of(true);
  if (v == "false") return TomlValue::of(false);
  // integer?
  {
    std::int64_t iv = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), iv);
    if (ec == std::errc() && p == v.data() + v.size()) return TomlValue::of(iv);
  }
  // float?
  {
    char* end = nullptr;
    const double dv = std::strtod(v.c_str(), &end);
    if (end == v.c_str() + v.size()) return TomlValue::of(dv);
  }
  // bare word -> string (convenient for CLI overrides)
  return TomlValue::of(v);
}

std::string format_double(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  (void)ec;
  std::string s(buf, p);
  // keep the value float-typed on reparse
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

std::string format_value(const TomlValue& v) {
  switch (v.type) {
    case TomlValue::Type::boolean: return v.b ? "true" : "false";
    case TomlValue::Type::integer: return std::to_string(v.i);
    case TomlValue::Type::floating: return format_double(v.d);
    case TomlValue::Type::string: {
      std::string out = "\"";
      for (char c : v.s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      out += "\"";
      return out;
    }
  }
  return "";
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("toml: malformed section at line " +
                                    std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::invalid_argument("toml: empty section name at line " +
                                    std::to_string(line_no));
      table[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("toml: expected key = value at line " +
                                  std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("toml: empty key at line " + std::to_string(line_no));
    table[section][key] = parse_scalar(line.substr(eq + 1), line_no);
  }
  return table;
}

std::string serialize_toml(const TomlTable& table) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [section, kv] : table) {
    if (!first) os << "\n";
    first = false;
    if (!section.empty()) os << "[" << section << "]\n";
    for (const auto& [key, value] : kv) os << key << " = " << format_value(value) << "\n";
  }
  return os.str();
}

void apply_override(TomlTable& table, const std::string& dotted_assignment) {
  const std::size_t eq = dotted_assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override '" + dotted_assignment +
                                "' must look like section.key=value");
  const std::string path = trim(dotted_assignment.substr(0, eq));
  const std::size_t dot = path.find('.');
  if (dot == std::string::npos)
    throw std::invalid_argument("override key '" + path +
                                "' must be dotted (section.key)");
  const std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  table[section][key] = parse_scalar(dotted_assignment.substr(eq + 1), 0);
}

// ---- TrainConfig binding ---------------------------------------------------

namespace {

struct Binder {
  const TomlTable& t;
  std::string errors;

  template <typename T>
  void req_type(const std::string& sec, const std::string& key, const TomlValue& v, T& out);

  template <typename T>
  void get(const std::string& sec, const std::string& key, T& out) {
    auto si = t.find(sec);
    if (si == t.end()) return;
    auto ki = si->second.find(key);
    if (ki == si->second.end()) return;
    req_type(sec, key, ki->second, out);
  }
};

template <>
void Binder::req_type(const std::string& sec, const std::string& key,
                      const TomlValue& v, double& out) {
  if (v.type == TomlValue::Type::floating) out = v.d;
  else if (v.type == TomlValue::Type::integer) out = static_cast<double>(v.i);
  else errors += "key " + sec + "." + key + " must be a number\n";
}

template <>
void Binder::req_type(const std::string& sec, const std::string& key,
                      const TomlValue& v, int& out) {
  if (v.type == TomlValue::Type::integer) out = static_cast<int>(v.i);
  else errors += "key " + sec + "." + key + " must be an integer\n";
}

template <>
void Binder::req_type(const std::string& sec, const std::string& key,
                      const TomlValue& v, std::uint64_t& out) {
  if (v.type == TomlValue::Type::integer && v.i >= 0)
    out = static_cast<std::uint64_t>(v.i);
  else errors += "key " + sec + "." + key + " must be a non-negative integer\n";
}

template <>
void Binder::req_type(const std::string& sec, const std::string& key,
                      const TomlValue& v, bool& out) {
  if (v.type == TomlValue::Type::boolean) out = v.b;
  else errors += "key " + sec + "." + key + " must be true or false\n";
}

template <>
void Binder::req_type(const std::string& sec, const std::string& key,
                      const TomlValue& v, std::string& out) {
  if (v.type == TomlValue::Type::string) out = v.s;
  else errors += "key " + sec + "." + key + " must be a string\n";
}

const std::map<std::string, std::vector<std::string>>& valid_keys() {
  static const std::map<std::string, std::vector<std::string>> k = {
      {"env", {"name", "n_agents", "max_steps"}},
      {"train",
       {"gamma", "lambda", "batch_size", "policy_lr", "critic_lr", "grad_clip",
        "target_sync_interval", "total_steps", "eval_interval", "eval_episodes",
        "seed"}},
      {"model",
       {"critic", "hidden", "critic_hidden", "hyper_hidden", "use_gru",
        "share_params"}},
      {"policy", {"input_mode", "gumbel_temperature"}},
      {"entropy", {"mode", "coeff"}},
  };
  return k;
}

}  // namespace

TrainConfig config_from_toml(const TomlTable& t) {
  // Reject unknown sections/keys, listing what is valid.
  for (const auto& [section, kv] : t) {
    auto vi = valid_keys().find(section);
    if (vi == valid_keys().end()) {
      std::string msg = "unknown config section [" + section + "]; valid sections:";
      for (const auto& [s, _] : valid_keys()) msg += " [" + s + "]";
      throw std::invalid_argument(msg);
    }
    for (const auto& [key, _] : kv) {
      const auto& ok = vi->second;
      if (std::find(ok.begin(), ok.end(), key) == ok.end()) {
        std::string msg = "unknown config key '" + section + "." + key +
                          "'; valid keys under [" + section + "]:";
        for (const auto& k : ok) msg += " " + k;
        throw std::invalid_argument(msg);
      }
    }
  }
  TrainConfig c;
  Binder b{t, ""};
  b.get("env", "name", c.env);
  b.get("env", "n_agents", c.n_agents);
  b.get("env", "max_steps", c.max_steps);
  b.get("train", "gamma", c.gamma);
  b.get("train", "lambda", c.lambda);
  b.get("train", "batch_size", c.batch_size);
  b.get("train", "policy_lr", c.policy_lr);
  b.get("train", "critic_lr", c.critic_lr);
  b.get("train", "grad_clip", c.grad_clip);
  b.get("train", "target_sync_interval", c.target_sync_interval);
  b.get("train", "total_steps", c.total_steps);
  b.get("train", "eval_interval", c.eval_interval);
  b.get("train", "eval_episodes", c.eval_episodes);
  b.get("train", "seed", c.seed);
  b.get("model", "critic", c.critic);
  b.get("model", "hidden", c.hidden);
  b.get("model", "critic_hidden", c.critic_hidden);
  b.get("model", "hyper_hidden", c.hyper_hidden);
  b.get("model", "use_gru", c.use_gru);
  b.get("model", "share_params", c.share_params);
  b.get("policy", "input_mode", c.input_mode);
  b.get("policy", "gumbel_temperature", c.gumbel_temperature);
  b.get("entropy", "mode", c.entropy_mode);
  b.get("entropy", "coeff", c.entropy_coeff);
  if (!b.errors.empty()) throw std::invalid_argument("config: " + b.errors);
  validate_config(c);
  return c;
}

TomlTable config_to_toml(const TrainConfig& c) {
  TomlTable t;
  t["env"]["name"] = TomlValue::of(c.env);
  t["env"]["n_agents"] = TomlValue::of(static_cast<std::int64_t>(c.n_agents));
  t["env"]["max_steps"] = TomlValue::of(static_cast<std::int64_t>(c.max_steps));
  t["train"]["gamma"] = TomlValue::of(c.gamma);
  t["train"]["lambda"] = TomlValue::of(c.lambda);
  t["train"]["batch_size"] = TomlValue::of(static_cast<std::int64_t>(c.batch_size));
  t["train"]["policy_lr"] = TomlValue::of(c.policy_lr);
  t["train"]["critic_lr"] = TomlValue::of(c.critic_lr);
  t["train"]["grad_clip"] = TomlValue::of(c.grad_clip);
  t["train"]["target_sync_interval"] =
      TomlValue::of(static_cast<std::int64_t>(c.target_sync_interval));
  t["train"]["total_steps"] = TomlValue::of(static_cast<std::int64_t>(c.total_steps));
  t["train"]["eval_interval"] = TomlValue::of(static_cast<std::int64_t>(c.eval_interval));
  t["train"]["eval_episodes"] = TomlValue::of(static_cast<std::int64_t>(c.eval_episodes));
  t["train"]["seed"] = TomlValue::of(static_cast<std::int64_t>(c.seed));
  t["model"]["critic"] = TomlValue::of(c.critic);
  t["model"]["hidden"] = TomlValue::of(static_cast<std::int64_t>(c.hidden));
  t["model"]["critic_hidden"] = TomlValue::of(static_cast<std::int64_t>(c.critic_hidden));
  t["model"]["hyper_hidden"] = TomlValue::of(static_cast<std::int64_t>(c.hyper_hidden));
  t["model"]["use_gru"] = TomlValue::of(c.use_gru);
  t["model"]["share_params"] = TomlValue::of(c.share_params);
  t["policy"]["input_mode"] = TomlValue::of(c.input_mode);
  t["policy"]["gumbel_temperature"] = TomlValue::of(c.gumbel_temperature);
  t["entropy"]["mode"] = TomlValue::of(c.entropy_mode);
  t["entropy"]["coeff"] = TomlValue::of(c.entropy_coeff);
  return t;
}

TrainConfig load_config_file(const std::string& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  TomlTable t = parse_toml(buf.str());
  for (const auto& o : overrides) apply_override(t, o);
  return config_from_toml(t);
}

void validate_config(const TrainConfig& c) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (c.env != "traffic_junction" && c.env != "coop_nav" && c.env != "predator_prey")
    fail("env.name '" + c.env + "' unknown (traffic_junction, coop_nav, predator_prey)");
  if (c.gamma < 0.0 || c.gamma >= 1.0) fail("train.gamma must be in [0,1)");
  if (c.lambda < 0.0 || c.lambda > 1.0) fail("train.lambda must be in [0,1]");
  if (c.batch_size < 1) fail("train.batch_size must be >= 1");
  if (c.entropy_coeff <= 0.0) fail("entropy.coeff must be > 0");
  if (c.entropy_mode != "adaptive" && c.entropy_mode != "vanilla")
    fail("entropy.mode must be adaptive or vanilla");
  if (c.critic != "mixing" && c.critic != "mlp") fail("model.critic must be mixing or mlp");
  if (c.input_mode != "distribution_params" && c.input_mode != "gumbel_st")
    fail("policy.input_mode must be distribution_params or gumbel_st");
  if (c.gumbel_temperature <= 0.0) fail("policy.gumbel_temperature must be > 0");
  if (c.total_steps < 1) fail("train.total_steps must be >= 1");
  if (c.eval_interval < 1) fail("train.eval_interval must be >= 1");
  if (c.eval_episodes < 1) fail("train.eval_episodes must be >= 1");
  if (c.max_steps < 1) fail("env.max_steps must be >= 1");
  if (c.n_agents < 2) fail("env.n_agents must be >= 2");
  if (c.hidden < 1 || c.critic_hidden < 1 || c.hyper_hidden < 1)
    fail("model widths must be >= 1");
  if (c.policy_lr <= 0.0 || c.critic_lr <= 0.0) fail("learning rates must be > 0");
  if (c.grad_clip <= 0.0) fail("train.grad_clip must be > 0");
  if (c.target_sync_interval < 1) fail("train.target_sync_interval must be >= 1");
}

std::string config_hash(const TrainConfig& c) {
  const std::string s = serialize_toml(config_to_toml(c));
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lica
