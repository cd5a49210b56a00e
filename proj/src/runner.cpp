#include "lica/runner.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "lica/checkpoint.hpp"
#include "lica/envs.hpp"
#include "lica/svg.hpp"

namespace fs = std::filesystem;

namespace lica {

namespace {

constexpr const char* kBinaryVersion = "lica 1.0.0";

void prepare_out_dir(const std::string& out_dir, bool force) {
  fs::path p(out_dir);
  if (fs::exists(p) && !fs::is_empty(p) && !force)
    throw std::invalid_argument("output directory '" + out_dir +
                                "' exists and is not empty (use --force to overwrite)");
  fs::create_directories(p);
}

std::vector<EvalRecord> train_one_seed(TrainConfig cfg, std::uint64_t seed,
                                       const fs::path& out_dir, int workers) {
  cfg.seed = seed;
  const fs::path seed_dir = out_dir / ("seed_" + std::to_string(seed));
  fs::create_directories(seed_dir);
  std::ofstream metrics(seed_dir / "metrics.jsonl");
  std::ofstream timing(seed_dir / "timing.jsonl");
  const auto start = std::chrono::steady_clock::now();

  TrainState state = init_train_state(cfg);
  TrainHooks hooks;
  hooks.on_eval = [&](const EvalRecord& rec) {
    metrics << metrics_record_to_json(rec) << "\n";
    metrics.flush();
    const double wallclock =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    timing << "{\"step\":" << rec.step << ",\"wallclock\":" << wallclock << "}\n";
    timing.flush();
  };
  hooks.on_checkpoint = [&](int step, TrainState& st) {
    save_checkpoint((seed_dir / ("ckpt_" + std::to_string(step) + ".json")).string(),
                    cfg, st, step);
  };
  std::vector<EvalRecord> records = train_loop(cfg, state, hooks, workers);
  save_checkpoint((seed_dir / "ckpt_final.json").string(), cfg, state, cfg.total_steps);
  return records;
}

}  // namespace

std::string metrics_record_to_json(const EvalRecord& rec) {
  nlohmann::json j;
  j["step"] = rec.step;
  j["episodes"] = rec.episodes;
  j["mean_reward"] = rec.mean_reward;
  j["mean_return"] = rec.mean_return;
  j["mean_entropy"] = rec.mean_entropy;
  j["critic_loss"] = rec.critic_loss;
  for (const auto& [k, v] : rec.extra) j[k] = v;
  return j.dump();
}

nlohmann::json make_manifest(const TrainConfig& cfg,
                             const std::vector<std::uint64_t>& seeds) {
  nlohmann::json m;
  m["format"] = "lica-manifest-v1";
  m["binary_version"] = kBinaryVersion;
  m["config_toml"] = serialize_toml(config_to_toml(cfg));
  m["config_hash"] = config_hash(cfg);
  m["seeds"] = seeds;
  nlohmann::json layout;
  layout["metrics"] = "seed_<N>/metrics.jsonl";
  layout["checkpoints"] = "seed_<N>/ckpt_<step>.json";
  layout["timing"] = "seed_<N>/timing.jsonl";
  m["layout"] = std::move(layout);
  std::vector<std::string> files;
  for (auto s : seeds) files.push_back("seed_" + std::to_string(s) + "/metrics.jsonl");
  m["metrics_files"] = files;
  return m;
}

std::vector<EvalRecord> run_train(const TrainConfig& cfg, const RunOptions& opts) {
  validate_config(cfg);
  prepare_out_dir(opts.out_dir, opts.force);
  const fs::path out(opts.out_dir);
  {
    std::ofstream f(out / "manifest.json");
    f << make_manifest(cfg, {cfg.seed}).dump(2) << "\n";
  }
  return train_one_seed(cfg, cfg.seed, out, opts.workers);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

// metric series per seed dir: step -> value
std::vector<std::pair<std::vector<double>, std::vector<double>>> read_seed_metric(
    const std::string& run_dir, const std::string& metric) {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> per_seed;
  std::vector<fs::path> seed_dirs;
  for (const auto& e : fs::directory_iterator(run_dir))
    if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0)
      seed_dirs.push_back(e.path());
  std::sort(seed_dirs.begin(), seed_dirs.end());
  for (const auto& d : seed_dirs) {
    std::ifstream f(d / "metrics.jsonl");
    if (!f) continue;
    std::vector<double> steps, vals;
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (!j.contains(metric)) continue;
      steps.push_back(j.at("step").get<double>());
      vals.push_back(j.at(metric).get<double>());
    }
    if (!steps.empty()) per_seed.emplace_back(std::move(steps), std::move(vals));
  }
  return per_seed;
}

}  // namespace

SeriesQuartiles aggregate_metric(const std::string& run_dir, const std::string& metric) {
  auto per_seed = read_seed_metric(run_dir, metric);
  if (per_seed.empty())
    throw std::invalid_argument("no values for metric '" + metric + "' under " + run_dir);
  SeriesQuartiles out;
  const auto& steps = per_seed[0].first;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::vector<double> vals;
    for (const auto& [ss, vv] : per_seed)
      if (i < vv.size()) vals.push_back(vv[i]);
    out.steps.push_back(steps[i]);
    out.median.push_back(quantile(vals, 0.5));
    out.q1.push_back(quantile(vals, 0.25));
    out.q3.push_back(quantile(vals, 0.75));
  }
  return out;
}

void run_sweep(const TrainConfig& cfg, int n_seeds, const RunOptions& opts) {
  validate_config(cfg);
  if (n_seeds < 1) throw std::invalid_argument("sweep: need at least 1 seed");
  prepare_out_dir(opts.out_dir, opts.force);
  const fs::path out(opts.out_dir);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
  {
    std::ofstream f(out / "manifest.json");
    f << make_manifest(cfg, seeds).dump(2) << "\n";
  }
  for (auto s : seeds) train_one_seed(cfg, s, out, opts.workers);

  // Median / 1st / 3rd quartile across seeds, per metric.
  nlohmann::json agg;
  for (const std::string metric :
       {"mean_reward", "mean_return", "mean_entropy", "critic_loss", "capture_rate",
        "optimal_rate"}) {
    try {
      SeriesQuartiles q = aggregate_metric(opts.out_dir, metric);
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < q.steps.size(); ++i) {
        nlohmann::json r;
        r["step"] = q.steps[i];
        r["median"] = q.median[i];
        r["q1"] = q.q1[i];
        r["q3"] = q.q3[i];
        rows.push_back(std::move(r));
      }
      agg[metric] = std::move(rows);
    } catch (const std::invalid_argument&) {
      // metric absent for this environment
    }
  }
  std::ofstream f(out / "aggregate.json");
  f << agg.dump(2) << "\n";
}

nlohmann::json eval_checkpoint(const std::string& ckpt_path, int episodes, bool greedy,
                               std::uint64_t seed, const std::string& dump_path,
                               int workers) {
  if (episodes < 1)
    throw std::invalid_argument("eval: --episodes must be >= 1");
  LoadedCheckpoint ck = load_checkpoint(ckpt_path);
  TrainConfig cfg = ck.config;
  cfg.seed = seed;
  RolloutOpts ro;
  ro.episodes = episodes;
  ro.greedy = greedy;
  ro.seed = seed;
  ro.stream = stream::kEval;
  ro.iteration = 0;
  ro.workers = workers;
  EpisodeBatch batch = rollout(env_factory(cfg), ck.state.policy, ro);

  double reward_sum = 0.0, return_sum = 0.0, terminated = 0.0;
  for (const auto& ep : batch.episodes) {
    double ret = 0.0;
    for (double r : ep.rewards) ret += r;
    reward_sum += ret;
    return_sum += ret;
    terminated += ep.terminated ? 1.0 : 0.0;
  }
  nlohmann::json out;
  out["episodes"] = episodes;
  out["greedy"] = greedy;
  out["mean_reward"] = reward_sum / static_cast<double>(batch.total_steps());
  out["mean_return"] = return_sum / static_cast<double>(episodes);
  if (cfg.env == "predator_prey")
    out["capture_rate"] = terminated / static_cast<double>(episodes);
  if (cfg.env == "traffic_junction")
    out["optimal_rate"] = return_sum / static_cast<double>(episodes);

  if (!dump_path.empty()) {
    std::ofstream dump(dump_path);
    if (!dump) throw std::runtime_error("cannot write trajectory dump '" + dump_path + "'");
    for (const auto& ep : batch.episodes)
      for (int t = 0; t < ep.length(); ++t)
        dump_step_jsonl(dump, t, ep.states[static_cast<std::size_t>(t)],
                        ep.obs[static_cast<std::size_t>(t)],
                        ep.actions[static_cast<std::size_t>(t)],
                        ep.rewards[static_cast<std::size_t>(t)],
                        ep.terminated && t + 1 == ep.length());
  }
  return out;
}

void plot_runs(const std::vector<std::string>& run_dirs, const std::string& metric,
               const std::string& out_svg) {
  if (metric.empty()) throw std::invalid_argument("plot: metric name is empty");
  if (run_dirs.empty()) throw std::invalid_argument("plot: no run directories");
  std::vector<PlotSeries> series;
  for (const auto& dir : run_dirs) {
    auto per_seed = read_seed_metric(dir, metric);
    if (per_seed.empty())
      throw std::invalid_argument("no values for metric '" + metric + "' under " + dir);
    PlotSeries s;
    s.label = fs::path(dir).filename().string();
    if (s.label.empty()) s.label = dir;
    SeriesQuartiles q = aggregate_metric(dir, metric);
    s.x = q.steps;
    s.y = q.median;
    if (per_seed.size() > 1) {
      s.lo = q.q1;
      s.hi = q.q3;
    }
    series.push_back(std::move(s));
  }
  const std::string svg = render_line_plot(metric, "training step", metric, series);
  fs::path out(out_svg);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write '" + out_svg + "'");
  f << svg;
}

}  // namespace lica
