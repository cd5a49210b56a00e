#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lica/config.hpp"
#include "lica/gradcheck.hpp"
#include "lica/runner.hpp"
#include "lica/svg.hpp"
#include "lica/tj_study.hpp"

namespace {

// LICA_THREADS caps worker parallelism for every command.
int capped_workers(int requested) {
  int cap = 1 << 20;
  if (const char* env = std::getenv("LICA_THREADS")) {
    try {
      cap = std::max(1, std::stoi(env));
    } catch (...) {
      std::cerr << "warning: ignoring invalid LICA_THREADS='" << env << "'\n";
    }
  }
  return std::max(1, std::min(requested, cap));
}

lica::TrainConfig config_from_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open manifest '" + path + "'");
  nlohmann::json m;
  f >> m;
  return lica::config_from_toml(lica::parse_toml(m.at("config_toml").get<std::string>()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LICA multi-agent actor-critic experiments"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train = app.add_subcommand("train", "train one seed and write metrics/checkpoints");
  std::string train_config, train_out, train_manifest;
  std::vector<std::string> train_overrides;
  std::uint64_t train_seed = 0;
  bool train_has_seed = false, train_force = false;
  int train_workers = 1;
  train->add_option("--config", train_config, "TOML config file");
  train->add_option("--from-manifest", train_manifest, "re-run from a manifest.json");
  train->add_option("--seed", train_seed, "random seed")->each([&](const std::string&) {
    train_has_seed = true;
  });
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--override", train_overrides, "config override section.key=value");
  train->add_flag("--force", train_force, "overwrite a non-empty output directory");
  train->add_option("--workers", train_workers, "rollout workers (capped by LICA_THREADS)");

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "run several seeds and aggregate quartiles");
  std::string sweep_config, sweep_out;
  std::vector<std::string> sweep_overrides;
  int sweep_seeds = 5, sweep_workers = 1;
  bool sweep_force = false;
  sweep->add_option("--config", sweep_config, "TOML config file")->required();
  sweep->add_option("--seeds", sweep_seeds, "number of consecutive seeds");
  sweep->add_option("--out", sweep_out, "output directory")->required();
  sweep->add_option("--override", sweep_overrides, "config override section.key=value");
  sweep->add_flag("--force", sweep_force, "overwrite a non-empty output directory");
  sweep->add_option("--workers", sweep_workers, "rollout workers (capped by LICA_THREADS)");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "roll out a frozen checkpoint");
  std::string eval_ckpt, eval_dump;
  int eval_episodes = 32, eval_workers = 1;
  bool eval_greedy = false, eval_sample = false;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint JSON")->required();
  eval->add_option("--episodes", eval_episodes, "number of evaluation episodes");
  eval->add_flag("--greedy", eval_greedy, "act greedily");
  eval->add_flag("--sample", eval_sample, "sample from the stochastic policy (default)");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--dump", eval_dump, "write a JSONL trajectory dump");
  eval->add_option("--workers", eval_workers, "rollout workers (capped by LICA_THREADS)");

  // ---- plot ----
  auto* plot = app.add_subcommand("plot", "multi-run SVG learning curves");
  std::vector<std::string> plot_runs_dirs;
  std::string plot_metric, plot_out;
  plot->add_option("--runs", plot_runs_dirs, "run directories")->required();
  plot->add_option("--metric", plot_metric, "metric name (e.g. mean_reward)")->required();
  plot->add_option("--out", plot_out, "output SVG file")->required();

  // ---- gradcheck ----
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of every op and network");
  std::uint64_t gc_seed = 7;
  int gc_instances = 100;
  gradcheck->add_option("--seed", gc_seed, "seed for the random instances");
  gradcheck->add_option("--instances", gc_instances, "instances per op");

  // ---- trafficjunction ----
  auto* tj = app.add_subcommand("trafficjunction",
                                "1-step traffic junction credit-assignment study");
  int tj_inits = 1000, tj_steps = 60, tj_workers = 1;
  std::string tj_algo = "lica", tj_out_csv, tj_out_svg;
  std::uint64_t tj_seed = 1;
  tj->add_option("--inits", tj_inits, "number of random initializations");
  tj->add_option("--steps", tj_steps, "training steps per initialization");
  tj->add_option("--algo", tj_algo, "lica | coma");
  tj->add_option("--seed", tj_seed, "base seed");
  tj->add_option("--out", tj_out_csv, "output CSV path");
  tj->add_option("--svg", tj_out_svg, "optional mean±std SVG path");
  tj->add_option("--workers", tj_workers, "parallel initializations (capped by LICA_THREADS)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      lica::TrainConfig cfg;
      if (!train_manifest.empty())
        cfg = config_from_manifest(train_manifest);
      else if (!train_config.empty())
        cfg = lica::load_config_file(train_config, train_overrides);
      else
        throw std::invalid_argument("train: provide --config or --from-manifest");
      if (!train_overrides.empty() && !train_manifest.empty()) {
        lica::TomlTable t = lica::config_to_toml(cfg);
        for (const auto& o : train_overrides) lica::apply_override(t, o);
        cfg = lica::config_from_toml(t);
      }
      if (train_has_seed) cfg.seed = train_seed;
      lica::RunOptions opts{train_out, train_force, capped_workers(train_workers)};
      auto records = lica::run_train(cfg, opts);
      std::cout << "trained " << cfg.total_steps << " steps; final mean_reward="
                << (records.empty() ? 0.0 : records.back().mean_reward) << "\n";
    } else if (*sweep) {
      lica::TrainConfig cfg = lica::load_config_file(sweep_config, sweep_overrides);
      lica::RunOptions opts{sweep_out, sweep_force, capped_workers(sweep_workers)};
      lica::run_sweep(cfg, sweep_seeds, opts);
      std::cout << "swept " << sweep_seeds << " seeds into " << sweep_out << "\n";
    } else if (*eval) {
      if (eval_greedy && eval_sample)
        throw std::invalid_argument("eval: choose one of --greedy / --sample");
      auto out = lica::eval_checkpoint(eval_ckpt, eval_episodes, eval_greedy, eval_seed,
                                       eval_dump, capped_workers(eval_workers));
      std::cout << out.dump(2) << "\n";
    } else if (*plot) {
      lica::plot_runs(plot_runs_dirs, plot_metric, plot_out);
      std::cout << "wrote " << plot_out << "\n";
    } else if (*gradcheck) {
      auto reports = lica::gradcheck_suite(gc_seed, gc_instances);
      std::printf("%-28s %14s\n", "case", "max rel err");
      for (const auto& r : reports)
        std::printf("%-28s %14.3e\n", r.name.c_str(), r.max_rel_err);
      if (!lica::gradcheck_passed(reports)) {
        std::cerr << "gradcheck FAILED (tolerance 1e-4)\n";
        return 1;
      }
      std::cout << "gradcheck passed (tolerance 1e-4)\n";
    } else if (*tj) {
      lica::TjStudyOptions opts;
      opts.algo = lica::algo_from_string(tj_algo);
      opts.config = lica::tj_study_config(opts.algo);
      opts.inits = tj_inits;
      opts.steps = tj_steps;
      opts.seed = tj_seed;
      opts.workers = capped_workers(tj_workers);
      lica::TjStudyResult res = lica::tj_study(opts);
      if (!tj_out_csv.empty()) {
        std::ofstream f(tj_out_csv);
        if (!f) throw std::runtime_error("cannot write '" + tj_out_csv + "'");
        lica::write_tj_csv(f, res);
      } else {
        lica::write_tj_csv(std::cout, res);
      }
      if (!tj_out_svg.empty()) {
        lica::PlotSeries s;
        s.label = tj_algo;
        for (std::size_t i = 0; i < res.mean.size(); ++i) {
          s.x.push_back(static_cast<double>(i + 1));
          s.y.push_back(res.mean[i]);
          s.lo.push_back(res.mean[i] - res.stddev[i]);
          s.hi.push_back(res.mean[i] + res.stddev[i]);
        }
        std::ofstream f(tj_out_svg);
        if (!f) throw std::runtime_error("cannot write '" + tj_out_svg + "'");
        f << lica::render_line_plot("1-step traffic junction", "training step",
                                    "optimal joint-action probability", {s});
      }
      std::cout << "final mean optimal mass: " << res.mean.back() << " (std "
                << res.stddev.back() << ")\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
