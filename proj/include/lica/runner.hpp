#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lica/config.hpp"
#include "lica/training.hpp"

namespace lica {

// Experiment orchestration: output directories, manifests, metrics files,
// seed sweeps and aggregation.
//
// Layout: out/{manifest.json, seed_<N>/metrics.jsonl, seed_<N>/ckpt_*.json}.
// Metrics records contain only deterministic fields so a re-run is
// byte-identical; wall-clock timings go to a timing.jsonl sidecar.

struct RunOptions {
  std::string out_dir;
  bool force = false;
  int workers = 1;
};

nlohmann::json make_manifest(const TrainConfig& cfg,
                             const std::vector<std::uint64_t>& seeds);

// Trains one seed (cfg.seed) into out_dir/seed_<seed>/ and writes the
// manifest. Returns the eval records.
std::vector<EvalRecord> run_train(const TrainConfig& cfg, const RunOptions& opts);

// Runs n_seeds consecutive seeds (cfg.seed, cfg.seed+1, ...) and writes
// aggregate.json with per-step median and quartiles for every metric.
void run_sweep(const TrainConfig& cfg, int n_seeds, const RunOptions& opts);

// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double p);

struct SeriesQuartiles {
  std::vector<double> steps, median, q1, q3;
};

// Reads seed_*/metrics.jsonl under run_dir and aggregates one metric.
SeriesQuartiles aggregate_metric(const std::string& run_dir, const std::string& metric);

nlohmann::json eval_checkpoint(const std::string& ckpt_path, int episodes, bool greedy,
                               std::uint64_t seed, const std::string& dump_path,
                               int workers);

// Multi-run learning-curve plot (median line + IQR shading per run dir).
void plot_runs(const std::vector<std::string>& run_dirs, const std::string& metric,
               const std::string& out_svg);

std::string metrics_record_to_json(const EvalRecord& rec);

}  // namespace lica
