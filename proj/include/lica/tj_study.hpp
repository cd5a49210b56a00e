#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "lica/config.hpp"
#include "lica/nets.hpp"

namespace lica {

// The 1-step traffic junction credit-assignment study: many short trainings
// from random initializations; the tracked quantity is the probability mass
// the joint policy places on the two optimal joint actions,
//   m = pi1(pass) pi2(wait) + pi1(wait) pi2(pass),
// evaluated directly from the action distributions after every training step.

enum class Algo { lica, coma };

Algo algo_from_string(const std::string& s);

// Training configuration used per initialization (desk-scaled defaults).
TrainConfig tj_study_config(Algo algo);

struct TjStudyOptions {
  Algo algo = Algo::lica;
  int inits = 1000;
  int steps = 60;
  std::uint64_t seed = 1;
  int workers = 1;
  TrainConfig config;  // per-init base config; seed is overwritten per init
  TjStudyOptions() { config = tj_study_config(Algo::lica); }
};

struct TjStudyResult {
  std::vector<double> mean;    // per training step, across inits
  std::vector<double> stddev;  // population std across inits
};

double tj_optimal_mass(const PolicyParams& policy);

TjStudyResult tj_study(const TjStudyOptions& opts);

// CSV rows: step,mean,std (one row per training step).
void write_tj_csv(std::ostream& os, const TjStudyResult& r);

}  // namespace lica
