#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lica/rng.hpp"
#include "lica/tensor.hpp"

namespace lica {

// Central finite-difference gradient checking. The callable builds a scalar
// loss from the given leaf tensors; with a tape it must watch them (directly
// or via watched()), without one it must evaluate untracked. The checker
// perturbs leaf storages in place for the numeric estimate.
//
// Relative error per coordinate: |analytic - numeric| / max(1, |numeric|).

struct FdOptions {
  double step = 1e-5;
  int max_coords_per_leaf = -1;  // <0: all coordinates
  Rng* coord_rng = nullptr;      // required when sampling coordinates
};

double finite_diff_check(const std::vector<Tensor*>& leaves,
                         const std::function<Tensor(Tape*)>& loss_fn,
                         const FdOptions& opts = {});

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
  int instances = 0;
};

// Checks every autodiff op, every network forward (policy feedforward and
// recurrent, GRU cell, mixing critic, MLP critic) and the full policy
// objective, each over `instances` seeded random cases.
std::vector<GradCheckReport> gradcheck_suite(std::uint64_t seed, int instances = 100);

bool gradcheck_passed(const std::vector<GradCheckReport>& reports, double tol = 1e-4);

}  // namespace lica
