#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "alignlab/box_lbfgs.hpp"
#include "alignlab/instance.hpp"
#include "alignlab/linalg.hpp"
#include "alignlab/preference.hpp"

namespace alignlab {

// Fitted bilinear reward r(x, a) = xᵀ Ŵ a with Ŵ ∈ [0,1]^{d×d}.
struct RewardEstimate {
  Matrix w_hat;

  static RewardEstimate zero(std::size_t dimension) {
    return RewardEstimate{Matrix(dimension, dimension, 0.0)};
  }
};

struct FitOptions {
  int max_iter = 50;
  double ftol = 1e-9;
  double pgtol = 1e-8;
  int history = 10;
};

struct FitReport {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  StopReason stop_reason = StopReason::kMaxIter;
  double projected_gradient_inf_norm = 0.0;
  Vector objective_history;
};

struct ObjectiveValue {
  double value = 0.0;
  Matrix gradient;
};

// Empirical MNL risk of w on data and its gradient
//   ∂/∂w_ij = (1/t) Σ_s Σ_k (p_sk − 1{k = y_s}) · x_s[i] · a_{s,k}[j].
ObjectiveValue objective_and_gradient(const Matrix& w, std::span<const PreferenceRecord> data,
                                      const LinearBTInstance& inst);

struct FitResult {
  RewardEstimate estimate;
  FitReport report;
};

// Box-constrained maximum likelihood on [0,1]^{d×d}, warm-started at init.
FitResult fit_mle(std::span<const PreferenceRecord> data, const LinearBTInstance& inst,
                  const RewardEstimate& init, const FitOptions& options = {});

}  // namespace alignlab
