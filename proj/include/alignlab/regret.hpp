#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "alignlab/instance.hpp"
#include "alignlab/linalg.hpp"
#include "alignlab/rng.hpp"

namespace alignlab {

// argmax_a xᵀ w a, lowest index on ties.
std::size_t temp_zero_action(const Matrix& w, std::span<const double> x,
                             const LinearBTInstance& inst);

// First index attaining the maximum.
std::size_t argmax_lowest(std::span<const double> values) noexcept;

// Mean over contexts (rows) of R*(x, a*(x)) − R*(x, â_w(x)).
double one_step_temp_zero_regret(const Matrix& w, const LinearBTInstance& inst,
                                 const Matrix& eval_contexts);

// Mean over contexts of V*(x) − V_w(x), where
//   V*(x)  = (1/η) log Σ_a π₀(a) e^{η R*(x,a)}
//   V_w(x) = Σ_a π_w(a|x) R*(x,a) − (1/η) KL(π_w(·|x) ‖ π₀)
// and π_w is the tilt of xᵀ w a. Exact finite sums per context.
double one_step_kl_regret(const Matrix& w, const LinearBTInstance& inst, double eta,
                          const Matrix& eval_contexts);

// Exact per-batch quantities behind the regret/disagreement sandwich.
struct SelectorComparison {
  double regret = 0.0;              // mean true-reward shortfall of w's selector
  double disagreement_mass = 0.0;   // fraction of contexts where selectors differ
  double min_top_two_gap = 0.0;     // Δ_min over the batch
  double max_spread = 0.0;          // Δ_max: max over batch of top − bottom
};

SelectorComparison compare_selectors(const Matrix& w, const LinearBTInstance& inst,
                                     const Matrix& eval_contexts);

struct RegretTrace {
  Vector step_regret;        // length T+1, index t scores Ŵ_t
  Vector cumulative_regret;  // running sum of step_regret
  std::optional<Vector> kl_step_regret;
  std::optional<Vector> kl_cumulative_regret;
};

// Draws a fresh batch of eval_count contexts from rng for every estimate.
RegretTrace evaluate_trajectory(std::span<const Matrix> estimates, const LinearBTInstance& inst,
                                double eta, std::size_t eval_count, Rng& rng,
                                bool compute_kl = false);

}  // namespace alignlab
