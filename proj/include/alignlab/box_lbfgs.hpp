#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "alignlab/linalg.hpp"

namespace alignlab {

// Projected limited-memory quasi-Newton minimizer for smooth objectives on a
// box [lower, upper]^n.
//
// Each iteration:
//   1. freezes variables sitting on a bound whose gradient points outward,
//   2. takes the L-BFGS two-loop direction on the remaining free variables
//      (falling back to projected steepest descent when that is not a
//      descent direction),
//   3. backtracks along the projected path x(α) = P(x + α·d) until the
//      Armijo condition f(x(α)) ≤ f(x) + c₁·gᵀ(x(α) − x) holds with
//      gᵀ(x(α) − x) < 0.
// Accepted iterates therefore never increase f and stay feasible exactly
// (projection is a clamp).
//
// Stopping: relative decrease (f_k − f_{k+1}) / max(|f_k|, |f_{k+1}|, 1) ≤ ftol,
// projected-gradient ∞-norm ≤ pgtol, or max_iter iterations.
struct BoxLbfgsOptions {
  int max_iter = 50;
  double ftol = 1e-9;
  double pgtol = 1e-8;
  int history = 10;
  int max_backtracks = 60;
  double armijo_c1 = 1e-4;
};

enum class StopReason { kFtol, kPgtol, kMaxIter, kLineSearch };

std::string to_string(StopReason reason);

struct BoxLbfgsResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  StopReason reason = StopReason::kMaxIter;
  double projected_gradient_inf_norm = 0.0;
  Vector value_history;  // f at the start point and after every accepted step
};

// Writes ∇f(x) into grad and returns f(x).
using BoxObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;

// x0 is clamped into the box first. Throws NumericalFailure if f or ∇f
// is ever non-finite.
BoxLbfgsResult minimize_box(const BoxObjective& f, Vector x0, double lower, double upper,
                            const BoxLbfgsOptions& options);

// ‖x − P(x − g)‖_∞
double projected_gradient_norm(std::span<const double> x, std::span<const double> g,
                               double lower, double upper) noexcept;

}  // namespace alignlab
