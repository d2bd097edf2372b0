#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "alignlab/linalg.hpp"
#include "alignlab/preference.hpp"

namespace alignlab {

// Multinomial-logit choice model over a slate of K rewards.
//
// All routines take the slate reward vector v (one logit per slate entry) and
// use max-subtracted log-sum-exp. Slate positions are 0-based. Every function
// here is pure.

// log Σ_k exp(v_k); throws InvalidInput on empty or non-finite v.
double log_sum_exp(std::span<const double> v);

// softmax(v). Requires K >= 2 and finite entries.
Vector mnl_probs(std::span<const double> v);

// ℓ(v, y) = log Σ_k e^{v_k} − v_y
double mnl_logloss(std::span<const double> v, std::size_t y);

// ∇_v ℓ(v, y) = softmax(v) − e_y
Vector mnl_logloss_grad(std::span<const double> v, std::size_t y);

// Reward closure over (context, action index).
using RewardFn = std::function<double(std::span<const double>, std::size_t)>;

// (1/t) Σ_s ℓ(v_R(x_s, a_s), y_s). All records must share one slate size.
double empirical_risk(std::span<const PreferenceRecord> data, const RewardFn& reward);

// Subtracts the reference-weighted mean from one context's reward vector.
Vector center_reward(std::span<const double> rewards, std::span<const double> reference);

// Per-context centering of a context × action table.
std::vector<Vector> center_reward(const std::vector<Vector>& table,
                                  const std::vector<Vector>& reference);

}  // namespace alignlab
