#pragma once

#include <cstddef>
#include <span>

#include "alignlab/linalg.hpp"
#include "alignlab/rng.hpp"

namespace alignlab {

// Categorical distribution over a fixed, ordered action set.
class FinitePolicy {
 public:
  // Validates: entries finite, nonnegative, summing to 1 within 1e-12.
  explicit FinitePolicy(Vector probs);

  static FinitePolicy uniform(std::size_t num_actions);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t a) const noexcept { return probs_[a]; }

  friend bool operator==(const FinitePolicy&, const FinitePolicy&) = default;

 private:
  Vector probs_;
};

// log π(a) for π(a) ∝ reference(a)·exp(eta·rewards(a)); −inf off the
// reference support. Normalized in log space.
Vector kl_tilt_log_probs(const FinitePolicy& reference, std::span<const double> rewards,
                         double eta);

// The KL tilt itself. Strictly positive wherever the reference is.
FinitePolicy kl_tilt(const FinitePolicy& reference, std::span<const double> rewards,
                     double eta);

// KL(pi ‖ reference) with 0·log 0 = 0. Mass outside the reference support
// is rejected as InvalidInput.
double kl_divergence(const FinitePolicy& pi, const FinitePolicy& reference);

struct RatioBounds {
  double min_ratio = 1.0;
  double max_ratio = 1.0;
};

// Extremes of pi(a)/reference(a) over the reference support.
RatioBounds likelihood_ratio_bounds(const FinitePolicy& pi, const FinitePolicy& reference);

// Inverse-CDF draw over the policy's index order; consumes one uniform.
std::size_t sample_action(const FinitePolicy& pi, Rng& rng);

}  // namespace alignlab
