#include "alignlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alignlab/errors.hpp"

namespace alignlab {

FinitePolicy::FinitePolicy(Vector probs) : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw InvalidInput("FinitePolicy: empty action set");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw InvalidInput("FinitePolicy: probabilities must be finite and nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidInput("FinitePolicy: probabilities do not sum to 1");
  }
}

FinitePolicy FinitePolicy::uniform(std::size_t num_actions) {
  if (num_actions == 0) {
    throw InvalidInput("FinitePolicy::uniform: empty action set");
  }
  return FinitePolicy(Vector(num_actions, 1.0 / static_cast<double>(num_actions)));
}

Vector kl_tilt_log_probs(const FinitePolicy& reference, std::span<const double> rewards,
                         double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw InvalidInput("kl_tilt: eta must be a positive finite number");
  }
  if (rewards.size() != reference.size()) {
    throw InvalidInput("kl_tilt: reward vector length differs from the action set");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Vector logits(reference.size(), kNegInf);
  double hi = kNegInf;
  for (std::size_t a = 0; a < reference.size(); ++a) {
    if (!std::isfinite(rewards[a])) {
      throw InvalidInput("kl_tilt: non-finite reward");
    }
    if (reference[a] > 0.0) {
      logits[a] = std::log(reference[a]) + eta * rewards[a];
      hi = std::max(hi, logits[a]);
    }
  }
  double acc = 0.0;
  for (double l : logits) {
    if (l != kNegInf) {
      acc += std::exp(l - hi);
    }
  }
  const double log_norm = hi + std::log(acc);
  for (double& l : logits) {
    if (l != kNegInf) {
      l -= log_norm;
    }
  }
  return logits;
}

FinitePolicy kl_tilt(const FinitePolicy& reference, std::span<const double> rewards,
                     double eta) {
  const Vector log_probs = kl_tilt_log_probs(reference, rewards, eta);
  Vector probs(log_probs.size());
  double total = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    probs[a] = std::exp(log_probs[a]);
    total += probs[a];
  }
  for (double& p : probs) {
    p /= total;
  }
  return FinitePolicy(std::move(probs));
}

namespace {
void require_same_size(const FinitePolicy& pi, const FinitePolicy& reference) {
  if (pi.size() != reference.size()) {
    throw InvalidInput("policies are defined over different action sets");
  }
}
}  // namespace

double kl_divergence(const FinitePolicy& pi, const FinitePolicy& reference) {
  require_same_size(pi, reference);
  double kl = 0.0;
  for (std::size_t a = 0; a < pi.size(); ++a) {
    if (pi[a] == 0.0) {
      continue;
    }
    if (reference[a] == 0.0) {
      throw InvalidInput("kl_divergence: policy puts mass outside the reference support");
    }
    kl += pi[a] * (std::log(pi[a]) - std::log(reference[a]));
  }
  return std::max(0.0, kl);
}

RatioBounds likelihood_ratio_bounds(const FinitePolicy& pi, const FinitePolicy& reference) {
  require_same_size(pi, reference);
  RatioBounds out{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t a = 0; a < pi.size(); ++a) {
    if (reference[a] == 0.0) {
      if (pi[a] > 0.0) {
        throw InvalidInput("likelihood_ratio_bounds: mass outside the reference support");
      }
      continue;
    }
    const double ratio = pi[a] / reference[a];
    out.min_ratio = std::min(out.min_ratio, ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
  }
  return out;
}

std::size_t sample_action(const FinitePolicy& pi, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t a = 0; a < pi.size(); ++a) {
    if (pi[a] > 0.0) {
      last_positive = a;
      cumulative += pi[a];
      if (u < cumulative) {
        return a;
      }
    }
  }
  // u landed in the rounding sliver above the final partial sum.
  return last_positive;
}

}  // namespace alignlab
