#include "alignlab/mnl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alignlab/errors.hpp"

namespace alignlab {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw InvalidInput(std::string(what) + ": non-finite entry");
    }
  }
}

void require_slate(std::span<const double> v, const char* what) {
  if (v.size() < 2) {
    throw InvalidInput(std::string(what) + ": slate needs at least 2 entries");
  }
  require_finite(v, what);
}

void require_distribution(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidInput(std::string(what) + ": reference has a negative or non-finite entry");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidInput(std::string(what) + ": reference does not sum to 1");
  }
}

}  // namespace

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) {
    throw InvalidInput("log_sum_exp: empty input");
  }
  require_finite(v, "log_sum_exp");
  const double hi = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) {
    acc += std::exp(x - hi);
  }
  return hi + std::log(acc);
}

Vector mnl_probs(std::span<const double> v) {
  require_slate(v, "mnl_probs");
  const double hi = *std::max_element(v.begin(), v.end());
  Vector p(v.size());
  double total = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    p[k] = std::exp(v[k] - hi);
    total += p[k];
  }
  for (double& x : p) {
    x /= total;
  }
  return p;
}

double mnl_logloss(std::span<const double> v, std::size_t y) {
  require_slate(v, "mnl_logloss");
  if (y >= v.size()) {
    throw InvalidInput("mnl_logloss: preferred index out of range");
  }
  // lse − v_y is ≥ 0 mathematically; rounding can leave −1 ulp when one
  // entry dominates.
  return std::max(0.0, log_sum_exp(v) - v[y]);
}

Vector mnl_logloss_grad(std::span<const double> v, std::size_t y) {
  if (y >= v.size()) {
    throw InvalidInput("mnl_logloss_grad: preferred index out of range");
  }
  Vector g = mnl_probs(v);
  g[y] -= 1.0;
  return g;
}

double empirical_risk(std::span<const PreferenceRecord> data, const RewardFn& reward) {
  if (data.empty()) {
    throw InvalidInput("empirical_risk: empty dataset");
  }
  const std::size_t slate_size = data.front().slate.size();
  Vector v(slate_size);
  double total = 0.0;
  for (const auto& rec : data) {
    if (rec.slate.size() != slate_size) {
      throw InvalidInput("empirical_risk: records disagree on slate size");
    }
    for (std::size_t k = 0; k < slate_size; ++k) {
      v[k] = reward(rec.context, rec.slate[k]);
    }
    total += mnl_logloss(v, rec.preferred);
  }
  return total / static_cast<double>(data.size());
}

Vector center_reward(std::span<const double> rewards, std::span<const double> reference) {
  if (rewards.size() != reference.size()) {
    throw InvalidInput("center_reward: reward and reference lengths differ");
  }
  require_finite(rewards, "center_reward");
  require_distribution(reference, "center_reward");
  double mean = 0.0;
  for (std::size_t a = 0; a < rewards.size(); ++a) {
    mean += reference[a] * rewards[a];
  }
  Vector out(rewards.begin(), rewards.end());
  for (double& r : out) {
    r -= mean;
  }
  return out;
}

std::vector<Vector> center_reward(const std::vector<Vector>& table,
                                  const std::vector<Vector>& reference) {
  if (table.size() != reference.size()) {
    throw InvalidInput("center_reward: context counts differ");
  }
  std::vector<Vector> out;
  out.reserve(table.size());
  for (std::size_t x = 0; x < table.size(); ++x) {
    out.push_back(center_reward(table[x], reference[x]));
  }
  return out;
}

}  // namespace alignlab
