#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "alignlab/linalg.hpp"
#include "alignlab/policy.hpp"
#include "alignlab/rng.hpp"
#include "json.hpp"

namespace alignlab {

// Finite-action linear Bradley–Terry ground truth: R*(x, a) = xᵀ W* a with
// contexts uniform on [0,1]^d and a uniform reference policy.
class LinearBTInstance {
 public:
  // actions: m × d, w_star: d × d; every entry must lie in [0,1].
  LinearBTInstance(Matrix actions, Matrix w_star);

  std::size_t dimension() const noexcept { return w_star_.rows(); }
  std::size_t num_actions() const noexcept { return actions_.rows(); }
  const Matrix& actions() const noexcept { return actions_; }
  std::span<const double> action(std::size_t a) const noexcept { return actions_.row(a); }
  const Matrix& w_star() const noexcept { return w_star_; }
  const FinitePolicy& reference() const noexcept { return reference_; }

  friend bool operator==(const LinearBTInstance&, const LinearBTInstance&) = default;

 private:
  Matrix actions_;
  Matrix w_star_;
  FinitePolicy reference_;
};

// Draws actions (row-major) then W* (row-major), each entry uniform[0,1],
// from the instance substream of `seed`.
LinearBTInstance generate_instance(std::uint64_t seed, std::size_t dimension,
                                   std::size_t num_actions);

// xᵀ w a for every action, written into out (length m).
void reward_vector(const Matrix& w, const LinearBTInstance& inst,
                   std::span<const double> x, std::span<double> out);
Vector reward_vector(const Matrix& w, const LinearBTInstance& inst, std::span<const double> x);

double true_reward(const LinearBTInstance& inst, std::span<const double> x, std::size_t a);

// count × d matrix of contexts, entries uniform[0,1], row-major draw order.
Matrix draw_contexts(Rng& rng, std::size_t count, std::size_t dimension);

struct GapReport {
  double min_gap = 0.0;
  double mean_gap = 0.0;
  std::size_t probe_count = 0;
};

// Top-minus-second true reward per probe row, summarized.
GapReport probe_gap(const LinearBTInstance& inst, const Matrix& probes);

struct InstanceSearch {
  LinearBTInstance instance;
  std::uint64_t accepted_seed = 0;
  std::size_t candidate_number = 0;  // 1-based position in the scan
  GapReport report;
};

// Draws one probe bank from base_seed, then scans base_seed, base_seed+1, …
// and returns the first instance whose probe-bank min gap ≥ min_gap.
// Throws SearchExhausted after search_limit candidates.
InstanceSearch search_instance(std::uint64_t base_seed, std::size_t dimension,
                               std::size_t num_actions, double min_gap,
                               std::size_t probe_count, std::size_t search_limit);

nlohmann::json to_json(const GapReport& report);
nlohmann::json to_json(const InstanceSearch& search);

}  // namespace alignlab
