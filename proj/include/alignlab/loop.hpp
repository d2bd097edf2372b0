#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "alignlab/erm.hpp"
#include "alignlab/instance.hpp"
#include "alignlab/preference.hpp"
#include "alignlab/rng.hpp"

namespace alignlab {

// How the two slate entries are drawn each round.
//   kMixedReference: first from the deployed tilt, second from π₀.
//   kIidOnPolicy:    both i.i.d. from the deployed tilt.
enum class SlateProtocol { kMixedReference, kIidOnPolicy };

std::string to_string(SlateProtocol protocol);
SlateProtocol parse_slate_protocol(const std::string& name);

struct LoopOptions {
  double eta = 1.0;
  SlateProtocol protocol = SlateProtocol::kMixedReference;
  FitOptions fit;
};

// Running check that every deployed tilt keeps its likelihood ratios to π₀
// inside [e^{−2ηB̄}, e^{2ηB̄}], B̄ the sup-norm of the π₀-centered reward
// vector at the visited context.
struct RatioAudit {
  std::size_t checks = 0;
  std::size_t violations = 0;
  // max over checks of max(log max_ratio, −log min_ratio) − 2ηB̄; ≤ 0 when clean.
  double worst_log_margin = -INFINITY;
};

struct FitTally {
  std::size_t fits = 0;
  std::size_t not_converged = 0;
  long long iterations = 0;
};

struct TrajectoryState {
  std::size_t round = 0;
  Dataset dataset;
  RewardEstimate estimate;
  RatioAudit audit;
  FitTally fits;

  static TrajectoryState initial(std::size_t dimension) {
    return TrajectoryState{0, {}, RewardEstimate::zero(dimension), {}, {}};
  }
};

// One round of the greedy loop. Draw order from rng: context (d uniforms),
// first slate action, second slate action, preference label.
void step(TrajectoryState& state, const LinearBTInstance& inst, const LoopOptions& options,
          Rng& rng);

struct TrajectoryResult {
  std::vector<Matrix> estimates;  // Ŵ_0 … Ŵ_T
  Dataset dataset;                // 𝒟_T; 𝒟_t is its length-t prefix
  RatioAudit audit;
  FitTally fits;
};

TrajectoryResult run_trajectory(const LinearBTInstance& inst, const LoopOptions& options,
                                std::size_t horizon, Rng& rng);

// Pairwise DPO loss of the tilt π_w, computed from its log-likelihood ratios
// against π₀ over the full action set:
//   (1/t) Σ_s −log σ((1/η)[log π_w/π₀ (a_pref) − log π_w/π₀ (a_rej)]).
double dpo_empirical_loss(const Matrix& w, std::span<const PreferenceRecord> data,
                          const LinearBTInstance& inst, double eta);

// Temperature-zero selector of the policy view: argmax of the implicit
// reward (1/η)·log π_w/π₀, lowest index on ties.
std::size_t dpo_selector(const Matrix& w, std::span<const double> x,
                         const LinearBTInstance& inst, double eta);

struct DpoEquivalence {
  double max_abs_loss_diff = 0.0;
  double min_selector_agreement = 1.0;
  std::size_t rounds_checked = 0;
  std::size_t contexts_per_round = 0;
};

// For each round t ≥ 1 compares the DPO loss of π_{Ŵ_t} with the MNL risk of
// Ŵ_t on 𝒟_t, and checks both selectors on fresh contexts.
DpoEquivalence verify_dpo_equivalence(std::span<const Matrix> estimates,
                                      const LinearBTInstance& inst, double eta,
                                      std::span<const PreferenceRecord> dataset,
                                      std::size_t selector_contexts, Rng& rng);

}  // namespace alignlab
