#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "alignlab/linalg.hpp"
#include "alignlab/policy.hpp"
#include "alignlab/rng.hpp"
#include "json.hpp"

namespace alignlab {

// Brute-force checks of the structural regret/loss lemmas on small tabular
// truth families. "d₀-almost surely" becomes "on every context with positive
// weight"; zero-weight contexts are centered but otherwise ignored.

struct WeightedContext {
  std::string id;
  double weight = 0.0;
};

struct TruthTable {
  std::string id;
  std::vector<Vector> rewards;  // [context][action]
};

enum class Centering {
  kApply,   // subtract each context's reference mean on ingestion
  kVerify,  // caller claims centered input; reject if any mean exceeds 1e-12
};

class FiniteClassSpec {
 public:
  FiniteClassSpec(std::vector<WeightedContext> contexts, std::size_t num_actions,
                  std::vector<Vector> reference, std::vector<TruthTable> truths,
                  Centering centering = Centering::kApply);

  // {contexts: [{weight, id}], actions: m, reference: [[...]],
  //  rewards: {id: [[...]]}, centered?: bool}
  static FiniteClassSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  std::size_t num_contexts() const noexcept { return contexts_.size(); }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t num_truths() const noexcept { return truths_.size(); }
  const std::vector<WeightedContext>& contexts() const noexcept { return contexts_; }
  const FinitePolicy& reference(std::size_t x) const noexcept { return reference_[x]; }
  const std::vector<TruthTable>& truths() const noexcept { return truths_; }
  std::span<const double> rewards(std::size_t p, std::size_t x) const noexcept {
    return truths_[p].rewards[x];
  }

 private:
  std::vector<WeightedContext> contexts_;
  std::size_t num_actions_;
  std::vector<FinitePolicy> reference_;
  std::vector<TruthTable> truths_;
};

struct StructureReport {
  std::size_t slate_size = 0;
  double delta_min = 0.0;
  double delta_max = 0.0;
  // Min selector-disagreement mass between distinct classes; 0 with one class.
  double class_separation = 0.0;
  double epsilon_iso = 0.0;
  std::vector<std::vector<std::size_t>> selector_classes;
  std::vector<std::vector<std::size_t>> selectors;  // [truth][context]
  Matrix disagreement;  // d₀{a_q ≠ a_p}
  Matrix regret;        // 𝒢_p(R_q), row p column q
  Matrix loss;          // ℒ_p(R_q)
  Matrix loss_gap;      // ℒ_p(R_q) − ℒ_p(R_p)
  std::vector<std::string> truth_ids;
  std::size_t zero_weight_contexts = 0;
};

// Exact selector structure, regret matrix, and population loss matrix.
// Population losses enumerate all m^K slates (capped at 10^5) with product
// reference weights. Throws DegenerateClass on a tied argmax.
StructureReport compute_structure(const FiniteClassSpec& spec, std::size_t slate_size);

// ℒ_p(R_q) for every ordered pair; needs no gap condition.
Matrix population_loss_matrix(const FiniteClassSpec& spec, std::size_t slate_size);

// Every off-diagonal regret is ≤ 1e-12 or ≥ ε_iso − 1e-12.
bool check_isolation(const StructureReport& report);

// Any pair with |loss gap| ≤ 1e-10 has centered tables equal within 1e-8 on
// the reference support.
bool check_zero_loss_identification(const FiniteClassSpec& spec, std::size_t slate_size);

// Δ_min·d₀{a_q≠a_p} ≤ 𝒢_p(R_q) ≤ Δ_max·d₀{a_q≠a_p} for every ordered pair.
bool check_regret_disagreement_sandwich(const FiniteClassSpec& spec);

// Max over random (context, slate, p, q) of
// |E_{y∼P_p}[ℓ(v_q,y) − ℓ(v_p,y)] − KL(P_p ‖ P_q)|.
double check_excess_loss_is_kl(const FiniteClassSpec& spec, std::size_t slate_size,
                               std::size_t trials, Rng& rng);

// E_{π^⊗K}[g] over slates encoded in mixed radix (position 0 most significant).
double slate_expectation(const FinitePolicy& pi, std::span<const double> g,
                         std::size_t slate_size);

// Random nonnegative g and random tilts π with β = 1/min_ratio; verifies
// E_{π^⊗K}[g] ≥ β^{−K} E_{π₀^⊗K}[g] by full enumeration.
bool check_slate_domination(const FiniteClassSpec& spec, std::size_t slate_size, double eta,
                            std::size_t trials, Rng& rng);

// Smallest loss gap among pairs whose regret reaches ε_iso; +inf if none.
double min_loss_gap_at_isolation(const StructureReport& report);

struct RandomFamilyOptions {
  std::size_t min_truths = 2;
  std::size_t max_truths = 6;
  std::size_t min_contexts = 2;
  std::size_t max_contexts = 5;
  std::size_t min_actions = 2;
  std::size_t max_actions = 4;
  double min_gap = 0.1;
};

FiniteClassSpec random_family(Rng& rng, const RandomFamilyOptions& options = {});

struct OracleOutcome {
  bool isolation = false;
  bool zero_loss_identification = false;
  bool regret_disagreement_sandwich = false;
  bool slate_domination = false;
  double excess_loss_kl_max_error = 0.0;
  double min_loss_gap_at_isolation = 0.0;

  bool loss_gap_witness() const noexcept { return min_loss_gap_at_isolation > 0.0; }
};

OracleOutcome run_oracle_checks(const FiniteClassSpec& spec, std::size_t slate_size, double eta,
                                std::size_t trials, Rng& rng);

nlohmann::json to_json(const StructureReport& report);

}  // namespace alignlab
