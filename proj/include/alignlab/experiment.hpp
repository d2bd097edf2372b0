#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alignlab/instance.hpp"
#include "alignlab/loop.hpp"
#include "alignlab/regret.hpp"
#include "json.hpp"

namespace alignlab {

inline constexpr int kManifestSchemaVersion = 1;

struct ExperimentConfig {
  std::uint64_t base_seed = 3500;
  std::size_t dimension = 5;
  std::size_t num_actions = 6;
  std::size_t horizon = 200;
  std::size_t repeats = 50;
  std::size_t eval_contexts = 4096;
  std::vector<double> etas{1.0, 2.0, 3.0};
  int mle_maxiter = 50;
  double mle_ftol = 1e-9;
  double min_probe_gap = 0.2;
  std::size_t gap_probe_contexts = 20000;
  std::size_t problem_search_limit = 1000;
  std::filesystem::path output_dir;  // empty: keep results in memory only
  SlateProtocol protocol = SlateProtocol::kMixedReference;
  bool compute_kl_regret = false;
  bool verify_dpo_all = false;
  std::size_t dpo_selector_contexts = 4096;
  std::size_t threads = 0;  // 0: ALIGN_LAB_THREADS, else hardware concurrency

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);

// Pointwise mean and standard error (sample sd with n−1, over √n; 0 for n=1).
struct AggregateCurve {
  Vector step_mean;
  Vector step_se;
  Vector cum_mean;
  Vector cum_se;
};

AggregateCurve summarize(std::span<const RegretTrace> traces);
// Same aggregation over the KL-regularized series; every trace must carry it.
AggregateCurve summarize_kl(std::span<const RegretTrace> traces);

struct EtaOutcome {
  double eta = 0.0;
  AggregateCurve curve;
  std::optional<AggregateCurve> kl_curve;
  std::vector<RegretTrace> traces;  // sorted by repeat
  RatioAudit audit;                 // merged over repeats
  FitTally fits;
  DpoEquivalence dpo;               // merged over verified repeats
  std::vector<std::size_t> dpo_verified_repeats;
};

struct ExperimentResult {
  InstanceSearch instance;
  std::vector<EtaOutcome> per_eta;
  nlohmann::json manifest;
};

// Search an instance, run every (eta, repeat) trajectory, evaluate, and
// aggregate. Writes per-eta CSVs and manifest.json when output_dir is set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Shortest round-trip decimal form.
std::string format_double(double value);

// "regret_eta{value}.csv"
std::string curve_filename(double eta, const std::string& prefix = "regret_eta");

// Header eta,t,step_mean,step_se,cum_mean,cum_se then one row per t.
std::string curve_csv(double eta, const AggregateCurve& curve);

// Fixed-width final-iteration table, one row per eta.
std::string summary_table(const ExperimentResult& result);

// Worker count: explicit value, else ALIGN_LAB_THREADS (0 = auto), else hardware.
std::size_t resolve_thread_count(std::size_t requested);

}  // namespace alignlab
