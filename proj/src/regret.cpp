#include "alignlab/regret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alignlab/errors.hpp"
#include "alignlab/mnl.hpp"
#include "alignlab/policy.hpp"

namespace alignlab {

std::size_t argmax_lowest(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) {
      best = a;
    }
  }
  return best;
}

std::size_t temp_zero_action(const Matrix& w, std::span<const double> x,
                             const LinearBTInstance& inst) {
  return argmax_lowest(reward_vector(w, inst, x));
}

namespace {

void require_contexts(const Matrix& contexts, const LinearBTInstance& inst) {
  if (contexts.rows() == 0) {
    throw InvalidInput("regret: empty evaluation batch");
  }
  if (contexts.cols() != inst.dimension()) {
    throw InvalidInput("regret: evaluation context dimension mismatch");
  }
}

}  // namespace

double one_step_temp_zero_regret(const Matrix& w, const LinearBTInstance& inst,
                                 const Matrix& eval_contexts) {
  require_contexts(eval_contexts, inst);
  const std::size_t m = inst.num_actions();
  Vector truth(m);
  Vector learned(m);
  double total = 0.0;
  for (std::size_t i = 0; i < eval_contexts.rows(); ++i) {
    const auto x = eval_contexts.row(i);
    reward_vector(inst.w_star(), inst, x, truth);
    reward_vector(w, inst, x, learned);
    total += truth[argmax_lowest(truth)] - truth[argmax_lowest(learned)];
  }
  return total / static_cast<double>(eval_contexts.rows());
}

double one_step_kl_regret(const Matrix& w, const LinearBTInstance& inst, double eta,
                          const Matrix& eval_contexts) {
  if (!(eta > 0.0)) {
    throw InvalidInput("one_step_kl_regret: eta must be positive");
  }
  require_contexts(eval_contexts, inst);
  const auto& ref = inst.reference();
  const std::size_t m = inst.num_actions();
  Vector truth(m);
  Vector learned(m);
  Vector scaled(m);
  double total = 0.0;
  for (std::size_t i = 0; i < eval_contexts.rows(); ++i) {
    const auto x = eval_contexts.row(i);
    reward_vector(inst.w_star(), inst, x, truth);
    reward_vector(w, inst, x, learned);
    for (std::size_t a = 0; a < m; ++a) {
      scaled[a] = std::log(ref[a]) + eta * truth[a];
    }
    const double optimal_value = log_sum_exp(scaled) / eta;
    const FinitePolicy deployed = kl_tilt(ref, learned, eta);
    double expected = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      expected += deployed[a] * truth[a];
    }
    const double deployed_value = expected - kl_divergence(deployed, ref) / eta;
    total += optimal_value - deployed_value;
  }
  return total / static_cast<double>(eval_contexts.rows());
}

SelectorComparison compare_selectors(const Matrix& w, const LinearBTInstance& inst,
                                     const Matrix& eval_contexts) {
  require_contexts(eval_contexts, inst);
  const std::size_t m = inst.num_actions();
  Vector truth(m);
  Vector learned(m);
  SelectorComparison out;
  out.min_top_two_gap = std::numeric_limits<double>::infinity();
  double regret = 0.0;
  std::size_t disagreements = 0;
  for (std::size_t i = 0; i < eval_contexts.rows(); ++i) {
    const auto x = eval_contexts.row(i);
    reward_vector(inst.w_star(), inst, x, truth);
    reward_vector(w, inst, x, learned);
    const std::size_t best = argmax_lowest(truth);
    const std::size_t chosen = argmax_lowest(learned);
    regret += truth[best] - truth[chosen];
    disagreements += (best != chosen) ? 1 : 0;
    double second = -std::numeric_limits<double>::infinity();
    double bottom = truth[best];
    for (std::size_t a = 0; a < m; ++a) {
      if (a != best) {
        second = std::max(second, truth[a]);
      }
      bottom = std::min(bottom, truth[a]);
    }
    out.min_top_two_gap = std::min(out.min_top_two_gap, truth[best] - second);
    out.max_spread = std::max(out.max_spread, truth[best] - bottom);
  }
  const double n = static_cast<double>(eval_contexts.rows());
  out.regret = regret / n;
  out.disagreement_mass = static_cast<double>(disagreements) / n;
  return out;
}

RegretTrace evaluate_trajectory(std::span<const Matrix> estimates, const LinearBTInstance& inst,
                                double eta, std::size_t eval_count, Rng& rng, bool compute_kl) {
  if (eval_count < 1) {
    throw InvalidInput("evaluate_trajectory: eval_count must be positive");
  }
  RegretTrace trace;
  trace.step_regret.reserve(estimates.size());
  trace.cumulative_regret.reserve(estimates.size());
  if (compute_kl) {
    trace.kl_step_regret.emplace();
    trace.kl_cumulative_regret.emplace();
  }
  double running = 0.0;
  double kl_running = 0.0;
  for (const Matrix& w : estimates) {
    const Matrix batch = draw_contexts(rng, eval_count, inst.dimension());
    const double step = one_step_temp_zero_regret(w, inst, batch);
    running += step;
    trace.step_regret.push_back(step);
    trace.cumulative_regret.push_back(running);
    if (compute_kl) {
      const double kl_step = one_step_kl_regret(w, inst, eta, batch);
      kl_running += kl_step;
      trace.kl_step_regret->push_back(kl_step);
      trace.kl_cumulative_regret->push_back(kl_running);
    }
  }
  return trace;
}

}  // namespace alignlab
