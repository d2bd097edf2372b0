#include "alignlab/loop.hpp"

#include <algorithm>
#include <cmath>

#include "alignlab/errors.hpp"
#include "alignlab/mnl.hpp"
#include "alignlab/policy.hpp"
#include "alignlab/regret.hpp"

namespace alignlab {

std::string to_string(SlateProtocol protocol) {
  switch (protocol) {
    case SlateProtocol::kMixedReference:
      return "mixed-reference";
    case SlateProtocol::kIidOnPolicy:
      return "iid-on-policy";
  }
  return "unknown";
}

SlateProtocol parse_slate_protocol(const std::string& name) {
  if (name == "mixed-reference") {
    return SlateProtocol::kMixedReference;
  }
  if (name == "iid-on-policy") {
    return SlateProtocol::kIidOnPolicy;
  }
  throw InvalidInput("unknown slate protocol '" + name + "'");
}

namespace {

double sigmoid(double z) noexcept {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// −log σ(u) = log(1 + e^{−u}), stable for either sign.
double neg_log_sigmoid(double u) noexcept {
  if (u >= 0.0) {
    return std::log1p(std::exp(-u));
  }
  return -u + std::log1p(std::exp(u));
}

void audit_tilt(RatioAudit& audit, const FinitePolicy& deployed, const FinitePolicy& reference,
                std::span<const double> rewards, double eta) {
  const Vector centered = center_reward(rewards, reference.probs());
  double sup_norm = 0.0;
  for (std::size_t a = 0; a < centered.size(); ++a) {
    if (reference[a] > 0.0) {
      sup_norm = std::max(sup_norm, std::abs(centered[a]));
    }
  }
  const RatioBounds bounds = likelihood_ratio_bounds(deployed, reference);
  const double log_extreme = std::max(std::log(bounds.max_ratio), -std::log(bounds.min_ratio));
  const double margin = log_extreme - 2.0 * eta * sup_norm;
  ++audit.checks;
  // 1e-12 on the log scale absorbs rounding in the tilt's normalization.
  if (margin > 1e-12) {
    ++audit.violations;
  }
  audit.worst_log_margin = std::max(audit.worst_log_margin, margin);
}

}  // namespace

void step(TrajectoryState& state, const LinearBTInstance& inst, const LoopOptions& options,
          Rng& rng) {
  if (!(options.eta > 0.0)) {
    throw InvalidInput("step: eta must be positive");
  }
  const std::size_t d = inst.dimension();
  PreferenceRecord rec;
  rec.context.resize(d);
  for (double& v : rec.context) {
    v = rng.uniform();
  }
  const Vector rewards = reward_vector(state.estimate.w_hat, inst, rec.context);
  const FinitePolicy deployed = kl_tilt(inst.reference(), rewards, options.eta);
  audit_tilt(state.audit, deployed, inst.reference(), rewards, options.eta);

  const std::size_t first = sample_action(deployed, rng);
  const std::size_t second = options.protocol == SlateProtocol::kMixedReference
                                 ? sample_action(inst.reference(), rng)
                                 : sample_action(deployed, rng);
  Vector diff(d);
  for (std::size_t j = 0; j < d; ++j) {
    diff[j] = inst.action(first)[j] - inst.action(second)[j];
  }
  const double prefer_first = sigmoid(bilinear(rec.context, inst.w_star(), diff));
  rec.slate = {first, second};
  rec.preferred = rng.uniform() < prefer_first ? 0 : 1;
  state.dataset.push_back(std::move(rec));

  FitResult fit;
  try {
    fit = fit_mle(state.dataset, inst, state.estimate, options.fit);
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(std::string(e.what()) + " (round " +
                           std::to_string(state.round + 1) + ")");
  }
  ++state.fits.fits;
  state.fits.iterations += fit.report.iterations;
  if (!fit.report.converged) {
    ++state.fits.not_converged;
  }
  state.estimate = std::move(fit.estimate);
  ++state.round;
}

TrajectoryResult run_trajectory(const LinearBTInstance& inst, const LoopOptions& options,
                                std::size_t horizon, Rng& rng) {
  if (horizon < 1) {
    throw InvalidInput("run_trajectory: horizon must be at least 1");
  }
  TrajectoryState state = TrajectoryState::initial(inst.dimension());
  state.dataset.reserve(horizon);
  TrajectoryResult out;
  out.estimates.reserve(horizon + 1);
  out.estimates.push_back(state.estimate.w_hat);
  for (std::size_t t = 0; t < horizon; ++t) {
    step(state, inst, options, rng);
    out.estimates.push_back(state.estimate.w_hat);
  }
  out.dataset = std::move(state.dataset);
  out.audit = state.audit;
  out.fits = state.fits;
  return out;
}

double dpo_empirical_loss(const Matrix& w, std::span<const PreferenceRecord> data,
                          const LinearBTInstance& inst, double eta) {
  if (data.empty()) {
    throw InvalidInput("dpo_empirical_loss: empty dataset");
  }
  if (!(eta > 0.0)) {
    throw InvalidInput("dpo_empirical_loss: eta must be positive");
  }
  const auto& ref = inst.reference();
  double total = 0.0;
  for (const auto& rec : data) {
    if (rec.slate.size() != 2 || rec.preferred > 1) {
      throw InvalidInput("dpo_empirical_loss: pairwise records only");
    }
    const Vector rewards = reward_vector(w, inst, rec.context);
    const Vector log_pi = kl_tilt_log_probs(ref, rewards, eta);
    const std::size_t chosen = rec.slate[rec.preferred];
    const std::size_t rejected = rec.slate[1 - rec.preferred];
    const double log_ratio_chosen = log_pi[chosen] - std::log(ref[chosen]);
    const double log_ratio_rejected = log_pi[rejected] - std::log(ref[rejected]);
    total += neg_log_sigmoid((log_ratio_chosen - log_ratio_rejected) / eta);
  }
  return total / static_cast<double>(data.size());
}

std::size_t dpo_selector(const Matrix& w, std::span<const double> x,
                         const LinearBTInstance& inst, double eta) {
  const auto& ref = inst.reference();
  const Vector log_pi = kl_tilt_log_probs(ref, reward_vector(w, inst, x), eta);
  Vector implicit(log_pi.size());
  for (std::size_t a = 0; a < implicit.size(); ++a) {
    implicit[a] = (log_pi[a] - std::log(ref[a])) / eta;
  }
  return argmax_lowest(implicit);
}

DpoEquivalence verify_dpo_equivalence(std::span<const Matrix> estimates,
                                      const LinearBTInstance& inst, double eta,
                                      std::span<const PreferenceRecord> dataset,
                                      std::size_t selector_contexts, Rng& rng) {
  DpoEquivalence out;
  out.contexts_per_round = selector_contexts;
  if (estimates.size() > dataset.size() + 1) {
    throw InvalidInput("verify_dpo_equivalence: more estimates than dataset rounds");
  }
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    const Matrix& w = estimates[t];
    if (t >= 1) {
      const auto prefix = dataset.first(t);
      const double dpo = dpo_empirical_loss(w, prefix, inst, eta);
      const double mnl = empirical_risk(prefix, [&](std::span<const double> x, std::size_t a) {
        return bilinear(x, w, inst.action(a));
      });
      out.max_abs_loss_diff = std::max(out.max_abs_loss_diff, std::abs(dpo - mnl));
    }
    if (selector_contexts > 0) {
      const Matrix batch = draw_contexts(rng, selector_contexts, inst.dimension());
      std::size_t agree = 0;
      for (std::size_t i = 0; i < batch.rows(); ++i) {
        agree += temp_zero_action(w, batch.row(i), inst) == dpo_selector(w, batch.row(i), inst, eta);
      }
      out.min_selector_agreement =
          std::min(out.min_selector_agreement,
                   static_cast<double>(agree) / static_cast<double>(selector_contexts));
    }
    ++out.rounds_checked;
  }
  return out;
}

}  // namespace alignlab
