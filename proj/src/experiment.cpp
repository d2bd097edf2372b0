#include "alignlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "alignlab/errors.hpp"

namespace alignlab {

void ExperimentConfig::validate() const {
  if (repeats < 1 || horizon < 1 || eval_contexts < 1) {
    throw InvalidInput("config: repeats, horizon and eval_contexts must be at least 1");
  }
  if (etas.empty()) {
    throw InvalidInput("config: etas must be nonempty");
  }
  for (double eta : etas) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw InvalidInput("config: every eta must be a positive finite number");
    }
  }
  if (dimension < 1 || num_actions < 2) {
    throw InvalidInput("config: need dimension >= 1 and num_actions >= 2");
  }
  if (mle_maxiter < 1 || !(mle_ftol > 0.0)) {
    throw InvalidInput("config: need mle_maxiter >= 1 and mle_ftol > 0");
  }
  if (!(min_probe_gap >= 0.0) || gap_probe_contexts < 1 || problem_search_limit < 1) {
    throw InvalidInput("config: invalid instance-search settings");
  }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  return {{"seed", cfg.base_seed},
          {"dimension", cfg.dimension},
          {"num_actions", cfg.num_actions},
          {"horizon", cfg.horizon},
          {"repeats", cfg.repeats},
          {"eval_contexts", cfg.eval_contexts},
          {"etas", cfg.etas},
          {"mle_maxiter", cfg.mle_maxiter},
          {"mle_ftol", cfg.mle_ftol},
          {"min_probe_gap", cfg.min_probe_gap},
          {"gap_probe_contexts", cfg.gap_probe_contexts},
          {"problem_search_limit", cfg.problem_search_limit},
          {"protocol", to_string(cfg.protocol)},
          {"kl_regret", cfg.compute_kl_regret},
          {"verify_dpo_all", cfg.verify_dpo_all},
          {"dpo_selector_contexts", cfg.dpo_selector_contexts}};
}

namespace {

struct SeriesStats {
  Vector mean;
  Vector se;
};

SeriesStats pointwise(const std::vector<const Vector*>& series) {
  const std::size_t n = series.size();
  const std::size_t len = series.front()->size();
  SeriesStats out{Vector(len, 0.0), Vector(len, 0.0)};
  for (const Vector* s : series) {
    if (s->size() != len) {
      throw InvalidInput("summarize: traces have different lengths");
    }
  }
  // Shifted by the first trace so identical samples give exactly zero spread.
  for (std::size_t t = 0; t < len; ++t) {
    const double origin = (*series.front())[t];
    double sum = 0.0;
    for (const Vector* s : series) {
      sum += (*s)[t] - origin;
    }
    const double shifted_mean = sum / static_cast<double>(n);
    out.mean[t] = origin + shifted_mean;
    if (n > 1) {
      double ss = 0.0;
      for (const Vector* s : series) {
        const double dev = ((*s)[t] - origin) - shifted_mean;
        ss += dev * dev;
      }
      const double sd = std::sqrt(ss / static_cast<double>(n - 1));
      out.se[t] = sd / std::sqrt(static_cast<double>(n));
    }
  }
  return out;
}

AggregateCurve assemble(const std::vector<const Vector*>& step,
                        const std::vector<const Vector*>& cumulative) {
  if (step.empty()) {
    throw InvalidInput("summarize: no traces");
  }
  SeriesStats s = pointwise(step);
  SeriesStats c = pointwise(cumulative);
  if (s.mean.size() != c.mean.size()) {
    throw InvalidInput("summarize: step and cumulative lengths differ");
  }
  return AggregateCurve{std::move(s.mean), std::move(s.se), std::move(c.mean), std::move(c.se)};
}

}  // namespace

AggregateCurve summarize(std::span<const RegretTrace> traces) {
  std::vector<const Vector*> step;
  std::vector<const Vector*> cumulative;
  for (const auto& tr : traces) {
    step.push_back(&tr.step_regret);
    cumulative.push_back(&tr.cumulative_regret);
  }
  return assemble(step, cumulative);
}

AggregateCurve summarize_kl(std::span<const RegretTrace> traces) {
  std::vector<const Vector*> step;
  std::vector<const Vector*> cumulative;
  for (const auto& tr : traces) {
    if (!tr.kl_step_regret || !tr.kl_cumulative_regret) {
      throw InvalidInput("summarize_kl: trace lacks KL-regularized regret");
    }
    step.push_back(&*tr.kl_step_regret);
    cumulative.push_back(&*tr.kl_cumulative_regret);
  }
  return assemble(step, cumulative);
}

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::string curve_filename(double eta, const std::string& prefix) {
  return prefix + format_double(eta) + ".csv";
}

std::string curve_csv(double eta, const AggregateCurve& curve) {
  std::string out = "eta,t,step_mean,step_se,cum_mean,cum_se\n";
  const std::string eta_text = format_double(eta);
  for (std::size_t t = 0; t < curve.step_mean.size(); ++t) {
    out += eta_text;
    out += ',';
    out += std::to_string(t);
    for (double v : {curve.step_mean[t], curve.step_se[t], curve.cum_mean[t], curve.cum_se[t]}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string summary_table(const ExperimentResult& result) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%6s  %16s  %16s  %22s  %22s\n", "eta", "final step mean",
                "final step s.e.", "final cumulative mean", "final cumulative s.e.");
  os << line;
  for (const auto& e : result.per_eta) {
    std::snprintf(line, sizeof(line), "%6g  %16.5f  %16.5f  %22.4f  %22.4f\n", e.eta,
                  e.curve.step_mean.back(), e.curve.step_se.back(), e.curve.cum_mean.back(),
                  e.curve.cum_se.back());
    os << line;
  }
  return os.str();
}

std::size_t resolve_thread_count(std::size_t requested) {
  if (requested > 0) {
    return requested;
  }
  if (const char* env = std::getenv("ALIGN_LAB_THREADS")) {
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && parsed > 0) {
      return static_cast<std::size_t>(parsed);
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct RepeatOutcome {
  RegretTrace trace;
  RatioAudit audit;
  FitTally fits;
  std::optional<DpoEquivalence> dpo;
};

RepeatOutcome run_repeat(const ExperimentConfig& cfg, const LinearBTInstance& inst,
                         std::size_t eta_index, std::size_t repeat) {
  const double eta = cfg.etas[eta_index];
  LoopOptions options;
  options.eta = eta;
  options.protocol = cfg.protocol;
  options.fit.max_iter = cfg.mle_maxiter;
  options.fit.ftol = cfg.mle_ftol;

  Rng trajectory_rng = make_stream(cfg.base_seed, StreamRole::kTrajectory, eta_index, repeat);
  TrajectoryResult traj = run_trajectory(inst, options, cfg.horizon, trajectory_rng);

  Rng eval_rng = make_stream(cfg.base_seed, StreamRole::kEvaluation, eta_index, repeat);
  RepeatOutcome out;
  out.trace = evaluate_trajectory(traj.estimates, inst, eta, cfg.eval_contexts, eval_rng,
                                  cfg.compute_kl_regret);
  out.audit = traj.audit;
  out.fits = traj.fits;
  if (cfg.verify_dpo_all || repeat == 0) {
    Rng dpo_rng = make_stream(cfg.base_seed, StreamRole::kDpoCheck, eta_index, repeat);
    out.dpo = verify_dpo_equivalence(traj.estimates, inst, eta, traj.dataset,
                                     cfg.dpo_selector_contexts, dpo_rng);
  }
  return out;
}

void merge(RatioAudit& into, const RatioAudit& from) {
  into.checks += from.checks;
  into.violations += from.violations;
  into.worst_log_margin = std::max(into.worst_log_margin, from.worst_log_margin);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json build_manifest(const ExperimentConfig& cfg, const ExperimentResult& result) {
  nlohmann::json manifest;
  manifest["schema_version"] = kManifestSchemaVersion;
  manifest["created_utc"] = utc_timestamp();
  manifest["config"] = to_json(cfg);
  manifest["rng"] = {
      {"generator", "xoshiro256**"},
      {"state_seeding", "four SplitMix64 outputs from the stream seed"},
      {"uniform", "(next() >> 11) * 2^-53"},
      {"stream_seed", "mix64(base_seed XOR role_tag), mix64 = SplitMix64 finalizer of x + 0x9e3779b97f4a7c15"},
      {"role_tag", "role << 56 | eta_index << 32 | repeat"},
      {"roles",
       {{"probe_bank", static_cast<int>(StreamRole::kProbeBank)},
        {"instance", static_cast<int>(StreamRole::kInstance)},
        {"trajectory", static_cast<int>(StreamRole::kTrajectory)},
        {"evaluation", static_cast<int>(StreamRole::kEvaluation)},
        {"dpo_check", static_cast<int>(StreamRole::kDpoCheck)}}},
      {"instance_draw_order", "actions row-major, then W* row-major, from the candidate seed"},
      {"trajectory_draw_order", "per round: context, first action, second action, label"}};
  manifest["instance"] = to_json(result.instance);
  manifest["solver"] = {
      {"method", "projected limited-memory BFGS on the box [0,1]^(d*d)"},
      {"history", FitOptions{}.history},
      {"maxiter", cfg.mle_maxiter},
      {"ftol", cfg.mle_ftol},
      {"ftol_semantics", "relative: (f_k - f_k+1) / max(|f_k|, |f_k+1|, 1) <= ftol"},
      {"pgtol", FitOptions{}.pgtol},
      {"warm_start", "previous round's estimate; round 0 is the zero matrix"}};
  manifest["protocol"] = to_string(cfg.protocol);
  manifest["evaluation"] = {{"eval_contexts", cfg.eval_contexts},
                            {"kl_regret", cfg.compute_kl_regret},
                            {"batches", "fresh per round, independent evaluation stream"}};
  nlohmann::json per_eta = nlohmann::json::array();
  for (const auto& e : result.per_eta) {
    nlohmann::json row = {
        {"eta", e.eta},
        {"csv", curve_filename(e.eta)},
        {"final_step_mean", e.curve.step_mean.back()},
        {"final_step_se", e.curve.step_se.back()},
        {"final_cum_mean", e.curve.cum_mean.back()},
        {"final_cum_se", e.curve.cum_se.back()},
        {"dpo",
         {{"verified_repeats", e.dpo_verified_repeats},
          {"max_abs_loss_diff", e.dpo.max_abs_loss_diff},
          {"min_selector_agreement", e.dpo.min_selector_agreement},
          {"selector_contexts", cfg.dpo_selector_contexts}}},
        {"likelihood_ratio_audit",
         {{"checks", e.audit.checks},
          {"violations", e.audit.violations},
          {"worst_log_margin", number_or_null(e.audit.worst_log_margin)}}},
        {"fits",
         {{"count", e.fits.fits},
          {"not_converged", e.fits.not_converged},
          {"total_iterations", e.fits.iterations}}}};
    if (e.kl_curve) {
      row["kl"] = {{"csv", curve_filename(e.eta, "kl_regret_eta")},
                   {"final_step_mean", e.kl_curve->step_mean.back()},
                   {"final_cum_mean", e.kl_curve->cum_mean.back()}};
    }
    per_eta.push_back(std::move(row));
  }
  manifest["results"] = std::move(per_eta);
  return manifest;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result{search_instance(cfg.base_seed, cfg.dimension, cfg.num_actions,
                                          cfg.min_probe_gap, cfg.gap_probe_contexts,
                                          cfg.problem_search_limit),
                          {},
                          {}};
  const LinearBTInstance& inst = result.instance.instance;

  const std::size_t tasks = cfg.etas.size() * cfg.repeats;
  std::vector<std::optional<RepeatOutcome>> slots(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      const std::size_t eta_index = task / cfg.repeats;
      const std::size_t repeat = task % cfg.repeats;
      try {
        slots[task] = run_repeat(cfg, inst, eta_index, repeat);
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(resolve_thread_count(cfg.threads), tasks);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) {
      pool.emplace_back(worker);
    }
  }

  for (std::size_t task = 0; task < tasks; ++task) {
    if (!errors[task]) {
      continue;
    }
    const std::string where = "eta=" + format_double(cfg.etas[task / cfg.repeats]) +
                              " repeat=" + std::to_string(task % cfg.repeats);
    try {
      std::rethrow_exception(errors[task]);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(where + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }

  for (std::size_t eta_index = 0; eta_index < cfg.etas.size(); ++eta_index) {
    EtaOutcome e;
    e.eta = cfg.etas[eta_index];
    bool any_dpo = false;
    for (std::size_t repeat = 0; repeat < cfg.repeats; ++repeat) {
      RepeatOutcome& r = *slots[eta_index * cfg.repeats + repeat];
      merge(e.audit, r.audit);
      e.fits.fits += r.fits.fits;
      e.fits.not_converged += r.fits.not_converged;
      e.fits.iterations += r.fits.iterations;
      if (r.dpo) {
        e.dpo_verified_repeats.push_back(repeat);
        if (!any_dpo) {
          e.dpo = *r.dpo;
          any_dpo = true;
        } else {
          e.dpo.max_abs_loss_diff = std::max(e.dpo.max_abs_loss_diff, r.dpo->max_abs_loss_diff);
          e.dpo.min_selector_agreement =
              std::min(e.dpo.min_selector_agreement, r.dpo->min_selector_agreement);
          e.dpo.rounds_checked += r.dpo->rounds_checked;
        }
      }
      e.traces.push_back(std::move(r.trace));
    }
    e.curve = summarize(e.traces);
    if (cfg.compute_kl_regret) {
      e.kl_curve = summarize_kl(e.traces);
    }
    result.per_eta.push_back(std::move(e));
  }

  result.manifest = build_manifest(cfg, result);

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    for (const auto& e : result.per_eta) {
      write_text(cfg.output_dir / curve_filename(e.eta), curve_csv(e.eta, e.curve));
      if (e.kl_curve) {
        write_text(cfg.output_dir / curve_filename(e.eta, "kl_regret_eta"),
                   curve_csv(e.eta, *e.kl_curve));
      }
    }
    write_text(cfg.output_dir / "manifest.json", result.manifest.dump(2) + "\n");
  }
  return result;
}

}  // namespace alignlab
