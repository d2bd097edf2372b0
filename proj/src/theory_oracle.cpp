#include "alignlab/theory_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "alignlab/errors.hpp"
#include "alignlab/mnl.hpp"
#include "alignlab/regret.hpp"

namespace alignlab {

namespace {

constexpr std::size_t kMaxSlates = 100000;
constexpr double kTieTolerance = 1e-12;

std::size_t slate_count(std::size_t num_actions, std::size_t slate_size) {
  if (slate_size < 2) {
    throw InvalidInput("slate size must be at least 2");
  }
  std::size_t count = 1;
  for (std::size_t k = 0; k < slate_size; ++k) {
    if (count > kMaxSlates / num_actions) {
      throw InvalidInput("slate enumeration exceeds 10^5 slates per context");
    }
    count *= num_actions;
  }
  return count;
}

// Decodes a mixed-radix slate code into action indices.
void decode_slate(std::size_t code, std::size_t num_actions, std::span<std::size_t> slate) {
  for (std::size_t k = slate.size(); k-- > 0;) {
    slate[k] = code % num_actions;
    code /= num_actions;
  }
}

// Argmax over the reference support, lowest index on ties.
std::size_t support_argmax(std::span<const double> rewards, const FinitePolicy& ref) {
  std::size_t best = rewards.size();
  for (std::size_t a = 0; a < rewards.size(); ++a) {
    if (ref[a] > 0.0 && (best == rewards.size() || rewards[a] > rewards[best])) {
      best = a;
    }
  }
  return best;
}

struct SelectorData {
  std::vector<std::vector<std::size_t>> selectors;
  double delta_min = std::numeric_limits<double>::infinity();
  double delta_max = 0.0;
};

SelectorData selector_data(const FiniteClassSpec& spec) {
  SelectorData out;
  out.selectors.assign(spec.num_truths(), std::vector<std::size_t>(spec.num_contexts()));
  for (std::size_t p = 0; p < spec.num_truths(); ++p) {
    for (std::size_t x = 0; x < spec.num_contexts(); ++x) {
      const auto r = spec.rewards(p, x);
      const auto& ref = spec.reference(x);
      const std::size_t best = support_argmax(r, ref);
      out.selectors[p][x] = best;
      if (spec.contexts()[x].weight <= 0.0) {
        continue;
      }
      double second = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < r.size(); ++a) {
        if (ref[a] > 0.0 && a != best) {
          second = std::max(second, r[a]);
          out.delta_max = std::max(out.delta_max, r[best] - r[a]);
        }
      }
      if (second == -std::numeric_limits<double>::infinity()) {
        continue;  // single-action support: no competitor
      }
      const double gap = r[best] - second;
      if (gap <= kTieTolerance) {
        throw DegenerateClass("tied argmax for truth '" + spec.truths()[p].id + "' at context '" +
                              spec.contexts()[x].id + "'");
      }
      out.delta_min = std::min(out.delta_min, gap);
    }
  }
  if (out.delta_min == std::numeric_limits<double>::infinity()) {
    out.delta_min = 0.0;
  }
  return out;
}

double disagreement_mass(const FiniteClassSpec& spec, const std::vector<std::size_t>& a,
                         const std::vector<std::size_t>& b) {
  double mass = 0.0;
  for (std::size_t x = 0; x < spec.num_contexts(); ++x) {
    const double w = spec.contexts()[x].weight;
    if (w > 0.0 && a[x] != b[x]) {
      mass += w;
    }
  }
  return mass;
}

double regret_value(const FiniteClassSpec& spec, std::size_t p, const std::vector<std::size_t>& truth_sel,
                    const std::vector<std::size_t>& other_sel) {
  double total = 0.0;
  for (std::size_t x = 0; x < spec.num_contexts(); ++x) {
    const double w = spec.contexts()[x].weight;
    if (w > 0.0) {
      const auto r = spec.rewards(p, x);
      total += w * (r[truth_sel[x]] - r[other_sel[x]]);
    }
  }
  return total;
}

bool meets(double lhs, double rhs) { return lhs <= rhs + 1e-12; }

}  // namespace

FiniteClassSpec::FiniteClassSpec(std::vector<WeightedContext> contexts, std::size_t num_actions,
                                 std::vector<Vector> reference, std::vector<TruthTable> truths,
                                 Centering centering)
    : contexts_(std::move(contexts)), num_actions_(num_actions) {
  if (contexts_.empty()) {
    throw InvalidInput("FiniteClassSpec: no contexts");
  }
  if (num_actions_ < 2) {
    throw InvalidInput("FiniteClassSpec: need at least 2 actions");
  }
  if (truths.empty()) {
    throw InvalidInput("FiniteClassSpec: empty truth family");
  }
  double total_weight = 0.0;
  for (const auto& c : contexts_) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw InvalidInput("FiniteClassSpec: context weights must be finite and nonnegative");
    }
    total_weight += c.weight;
  }
  if (std::abs(total_weight - 1.0) > 1e-12) {
    throw InvalidInput("FiniteClassSpec: context weights must sum to 1");
  }
  if (reference.size() != contexts_.size()) {
    throw InvalidInput("FiniteClassSpec: need one reference distribution per context");
  }
  for (auto& row : reference) {
    if (row.size() != num_actions_) {
      throw InvalidInput("FiniteClassSpec: reference row length differs from action count");
    }
    reference_.emplace_back(std::move(row));
  }
  for (auto& truth : truths) {
    if (truth.rewards.size() != contexts_.size()) {
      throw InvalidInput("FiniteClassSpec: truth '" + truth.id + "' has the wrong context count");
    }
    for (std::size_t x = 0; x < contexts_.size(); ++x) {
      auto& row = truth.rewards[x];
      if (row.size() != num_actions_) {
        throw InvalidInput("FiniteClassSpec: truth '" + truth.id + "' has a short reward row");
      }
      Vector centered = center_reward(row, reference_[x].probs());
      if (centering == Centering::kVerify) {
        double mean = 0.0;
        for (std::size_t a = 0; a < num_actions_; ++a) {
          mean += reference_[x][a] * row[a];
        }
        if (std::abs(mean) > 1e-12) {
          throw InvalidInput("FiniteClassSpec: truth '" + truth.id +
                             "' claimed centered but is not at context '" + contexts_[x].id + "'");
        }
      } else {
        row = std::move(centered);
      }
    }
  }
  truths_ = std::move(truths);
}

FiniteClassSpec FiniteClassSpec::from_json(const nlohmann::json& doc) {
  try {
    std::vector<WeightedContext> contexts;
    for (const auto& c : doc.at("contexts")) {
      WeightedContext wc;
      wc.weight = c.at("weight").get<double>();
      if (c.contains("id")) {
        wc.id = c.at("id").is_string() ? c.at("id").get<std::string>() : c.at("id").dump();
      } else {
        wc.id = std::to_string(contexts.size());
      }
      contexts.push_back(std::move(wc));
    }
    const auto num_actions = doc.at("actions").get<std::size_t>();
    auto reference = doc.at("reference").get<std::vector<Vector>>();
    std::vector<TruthTable> truths;
    for (const auto& [id, table] : doc.at("rewards").items()) {
      truths.push_back(TruthTable{id, table.get<std::vector<Vector>>()});
    }
    const bool claims_centered = doc.value("centered", false);
    return FiniteClassSpec(std::move(contexts), num_actions, std::move(reference),
                           std::move(truths),
                           claims_centered ? Centering::kVerify : Centering::kApply);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("FiniteClassSpec JSON: ") + e.what());
  }
}

nlohmann::json FiniteClassSpec::to_json() const {
  nlohmann::json doc;
  doc["contexts"] = nlohmann::json::array();
  for (const auto& c : contexts_) {
    doc["contexts"].push_back({{"id", c.id}, {"weight", c.weight}});
  }
  doc["actions"] = num_actions_;
  doc["reference"] = nlohmann::json::array();
  for (const auto& ref : reference_) {
    doc["reference"].push_back(Vector(ref.probs().begin(), ref.probs().end()));
  }
  doc["rewards"] = nlohmann::json::object();
  for (const auto& t : truths_) {
    doc["rewards"][t.id] = t.rewards;
  }
  doc["centered"] = true;
  return doc;
}

Matrix population_loss_matrix(const FiniteClassSpec& spec, std::size_t slate_size) {
  const std::size_t m = spec.num_actions();
  const std::size_t slates = slate_count(m, slate_size);
  const std::size_t n_truths = spec.num_truths();
  Matrix loss(n_truths, n_truths, 0.0);
  std::vector<std::size_t> slate(slate_size);
  Vector v_truth(slate_size);
  Vector v_other(slate_size);
  for (std::size_t x = 0; x < spec.num_contexts(); ++x) {
    const double wx = spec.contexts()[x].weight;
    if (wx <= 0.0) {
      continue;
    }
    const auto& ref = spec.reference(x);
    for (std::size_t code = 0; code < slates; ++code) {
      decode_slate(code, m, slate);
      double slate_weight = wx;
      for (std::size_t a : slate) {
        slate_weight *= ref[a];
      }
      if (slate_weight == 0.0) {
        continue;
      }
      for (std::size_t p = 0; p < n_truths; ++p) {
        const auto rp = spec.rewards(p, x);
        for (std::size_t k = 0; k < slate_size; ++k) {
          v_truth[k] = rp[slate[k]];
        }
        const Vector choice = mnl_probs(v_truth);
        for (std::size_t q = 0; q < n_truths; ++q) {
          const auto rq = spec.rewards(q, x);
          for (std::size_t k = 0; k < slate_size; ++k) {
            v_other[k] = rq[slate[k]];
          }
          double expected = 0.0;
          for (std::size_t y = 0; y < slate_size; ++y) {
            expected += choice[y] * mnl_logloss(v_other, y);
          }
          loss(p, q) += slate_weight * expected;
        }
      }
    }
  }
  return loss;
}

StructureReport compute_structure(const FiniteClassSpec& spec, std::size_t slate_size) {
  StructureReport report;
  report.slate_size = slate_size;
  const std::size_t n = spec.num_truths();
  for (const auto& t : spec.truths()) {
    report.truth_ids.push_back(t.id);
  }
  for (const auto& c : spec.contexts()) {
    report.zero_weight_contexts += c.weight <= 0.0 ? 1 : 0;
  }
  SelectorData sel = selector_data(spec);
  report.delta_min = sel.delta_min;
  report.delta_max = sel.delta_max;

  // Truths with identical selectors on every positive-weight context.
  std::vector<std::size_t> class_of(n);
  for (std::size_t p = 0; p < n; ++p) {
    bool placed = false;
    for (std::size_t c = 0; c < report.selector_classes.size() && !placed; ++c) {
      const std::size_t rep = report.selector_classes[c].front();
      if (disagreement_mass(spec, sel.selectors[rep], sel.selectors[p]) == 0.0) {
        report.selector_classes[c].push_back(p);
        class_of[p] = c;
        placed = true;
      }
    }
    if (!placed) {
      class_of[p] = report.selector_classes.size();
      report.selector_classes.push_back({p});
    }
  }

  report.disagreement = Matrix(n, n, 0.0);
  report.regret = Matrix(n, n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      report.disagreement(p, q) = disagreement_mass(spec, sel.selectors[p], sel.selectors[q]);
      report.regret(p, q) = p == q ? 0.0 : regret_value(spec, p, sel.selectors[p], sel.selectors[q]);
    }
  }
  if (report.selector_classes.size() <= 1) {
    report.class_separation = 0.0;
    report.epsilon_iso = report.delta_min;
  } else {
    double separation = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < report.selector_classes.size(); ++i) {
      for (std::size_t j = i + 1; j < report.selector_classes.size(); ++j) {
        separation = std::min(separation,
                              report.disagreement(report.selector_classes[i].front(),
                                                  report.selector_classes[j].front()));
      }
    }
    report.class_separation = separation;
    report.epsilon_iso = report.delta_min * separation;
  }

  report.loss = population_loss_matrix(spec, slate_size);
  report.loss_gap = Matrix(n, n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      report.loss_gap(p, q) = p == q ? 0.0 : report.loss(p, q) - report.loss(p, p);
    }
  }
  report.selectors = std::move(sel.selectors);
  return report;
}

bool check_isolation(const StructureReport& report) {
  const std::size_t n = report.regret.rows();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) {
        continue;
      }
      const double g = report.regret(p, q);
      if (!(g <= 1e-12 || g >= report.epsilon_iso - 1e-12)) {
        return false;
      }
    }
  }
  return true;
}

bool check_zero_loss_identification(const FiniteClassSpec& spec, std::size_t slate_size) {
  const Matrix loss = population_loss_matrix(spec, slate_size);
  const std::size_t n = spec.num_truths();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q || std::abs(loss(p, q) - loss(p, p)) > 1e-10) {
        continue;
      }
      for (std::size_t x = 0; x < spec.num_contexts(); ++x) {
        if (spec.contexts()[x].weight <= 0.0) {
          continue;
        }
        const auto rp = spec.rewards(p, x);
        const auto rq = spec.rewards(q, x);
        for (std::size_t a = 0; a < spec.num_actions(); ++a) {
          if (spec.reference(x)[a] > 0.0 && std::abs(rp[a] - rq[a]) > 1e-8) {
            return false;
          }
        }
      }
    }
  }
  return true;
}

bool check_regret_disagreement_sandwich(const FiniteClassSpec& spec) {
  const SelectorData sel = selector_data(spec);
  const std::size_t n = spec.num_truths();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      const double mass = disagreement_mass(spec, sel.selectors[p], sel.selectors[q]);
      const double g = regret_value(spec, p, sel.selectors[p], sel.selectors[q]);
      if (!meets(sel.delta_min * mass, g) || !meets(g, sel.delta_max * mass)) {
        return false;
      }
    }
  }
  return true;
}

double check_excess_loss_is_kl(const FiniteClassSpec& spec, std::size_t slate_size,
                               std::size_t trials, Rng& rng) {
  if (trials < 1) {
    throw InvalidInput("check_excess_loss_is_kl: need at least one trial");
  }
  if (slate_size < 2) {
    throw InvalidInput("check_excess_loss_is_kl: slate size must be at least 2");
  }
  Vector vp(slate_size);
  Vector vq(slate_size);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t x = rng.below(spec.num_contexts());
    const std::size_t p = rng.below(spec.num_truths());
    const std::size_t q = rng.below(spec.num_truths());
    for (std::size_t k = 0; k < slate_size; ++k) {
      const std::size_t a = rng.below(spec.num_actions());
      vp[k] = spec.rewards(p, x)[a];
      vq[k] = spec.rewards(q, x)[a];
    }
    const Vector truth_choice = mnl_probs(vp);
    double excess = 0.0;
    for (std::size_t y = 0; y < slate_size; ++y) {
      excess += truth_choice[y] * (mnl_logloss(vq, y) - mnl_logloss(vp, y));
    }
    const double kl = kl_divergence(FinitePolicy(truth_choice), FinitePolicy(mnl_probs(vq)));
    worst = std::max(worst, std::abs(excess - kl));
  }
  return worst;
}

double slate_expectation(const FinitePolicy& pi, std::span<const double> g,
                         std::size_t slate_size) {
  const std::size_t m = pi.size();
  const std::size_t slates = slate_count(m, slate_size);
  if (g.size() != slates) {
    throw InvalidInput("slate_expectation: g must have one value per slate");
  }
  std::vector<std::size_t> slate(slate_size);
  double total = 0.0;
  for (std::size_t code = 0; code < slates; ++code) {
    decode_slate(code, m, slate);
    double weight = 1.0;
    for (std::size_t a : slate) {
      weight *= pi[a];
    }
    total += weight * g[code];
  }
  return total;
}

bool check_slate_domination(const FiniteClassSpec& spec, std::size_t slate_size, double eta,
                            std::size_t trials, Rng& rng) {
  if (trials < 1) {
    throw InvalidInput("check_slate_domination: need at least one trial");
  }
  const std::size_t m = spec.num_actions();
  const std::size_t slates = slate_count(m, slate_size);
  Vector g(slates);
  Vector rewards(m);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t x = rng.below(spec.num_contexts());
    const auto& ref = spec.reference(x);
    // Alternate between family rows and fresh random rewards in [-1, 1].
    if (trial % 2 == 0) {
      const auto row = spec.rewards(rng.below(spec.num_truths()), x);
      std::copy(row.begin(), row.end(), rewards.begin());
    } else {
      for (double& r : rewards) {
        r = 2.0 * rng.uniform() - 1.0;
      }
    }
    for (double& gv : g) {
      gv = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    }
    const FinitePolicy tilted = kl_tilt(ref, rewards, eta);
    const RatioBounds bounds = likelihood_ratio_bounds(tilted, ref);
    const double beta = 1.0 / bounds.min_ratio;
    const double on_policy = slate_expectation(tilted, g, slate_size);
    const double reference = slate_expectation(ref, g, slate_size);
    const double floor = std::pow(beta, -static_cast<double>(slate_size)) * reference;
    if (on_policy < floor - 1e-12 * std::max(1.0, reference)) {
      return false;
    }
  }
  return true;
}

double min_loss_gap_at_isolation(const StructureReport& report) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = report.regret.rows();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p != q && report.regret(p, q) >= report.epsilon_iso - 1e-12 &&
          report.regret(p, q) > 1e-12) {
        best = std::min(best, report.loss_gap(p, q));
      }
    }
  }
  return best;
}

FiniteClassSpec random_family(Rng& rng, const RandomFamilyOptions& options) {
  const auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
  };
  const std::size_t n_truths = pick(options.min_truths, options.max_truths);
  const std::size_t n_contexts = pick(options.min_contexts, options.max_contexts);
  const std::size_t m = pick(options.min_actions, options.max_actions);

  std::vector<WeightedContext> contexts(n_contexts);
  double total = 0.0;
  for (std::size_t x = 0; x < n_contexts; ++x) {
    contexts[x].id = "x" + std::to_string(x);
    contexts[x].weight = 0.05 + rng.uniform();
    total += contexts[x].weight;
  }
  for (auto& c : contexts) {
    c.weight /= total;
  }
  // Renormalizing can leave the sum 1 ulp off; fold the residue into the last weight.
  double partial = 0.0;
  for (std::size_t x = 0; x + 1 < n_contexts; ++x) {
    partial += contexts[x].weight;
  }
  contexts.back().weight = 1.0 - partial;

  std::vector<Vector> reference(n_contexts, Vector(m));
  for (auto& row : reference) {
    double row_total = 0.0;
    for (double& p : row) {
      p = 0.1 + rng.uniform();
      row_total += p;
    }
    for (double& p : row) {
      p /= row_total;
    }
  }

  std::vector<TruthTable> truths(n_truths);
  for (std::size_t p = 0; p < n_truths; ++p) {
    truths[p].id = "p" + std::to_string(p);
    truths[p].rewards.assign(n_contexts, Vector(m));
    for (auto& row : truths[p].rewards) {
      for (double& r : row) {
        r = 2.0 * rng.uniform() - 1.0;
      }
      const std::size_t best = rng.below(m);
      double runner_up = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < m; ++a) {
        if (a != best) {
          runner_up = std::max(runner_up, row[a]);
        }
      }
      row[best] = runner_up + options.min_gap + 0.5 * rng.uniform() + 1e-9;
    }
  }
  return FiniteClassSpec(std::move(contexts), m, std::move(reference), std::move(truths),
                         Centering::kApply);
}

OracleOutcome run_oracle_checks(const FiniteClassSpec& spec, std::size_t slate_size, double eta,
                                std::size_t trials, Rng& rng) {
  OracleOutcome out;
  const StructureReport report = compute_structure(spec, slate_size);
  out.isolation = check_isolation(report);
  out.zero_loss_identification = check_zero_loss_identification(spec, slate_size);
  out.regret_disagreement_sandwich = check_regret_disagreement_sandwich(spec);
  out.slate_domination = check_slate_domination(spec, slate_size, eta, trials, rng);
  out.excess_loss_kl_max_error = check_excess_loss_is_kl(spec, slate_size, trials, rng);
  out.min_loss_gap_at_isolation = min_loss_gap_at_isolation(report);
  return out;
}

nlohmann::json to_json(const StructureReport& report) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& cls : report.selector_classes) {
    nlohmann::json ids = nlohmann::json::array();
    for (std::size_t p : cls) {
      ids.push_back(report.truth_ids[p]);
    }
    classes.push_back(std::move(ids));
  }
  return {{"slate_size", report.slate_size},
          {"truth_ids", report.truth_ids},
          {"delta_min", report.delta_min},
          {"delta_max", report.delta_max},
          {"class_separation", report.class_separation},
          {"epsilon_iso", report.epsilon_iso},
          {"selector_classes", std::move(classes)},
          {"selectors", report.selectors},
          {"disagreement_matrix", report.disagreement.to_rows()},
          {"regret_matrix", report.regret.to_rows()},
          {"loss_matrix", report.loss.to_rows()},
          {"loss_gap_matrix", report.loss_gap.to_rows()},
          {"zero_weight_contexts_excluded", report.zero_weight_contexts},
          {"selector_equality",
           "exact equality on positive-weight contexts; zero-weight contexts are ignored"}};
}

}  // namespace alignlab
