#include "alignlab/instance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "alignlab/errors.hpp"

namespace alignlab {

namespace {

void require_unit_box(const Matrix& m, const char* what) {
  for (double v : m.flat()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidInput(std::string(what) + " entries must lie in [0,1]");
    }
  }
}

}  // namespace

LinearBTInstance::LinearBTInstance(Matrix actions, Matrix w_star)
    : actions_(std::move(actions)),
      w_star_(std::move(w_star)),
      reference_(FinitePolicy::uniform(std::max<std::size_t>(actions_.rows(), 1))) {
  if (w_star_.rows() == 0 || w_star_.rows() != w_star_.cols()) {
    throw InvalidInput("LinearBTInstance: W* must be a nonempty square matrix");
  }
  if (actions_.rows() < 2) {
    throw InvalidInput("LinearBTInstance: need at least 2 actions");
  }
  if (actions_.cols() != w_star_.rows()) {
    throw InvalidInput("LinearBTInstance: action dimension differs from W*");
  }
  require_unit_box(actions_, "action");
  require_unit_box(w_star_, "W*");
}

LinearBTInstance generate_instance(std::uint64_t seed, std::size_t dimension,
                                   std::size_t num_actions) {
  if (dimension < 1 || num_actions < 2) {
    throw InvalidInput("generate_instance: need d >= 1 and m >= 2");
  }
  Rng rng = make_stream(seed, StreamRole::kInstance);
  Matrix actions(num_actions, dimension);
  for (double& v : actions.flat()) {
    v = rng.uniform();
  }
  Matrix w_star(dimension, dimension);
  for (double& v : w_star.flat()) {
    v = rng.uniform();
  }
  return LinearBTInstance(std::move(actions), std::move(w_star));
}

void reward_vector(const Matrix& w, const LinearBTInstance& inst,
                   std::span<const double> x, std::span<double> out) {
  const std::size_t d = inst.dimension();
  if (x.size() != d || w.rows() != d || w.cols() != d) {
    throw InvalidInput("reward_vector: dimension mismatch");
  }
  if (out.size() != inst.num_actions()) {
    throw InvalidInput("reward_vector: output length differs from the action count");
  }
  constexpr std::size_t kStack = 64;
  double stack[kStack];
  Vector heap;
  std::span<double> u;
  if (d <= kStack) {
    u = std::span<double>(stack, d);
  } else {
    heap.resize(d);
    u = heap;
  }
  row_times_matrix(x, w, u);
  for (std::size_t a = 0; a < inst.num_actions(); ++a) {
    out[a] = dot(u, inst.action(a));
  }
}

Vector reward_vector(const Matrix& w, const LinearBTInstance& inst, std::span<const double> x) {
  Vector out(inst.num_actions());
  reward_vector(w, inst, x, out);
  return out;
}

double true_reward(const LinearBTInstance& inst, std::span<const double> x, std::size_t a) {
  if (x.size() != inst.dimension()) {
    throw InvalidInput("true_reward: context dimension mismatch");
  }
  if (a >= inst.num_actions()) {
    throw InvalidInput("true_reward: action index out of range");
  }
  return bilinear(x, inst.w_star(), inst.action(a));
}

Matrix draw_contexts(Rng& rng, std::size_t count, std::size_t dimension) {
  Matrix out(count, dimension);
  for (double& v : out.flat()) {
    v = rng.uniform();
  }
  return out;
}

GapReport probe_gap(const LinearBTInstance& inst, const Matrix& probes) {
  if (probes.rows() == 0) {
    throw InvalidInput("probe_gap: empty probe bank");
  }
  if (probes.cols() != inst.dimension()) {
    throw InvalidInput("probe_gap: probe dimension mismatch");
  }
  Vector r(inst.num_actions());
  GapReport report{std::numeric_limits<double>::infinity(), 0.0, probes.rows()};
  double total = 0.0;
  for (std::size_t i = 0; i < probes.rows(); ++i) {
    reward_vector(inst.w_star(), inst, probes.row(i), r);
    double top = -std::numeric_limits<double>::infinity();
    double second = top;
    for (double v : r) {
      if (v > top) {
        second = top;
        top = v;
      } else if (v > second) {
        second = v;
      }
    }
    const double gap = top - second;
    report.min_gap = std::min(report.min_gap, gap);
    total += gap;
  }
  report.mean_gap = total / static_cast<double>(probes.rows());
  // Keeps min ≤ mean when every probe has the same gap.
  report.mean_gap = std::max(report.mean_gap, report.min_gap);
  return report;
}

InstanceSearch search_instance(std::uint64_t base_seed, std::size_t dimension,
                               std::size_t num_actions, double min_gap,
                               std::size_t probe_count, std::size_t search_limit) {
  if (!(min_gap >= 0.0)) {
    throw InvalidInput("search_instance: min_gap must be nonnegative");
  }
  if (search_limit < 1 || probe_count < 1) {
    throw InvalidInput("search_instance: search_limit and probe_count must be positive");
  }
  Rng probe_rng = make_stream(base_seed, StreamRole::kProbeBank);
  const Matrix probes = draw_contexts(probe_rng, probe_count, dimension);
  for (std::size_t i = 0; i < search_limit; ++i) {
    const std::uint64_t seed = base_seed + i;
    LinearBTInstance inst = generate_instance(seed, dimension, num_actions);
    const GapReport report = probe_gap(inst, probes);
    if (report.min_gap >= min_gap) {
      return InstanceSearch{std::move(inst), seed, i + 1, report};
    }
  }
  throw SearchExhausted("search exhausted: no instance with probe min gap >= " +
                        std::to_string(min_gap) + " within " +
                        std::to_string(search_limit) + " candidates");
}

nlohmann::json to_json(const GapReport& report) {
  return {{"min_gap", report.min_gap},
          {"mean_gap", report.mean_gap},
          {"probe_count", report.probe_count}};
}

nlohmann::json to_json(const InstanceSearch& search) {
  return {{"dimension", search.instance.dimension()},
          {"num_actions", search.instance.num_actions()},
          {"actions", search.instance.actions().to_rows()},
          {"w_star", search.instance.w_star().to_rows()},
          {"accepted_seed", search.accepted_seed},
          {"candidate_number", search.candidate_number},
          {"gap_report", to_json(search.report)}};
}

}  // namespace alignlab
