#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "alignlab/errors.hpp"
#include "alignlab/loop.hpp"
#include "alignlab/mnl.hpp"
#include "alignlab/regret.hpp"

using namespace alignlab;

namespace {

LoopOptions options(double eta, SlateProtocol protocol = SlateProtocol::kMixedReference) {
  LoopOptions o;
  o.eta = eta;
  o.protocol = protocol;
  return o;
}

double mnl_risk(const Matrix& w, std::span<const PreferenceRecord> data,
                const LinearBTInstance& inst) {
  return empirical_risk(data, [&](std::span<const double> x, std::size_t a) {
    return bilinear(x, w, inst.action(a));
  });
}

}  // namespace

TEST_CASE("protocol names round-trip") {
  for (auto p : {SlateProtocol::kMixedReference, SlateProtocol::kIidOnPolicy}) {
    CHECK(parse_slate_protocol(to_string(p)) == p);
  }
  CHECK(to_string(SlateProtocol::kMixedReference) == "mixed-reference");
  CHECK_THROWS_AS(parse_slate_protocol("iid"), InvalidInput);
}

TEST_CASE("first round draws from the uniform reference in a fixed order") {
  const LinearBTInstance inst = generate_instance(3, 4, 6);
  TrajectoryState state = TrajectoryState::initial(4);
  Rng rng(10);
  Rng replay(10);
  step(state, inst, options(2.0), rng);

  Vector x(4);
  for (double& v : x) {
    v = replay.uniform();
  }
  const std::size_t first = sample_action(inst.reference(), replay);
  const std::size_t second = sample_action(inst.reference(), replay);
  const double u = replay.uniform();

  REQUIRE(state.dataset.size() == 1);
  const PreferenceRecord& rec = state.dataset[0];
  CHECK(rec.context == x);
  CHECK(rec.slate[0] == first);
  CHECK(rec.slate[1] == second);
  const double diff = true_reward(inst, x, first) - true_reward(inst, x, second);
  CHECK(rec.preferred == (u < 1.0 / (1.0 + std::exp(-diff)) ? 0u : 1u));
  CHECK(state.round == 1);
  CHECK(state.audit.checks == 1);
  CHECK(state.audit.violations == 0);
}

TEST_CASE("identical actions give a fair coin") {
  // Two copies of one action: the label must be Bernoulli(1/2).
  const LinearBTInstance inst(Matrix(2, 2, std::vector<double>{0.7, 0.4, 0.7, 0.4}),
                              Matrix(2, 2, 0.9));
  Rng rng(77);
  const TrajectoryResult r = run_trajectory(inst, options(1.0), 2000, rng);
  std::size_t first_wins = 0;
  for (const auto& rec : r.dataset) {
    first_wins += rec.preferred == 0;
  }
  const double sigma = std::sqrt(2000 * 0.25);
  CHECK(std::abs(static_cast<double>(first_wins) - 1000.0) <= 4.0 * sigma);
}

TEST_CASE("trajectory shape, growth and replay determinism") {
  const LinearBTInstance inst = generate_instance(11, 3, 4);
  Rng one(5);
  const TrajectoryResult t1 = run_trajectory(inst, options(1.0), 1, one);
  CHECK(t1.estimates.size() == 2);
  CHECK(t1.estimates[0] == Matrix(3, 3, 0.0));

  Rng a(42), b(42);
  const TrajectoryResult ra = run_trajectory(inst, options(3.0), 40, a);
  const TrajectoryResult rb = run_trajectory(inst, options(3.0), 40, b);
  CHECK(ra.estimates == rb.estimates);
  CHECK(ra.dataset.size() == 40);
  CHECK(ra.fits.fits == 40);
  for (std::size_t t = 1; t < ra.estimates.size(); ++t) {
    const auto& w = ra.estimates[t];
    for (double e : w.flat()) {
      REQUIRE(e >= 0.0);
      REQUIRE(e <= 1.0);
    }
  }
  CHECK_THROWS_AS(run_trajectory(inst, options(1.0), 0, a), InvalidInput);
  TrajectoryState s = TrajectoryState::initial(3);
  CHECK_THROWS_AS(step(s, inst, options(0.0), a), InvalidInput);
}

TEST_CASE("every round of a trajectory passes the ratio audit") {
  const LinearBTInstance inst = generate_instance(12, 5, 6);
  for (double eta : {1.0, 2.0, 3.0}) {
    Rng rng(9);
    const TrajectoryResult r = run_trajectory(inst, options(eta), 60, rng);
    CHECK(r.audit.checks == 60);
    CHECK(r.audit.violations == 0);
    CHECK(r.audit.worst_log_margin <= 1e-12);
  }
}

TEST_CASE("iid protocol draws both entries from the deployed tilt") {
  const LinearBTInstance inst = generate_instance(13, 2, 3);
  TrajectoryState state = TrajectoryState::initial(2);
  state.estimate.w_hat = Matrix(2, 2, 1.0);
  Rng rng(1), replay(1);
  step(state, inst, options(2.5, SlateProtocol::kIidOnPolicy), rng);
  Vector x{replay.uniform(), replay.uniform()};
  const FinitePolicy pi =
      kl_tilt(inst.reference(), reward_vector(Matrix(2, 2, 1.0), inst, x), 2.5);
  const std::size_t first = sample_action(pi, replay);
  const std::size_t second = sample_action(pi, replay);
  CHECK(state.dataset[0].slate[0] == first);
  CHECK(state.dataset[0].slate[1] == second);
}

TEST_CASE("DPO loss equals the MNL risk and does not depend on eta") {
  const LinearBTInstance inst = generate_instance(20, 5, 6);
  Rng rng(21);
  const TrajectoryResult r = run_trajectory(inst, options(2.0), 50, rng);
  for (std::size_t t = 1; t <= 50; t += 7) {
    const auto prefix = std::span<const PreferenceRecord>(r.dataset).first(t);
    const Matrix& w = r.estimates[t];
    const double mnl = mnl_risk(w, prefix, inst);
    for (double eta : {1.0, 2.0, 3.0}) {
      CHECK(std::abs(dpo_empirical_loss(w, prefix, inst, eta) - mnl) <= 1e-12);
    }
  }
  const Dataset one{{Vector(5, 0.5), {1, 4}, 0}};
  CHECK(std::abs(dpo_empirical_loss(Matrix(5, 5, 0.0), one, inst, 1.7) - std::log(2.0)) < 1e-15);
}

TEST_CASE("DPO loss input errors") {
  const LinearBTInstance inst = generate_instance(20, 2, 3);
  CHECK_THROWS_AS(dpo_empirical_loss(Matrix(2, 2), Dataset{}, inst, 1.0), InvalidInput);
  const Dataset k3{{Vector{0.1, 0.2}, {0, 1, 2}, 0}};
  CHECK_THROWS_AS(dpo_empirical_loss(Matrix(2, 2), k3, inst, 1.0), InvalidInput);
  const Dataset ok{{Vector{0.1, 0.2}, {0, 1}, 0}};
  CHECK_THROWS_AS(dpo_empirical_loss(Matrix(2, 2), ok, inst, 0.0), InvalidInput);
}

TEST_CASE("verify_dpo_equivalence over a trajectory") {
  const LinearBTInstance inst = generate_instance(30, 5, 6);
  Rng rng(31);
  const TrajectoryResult r = run_trajectory(inst, options(1.0), 30, rng);
  Rng check(32);
  const DpoEquivalence eq =
      verify_dpo_equivalence(r.estimates, inst, 1.0, r.dataset, 4096, check);
  CHECK(eq.max_abs_loss_diff <= 1e-12);
  CHECK(eq.min_selector_agreement == 1.0);
  CHECK(eq.rounds_checked == 31);

  Rng empty_rng(1);
  const DpoEquivalence none = verify_dpo_equivalence({}, inst, 1.0, {}, 16, empty_rng);
  CHECK(none.max_abs_loss_diff == 0.0);
  CHECK(none.rounds_checked == 0);
}

TEST_CASE("DPO selector equals the temperature-zero action") {
  const LinearBTInstance inst = generate_instance(40, 4, 6);
  Rng rng(41);
  for (int i = 0; i < 500; ++i) {
    Matrix w(4, 4);
    for (double& e : w.flat()) {
      e = rng.uniform();
    }
    const Matrix xs = draw_contexts(rng, 8, 4);
    for (std::size_t k = 0; k < xs.rows(); ++k) {
      REQUIRE(dpo_selector(w, xs.row(k), inst, 2.0) == temp_zero_action(w, xs.row(k), inst));
    }
  }
  CHECK(dpo_selector(Matrix(4, 4, 0.0), Vector(4, 0.3), inst, 1.0) == 0);
}
