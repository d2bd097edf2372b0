#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "alignlab/errors.hpp"
#include "alignlab/instance.hpp"
#include "alignlab/rng.hpp"

using namespace alignlab;

TEST_CASE("generate_instance is deterministic and shaped") {
  CHECK(generate_instance(3546, 5, 6) == generate_instance(3546, 5, 6));
  CHECK_FALSE(generate_instance(3546, 5, 6) == generate_instance(3547, 5, 6));
  const LinearBTInstance tiny = generate_instance(1, 1, 2);
  CHECK(tiny.num_actions() == 2);
  CHECK(tiny.dimension() == 1);
  CHECK(tiny.actions().cols() == 1);
  CHECK(tiny.w_star().rows() == 1);
  CHECK(tiny.w_star().cols() == 1);
  for (double v : tiny.actions().flat()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(tiny.reference()[0] == 0.5);
}

TEST_CASE("generate_instance draws actions first, then W*, row-major") {
  Rng rng = make_stream(17, StreamRole::kInstance);
  const LinearBTInstance inst = generate_instance(17, 2, 3);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t j = 0; j < 2; ++j) {
      REQUIRE(inst.actions()(a, j) == rng.uniform());
    }
  }
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      REQUIRE(inst.w_star()(i, j) == rng.uniform());
    }
  }
}

TEST_CASE("entrywise means over 10^4 instances are near one half") {
  const std::size_t n = 10000;
  Vector sums(2 * 2 + 2 * 2, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const LinearBTInstance inst = generate_instance(s, 2, 2);
    std::size_t k = 0;
    for (double v : inst.actions().flat()) {
      sums[k++] += v;
    }
    for (double v : inst.w_star().flat()) {
      sums[k++] += v;
    }
  }
  for (double s : sums) {
    CHECK(std::abs(s / n - 0.5) <= 0.02);
  }
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(LinearBTInstance(Matrix(1, 1, 0.5), Matrix(1, 1, 0.5)), InvalidInput);
  CHECK_THROWS_AS(LinearBTInstance(Matrix(2, 1, 1.5), Matrix(1, 1, 0.5)), InvalidInput);
  CHECK_THROWS_AS(LinearBTInstance(Matrix(2, 1, 0.5), Matrix(1, 1, -0.1)), InvalidInput);
  CHECK_THROWS_AS(LinearBTInstance(Matrix(2, 2, 0.5), Matrix(1, 1, 0.5)), InvalidInput);
}

TEST_CASE("true_reward examples") {
  const LinearBTInstance scalar(Matrix(2, 1, std::vector<double>{1.0, 0.2}),
                                Matrix(1, 1, std::vector<double>{0.5}));
  CHECK(std::abs(true_reward(scalar, Vector{0.8}, 0) - 0.4) < 1e-15);
  CHECK(true_reward(scalar, Vector{0.0}, 1) == 0.0);
  CHECK_THROWS_AS(true_reward(scalar, Vector{0.1, 0.2}, 0), InvalidInput);
  CHECK_THROWS_AS(true_reward(scalar, Vector{0.1}, 2), InvalidInput);

  const LinearBTInstance inst = generate_instance(5, 4, 6);
  CHECK(true_reward(inst, Vector(4, 0.0), 3) == 0.0);
  Rng rng(2);
  const Matrix xs = draw_contexts(rng, 2000, 4);
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    for (std::size_t a = 0; a < 6; ++a) {
      const double r = true_reward(inst, xs.row(i), a);
      REQUIRE(r >= 0.0);
      // each of the d*d terms x_i W_ij a_j lies in [0,1]
      REQUIRE(r <= 16.0);
    }
  }
  const LinearBTInstance ones(Matrix(2, 3, 1.0), Matrix(3, 3, 1.0));
  CHECK(true_reward(ones, Vector(3, 1.0), 0) == 9.0);
}

TEST_CASE("reward_vector agrees with true_reward exactly") {
  const LinearBTInstance inst = generate_instance(9, 5, 6);
  Rng rng(4);
  const Matrix xs = draw_contexts(rng, 200, 5);
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    const Vector r = reward_vector(inst.w_star(), inst, xs.row(i));
    for (std::size_t a = 0; a < 6; ++a) {
      REQUIRE(r[a] == true_reward(inst, xs.row(i), a));
    }
  }
}

TEST_CASE("probe_gap examples") {
  const LinearBTInstance inst(Matrix(2, 1, std::vector<double>{0.0, 1.0}),
                              Matrix(1, 1, std::vector<double>{1.0}));
  const GapReport r = probe_gap(inst, Matrix(2, 1, std::vector<double>{0.3, 0.7}));
  CHECK(std::abs(r.min_gap - 0.3) < 1e-15);
  CHECK(std::abs(r.mean_gap - 0.5) < 1e-15);
  CHECK(r.probe_count == 2);

  const LinearBTInstance dup(Matrix(3, 2, std::vector<double>{0.2, 0.9, 0.2, 0.9, 0.1, 0.1}),
                             Matrix(2, 2, 0.7));
  Rng rng(6);
  const GapReport d = probe_gap(dup, draw_contexts(rng, 100, 2));
  CHECK(d.min_gap == 0.0);
  CHECK(d.mean_gap == 0.0);

  CHECK_THROWS_AS(probe_gap(inst, Matrix(0, 1)), InvalidInput);
  CHECK_THROWS_AS(probe_gap(inst, Matrix(2, 3)), InvalidInput);
}

TEST_CASE("probe_gap is permutation invariant and min <= mean") {
  const LinearBTInstance inst = generate_instance(12, 5, 6);
  Rng rng(13);
  Matrix probes = draw_contexts(rng, 500, 5);
  const GapReport a = probe_gap(inst, probes);
  CHECK(a.min_gap <= a.mean_gap);
  auto rows = probes.to_rows();
  std::reverse(rows.begin(), rows.end());
  std::swap(rows[3], rows[400]);
  const GapReport b = probe_gap(inst, Matrix::from_rows(rows));
  CHECK(a.min_gap == b.min_gap);
  CHECK(std::abs(a.mean_gap - b.mean_gap) < 1e-12);
}

TEST_CASE("search_instance accepts the first candidate at zero threshold") {
  const InstanceSearch s = search_instance(3500, 5, 6, 0.0, 1000, 10);
  CHECK(s.accepted_seed == 3500);
  CHECK(s.candidate_number == 1);
  CHECK(s.instance == generate_instance(3500, 5, 6));
}

TEST_CASE("search_instance returns the lowest qualifying seed") {
  const std::size_t probes = 2000;
  const InstanceSearch s = search_instance(100, 3, 4, 0.1, probes, 1000);
  CHECK(s.accepted_seed == 100 + s.candidate_number - 1);
  Rng bank_rng = make_stream(100, StreamRole::kProbeBank);
  const Matrix bank = draw_contexts(bank_rng, probes, 3);
  const GapReport recheck = probe_gap(s.instance, bank);
  CHECK(recheck.min_gap == s.report.min_gap);
  CHECK(recheck.min_gap >= 0.1);
  for (std::uint64_t seed = 100; seed < s.accepted_seed; ++seed) {
    CHECK(probe_gap(generate_instance(seed, 3, 4), bank).min_gap < 0.1);
  }
  const InstanceSearch again = search_instance(100, 3, 4, 0.1, probes, 1000);
  CHECK(again.instance == s.instance);
}

TEST_CASE("search_instance exhausts above the reward range") {
  // Rewards lie in [0, d*d], so no gap can exceed d*d.
  CHECK_THROWS_AS(search_instance(3500, 2, 3, 4.01, 100, 20), SearchExhausted);
  CHECK_THROWS_AS(search_instance(3500, 2, 3, -0.1, 100, 20), InvalidInput);
  CHECK_THROWS_AS(search_instance(3500, 2, 3, 0.1, 100, 0), InvalidInput);
  try {
    search_instance(3500, 5, 6, 0.9, 2000, 10);
    FAIL("expected exhaustion");
  } catch (const SearchExhausted& e) {
    CHECK(std::string(e.what()).find("search exhausted") != std::string::npos);
  }
}

TEST_CASE("instance JSON carries the full-precision instance") {
  const InstanceSearch s = search_instance(3500, 2, 3, 0.0, 50, 5);
  const nlohmann::json j = to_json(s);
  CHECK(j.at("dimension") == 2);
  CHECK(j.at("num_actions") == 3);
  CHECK(j.at("accepted_seed") == 3500);
  CHECK(j.at("actions").size() == 3);
  CHECK(j.at("w_star").size() == 2);
  CHECK(j.at("gap_report").at("probe_count") == 50);
  const nlohmann::json round = nlohmann::json::parse(j.dump());
  CHECK(round.at("w_star")[1][0].get<double>() == s.instance.w_star()(1, 0));
}
