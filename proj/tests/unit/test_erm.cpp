#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "alignlab/erm.hpp"
#include "alignlab/errors.hpp"
#include "alignlab/mnl.hpp"
#include "alignlab/rng.hpp"

using namespace alignlab;

namespace {

// Central differences at h=1e-5 resolve gradients only to ~1e-11, so tiny
// gradients are scored against this floor.
constexpr double kGradientFloor = 1e-4;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Pairwise Bradley–Terry data from the instance's own W*.
Dataset bt_data(const LinearBTInstance& inst, std::size_t t, Rng& rng, bool corner_contexts) {
  const std::size_t d = inst.dimension();
  const std::size_t m = inst.num_actions();
  Dataset data;
  data.reserve(t);
  for (std::size_t s = 0; s < t; ++s) {
    Vector x(d, 0.0);
    if (corner_contexts) {
      x[rng.below(d)] = 1.0;
    } else {
      for (auto& e : x) {
        e = rng.uniform();
      }
    }
    const std::size_t a1 = rng.below(m);
    const std::size_t a2 = (a1 + 1 + rng.below(m - 1)) % m;
    const double diff = true_reward(inst, x, a1) - true_reward(inst, x, a2);
    const std::size_t y = rng.uniform() < sigmoid(diff) ? 0 : 1;
    data.push_back({std::move(x), {a1, a2}, y});
  }
  return data;
}

Dataset random_records(std::size_t d, std::size_t m, std::size_t t, std::size_t k, Rng& rng) {
  Dataset data;
  for (std::size_t s = 0; s < t; ++s) {
    PreferenceRecord r;
    r.context.resize(d);
    for (auto& e : r.context) {
      e = rng.uniform();
    }
    for (std::size_t j = 0; j < k; ++j) {
      r.slate.push_back(rng.below(m));
    }
    r.preferred = rng.below(k);
    data.push_back(std::move(r));
  }
  return data;
}

FitOptions tight() {
  FitOptions o;
  o.max_iter = 1000;
  o.ftol = 1e-15;
  return o;
}

// Gauss–Jordan inverse of a small SPD matrix.
Matrix invert(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    inv(i, i) = 1.0;
  }
  for (std::size_t c = 0; c < n; ++c) {
    const double piv = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= piv;
      inv(c, j) /= piv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) {
        continue;
      }
      const double f = a(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

// Observed Fisher information of the pairwise objective at w (per record).
Matrix fisher(const Matrix& w, const Dataset& data, const LinearBTInstance& inst) {
  const std::size_t d = inst.dimension();
  Matrix info(d * d, d * d, 0.0);
  Vector phi(d * d);
  for (const auto& r : data) {
    const auto a1 = inst.action(r.slate[0]);
    const auto a2 = inst.action(r.slate[1]);
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        phi[i * d + j] = r.context[i] * (a1[j] - a2[j]);
        z += w(i, j) * phi[i * d + j];
      }
    }
    const double p = sigmoid(z);
    for (std::size_t u = 0; u < d * d; ++u) {
      for (std::size_t v = 0; v < d * d; ++v) {
        info(u, v) += p * (1.0 - p) * phi[u] * phi[v];
      }
    }
  }
  for (double& e : info.flat()) {
    e /= static_cast<double>(data.size());
  }
  return info;
}

}  // namespace

TEST_CASE("objective of the zero matrix on one pair is log 2") {
  const LinearBTInstance inst = generate_instance(1, 3, 4);
  const Dataset data{{Vector{0.2, 0.5, 0.9}, {1, 3}, 0}};
  const ObjectiveValue v = objective_and_gradient(Matrix(3, 3, 0.0), data, inst);
  CHECK(std::abs(v.value - std::log(2.0)) < 1e-15);
}

TEST_CASE("objective equals the MNL empirical risk of the bilinear reward") {
  const LinearBTInstance inst = generate_instance(2, 4, 5);
  Rng rng(3);
  const Dataset data = random_records(4, 5, 40, 3, rng);
  const Matrix w = generate_instance(9, 4, 2).w_star();
  const RewardFn reward = [&](std::span<const double> x, std::size_t a) {
    return bilinear(x, w, inst.action(a));
  };
  CHECK(std::abs(objective_and_gradient(w, data, inst).value - empirical_risk(data, reward)) <
        1e-14);
}

TEST_CASE("objective rejects empty data and bad records") {
  const LinearBTInstance inst = generate_instance(1, 2, 3);
  CHECK_THROWS_AS(objective_and_gradient(Matrix(2, 2), Dataset{}, inst), InvalidInput);
  CHECK_THROWS_AS(objective_and_gradient(Matrix(2, 2), Dataset{{Vector{0.1, 0.1}, {0, 3}, 0}}, inst),
                  InvalidInput);
  CHECK_THROWS_AS(objective_and_gradient(Matrix(2, 2), Dataset{{Vector{0.1}, {0, 1}, 0}}, inst),
                  InvalidInput);
  CHECK_THROWS_AS(objective_and_gradient(Matrix(3, 3), Dataset{{Vector{0.1, 0.1}, {0, 1}, 0}}, inst),
                  InvalidInput);
  CHECK_THROWS_AS(fit_mle(Dataset{}, inst, RewardEstimate::zero(2)), InvalidInput);
}

TEST_CASE("bilinear gradient matches central differences") {
  Rng rng(21);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.below(5);
    const std::size_t m = 2 + rng.below(5);
    const std::size_t k = 2 + rng.below(2);
    const LinearBTInstance inst = generate_instance(rng.next(), d, m);
    const Dataset data = random_records(d, m, 1 + rng.below(20), k, rng);
    Matrix w(d, d);
    for (double& e : w.flat()) {
      e = rng.uniform();
    }
    const Matrix g = objective_and_gradient(w, data, inst).gradient;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d * d; ++i) {
      const double saved = w.flat()[i];
      w.flat()[i] = saved + h;
      const double up = objective_and_gradient(w, data, inst).value;
      w.flat()[i] = saved - h;
      const double down = objective_and_gradient(w, data, inst).value;
      w.flat()[i] = saved;
      num = std::max(num, std::abs((up - down) / (2 * h) - g.flat()[i]));
      den = std::max(den, std::abs(g.flat()[i]));
    }
    worst = std::max(worst, num / std::max(den, kGradientFloor));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("at the truth with many records the gradient is small") {
  const LinearBTInstance inst = generate_instance(44, 3, 4);
  Rng rng(45);
  const Dataset data = bt_data(inst, 10000, rng, false);
  const ObjectiveValue v = objective_and_gradient(inst.w_star(), data, inst);
  double gmax = 0.0;
  for (double e : v.gradient.flat()) {
    gmax = std::max(gmax, std::abs(e));
  }
  CHECK(gmax <= 0.05);
  // population value is the mean conditional entropy of the label
  double entropy = 0.0;
  for (const auto& r : data) {
    const double p = sigmoid(true_reward(inst, r.context, r.slate[0]) -
                             true_reward(inst, r.context, r.slate[1]));
    entropy -= p * std::log(p) + (1 - p) * std::log(1 - p);
  }
  entropy /= static_cast<double>(data.size());
  CHECK(std::abs(v.value - entropy) <= 0.02);
}

TEST_CASE("one record from zero strictly improves and stays feasible") {
  const LinearBTInstance inst = generate_instance(7, 3, 4);
  const Dataset data{{Vector{0.3, 0.6, 0.9}, {0, 2}, 1}};
  const FitResult r = fit_mle(data, inst, RewardEstimate::zero(3));
  CHECK(r.report.final_objective < std::log(2.0));
  CHECK(r.report.initial_objective == doctest::Approx(std::log(2.0)));
  for (double e : r.estimate.w_hat.flat()) {
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
}

TEST_CASE("separable data drives the estimate onto the upper bound") {
  // Action 0 always beats the zero action, so the unconstrained MLE diverges.
  const LinearBTInstance inst(Matrix(2, 2, std::vector<double>{1.0, 1.0, 0.0, 0.0}),
                              Matrix(2, 2, 0.5));
  Rng rng(5);
  Dataset data;
  for (int s = 0; s < 50; ++s) {
    data.push_back({Vector{0.2 + 0.8 * rng.uniform(), 0.2 + 0.8 * rng.uniform()}, {0, 1}, 0});
  }
  const FitResult r = fit_mle(data, inst, RewardEstimate::zero(2), tight());
  for (double e : r.estimate.w_hat.flat()) {
    CHECK(e == 1.0);
  }
}

TEST_CASE("objective history is monotone and warm starts never worsen") {
  const LinearBTInstance inst = generate_instance(8, 5, 6);
  Rng rng(9);
  const Dataset data = bt_data(inst, 120, rng, false);
  RewardEstimate warm = RewardEstimate::zero(5);
  for (std::size_t t = 1; t <= data.size(); t += 7) {
    const std::span<const PreferenceRecord> prefix(data.data(), t);
    const double start = objective_and_gradient(warm.w_hat, prefix, inst).value;
    const FitResult r = fit_mle(prefix, inst, warm);
    REQUIRE(r.report.final_objective <= start);
    REQUIRE(r.report.objective_history.front() == start);
    for (std::size_t k = 1; k < r.report.objective_history.size(); ++k) {
      REQUIRE(r.report.objective_history[k] <= r.report.objective_history[k - 1]);
    }
    for (double e : r.estimate.w_hat.flat()) {
      REQUIRE(e >= 0.0);
      REQUIRE(e <= 1.0);
    }
    REQUIRE(r.report.iterations <= 50);
    warm = r.estimate;
  }
}

TEST_CASE("fit matches a dense grid on one-parameter problems") {
  Rng rng(60);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const LinearBTInstance inst(Matrix(2, 1, std::vector<double>{rng.uniform(), rng.uniform()}),
                                Matrix(1, 1, std::vector<double>{rng.uniform()}));
    const Dataset data = random_records(1, 2, 1 + rng.below(6), 2, rng);
    double grid_best = INFINITY;
    for (int g = 0; g <= 1000; ++g) {
      const Matrix w(1, 1, std::vector<double>{g * 1e-3});
      grid_best = std::min(grid_best, objective_and_gradient(w, data, inst).value);
    }
    const FitResult r = fit_mle(data, inst, RewardEstimate::zero(1));
    worst = std::max(worst, std::abs(r.report.final_objective - grid_best));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("long-run fit recovers W* within its sampling error") {
  // d=2, m=3, t=5000. Each entry must sit within 4 standard errors taken
  // from the exact Fisher information at W*.
  const LinearBTInstance inst(Matrix(3, 2, std::vector<double>{1, 0, 0, 1, 0, 0}),
                              Matrix(2, 2, std::vector<double>{0.8, 0.3, 0.45, 0.65}));
  Rng rng(2718);
  const Dataset data = bt_data(inst, 5000, rng, true);
  const FitResult r = fit_mle(data, inst, RewardEstimate::zero(2), tight());
  const Matrix cov = invert(fisher(inst.w_star(), data, inst));
  for (std::size_t u = 0; u < 4; ++u) {
    const double se = std::sqrt(cov(u, u) / 5000.0);
    CHECK(std::abs(r.estimate.w_hat.flat()[u] - inst.w_star().flat()[u]) <= 4.0 * se);
    CHECK(se < 0.07);
  }
}

TEST_CASE("long-run fit is within 0.1 entrywise once sampling error is small") {
  const LinearBTInstance inst(Matrix(3, 2, std::vector<double>{1, 0, 0, 1, 0, 0}),
                              Matrix(2, 2, std::vector<double>{0.8, 0.3, 0.45, 0.65}));
  Rng rng(31415);
  const Dataset data = bt_data(inst, 80000, rng, false);
  const FitResult r = fit_mle(data, inst, RewardEstimate::zero(2), tight());
  CHECK(max_abs_diff(r.estimate.w_hat, inst.w_star()) <= 0.1);
}
