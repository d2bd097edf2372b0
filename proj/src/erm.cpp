#include "alignlab/erm.hpp"

#include <algorithm>
#include <cmath>

#include "alignlab/errors.hpp"

namespace alignlab {

namespace {

void validate_records(std::span<const PreferenceRecord> data, const LinearBTInstance& inst) {
  if (data.empty()) {
    throw InvalidInput("objective_and_gradient: empty dataset");
  }
  const std::size_t slate_size = data.front().slate.size();
  for (const auto& rec : data) {
    if (rec.context.size() != inst.dimension()) {
      throw InvalidInput("objective_and_gradient: context dimension mismatch");
    }
    if (rec.slate.size() != slate_size || slate_size < 2) {
      throw InvalidInput("objective_and_gradient: records need one common slate size >= 2");
    }
    if (rec.preferred >= slate_size) {
      throw InvalidInput("objective_and_gradient: preferred index out of range");
    }
    for (std::size_t a : rec.slate) {
      if (a >= inst.num_actions()) {
        throw InvalidInput("objective_and_gradient: slate action out of range");
      }
    }
  }
}

// Shared kernel: value and flat gradient for w given as a flat row-major span.
double evaluate(std::span<const double> w, std::span<double> grad,
                std::span<const PreferenceRecord> data, const LinearBTInstance& inst) {
  const std::size_t d = inst.dimension();
  const std::size_t slate_size = data.front().slate.size();
  Vector u(d);
  Vector v(slate_size);
  Vector c(d);
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (const auto& rec : data) {
    const auto& x = rec.context;
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        u[j] += x[i] * w[i * d + j];
      }
    }
    double hi = -INFINITY;
    for (std::size_t k = 0; k < slate_size; ++k) {
      v[k] = dot(u, inst.action(rec.slate[k]));
      hi = std::max(hi, v[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < slate_size; ++k) {
      z += std::exp(v[k] - hi);
    }
    total += hi + std::log(z) - v[rec.preferred];
    // c = Σ_k (p_k − 1{k=y}) a_k, then grad += x cᵀ
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t k = 0; k < slate_size; ++k) {
      const double weight = std::exp(v[k] - hi) / z - (k == rec.preferred ? 1.0 : 0.0);
      const auto a = inst.action(rec.slate[k]);
      for (std::size_t j = 0; j < d; ++j) {
        c[j] += weight * a[j];
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        grad[i * d + j] += x[i] * c[j];
      }
    }
  }
  const double inv_t = 1.0 / static_cast<double>(data.size());
  for (double& gi : grad) {
    gi *= inv_t;
  }
  return total * inv_t;
}

}  // namespace

ObjectiveValue objective_and_gradient(const Matrix& w, std::span<const PreferenceRecord> data,
                                      const LinearBTInstance& inst) {
  validate_records(data, inst);
  if (w.rows() != inst.dimension() || w.cols() != inst.dimension()) {
    throw InvalidInput("objective_and_gradient: w has the wrong shape");
  }
  ObjectiveValue out{0.0, Matrix(w.rows(), w.cols())};
  out.value = evaluate(w.flat(), out.gradient.flat(), data, inst);
  return out;
}

FitResult fit_mle(std::span<const PreferenceRecord> data, const LinearBTInstance& inst,
                  const RewardEstimate& init, const FitOptions& options) {
  validate_records(data, inst);
  const std::size_t d = inst.dimension();
  if (init.w_hat.rows() != d || init.w_hat.cols() != d) {
    throw InvalidInput("fit_mle: initial estimate has the wrong shape");
  }
  if (options.max_iter < 1 || !(options.ftol > 0.0)) {
    throw InvalidInput("fit_mle: need max_iter >= 1 and ftol > 0");
  }
  BoxLbfgsOptions solver;
  solver.max_iter = options.max_iter;
  solver.ftol = options.ftol;
  solver.pgtol = options.pgtol;
  solver.history = options.history;

  const auto objective = [&](std::span<const double> w, std::span<double> grad) {
    return evaluate(w, grad, data, inst);
  };
  const auto flat = init.w_hat.flat();
  BoxLbfgsResult res = minimize_box(objective, Vector(flat.begin(), flat.end()), 0.0, 1.0, solver);

  FitResult out{RewardEstimate{Matrix(d, d, std::move(res.x))}, FitReport{}};
  out.report.initial_objective = res.value_history.front();
  out.report.final_objective = res.value;
  out.report.iterations = res.iterations;
  out.report.evaluations = res.evaluations;
  out.report.converged = res.converged;
  out.report.stop_reason = res.reason;
  out.report.projected_gradient_inf_norm = res.projected_gradient_inf_norm;
  out.report.objective_history = std::move(res.value_history);
  return out;
}

}  // namespace alignlab
