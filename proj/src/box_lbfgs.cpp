#include "alignlab/box_lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "alignlab/errors.hpp"

namespace alignlab {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kFtol:
      return "ftol";
    case StopReason::kPgtol:
      return "pgtol";
    case StopReason::kMaxIter:
      return "max_iter";
    case StopReason::kLineSearch:
      return "line_search";
  }
  return "unknown";
}

double projected_gradient_norm(std::span<const double> x, std::span<const double> g,
                               double lower, double upper) noexcept {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double moved = std::clamp(x[i] - g[i], lower, upper);
    worst = std::max(worst, std::abs(moved - x[i]));
  }
  return worst;
}

namespace {

struct CurvaturePair {
  Vector s;
  Vector y;
  double rho;
};

class Evaluator {
 public:
  explicit Evaluator(const BoxObjective& f) : f_(f) {}

  double operator()(std::span<const double> x, std::span<double> grad) {
    ++count_;
    const double value = f_(x, grad);
    if (!std::isfinite(value)) {
      throw NumericalFailure("box-constrained solver: non-finite objective");
    }
    for (double gi : grad) {
      if (!std::isfinite(gi)) {
        throw NumericalFailure("box-constrained solver: non-finite gradient");
      }
    }
    return value;
  }

  int count() const noexcept { return count_; }

 private:
  const BoxObjective& f_;
  int count_ = 0;
};

// −H·g over the free coordinates, H the L-BFGS inverse-Hessian estimate.
Vector two_loop_direction(const std::deque<CurvaturePair>& memory, std::span<const double> g,
                          const std::vector<bool>& free) {
  const std::size_t n = g.size();
  Vector q(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = free[i] ? g[i] : 0.0;
  }
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    const auto& pair = memory[k];
    alpha[k] = pair.rho * dot(pair.s, q);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] -= alpha[k] * pair.y[i];
    }
  }
  const auto& newest = memory.back();
  const double gamma = dot(newest.s, newest.y) / dot(newest.y, newest.y);
  for (double& qi : q) {
    qi *= gamma;
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const auto& pair = memory[k];
    const double beta = pair.rho * dot(pair.y, q);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] += (alpha[k] - beta) * pair.s[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = free[i] ? -q[i] : 0.0;
  }
  return q;
}

}  // namespace

BoxLbfgsResult minimize_box(const BoxObjective& f, Vector x0, double lower, double upper,
                            const BoxLbfgsOptions& options) {
  if (!(lower <= upper)) {
    throw InvalidInput("minimize_box: empty box");
  }
  if (options.max_iter < 1 || !(options.ftol > 0.0)) {
    throw InvalidInput("minimize_box: need max_iter >= 1 and ftol > 0");
  }
  const std::size_t n = x0.size();
  Evaluator eval(f);
  BoxLbfgsResult res;
  res.x = std::move(x0);
  for (double& xi : res.x) {
    xi = std::clamp(xi, lower, upper);
  }
  Vector g(n);
  res.value = eval(res.x, g);
  res.value_history.push_back(res.value);

  std::deque<CurvaturePair> memory;
  std::vector<bool> free(n);
  Vector trial(n);
  Vector trial_grad(n);

  while (true) {
    res.projected_gradient_inf_norm = projected_gradient_norm(res.x, g, lower, upper);
    if (res.projected_gradient_inf_norm <= options.pgtol) {
      res.converged = true;
      res.reason = StopReason::kPgtol;
      break;
    }
    if (res.iterations >= options.max_iter) {
      res.reason = StopReason::kMaxIter;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      free[i] = !((res.x[i] <= lower && g[i] > 0.0) || (res.x[i] >= upper && g[i] < 0.0));
    }

    bool accepted = false;
    double trial_value = 0.0;
    // Attempt 0 uses the quasi-Newton direction when memory exists;
    // attempt 1 is projected steepest descent.
    for (int attempt = memory.empty() ? 1 : 0; attempt < 2 && !accepted; ++attempt) {
      Vector dir;
      if (attempt == 0) {
        dir = two_loop_direction(memory, g, free);
        if (!(dot(dir, g) < 0.0)) {
          continue;
        }
      } else {
        memory.clear();
        dir.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          dir[i] = free[i] ? -g[i] : 0.0;
        }
      }
      double step = 1.0;
      if (attempt == 1) {
        // First trial moves the steepest coordinate across the whole box, so
        // flat starts are not mistaken for convergence by the ftol test.
        double norm = 0.0;
        for (double v : dir) {
          norm = std::max(norm, std::abs(v));
        }
        const double width = std::isfinite(upper - lower) ? upper - lower : 1.0;
        step = width / norm;
      }
      for (int bt = 0; bt < options.max_backtracks; ++bt, step *= 0.5) {
        double decrease = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          trial[i] = std::clamp(res.x[i] + step * dir[i], lower, upper);
          decrease += g[i] * (trial[i] - res.x[i]);
        }
        if (!(decrease < 0.0)) {
          continue;
        }
        trial_value = eval(trial, trial_grad);
        if (trial_value <= res.value + options.armijo_c1 * decrease) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      res.reason = StopReason::kLineSearch;
      break;
    }

    CurvaturePair pair{Vector(n), Vector(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = trial[i] - res.x[i];
      pair.y[i] = trial_grad[i] - g[i];
    }
    const double sy = dot(pair.s, pair.y);
    const double yy = dot(pair.y, pair.y);
    if (sy > 1e-12 * yy && sy > 0.0) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > static_cast<std::size_t>(std::max(options.history, 1))) {
        memory.pop_front();
      }
    }

    const double previous = res.value;
    res.x.swap(trial);
    g.swap(trial_grad);
    res.value = trial_value;
    res.value_history.push_back(res.value);
    ++res.iterations;

    const double scale = std::max({std::abs(previous), std::abs(res.value), 1.0});
    if ((previous - res.value) / scale <= options.ftol) {
      res.converged = true;
      res.reason = StopReason::kFtol;
      res.projected_gradient_inf_norm = projected_gradient_norm(res.x, g, lower, upper);
      break;
    }
  }
  res.evaluations = eval.count();
  return res;
}

}  // namespace alignlab
