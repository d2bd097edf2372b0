#include "alignlab/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "alignlab/errors.hpp"

namespace alignlab {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidInput("matrix data size does not match its shape");
  }
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw InvalidInput("ragged rows in matrix literal");
    }
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

std::vector<Vector> Matrix::to_rows() const {
  std::vector<Vector> out;
  out.reserve(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto r = row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

void row_times_matrix(std::span<const double> x, const Matrix& w,
                      std::span<double> out) noexcept {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    const auto wr = w.row(i);
    for (std::size_t j = 0; j < w.cols(); ++j) {
      out[j] += xi * wr[j];
    }
  }
}

double bilinear(std::span<const double> x, const Matrix& w,
                std::span<const double> a) noexcept {
  // Same summation order as row_times_matrix followed by dot, so rewards
  // agree bit-for-bit whichever path computed them.
  double acc = 0.0;
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double uj = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) {
      uj += x[i] * w(i, j);
    }
    acc += uj * a[j];
  }
  return acc;
}

double max_abs_diff(const Matrix& a, const Matrix& b) noexcept {
  double worst = 0.0;
  const auto fa = a.flat();
  const auto fb = b.flat();
  for (std::size_t i = 0; i < fa.size(); ++i) {
    worst = std::max(worst, std::abs(fa[i] - fb[i]));
  }
  return worst;
}

}  // namespace alignlab
