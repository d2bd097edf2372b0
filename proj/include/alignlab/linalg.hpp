#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace alignlab {

using Vector = std::vector<double>;

// Dense row-major matrix. Sized for the d <= ~10 problems in this lab, so
// no expression templates and a fixed, documented summation order.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  std::vector<Vector> to_rows() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;

// out = xᵀ W  (length W.cols()); x.size() must equal W.rows().
void row_times_matrix(std::span<const double> x, const Matrix& w,
                      std::span<double> out) noexcept;

// xᵀ W a
double bilinear(std::span<const double> x, const Matrix& w,
                std::span<const double> a) noexcept;

double max_abs_diff(const Matrix& a, const Matrix& b) noexcept;

}  // namespace alignlab
