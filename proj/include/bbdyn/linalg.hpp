#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bbdyn {

using Vector = std::vector<double>;

/// Small dense row-major matrix. Sized for desk-scale problems (n <= 64).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Vector column(std::size_t j) const;
  Matrix transposed() const;

  /// Largest absolute entry.
  double max_abs() const;
  double frobenius_norm() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);

Vector operator*(const Matrix& m, std::span<const double> v);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);

/// mᵀ·v without forming the transpose.
Vector transpose_times(const Matrix& m, std::span<const double> v);

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // column j pairs with values[j]
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Rotations stop once the
/// off-diagonal Frobenius mass drops below `rel_tol`·‖A‖_F or after
/// `max_sweeps` sweeps. Eigenpairs come back sorted ascending, each
/// eigenvector flipped so its first entry that is nonzero (beyond roundoff)
/// is positive.
EigenDecomposition jacobi_eigen(const Matrix& a, double rel_tol = 1e-14, int max_sweeps = 100);

}  // namespace bbdyn
