#include "bbdyn/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include "json.hpp"

#include "bbdyn/error.hpp"
#include "bbdyn/rng.hpp"

namespace bbdyn {
namespace {

void check_spectrum(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw Error(ErrorCode::BadSpectrum, "empty spectrum");
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (!(eigenvalues[i] > 0.0) || !std::isfinite(eigenvalues[i])) {
      throw Error(ErrorCode::BadSpectrum, "eigenvalues must be finite and strictly positive");
    }
    if (i > 0 && eigenvalues[i] < eigenvalues[i - 1]) {
      throw Error(ErrorCode::BadSpectrum, "eigenvalues must be ascending");
    }
  }
}

Vector resolve_c(std::span<const double> c, std::size_t n) {
  if (c.empty()) return Vector(n, 0.0);
  if (c.size() != n) throw Error(ErrorCode::DimensionMismatch, "linear term has wrong length");
  return Vector(c.begin(), c.end());
}

void check_dim(const SpectralProblem& p, std::size_t size) {
  if (size != p.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected length " + std::to_string(p.dim()) + ", got " + std::to_string(size));
  }
}

Matrix reconstruct(const Vector& eigenvalues, const Matrix& v) {
  const std::size_t n = eigenvalues.size();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += v(i, k) * eigenvalues[k] * v(j, k);
      a(i, j) = s;
      a(j, i) = s;
    }
  }
  return a;
}

/// Gaussian matrix orthonormalized by twice-applied modified Gram-Schmidt.
Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, streams::kBasis);
  Matrix q(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q(i, j) = rng.normal();

  for (std::size_t j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * q(i, j);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
      }
    }
    const Vector col = q.column(j);
    const double norm = norm2(col);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
  }
  return q;
}

}  // namespace

double orthogonality_error(const Matrix& basis) {
  const std::size_t n = basis.cols();
  double worst = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < basis.rows(); ++i) s += basis(i, a) * basis(i, b);
      worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}

SpectralProblem SpectralProblem::create(Vector eigenvalues, Matrix basis, Vector c) {
  check_spectrum(eigenvalues);
  const std::size_t n = eigenvalues.size();
  if (basis.rows() != n || basis.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "basis must be n x n");
  }
  if (c.size() != n) throw Error(ErrorCode::DimensionMismatch, "linear term has wrong length");
  if (orthogonality_error(basis) > 1e-10) {
    throw Error(ErrorCode::BadSpectrum, "basis is not orthogonal");
  }
  Matrix a = reconstruct(eigenvalues, basis);
  return SpectralProblem(std::move(eigenvalues), std::move(basis), std::move(c), std::move(a));
}

SpectralProblem decompose(const DenseQuadratic& problem) {
  const Matrix& a = problem.a;
  const std::size_t n = a.rows();
  if (n == 0 || a.cols() != n) throw Error(ErrorCode::DimensionMismatch, "matrix must be square");
  if (problem.c.size() != n) throw Error(ErrorCode::DimensionMismatch, "linear term has wrong length");

  const double scale = a.max_abs();
  Matrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > kSymmetryTolerance * scale) {
        throw Error(ErrorCode::NotSymmetric, "A(" + std::to_string(i) + "," + std::to_string(j) +
                                                 ") differs from its transpose");
      }
      sym(i, j) = 0.5 * (a(i, j) + a(j, i));
    }
  }

  EigenDecomposition eig = jacobi_eigen(sym);
  if (!(eig.values.front() > 0.0)) {
    throw Error(ErrorCode::NotPositiveDefinite, "smallest eigenvalue is not positive");
  }
  return SpectralProblem::create(std::move(eig.values), std::move(eig.vectors), problem.c);
}

SpectralProblem synthesize(std::span<const double> eigenvalues, std::uint64_t seed,
                           std::span<const double> c) {
  check_spectrum(eigenvalues);
  const std::size_t n = eigenvalues.size();
  return SpectralProblem::create(Vector(eigenvalues.begin(), eigenvalues.end()),
                                 random_orthogonal(n, seed), resolve_c(c, n));
}

SpectralProblem diagonal_problem(std::span<const double> eigenvalues, std::span<const double> c) {
  check_spectrum(eigenvalues);
  const std::size_t n = eigenvalues.size();
  return SpectralProblem::create(Vector(eigenvalues.begin(), eigenvalues.end()), Matrix::identity(n),
                                 resolve_c(c, n));
}

Vector random_spectrum(std::size_t n, double kappa, std::uint64_t seed) {
  if (n == 0 || !(kappa >= 1.0) || !std::isfinite(kappa)) {
    throw Error(ErrorCode::BadSpectrum, "random spectrum needs n >= 1 and finite kappa >= 1");
  }
  if (n == 1) return Vector{1.0};
  Rng rng(seed, streams::kSpectrum);
  Vector lambda(n);
  lambda.front() = 1.0;
  lambda.back() = kappa;
  for (std::size_t i = 1; i + 1 < n; ++i) lambda[i] = std::pow(kappa, rng.uniform01());
  std::sort(lambda.begin() + 1, lambda.end() - 1);
  return lambda;
}

Vector hessian_times(const SpectralProblem& p, std::span<const double> v) {
  check_dim(p, v.size());
  return p.matrix() * v;
}

Vector gradient(const SpectralProblem& p, std::span<const double> x) {
  Vector g = hessian_times(p, x);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= p.c()[i];
  return g;
}

Vector to_coefficients(const SpectralProblem& p, std::span<const double> g) {
  check_dim(p, g.size());
  return transpose_times(p.basis(), g);
}

Vector from_coefficients(const SpectralProblem& p, std::span<const double> d) {
  check_dim(p, d.size());
  return p.basis() * d;
}

double objective(const SpectralProblem& p, std::span<const double> x) {
  const Vector ax = hessian_times(p, x);
  return 0.5 * dot(x, ax) - dot(p.c(), x);
}

SpectralProblem problem_from_json(const nlohmann::json& j) {
  try {
    Vector c;
    if (j.contains("c")) c = j.at("c").get<Vector>();
    if (j.contains("matrix")) {
      const Matrix a = Matrix::from_rows(j.at("matrix").get<std::vector<Vector>>());
      if (c.empty()) c.assign(a.rows(), 0.0);
      return decompose(DenseQuadratic{a, c});
    }
    if (j.contains("eigenvalues")) {
      const Vector lambda = j.at("eigenvalues").get<Vector>();
      const bool identity = j.value("basis", std::string{}) == "identity" || !j.contains("seed");
      if (identity) return diagonal_problem(lambda, c);
      return synthesize(lambda, j.at("seed").get<std::uint64_t>(), c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("problem file: ") + e.what());
  }
  throw Error(ErrorCode::Config, "problem file needs either \"matrix\" or \"eigenvalues\"");
}

SpectralProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
  return problem_from_json(j);
}

}  // namespace bbdyn
