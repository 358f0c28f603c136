#pragma once

#include <cstdint>
#include <filesystem>
#include "json.hpp"
#include <optional>
#include <span>

#include "bbdyn/linalg.hpp"

namespace bbdyn {

/// f(x) = ½xᵀAx − cᵀx with A symmetric positive definite, in matrix form.
struct DenseQuadratic {
  Matrix a;
  Vector c;
};

/// The same quadratic expressed in the eigenbasis of A.
///
/// Immutable after construction. Eigenvalues are ascending and strictly
/// positive; the basis is orthogonal to within 1e-10 (max-abs of VᵀV − I).
/// The dense matrix V·diag(λ)·Vᵀ is reconstructed once and reused for every
/// matrix-vector product.
class SpectralProblem {
 public:
  /// Validates and builds. Throws BadSpectrum on unordered or nonpositive
  /// eigenvalues or a non-orthogonal basis, DimensionMismatch on shape errors.
  static SpectralProblem create(Vector eigenvalues, Matrix basis, Vector c);

  std::size_t dim() const noexcept { return eigenvalues_.size(); }
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  const Matrix& basis() const noexcept { return basis_; }
  const Vector& c() const noexcept { return c_; }
  const Matrix& matrix() const noexcept { return matrix_; }

  double lambda_min() const { return eigenvalues_.front(); }
  double lambda_max() const { return eigenvalues_.back(); }
  double condition_number() const { return lambda_max() / lambda_min(); }
  /// True when every eigenvalue is equal (κ = 1, including n = 1).
  bool single_eigenvalue() const { return lambda_min() == lambda_max(); }

 private:
  SpectralProblem(Vector eigenvalues, Matrix basis, Vector c, Matrix matrix)
      : eigenvalues_(std::move(eigenvalues)),
        basis_(std::move(basis)),
        c_(std::move(c)),
        matrix_(std::move(matrix)) {}

  Vector eigenvalues_;
  Matrix basis_;
  Vector c_;
  Matrix matrix_;
};

/// Relative asymmetry accepted by decompose().
inline constexpr double kSymmetryTolerance = 1e-12;

SpectralProblem decompose(const DenseQuadratic& problem);

/// Random orthogonal basis drawn deterministically from `seed`. An empty `c`
/// means c = 0.
SpectralProblem synthesize(std::span<const double> eigenvalues, std::uint64_t seed,
                           std::span<const double> c = {});

/// Problem whose eigenbasis is the standard basis, i.e. A = diag(λ).
SpectralProblem diagonal_problem(std::span<const double> eigenvalues,
                                 std::span<const double> c = {});

/// Spectrum with λ_1 = 1, λ_n = κ and interior eigenvalues κ^u, u uniform on
/// [0, 1), drawn from `seed` and sorted. Throws BadSpectrum for κ < 1 or n = 0.
Vector random_spectrum(std::size_t n, double kappa, std::uint64_t seed);

/// A·v.
Vector hessian_times(const SpectralProblem& p, std::span<const double> v);
/// A·x − c.
Vector gradient(const SpectralProblem& p, std::span<const double> x);
/// Vᵀg.
Vector to_coefficients(const SpectralProblem& p, std::span<const double> g);
/// V·d.
Vector from_coefficients(const SpectralProblem& p, std::span<const double> d);
/// ½xᵀAx − cᵀx.
double objective(const SpectralProblem& p, std::span<const double> x);

/// Max-abs entry of VᵀV − I.
double orthogonality_error(const Matrix& basis);

/// Parses {"matrix": [[...]], "c": [...]} or
/// {"eigenvalues": [...], "seed": int, "c": [...]}. With eigenvalues and no
/// seed (or "basis": "identity") the problem is diagonal. Throws
/// ErrorCode::Config on schema errors.
SpectralProblem problem_from_json(const nlohmann::json& j);
SpectralProblem load_problem(const std::filesystem::path& path);

}  // namespace bbdyn
