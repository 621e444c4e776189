#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "affdim/symbolic.hpp"

namespace affdim {

/// Small dense square matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t dim) : dim_(dim), a_(dim * dim, 0.0) {}
  Matrix(std::size_t dim, std::vector<double> row_major);

  static Matrix identity(std::size_t dim);
  static Matrix diagonal(std::span<const double> entries);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t dim() const noexcept { return dim_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * dim_ + j]; }
  std::span<const double> data() const noexcept { return a_; }

  Matrix transpose() const;
  double max_abs() const noexcept;
  bool is_diagonal() const noexcept;
  std::vector<double> apply(std::span<const double> x) const;
  Matrix& operator*=(double s) noexcept;

  friend Matrix operator*(const Matrix& lhs, const Matrix& rhs);
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> a_;
};

/// log|det A| by Gaussian elimination with partial pivoting; -inf if singular.
double log_abs_det(const Matrix& a);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, nonincreasing.
std::vector<double> symmetric_eigenvalues(const Matrix& sym);

/// A matrix stored as base * exp(log_scale) with max|base| == 1, so that long
/// products neither underflow nor overflow. log|det| is carried separately
/// because it is exact as a sum over factors while det(base) of a badly
/// conditioned product is not.
struct ScaledMatrix {
  Matrix base;
  double log_scale = 0.0;
  double log_abs_det = 0.0;

  /// Throws SingularMatrix when |det| relative to scale is below 1e-12.
  static ScaledMatrix from(const Matrix& m);
  Matrix value() const;
  std::size_t dim() const noexcept { return base.dim(); }
};

ScaledMatrix operator*(const ScaledMatrix& lhs, const ScaledMatrix& rhs);

/// Logarithms of the singular values alpha_1 >= ... >= alpha_d.
struct SingularSpectrum {
  std::vector<double> log_alphas;
  double log_det = 0.0;

  std::size_t dim() const noexcept { return log_alphas.size(); }
};

/// Singular values through the eigenvalues of base^T base. The smallest one is
/// recovered from log|det| (squaring would lose it for ill-conditioned
/// products). Throws SingularMatrix.
SingularSpectrum singular_spectrum(const ScaledMatrix& a);
SingularSpectrum singular_spectrum(const Matrix& a);

/// log phi^t: sum of the floor(t) largest log alphas plus the fractional part
/// times the next one; (t/d) log|det| once t >= d. Throws NegativeT.
double log_phi(double t, const SingularSpectrum& s);

/// A_{w_1} ... A_{w_n}, renormalized after every multiply. The empty word
/// gives the identity.
ScaledMatrix word_product(std::span<const Letter> w, std::span<const ScaledMatrix> matrices);
ScaledMatrix word_product(std::span<const Letter> w, std::span<const Matrix> matrices);

std::vector<ScaledMatrix> to_scaled(std::span<const Matrix> matrices);

/// max_i alpha_1(A_i) and min_i alpha_d(A_i).
struct ContractionBounds {
  double alpha_max = 0.0;
  double alpha_min = 0.0;
};
ContractionBounds contraction_bounds(std::span<const Matrix> matrices);

struct ConeCheck {
  bool holds = false;
  /// Smallest angular slack (radians) of a boundary-ray image inside the cone;
  /// negative when some image leaves it.
  double margin = 0.0;
};

/// Planar cone condition: every A_i and A_i^T maps the closed double cone of
/// half-angle beta/2 around the line through theta strictly into its interior.
/// Checked on the images of the two boundary rays. Throws DimensionMismatch
/// for d != 2.
ConeCheck check_cone_condition(std::span<const Matrix> matrices, std::array<double, 2> theta,
                               double beta);

/// Empirical quasi-multiplicativity constant over all word pairs of length at
/// most `depth`. Spectra of i, j and ij are cached once so D(t) is cheap to
/// re-evaluate. Depth-bounded: the value is evidence, not a certificate.
class QuasiMultiplicativityProbe {
 public:
  QuasiMultiplicativityProbe(std::size_t depth, const SubshiftAutomaton& automaton,
                             std::span<const Matrix> matrices);

  double log_D(double t) const;
  double D(double t) const;
  std::size_t depth() const noexcept { return depth_; }
  std::size_t num_pairs() const noexcept { return pairs_.size(); }

 private:
  struct Pair {
    std::size_t left, right;
    SingularSpectrum joined;
  };
  std::size_t depth_;
  std::vector<SingularSpectrum> singles_;
  std::vector<Pair> pairs_;
};

}  // namespace affdim
