#include "affdim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "affdim/error.hpp"

namespace affdim {

Matrix::Matrix(std::size_t dim, std::vector<double> row_major) : dim_(dim), a_(std::move(row_major)) {
  if (a_.size() != dim * dim) {
    throw Error(ErrorCode::DimensionMismatch, "matrix needs " + std::to_string(dim * dim) + " entries");
  }
}

Matrix Matrix::identity(std::size_t dim) {
  Matrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> entries) {
  Matrix m(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) {
      throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
    }
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::max_abs() const noexcept {
  double m = 0.0;
  for (double x : a_) m = std::max(m, std::abs(x));
  return m;
}

bool Matrix::is_diagonal() const noexcept {
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      if (i != j && (*this)(i, j) != 0.0) return false;
  return true;
}

std::vector<double> Matrix::apply(std::span<const double> x) const {
  std::vector<double> y(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) acc += (*this)(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& x : a_) x *= s;
  return *this;
}

Matrix operator*(const Matrix& lhs, const Matrix& rhs) {
  const std::size_t d = lhs.dim();
  if (rhs.dim() != d) throw Error(ErrorCode::DimensionMismatch, "matrix product dimensions differ");
  Matrix out(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double a = lhs(i, k);
      for (std::size_t j = 0; j < d; ++j) out(i, j) += a * rhs(k, j);
    }
  }
  return out;
}

double log_abs_det(const Matrix& a) {
  const std::size_t d = a.dim();
  Matrix lu = a;
  double acc = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < d; ++r)
      if (std::abs(lu(r, c)) > std::abs(lu(piv, c))) piv = r;
    if (lu(piv, c) == 0.0) return -std::numeric_limits<double>::infinity();
    if (piv != c)
      for (std::size_t j = 0; j < d; ++j) std::swap(lu(piv, j), lu(c, j));
    acc += std::log(std::abs(lu(c, c)));
    for (std::size_t r = c + 1; r < d; ++r) {
      const double f = lu(r, c) / lu(c, c);
      for (std::size_t j = c; j < d; ++j) lu(r, j) -= f * lu(c, j);
    }
  }
  return acc;
}

std::vector<double> symmetric_eigenvalues(const Matrix& sym) {
  const std::size_t d = sym.dim();
  Matrix a = sym;
  constexpr int kMaxSweeps = 64;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < d; ++j) off += a(i, j) * a(i, j);
    }
    if (off == 0.0 || off <= 1e-34 * diag) break;

    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rutishauser's stable rotation
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }
  std::vector<double> eig(d);
  for (std::size_t i = 0; i < d; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

namespace {

constexpr double kMinRelativeDet = 1e-12;

void renormalize(ScaledMatrix& m) {
  const double peak = m.base.max_abs();
  if (!(peak > 0.0) || !std::isfinite(peak)) {
    throw Error(ErrorCode::NumericFailure, "matrix product degenerated");
  }
  m.base *= 1.0 / peak;
  m.log_scale += std::log(peak);
}

}  // namespace

ScaledMatrix ScaledMatrix::from(const Matrix& m) {
  ScaledMatrix s{m, 0.0, 0.0};
  renormalize(s);
  const double base_det = affdim::log_abs_det(s.base);
  if (!(base_det > std::log(kMinRelativeDet))) {
    throw Error(ErrorCode::SingularMatrix, "matrix is not invertible within tolerance");
  }
  s.log_abs_det = base_det + static_cast<double>(m.dim()) * s.log_scale;
  return s;
}

Matrix ScaledMatrix::value() const {
  Matrix m = base;
  m *= std::exp(log_scale);
  return m;
}

ScaledMatrix operator*(const ScaledMatrix& lhs, const ScaledMatrix& rhs) {
  ScaledMatrix out{lhs.base * rhs.base, lhs.log_scale + rhs.log_scale,
                   lhs.log_abs_det + rhs.log_abs_det};
  renormalize(out);
  return out;
}

SingularSpectrum singular_spectrum(const ScaledMatrix& a) {
  const std::size_t d = a.dim();
  SingularSpectrum s;
  s.log_det = a.log_abs_det;
  s.log_alphas.resize(d);
  if (!std::isfinite(a.log_abs_det) ||
      a.log_abs_det - static_cast<double>(d) * a.log_scale < std::log(1e-300)) {
    throw Error(ErrorCode::SingularMatrix, "smallest singular value underflows");
  }
  if (d == 1) {
    s.log_alphas[0] = a.log_abs_det;
    return s;
  }
  const Matrix gram = a.base.transpose() * a.base;
  const std::vector<double> eig = symmetric_eigenvalues(gram);
  double partial = 0.0;
  for (std::size_t l = 0; l + 1 < d; ++l) {
    if (!(eig[l] > 0.0)) throw Error(ErrorCode::SingularMatrix, "nonpositive Gram eigenvalue");
    s.log_alphas[l] = 0.5 * std::log(eig[l]) + a.log_scale;
    partial += s.log_alphas[l];
  }
  s.log_alphas[d - 1] = a.log_abs_det - partial;
  // Roundoff can leave the det-derived value a hair above its neighbour.
  for (std::size_t l = d - 1; l > 0 && s.log_alphas[l] > s.log_alphas[l - 1]; --l) {
    const double mid = 0.5 * (s.log_alphas[l] + s.log_alphas[l - 1]);
    s.log_alphas[l] = s.log_alphas[l - 1] = mid;
  }
  return s;
}

SingularSpectrum singular_spectrum(const Matrix& a) { return singular_spectrum(ScaledMatrix::from(a)); }

double log_phi(double t, const SingularSpectrum& s) {
  if (t < 0.0 || std::isnan(t)) throw Error(ErrorCode::NegativeT, "t must be nonnegative");
  const std::size_t d = s.dim();
  if (t >= static_cast<double>(d)) return t / static_cast<double>(d) * s.log_det;
  const auto l = static_cast<std::size_t>(std::floor(t));
  double acc = 0.0;
  for (std::size_t k = 0; k < l; ++k) acc += s.log_alphas[k];
  const double frac = t - static_cast<double>(l);
  if (frac > 0.0) acc += frac * s.log_alphas[l];
  return acc;
}

ScaledMatrix word_product(std::span<const Letter> w, std::span<const ScaledMatrix> matrices) {
  if (matrices.empty()) throw Error(ErrorCode::InvalidArgument, "no matrices");
  if (w.empty()) return ScaledMatrix{Matrix::identity(matrices[0].dim()), 0.0, 0.0};
  auto pick = [&](Letter a) -> const ScaledMatrix& {
    if (a >= matrices.size()) throw Error(ErrorCode::LetterOutOfRange, "letter has no matrix");
    return matrices[a];
  };
  ScaledMatrix acc = pick(w[0]);
  for (std::size_t i = 1; i < w.size(); ++i) acc = acc * pick(w[i]);
  return acc;
}

ScaledMatrix word_product(std::span<const Letter> w, std::span<const Matrix> matrices) {
  const std::vector<ScaledMatrix> scaled = to_scaled(matrices);
  return word_product(w, std::span<const ScaledMatrix>(scaled));
}

std::vector<ScaledMatrix> to_scaled(std::span<const Matrix> matrices) {
  std::vector<ScaledMatrix> out;
  out.reserve(matrices.size());
  for (const Matrix& m : matrices) out.push_back(ScaledMatrix::from(m));
  return out;
}

ContractionBounds contraction_bounds(std::span<const Matrix> matrices) {
  ContractionBounds b{0.0, std::numeric_limits<double>::infinity()};
  for (const Matrix& m : matrices) {
    const SingularSpectrum s = singular_spectrum(m);
    b.alpha_max = std::max(b.alpha_max, std::exp(s.log_alphas.front()));
    b.alpha_min = std::min(b.alpha_min, std::exp(s.log_alphas.back()));
  }
  return b;
}

ConeCheck check_cone_condition(std::span<const Matrix> matrices, std::array<double, 2> theta,
                               double beta) {
  if (!(beta > 0.0 && beta < std::numbers::pi / 2)) {
    throw Error(ErrorCode::InvalidArgument, "beta must lie in (0, pi/2)");
  }
  const double norm = std::hypot(theta[0], theta[1]);
  if (!(norm > 0.0)) throw Error(ErrorCode::InvalidArgument, "theta must be nonzero");
  theta = {theta[0] / norm, theta[1] / norm};

  const double half = beta / 2.0;
  auto rotate = [&](double ang) {
    return std::array<double, 2>{std::cos(ang) * theta[0] - std::sin(ang) * theta[1],
                                 std::sin(ang) * theta[0] + std::cos(ang) * theta[1]};
  };
  const std::array<std::array<double, 2>, 2> rays{rotate(half), rotate(-half)};

  // Angle between v and the line through theta, with the side of the line.
  auto line_angle = [&](const std::vector<double>& v, double& side) {
    const double dot = theta[0] * v[0] + theta[1] * v[1];
    side = dot;
    const double len = std::hypot(v[0], v[1]);
    return std::acos(std::min(1.0, std::abs(dot) / len));
  };

  double margin = std::numeric_limits<double>::infinity();
  for (const Matrix& a : matrices) {
    if (a.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "cone condition needs 2x2 matrices");
    for (const Matrix& m : {a, a.transpose()}) {
      double side0 = 0.0, side1 = 0.0;
      const double ang0 = line_angle(m.apply(rays[0]), side0);
      const double ang1 = line_angle(m.apply(rays[1]), side1);
      // Both images must land in the same nappe, otherwise the image cone
      // sweeps through the complement.
      if (side0 * side1 <= 0.0) {
        margin = std::min(margin, -std::numbers::pi / 2);
        continue;
      }
      margin = std::min(margin, half - std::max(ang0, ang1));
    }
  }
  return ConeCheck{margin > 1e-9, margin};
}

QuasiMultiplicativityProbe::QuasiMultiplicativityProbe(std::size_t depth,
                                                       const SubshiftAutomaton& automaton,
                                                       std::span<const Matrix> matrices)
    : depth_(depth) {
  if (depth < 1) throw Error(ErrorCode::InvalidArgument, "probe depth must be >= 1");
  const std::vector<ScaledMatrix> scaled = to_scaled(matrices);
  std::vector<ScaledMatrix> products;
  for (std::size_t k = 1; k <= depth; ++k) {
    automaton.for_each_word(k, [&](std::span<const Letter> w) {
      products.push_back(word_product(w, std::span<const ScaledMatrix>(scaled)));
      singles_.push_back(singular_spectrum(products.back()));
    });
  }
  pairs_.reserve(products.size() * products.size());
  for (std::size_t i = 0; i < products.size(); ++i) {
    for (std::size_t j = 0; j < products.size(); ++j) {
      pairs_.push_back(Pair{i, j, singular_spectrum(products[i] * products[j])});
    }
  }
}

double QuasiMultiplicativityProbe::log_D(double t) const {
  double worst = 0.0;
  for (const Pair& p : pairs_) {
    worst = std::max(worst, log_phi(t, singles_[p.left]) + log_phi(t, singles_[p.right]) -
                                log_phi(t, p.joined));
  }
  return worst;
}

double QuasiMultiplicativityProbe::D(double t) const { return std::exp(log_D(t)); }

}  // namespace affdim
