#include <doctest.h>

#include <numbers>
#include <random>

#include "affdim/error.hpp"
#include "affdim/fixtures.hpp"
#include "affdim/linalg.hpp"
#include "oracles.hpp"

using namespace affdim;
using doctest::Approx;

namespace {

Matrix diag2(double a, double b) { return Matrix(2, {a, 0, 0, b}); }

Matrix shear() { return Matrix(2, {0.25, 0.25, 0, 0.25}); }

oracle::Mat2 to_mat2(const Matrix& m) { return {m(0, 0), m(0, 1), m(1, 0), m(1, 1)}; }

Matrix random_contraction(std::mt19937_64& rng, std::size_t d, double norm) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    Matrix m(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) m(i, j) = u(rng);
    const double top = std::exp(singular_spectrum(m).log_alphas.front());
    m *= norm / top;
    if (std::exp(singular_spectrum(m).log_alphas.back()) > 0.05) return m;
  }
}

}  // namespace

TEST_CASE("singular spectrum examples") {
  const auto id = singular_spectrum(Matrix::identity(2));
  CHECK(id.log_alphas[0] == Approx(0.0));
  CHECK(id.log_alphas[1] == Approx(0.0));
  const auto d = singular_spectrum(diag2(0.5, 0.25));
  CHECK(d.log_alphas[0] == Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(d.log_alphas[1] == Approx(std::log(0.25)).epsilon(1e-14));
  CHECK(d.log_det == Approx(std::log(0.125)).epsilon(1e-14));
  const auto swapped = singular_spectrum(diag2(0.25, -0.5));
  CHECK(swapped.log_alphas[0] == Approx(std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("shear powers match the closed form") {
  const std::vector<Matrix> maps{shear()};
  for (std::size_t n : {1, 2, 5, 10, 40, 64}) {
    const Word w(n, 0);
    const auto s = singular_spectrum(word_product(w, std::span<const Matrix>(maps)));
    const double nn = static_cast<double>(n);
    const double a1sq = nn * nn * std::pow(0.25, 2 * nn) * (1 / (nn * nn) + 0.5 + std::sqrt(1 / (nn * nn) + 0.25));
    CHECK(s.log_alphas[0] == Approx(0.5 * std::log(a1sq)).epsilon(1e-10));
    CHECK(s.log_alphas[0] + s.log_alphas[1] == Approx(2 * nn * std::log(0.25)).epsilon(1e-12));
  }
}

TEST_CASE("spectra match the 2x2 closed form") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Matrix m = random_contraction(rng, 2, 0.9);
    const auto s = singular_spectrum(m);
    const auto ref = oracle::singular_values(to_mat2(m));
    CHECK(std::exp(s.log_alphas[0]) == Approx(ref[0]).epsilon(1e-12));
    CHECK(std::exp(s.log_alphas[1]) == Approx(ref[1]).epsilon(1e-10));
  }
}

TEST_CASE("Jacobi eigenvalues match characteristic roots") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const auto eig = symmetric_eigenvalues(Matrix(2, {a, b, b, c}));
    const double mean = 0.5 * (a + c), rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    CHECK(eig[0] == Approx(mean + rad).epsilon(1e-12).scale(1.0));
    CHECK(eig[1] == Approx(mean - rad).epsilon(1e-12).scale(1.0));
  }
  const auto three = symmetric_eigenvalues(Matrix(3, {2, 1, 0, 1, 2, 1, 0, 1, 2}));
  CHECK(three[0] == Approx(2 + std::sqrt(2.0)));
  CHECK(three[1] == Approx(2.0));
  CHECK(three[2] == Approx(2 - std::sqrt(2.0)));
}

TEST_CASE("log phi branches") {
  const auto d = singular_spectrum(diag2(0.5, 0.25));
  CHECK(log_phi(0.0, d) == 0.0);
  CHECK(log_phi(2.0, d) == Approx(std::log(0.125)).epsilon(1e-14));
  CHECK(log_phi(1.5, d) == Approx(-2 * std::log(2.0)).epsilon(1e-14));
  CHECK(log_phi(3.0, d) == Approx(1.5 * std::log(0.125)).epsilon(1e-14));
  // continuous at the integer kink
  CHECK(log_phi(1.0 - 1e-12, d) == Approx(log_phi(1.0 + 1e-12, d)).epsilon(1e-10));
  CHECK_THROWS_AS(log_phi(-0.1, d), Error);
}

TEST_CASE("word products") {
  const std::vector<Matrix> maps{diag2(0.5, 0.25), Matrix(2, {0.1, 0.3, -0.2, 0.4})};
  const auto one = word_product(Word{1}, std::span<const Matrix>(maps)).value();
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(one(i, j) == Approx(maps[1](i, j)).epsilon(1e-15));
  // long chains stay accurate against a long double product
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Word w(64);
    for (auto& a : w) a = static_cast<Letter>(rng() % 2);
    long double p[4] = {1, 0, 0, 1};
    for (auto a : w) {
      const auto& m = maps[a];
      const long double q[4] = {p[0] * m(0, 0) + p[1] * m(1, 0), p[0] * m(0, 1) + p[1] * m(1, 1),
                                p[2] * m(0, 0) + p[3] * m(1, 0), p[2] * m(0, 1) + p[3] * m(1, 1)};
      std::copy(q, q + 4, p);
    }
    const auto s = word_product(w, std::span<const Matrix>(maps));
    for (std::size_t i = 0; i < 4; ++i) {
      const double got = s.base.data()[i] * std::exp(s.log_scale);
      CHECK(got == Approx(static_cast<double>(p[i])).epsilon(1e-12).scale(std::abs(static_cast<double>(p[0]))));
    }
  }
  const std::vector<Matrix> shears{shear()};
  const auto s5 = word_product(Word(5, 0), std::span<const Matrix>(shears)).value();
  const double scale = std::pow(0.25, 5);
  CHECK(s5(0, 0) == Approx(scale).epsilon(1e-14));
  CHECK(s5(0, 1) == Approx(5 * scale).epsilon(1e-14));
  CHECK(s5(1, 0) == Approx(0.0).scale(scale));
}

TEST_CASE("sandwich and submultiplicativity") {
  std::mt19937_64 rng(12);
  const std::vector<Matrix> maps{random_contraction(rng, 2, 0.8), random_contraction(rng, 2, 0.6),
                                 random_contraction(rng, 2, 0.7)};
  const auto bounds = contraction_bounds(maps);
  std::uniform_real_distribution<double> ut(0.0, 2.5), ud(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Word u(1 + rng() % 10), v(1 + rng() % 10);
    for (auto& a : u) a = static_cast<Letter>(rng() % 3);
    for (auto& a : v) a = static_cast<Letter>(rng() % 3);
    Word uv = u;
    uv.insert(uv.end(), v.begin(), v.end());
    const double t = ut(rng), delta = ud(rng);
    const auto su = singular_spectrum(word_product(u, std::span<const Matrix>(maps)));
    const auto sv = singular_spectrum(word_product(v, std::span<const Matrix>(maps)));
    const auto suv = singular_spectrum(word_product(uv, std::span<const Matrix>(maps)));
    CHECK(log_phi(t, suv) <= log_phi(t, su) + log_phi(t, sv) + 1e-9 * std::abs(log_phi(t, suv)));
    const double n = static_cast<double>(u.size());
    const double slack = 1e-9 * std::abs(log_phi(t + delta, su));
    CHECK(log_phi(t + delta, su) <= log_phi(t, su) + delta * n * std::log(bounds.alpha_max) + slack);
    CHECK(log_phi(t + delta, su) >= log_phi(t, su) + delta * n * std::log(bounds.alpha_min) - slack);
  }
}

TEST_CASE("singular matrices are rejected") {
  CHECK_THROWS_AS(singular_spectrum(Matrix(2, {1, 2, 2, 4})), Error);
  CHECK(std::isinf(log_abs_det(Matrix(2, {1, 2, 2, 4}))));
}

TEST_CASE("cone condition") {
  const std::array<double, 2> theta{std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2};
  const double beta = std::numbers::pi / 2 - 0.01;
  const auto positive = check_cone_condition(tractable_fixture().ifs.matrices, theta, beta);
  CHECK(positive.holds);
  CHECK(positive.margin > 1e-9);
  const std::vector<Matrix> shears{shear()};
  CHECK_FALSE(check_cone_condition(shears, theta, beta).holds);
  const std::vector<Matrix> scaled{diag2(0.5, 0.5)};
  const auto flat = check_cone_condition(scaled, theta, beta);
  CHECK_FALSE(flat.holds);
  CHECK(flat.margin == Approx(0.0).scale(1.0));
  const std::vector<Matrix> cube{Matrix::identity(3)};
  try {
    (void)check_cone_condition(cube, theta, beta);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("quasi-multiplicativity probe") {
  const auto full = SubshiftAutomaton::full_shift(2);
  const std::vector<Matrix> dominated{diag2(0.5, 0.25), diag2(1.0 / 3, 0.125)};
  const QuasiMultiplicativityProbe diag_probe(6, full, dominated);
  for (double t : {0.0, 0.25, 0.5, 1.0}) CHECK(diag_probe.D(t) == Approx(1.0).epsilon(1e-12));

  const std::vector<Matrix> shears{shear(), shear()};
  double previous = 1.0;
  for (std::size_t m = 2; m <= 6; ++m) {
    const double D = QuasiMultiplicativityProbe(m, full, shears).D(0.5);
    CHECK(D > previous);
    previous = D;
  }
  // brute force over powers of the shear for lengths up to 6
  double brute = 1.0;
  const oracle::Mat2 a{0.25, 0.25, 0, 0.25};
  auto power = [&](std::size_t n) {
    oracle::Mat2 p{1, 0, 0, 1};
    for (std::size_t i = 0; i < n; ++i) p = oracle::mul(p, a);
    return p;
  };
  for (std::size_t j = 1; j <= 6; ++j)
    for (std::size_t k = 1; k <= 6; ++k)
      brute = std::max(brute, oracle::phi(0.5, power(j)) * oracle::phi(0.5, power(k)) / oracle::phi(0.5, power(j + k)));
  CHECK(previous == Approx(brute).epsilon(1e-10));

  const auto single = SubshiftAutomaton::full_shift(1);
  const std::vector<Matrix> one{diag2(0.5, 0.25)};
  CHECK(QuasiMultiplicativityProbe(4, single, one).D(0.7) == Approx(1.0));
}
