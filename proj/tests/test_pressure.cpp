#include <doctest.h>

#include <random>

#include "affdim/error.hpp"
#include "affdim/fixtures.hpp"
#include "affdim/pressure.hpp"
#include "oracles.hpp"

using namespace affdim;
using doctest::Approx;

namespace {

Matrix diag2(double a, double b) { return Matrix(2, {a, 0, 0, b}); }
Matrix shear() { return Matrix(2, {0.25, 0.25, 0, 0.25}); }

oracle::Mat2 to_mat2(const Matrix& m) { return {m(0, 0), m(0, 1), m(1, 0), m(1, 1)}; }

PartitionOptions with(PartitionMethod m) {
  PartitionOptions o;
  o.method = m;
  return o;
}

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::NumericFailure;
}

const SubshiftAutomaton kFull2 = SubshiftAutomaton::full_shift(2);

}  // namespace

TEST_CASE("equal maps give the closed form") {
  const std::vector<Matrix> maps{shear(), shear()};
  for (std::size_t n : {1, 4, 9, 14}) {
    const PartitionFunction pf(kFull2, maps, n);
    const auto power = singular_spectrum(word_product(Word(n, 0), std::span<const Matrix>(maps)));
    for (double t : {0.0, 0.3, 1.0, 1.6, 2.0, 2.5}) {
      CHECK(pf.log_Z(t) == Approx(n * std::log(2.0) + log_phi(t, power)).epsilon(1e-12));
    }
  }
}

TEST_CASE("partition sums match naive products") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.45, 0.45);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<Matrix> maps;
    std::vector<oracle::Mat2> raw;
    for (int i = 0; i < 3; ++i) {
      Matrix m(2, {u(rng), u(rng), u(rng), u(rng)});
      if (std::abs(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) < 1e-3) m(0, 0) += 0.1;
      maps.push_back(m);
      raw.push_back(to_mat2(m));
    }
    const auto full3 = SubshiftAutomaton::full_shift(3);
    const PartitionFunction pf(full3, maps, 7);
    for (double t : {0.2, 0.9, 1.4, 2.3}) {
      CHECK(pf.log_Z(t) == Approx(oracle::log_partition_full_shift(t, 7, raw)).epsilon(1e-10));
    }
  }
}

TEST_CASE("t = 0 counts words") {
  const std::vector<Matrix> maps{diag2(0.5, 0.3), Matrix(2, {0.2, 0.1, 0.1, 0.4})};
  const PartitionFunction pf(kFull2, maps, 10);
  CHECK(pf.log_Z(0.0) == Approx(10 * std::log(2.0)).epsilon(1e-13));
  const auto golden = SubshiftAutomaton::compile(SubshiftSpec{2, {parse_word("11")}});
  const PartitionFunction pg(golden, maps, 10);
  CHECK(pg.log_Z(0.0) == Approx(std::log(double(golden.count(10)))).epsilon(1e-13));
  const std::array<std::size_t, 3> depths{3, 6, 9};
  CHECK(pressure_upper(0.0, depths, kFull2, maps).upper == Approx(std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("diagonal systems sit in the factor-two band") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<Matrix> maps{diag2(u(rng), u(rng)), diag2(u(rng), u(rng))};
    const PartitionFunction pf(kFull2, maps, 12);
    for (double t = 0.1; t < 1.0; t += 0.2) {
      const double excess = pf.pressure(t) - diagonal_pressure(t, maps);
      CHECK(excess >= -1e-12);
      CHECK(excess <= std::log(2.0) / 12 + 1e-12);
    }
  }
}

TEST_CASE("type classes, threads and streaming agree with enumeration") {
  const std::vector<Matrix> maps{diag2(0.25, 1.0 / 32), diag2(0.25, 0.5)};
  const PartitionFunction base(kFull2, maps, 14);
  PartitionOptions threaded;
  threaded.threads = 4;
  PartitionOptions streamed;
  streamed.cache_rows = 1000;
  const PartitionFunction types(kFull2, maps, 14, with(PartitionMethod::TypeClass));
  const PartitionFunction par(kFull2, maps, 14, threaded);
  const PartitionFunction str(kFull2, maps, 14, streamed);
  CHECK(types.method() == PartitionMethod::TypeClass);
  CHECK(str.table() == nullptr);
  for (double t : {0.0, 0.4, 0.88, 1.0, 1.7, 2.4}) {
    CHECK(types.log_Z(t) == Approx(base.log_Z(t)).epsilon(1e-12));
    CHECK(par.log_Z(t) == Approx(base.log_Z(t)).epsilon(1e-12));
    CHECK(str.log_Z(t) == Approx(base.log_Z(t)).epsilon(1e-12));
  }
  CHECK(PartitionFunction(kFull2, maps, 5, with(PartitionMethod::Auto)).method() == PartitionMethod::TypeClass);
  const std::vector<Matrix> mixed{shear(), diag2(0.5, 0.5)};
  CHECK(PartitionFunction(kFull2, mixed, 5, with(PartitionMethod::Auto)).method() == PartitionMethod::Enumerate);
  CHECK(code_of([&] { PartitionFunction(kFull2, mixed, 5, with(PartitionMethod::TypeClass)); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("budgets") {
  const std::vector<Matrix> maps{shear(), shear()};
  PartitionOptions small;
  small.max_words = 1000;
  CHECK(code_of([&] { PartitionFunction(kFull2, maps, 10, small); }) == ErrorCode::DepthBudgetExceeded);
  CHECK_NOTHROW(PartitionFunction(kFull2, maps, 9, small));
  CHECK(code_of([&] { PartitionFunction(kFull2, maps, 0); }) == ErrorCode::InvalidArgument);
  const PartitionFunction pf(kFull2, maps, 3);
  CHECK(code_of([&] { (void)pf.log_Z(-1.0); }) == ErrorCode::NegativeT);
}

TEST_CASE("upper bounds") {
  const std::vector<Matrix> shears{shear(), shear()};
  for (std::size_t n : {8, 16}) {
    for (double t : {0.3, 0.5, 0.7}) {
      const std::array<std::size_t, 1> depth{n};
      const double excess = pressure_upper(t, depth, kFull2, shears).upper - std::log(2 * std::pow(0.25, t));
      CHECK(excess >= -1e-12);
      CHECK(excess <= (t * std::log(double(n)) + std::log(2.0)) / n);
    }
  }
  const auto fx = not_unique_fixture();
  const double s = oracle::not_unique_dimension();
  for (std::size_t n : {4, 8, 12}) {
    const std::array<std::size_t, 1> depth{n};
    const double upper = pressure_upper(s, depth, kFull2, fx.ifs.matrices).upper;
    CHECK(upper >= -1e-12);
    CHECK(upper <= std::log(2.0) / n + 1e-12);
  }
  const std::array<std::size_t, 3> depths{4, 8, 16};
  const auto est = pressure_upper(0.5, depths, kFull2, shears);
  CHECK(est.n_used == 16);
  CHECK_FALSE(est.lower.has_value());
}

TEST_CASE("upper bounds decrease along doubling depths") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int trial = 0; trial < 3; ++trial) {
    const std::vector<Matrix> maps{Matrix(2, {0.3 + u(rng), u(rng), u(rng), 0.3 + u(rng)}),
                                   Matrix(2, {0.3 + u(rng), u(rng), u(rng), 0.3 + u(rng)})};
    for (double t : {0.5, 1.0, 1.5}) {
      double previous = std::numeric_limits<double>::infinity();
      for (std::size_t n : {4, 8, 16}) {
        const double p = PartitionFunction(kFull2, maps, n).pressure(t);
        CHECK(p <= previous + 1e-12);
        previous = p;
      }
    }
  }
}

TEST_CASE("monotone, Lipschitz and piecewise convex in t") {
  const std::vector<Matrix> maps{Matrix(2, {0.5, 0.2, -0.1, 0.3}), Matrix(2, {0.2, -0.3, 0.25, 0.4})};
  const auto bounds = contraction_bounds(maps);
  const std::size_t n = 10;
  const PartitionFunction pf(kFull2, maps, n);
  const double step = 0.05;
  for (double t = 0.0; t + step <= 2.5; t += step) {
    const double drop = pf.pressure(t) - pf.pressure(t + step);
    CHECK(drop >= -step * std::log(bounds.alpha_max) - 1e-12);
    CHECK(drop <= -step * std::log(bounds.alpha_min) + 1e-12);
  }
  for (auto [lo, hi] : {std::pair{0.0, 1.0}, std::pair{1.0, 2.0}}) {
    const int pts = 40;
    const double h = (hi - lo) / pts;
    for (int i = 1; i < pts - 1; ++i) {
      const double t = lo + h * i;
      CHECK(pf.pressure(t - h) - 2 * pf.pressure(t) + pf.pressure(t + h) >= -1e-9);
    }
  }
}

TEST_CASE("lower bounds") {
  const std::vector<Matrix> dominated{diag2(0.5, 0.25), diag2(1.0 / 3, 0.125)};
  const QuasiMultiplicativityProbe probe(6, kFull2, dominated);
  CHECK(probe.D(0.5) == Approx(1.0));
  const auto lower = pressure_lower(0.5, 8, LowerAssumption{1.0, 0}, kFull2, dominated);
  const PartitionFunction pf8(kFull2, dominated, 8);
  REQUIRE(lower.lower.has_value());
  CHECK(*lower.lower == Approx(pf8.pressure(0.5)).epsilon(1e-14));
  const std::array<std::size_t, 1> depth{8};
  CHECK(*lower.lower <= pressure_upper(0.5, depth, kFull2, dominated).upper + 1e-14);
  REQUIRE(lower.assumption.has_value());

  const std::vector<Matrix> eq{diag2(0.3, 0.3), diag2(0.3, 0.3)};
  for (std::size_t m : {3, 7}) {
    const auto l = pressure_lower(0.8, m, LowerAssumption{1.0, 0}, kFull2, eq);
    CHECK(*l.lower == Approx(std::log(2.0) + 0.8 * std::log(0.3)).epsilon(1e-13));
  }

  const std::vector<Matrix> shears{shear(), shear()};
  const double D = QuasiMultiplicativityProbe(6, kFull2, shears).D(0.5);
  const auto flagged = pressure_lower(0.5, 6, LowerAssumption{D, 6}, kFull2, shears);
  CHECK(flagged.assumption->probe_depth == 6);
  CHECK(flagged.assumption->D == Approx(D));
  CHECK(*flagged.lower == Approx(PartitionFunction(kFull2, shears, 6).pressure(0.5) - std::log(D) / 6));
  CHECK(code_of([&] { (void)pressure_lower(0.5, 6, LowerAssumption{0.5, 0}, kFull2, shears); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("singularity dimension") {
  const auto fx = not_unique_fixture();
  const double s = oracle::not_unique_dimension();
  CHECK(s == Approx(0.694241913630617).epsilon(1e-12));
  const auto b = singularity_dimension(PartitionFunction(kFull2, fx.ifs.matrices, 14), 1e-10);
  CHECK(b.s_upper >= s);
  CHECK(b.s_upper <= s + 0.05 + std::log(2.0) / 14);
  CHECK(b.n_used == 14);
  CHECK_FALSE(b.s_lower.has_value());

  const std::vector<Matrix> halves{diag2(0.5, 0.5), diag2(0.5, 0.5)};
  CHECK(singularity_dimension(PartitionFunction(kFull2, halves, 6), 1e-12).s_upper == Approx(1.0).epsilon(1e-10));

  const std::vector<Matrix> shears{shear(), shear()};
  const auto sb = singularity_dimension(PartitionFunction(kFull2, shears, 8), 1e-10, LowerBoundRequest{6, 4});
  REQUIRE(sb.s_lower.has_value());
  CHECK(*sb.s_lower <= sb.s_upper);
  CHECK(sb.lower_assumption->probe_depth == 4);

  const std::vector<Matrix> wide{diag2(1.0, 0.5), diag2(0.5, 0.5)};
  CHECK(code_of([&] { (void)singularity_dimension(PartitionFunction(kFull2, wide, 4), 1e-10); }) ==
        ErrorCode::NonContractive);
}

TEST_CASE("diagonal closed form") {
  const std::vector<Matrix> halves{diag2(0.5, 0.5), diag2(0.5, 0.5)};
  for (double t : {0.0, 0.3, 1.0}) CHECK(diagonal_pressure(t, halves) == Approx(std::log(2 * std::pow(2.0, -t))));
  const auto nd = nondifferentiable_fixture();
  CHECK(diagonal_pressure(0.5, nd.ifs.matrices) == Approx(0.0).scale(1.0));
  const auto fx = not_unique_fixture();
  CHECK(diagonal_pressure(oracle::not_unique_dimension(), fx.ifs.matrices) == Approx(0.0).scale(1.0));
  CHECK(code_of([&] { (void)diagonal_pressure(1.5, halves); }) == ErrorCode::TOutOfRange);
  const std::vector<Matrix> shears{shear(), shear()};
  CHECK(code_of([&] { (void)diagonal_pressure(0.5, shears); }) == ErrorCode::NotDiagonal);
  const std::vector<Matrix> cube{Matrix::identity(3), Matrix::identity(3)};
  CHECK(code_of([&] { (void)diagonal_pressure(0.5, cube); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("one-sided derivatives") {
  const std::vector<Matrix> eq{diag2(0.3, 0.3), diag2(0.3, 0.3)};
  const PartitionFunction flat(kFull2, eq, 6);
  CHECK(pressure_derivative(flat, 0.5, Side::Left) == Approx(std::log(0.3)).epsilon(1e-9));
  CHECK(pressure_derivative(flat, 0.5, Side::Right) == Approx(std::log(0.3)).epsilon(1e-9));

  const auto nd = nondifferentiable_fixture();
  const PartitionFunction pf(kFull2, nd.ifs.matrices, 4096, with(PartitionMethod::TypeClass));
  CHECK(pressure_derivative(pf, 0.6, Side::Right) == Approx(-2 * std::log(2.0)).epsilon(1e-3));
  const double t = 0.95, a = std::pow(32.0, -t), b = std::pow(2.0, -t);
  const double branch = -(a * std::log(32.0) + b * std::log(2.0)) / (a + b);
  CHECK(pressure_derivative(pf, 0.95, Side::Left) == Approx(branch).epsilon(2e-3));

  CHECK(code_of([&] { (void)pressure_derivative(flat, 0.999, Side::Right); }) == ErrorCode::IntegerCrossing);
  CHECK(code_of([&] { (void)pressure_derivative(flat, 1.001, Side::Left); }) == ErrorCode::IntegerCrossing);
  CHECK(code_of([&] { (void)pressure_derivative(flat, 0.0, Side::Right); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("kink detection") {
  const auto nd = nondifferentiable_fixture();
  const PartitionFunction pf(kFull2, nd.ifs.matrices, 4096, with(PartitionMethod::TypeClass));
  const auto target = oracle::nondifferentiable_kink();
  CHECK(target.t == Approx(0.8791464216066381).epsilon(1e-12));
  const auto kinks = detect_kink(pf, 0.5, 1.0, 32, 0.2);
  REQUIRE(kinks.size() == 1);
  CHECK(std::abs(kinks[0].t - target.t) <= 0.02);
  CHECK(std::abs(kinks[0].jump - target.jump) <= 0.05);

  const std::vector<Matrix> eq{diag2(0.3, 0.3), diag2(0.3, 0.3)};
  CHECK(detect_kink(PartitionFunction(kFull2, eq, 8), 0.05, 0.95, 32, 0.2).empty());
  const auto fx = not_unique_fixture();
  CHECK(detect_kink(PartitionFunction(kFull2, fx.ifs.matrices, 2048, with(PartitionMethod::TypeClass)), 0.05, 0.95,
                    32, 0.2)
            .empty());
}
