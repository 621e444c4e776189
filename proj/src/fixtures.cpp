#include "affdim/fixtures.hpp"

#include <cmath>

#include "affdim/error.hpp"

namespace affdim {

namespace {

Matrix diag2(double a, double b) { return Matrix::from_rows({{a, 0.0}, {0.0, b}}); }

}  // namespace

Fixture not_unique_fixture() {
  const double large = 0.5, small = 0.25;
  Fixture f;
  f.name = "not-unique";
  f.summary = "diag(1/2,1/4) and diag(1/4,1/2) + (3/4,1/2); fixed points (0,0) and (1,1)";
  f.ifs.matrices = {diag2(large, small), diag2(small, large)};
  f.ifs.translations = {{0.0, 0.0}, {1.0 - small, 1.0 - large}};
  f.subshift = SubshiftSpec::full_shift(2);
  // (large^s, small^s) with large^s + small^s = 1, i.e. x = (sqrt(5) - 1) / 2
  const double x = (std::sqrt(5.0) - 1.0) / 2.0;
  f.bernoulli = std::vector<double>{x, 1.0 - x};
  return f;
}

Fixture no_semiconformal_fixture() {
  const Matrix shear = Matrix::from_rows({{0.25, 0.25}, {0.0, 0.25}});
  Fixture f;
  f.name = "no-semiconformal";
  f.summary = "two equal shears (1/4)[[1,1],[0,1]] with translations 0 and (1,1)";
  f.ifs.matrices = {shear, shear};
  f.ifs.translations = {{0.0, 0.0}, {1.0, 1.0}};
  f.subshift = SubshiftSpec::full_shift(2);
  f.bernoulli = std::vector<double>{0.5, 0.5};
  return f;
}

Fixture nondifferentiable_fixture() {
  Fixture f;
  f.name = "nondifferentiable";
  f.summary = "diag(1/4,1/32) and diag(1/4,1/2) + (3/4,1/2)";
  f.ifs.matrices = {diag2(0.25, 0.03125), diag2(0.25, 0.5)};
  f.ifs.translations = {{0.0, 0.0}, {0.75, 0.5}};
  f.subshift = SubshiftSpec::full_shift(2);
  return f;
}

Fixture tractable_fixture() {
  const double top = 1.0 / 3.0;
  const double bottom = 1.0 / 30.0;
  const double theta[2] = {0.13, 0.17};
  const double beta[2] = {0.17, 0.13};
  Fixture f;
  f.name = "tractable";
  f.summary = "[[theta+1/30, theta], [beta, beta+1/30]] with (theta, beta) = (13/100, 17/100), (17/100, 13/100)";
  for (int i = 0; i < 2; ++i) {
    f.ifs.matrices.push_back(
        Matrix::from_rows({{theta[i] + bottom, theta[i]}, {beta[i], beta[i] + bottom}}));
    const double scale = (1.0 - top) / (theta[i] + beta[i]);
    f.ifs.translations.push_back({scale * theta[i], scale * beta[i]});
  }
  f.subshift = SubshiftSpec::full_shift(2);
  f.bernoulli = std::vector<double>{0.5, 0.5};
  return f;
}

std::vector<std::string_view> fixture_names() {
  return {"not-unique", "no-semiconformal", "nondifferentiable", "tractable"};
}

Fixture fixture_by_name(std::string_view name) {
  if (name == "not-unique") return not_unique_fixture();
  if (name == "no-semiconformal") return no_semiconformal_fixture();
  if (name == "nondifferentiable") return nondifferentiable_fixture();
  if (name == "tractable") return tractable_fixture();
  throw Error(ErrorCode::InvalidArgument, "unknown fixture '" + std::string(name) + "'");
}

}  // namespace affdim
