#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "affdim/geometry.hpp"
#include "affdim/symbolic.hpp"

namespace affdim {

/// A ready-made system: maps, subshift and, where one is natural, a
/// Bernoulli measure.
struct Fixture {
  std::string name;
  std::string summary;
  AffineIFS ifs;
  SubshiftSpec subshift;
  std::optional<std::vector<double>> bernoulli;
};

/// Two diagonal maps diag(1/2, 1/4) and diag(1/4, 1/2) whose pressure has
/// two distinct equilibrium measures at its zero.
Fixture not_unique_fixture();
/// Two equal shears (1/4)[[1, 1], [0, 1]].
Fixture no_semiconformal_fixture();
/// diag(1/4, 1/32) and diag(1/4, 1/2): pressure with a corner in (0, 1).
Fixture nondifferentiable_fixture();
/// Two positive matrices with eigenvalues 1/3 and 1/30 whose attractor lies
/// on the line x + y = 1.
Fixture tractable_fixture();

std::vector<std::string_view> fixture_names();
/// Throws InvalidArgument for an unknown name.
Fixture fixture_by_name(std::string_view name);

}  // namespace affdim
