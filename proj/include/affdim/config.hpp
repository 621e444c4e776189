#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "affdim/fixtures.hpp"
#include "affdim/geometry.hpp"
#include "affdim/measures.hpp"
#include "affdim/symbolic.hpp"

namespace affdim {

struct MeasureConfig {
  std::string type;  // "bernoulli" or "markov"
  std::vector<double> p;
  std::vector<std::vector<double>> transition;
  std::optional<std::vector<double>> stationary;
};

struct Budgets {
  std::size_t max_depth = 24;
  std::uint64_t max_words = std::uint64_t{1} << 24;
};

struct SystemConfig {
  std::size_t dimension = 0;
  AffineIFS ifs;
  SubshiftSpec subshift;
  std::optional<MeasureConfig> measure;
  Budgets budgets;
  std::uint64_t seed = 0;

  std::size_t alphabet_size() const noexcept { return ifs.size(); }
  /// The config with defaults filled in, keys sorted.
  nlohmann::json canonical() const;
  /// FNV-1a (64 bit, hex) of the canonical serialization.
  std::string digest() const;
};

/// Validates and fills defaults. Throws Malformed, NonContractive or
/// BadSubshift with the offending field in the message.
SystemConfig parse_config(const nlohmann::json& doc);
SystemConfig parse_config_text(std::string_view text);
SystemConfig load_config(const std::filesystem::path& path);
SystemConfig config_from_fixture(const Fixture& fixture);

/// Builds the configured measure. Markov measures are checked against the
/// subshift. Throws InvalidArgument if no measure is configured.
std::unique_ptr<CylinderMeasure> make_measure(const SystemConfig& config, const SubshiftAutomaton& automaton);

}  // namespace affdim
