#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "affdim/config.hpp"
#include "affdim/error.hpp"

namespace affdim {

/// Flag values shared by the subcommands; each command reads the ones it
/// needs and falls back to its own defaults for unset optionals.
struct CommandOptions {
  std::optional<double> t;
  std::optional<std::size_t> n;
  std::vector<std::size_t> depths;
  std::optional<double> D;
  std::optional<std::size_t> probe_depth;
  std::optional<std::size_t> block;
  bool lower = false;
  double tol = 1e-10;
  std::optional<double> t_lo;
  std::optional<double> t_hi;
  std::size_t grid = 32;
  std::size_t points = 21;
  double threshold = 0.2;
  double h = 1e-3;
  std::string side = "right";
  std::size_t k = 3;
  bool averaged = true;
  std::optional<double> P;
  std::vector<double> scales;
  std::optional<std::string> csv;
  unsigned threads = 1;
  std::string method = "auto";
  std::array<double, 2> theta{0.70710678118654752, 0.70710678118654752};
  double beta = 1.5607963267948966;  // pi/2 - 0.01
};

std::vector<std::string_view> subcommand_names();

struct CommandOutput {
  nlohmann::json results;
  // Text that replaces the JSON report on stdout (sample without --csv).
  std::optional<std::string> raw;
};

/// Runs one subcommand on a parsed config. Throws UnknownSubcommand and
/// passes module errors through.
CommandOutput run_command(std::string_view subcommand, const SystemConfig& config, const CommandOptions& options);

/// The diagnostic suite of a named fixture.
nlohmann::json run_example(std::string_view fixture, const CommandOptions& options);

/// {command, digest, results, version, wall_ms}
nlohmann::json make_report(std::string_view command, const std::string& digest, nlohmann::json results,
                           double wall_ms);

std::string_view library_version() noexcept;

/// 0 success, 2 validation, 3 budget, 4 numeric failure.
int exit_code(ErrorCode code) noexcept;

}  // namespace affdim
