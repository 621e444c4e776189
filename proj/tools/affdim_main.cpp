#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "affdim/commands.hpp"
#include "affdim/config.hpp"
#include "affdim/error.hpp"

namespace {

void print_error(const std::string& code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pressure, dimension and measure diagnostics for sub-self-affine sets"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  affdim::CommandOptions opts;
  opts.threads = std::max(1u, std::thread::hardware_concurrency());
  std::string config_path, inline_json, fixture_name;
  std::optional<std::uint64_t> seed, max_words;
  std::optional<std::size_t> max_depth;
  std::vector<double> theta;
  bool no_average = false;

  auto add_common = [&](CLI::App* sub) {
    auto* source = sub->add_option_group("source", "system to load");
    source->add_option("--config", config_path, "JSON config file");
    source->add_option("--inline", inline_json, "JSON config given inline");
    source->add_option("--fixture", fixture_name, "built-in fixture")
        ->check(CLI::IsMember({"not-unique", "no-semiconformal", "nondifferentiable", "tractable"}));
    source->require_option(1);
    sub->add_option("--t", opts.t, "singular value function exponent");
    sub->add_option("--n", opts.n, "depth");
    sub->add_option("--depths", opts.depths, "several depths; the smallest bound is reported");
    sub->add_option("--D", opts.D, "quasi-multiplicativity constant for the lower bound");
    sub->add_option("--probe-depth", opts.probe_depth, "estimate D by probing word pairs up to this length");
    sub->add_option("--m", opts.block, "block depth of the lower bound");
    sub->add_flag("--lower", opts.lower, "also bracket the dimension from below");
    sub->add_option("--tol", opts.tol, "bisection tolerance");
    sub->add_option("--t-lo", opts.t_lo, "start of the t range");
    sub->add_option("--t-hi", opts.t_hi, "end of the t range");
    sub->add_option("--grid", opts.grid, "derivative grid size for kink detection");
    sub->add_option("--points", opts.points, "number of curve points");
    sub->add_option("--threshold", opts.threshold, "minimum derivative jump for a kink");
    sub->add_option("--step", opts.h, "finite-difference step");
    sub->add_option("--side", opts.side, "derivative side")->check(CLI::IsMember({"left", "right"}));
    sub->add_option("--k", opts.k, "window length of the empirical equilibrium marginal");
    sub->add_flag("--no-average", no_average, "use the j = 0 window only");
    sub->add_option("--P", opts.P, "pressure value for Gibbs ratios");
    sub->add_option("--scales", opts.scales, "box sizes");
    sub->add_option("--csv", opts.csv, "CSV side file");
    sub->add_option("--threads", opts.threads, "worker threads");
    sub->add_option("--method", opts.method, "partition sum route")
        ->check(CLI::IsMember({"auto", "enumerate", "type-class"}));
    sub->add_option("--theta", theta, "cone axis (two numbers)")->expected(2);
    sub->add_option("--beta", opts.beta, "cone opening angle");
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--max-words", max_words, "overrides budgets.max_words");
    sub->add_option("--max-depth", max_depth, "overrides budgets.max_depth");
  };

  const std::map<std::string, std::string> descriptions{
      {"pressure", "upper (and optional lower) bound on the pressure at t"},
      {"curve", "depth-n pressure on a grid of t values"},
      {"dimension", "bisection bracket for the zero of the pressure"},
      {"kink", "locate jumps of the pressure derivative"},
      {"entropy", "finite-depth and closed-form entropy of the measure"},
      {"energy", "finite-depth t-energy of the measure"},
      {"lyapunov", "Lyapunov exponents of the measure"},
      {"gap", "depth-n pressure minus the entropy and energy of the measure"},
      {"gibbs", "extremes of the Gibbs ratio per depth"},
      {"empirical-equilibrium", "depth-k marginal of the averaged weighting by phi^t"},
      {"sample", "points of the attractor as CSV"},
      {"boxcount", "box-counting slope of the sampled attractor"},
      {"cone-check", "planar cone condition"},
      {"probe-d", "empirical quasi-multiplicativity constant"},
  };
  for (auto name : affdim::subcommand_names()) {
    if (name == "example") continue;
    add_common(app.add_subcommand(std::string(name), descriptions.at(std::string(name))));
  }
  auto* example = app.add_subcommand("example", "run a fixture's diagnostic suite");
  std::string example_name;
  example->add_option("name", example_name, "fixture name")
      ->required()
      ->check(CLI::IsMember({"not-unique", "no-semiconformal", "nondifferentiable", "tractable"}));
  example->add_option("--threads", opts.threads, "worker threads");
  example->add_option("--step", opts.h, "finite-difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error(std::string(affdim::to_string(affdim::ErrorCode::InvalidArgument)), e.what());
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  try {
    opts.averaged = !no_average;
    if (theta.size() == 2) {
      const double len = std::hypot(theta[0], theta[1]);
      if (!(len > 0.0)) throw affdim::Error(affdim::ErrorCode::InvalidArgument, "--theta must be nonzero");
      opts.theta = {theta[0] / len, theta[1] / len};
    }
    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();

    if (command == "example") {
      auto results = affdim::run_example(example_name, opts);
      const std::string digest = affdim::config_from_fixture(affdim::fixture_by_name(example_name)).digest();
      std::cout << affdim::make_report("example " + example_name, digest, std::move(results), elapsed_ms()).dump(2)
                << '\n';
      return 0;
    }

    affdim::SystemConfig config;
    if (!config_path.empty()) {
      config = affdim::load_config(config_path);
    } else if (!inline_json.empty()) {
      config = affdim::parse_config_text(inline_json);
    } else {
      config = affdim::config_from_fixture(affdim::fixture_by_name(fixture_name));
    }
    if (seed) config.seed = *seed;
    if (max_words) config.budgets.max_words = *max_words;
    if (max_depth) config.budgets.max_depth = *max_depth;

    auto out = affdim::run_command(command, config, opts);
    if (out.raw) {
      std::cout << *out.raw;
      return 0;
    }
    std::cout << affdim::make_report(command, config.digest(), std::move(out.results), elapsed_ms()).dump(2) << '\n';
    return 0;
  } catch (const affdim::Error& e) {
    print_error(std::string(affdim::to_string(e.code())), e.what());
    return affdim::exit_code(e.code());
  } catch (const std::exception& e) {
    print_error("NumericFailure", e.what());
    return 4;
  }
}
