#include "affdim/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "affdim/geometry.hpp"
#include "affdim/linalg.hpp"
#include "affdim/measures.hpp"
#include "affdim/pressure.hpp"

#ifndef AFFDIM_VERSION
#define AFFDIM_VERSION "0.0.0"
#endif

namespace affdim {

namespace {

using nlohmann::json;

// One loaded system: automaton plus everything derived from the config.
struct System {
  const SystemConfig& config;
  SubshiftAutomaton automaton;
  const CommandOptions& options;

  System(const SystemConfig& cfg, const CommandOptions& opts)
      : config(cfg), automaton(SubshiftAutomaton::compile(cfg.subshift)), options(opts) {}

  std::span<const Matrix> matrices() const { return config.ifs.matrices; }

  PartitionMethod method() const {
    if (options.method == "auto") return PartitionMethod::Auto;
    if (options.method == "enumerate") return PartitionMethod::Enumerate;
    if (options.method == "type-class") return PartitionMethod::TypeClass;
    throw Error(ErrorCode::InvalidArgument, "--method must be auto, enumerate or type-class");
  }

  bool uses_type_classes(PartitionMethod m) const {
    return m == PartitionMethod::TypeClass ||
           (m == PartitionMethod::Auto && type_class_eligible(automaton, matrices()));
  }

  // Enumerated depths are capped by budgets.max_depth; type-class rows only
  // by budgets.max_words.
  PartitionOptions partition(std::size_t n, PartitionMethod m) const {
    if (!uses_type_classes(m) && n > config.budgets.max_depth) {
      throw Error(ErrorCode::DepthBudgetExceeded,
                  "depth " + std::to_string(n) + " exceeds budgets.max_depth = " + std::to_string(config.budgets.max_depth));
    }
    PartitionOptions p;
    p.max_words = config.budgets.max_words;
    p.threads = options.threads;
    p.method = m;
    return p;
  }
  PartitionOptions partition(std::size_t n) const { return partition(n, method()); }

  PartitionFunction partition_function(std::size_t n) const {
    return PartitionFunction(automaton, matrices(), n, partition(n));
  }

  // Type classes only apply to Bernoulli measures.
  PartitionFunction measure_partition_function(const CylinderMeasure& mu, std::size_t n) const {
    PartitionMethod m = method();
    if (m == PartitionMethod::Auto && dynamic_cast<const BernoulliMeasure*>(&mu) == nullptr) {
      m = PartitionMethod::Enumerate;
    }
    return PartitionFunction(automaton, matrices(), n, partition(n, m));
  }

  std::size_t depth(std::size_t fallback) const { return options.n.value_or(fallback); }
  double t(double fallback) const { return options.t.value_or(fallback); }
};

json assumption_json(const std::optional<LowerAssumption>& a, std::optional<std::size_t> block) {
  if (!a) return nullptr;
  json out = {{"type", "quasimultiplicative"}, {"D", a->D}, {"probe_depth", a->probe_depth}};
  if (block) out["m"] = *block;
  if (a->probe_depth > 0) out["empirical"] = true;
  return out;
}

json estimate_json(const PressureEstimate& e, std::optional<std::size_t> block = std::nullopt) {
  return {{"t", e.t},
          {"upper", e.upper},
          {"n", e.n_used},
          {"lower", e.lower ? json(*e.lower) : json(nullptr)},
          {"assumption", assumption_json(e.assumption, block)}};
}

json bracket_json(const DimensionBracket& b) {
  return {{"s_upper", b.s_upper},
          {"s_lower", b.s_lower ? json(*b.s_lower) : json(nullptr)},
          {"n", b.n_used},
          {"tolerance", b.tolerance},
          {"assumption", assumption_json(b.lower_assumption, std::nullopt)}};
}

std::string csv_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

std::string cloud_csv(const PointCloud& cloud) {
  std::string out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j) out += ',';
      out += csv_number(p[j]);
    }
    out += '\n';
  }
  return out;
}

json boxcount_json(const BoxCountReport& r) {
  return {{"scales", r.scales},
          {"counts", r.counts},
          {"slope", r.slope},
          {"intercept", r.intercept},
          {"r_squared", r.r_squared},
          {"window", {r.window_begin, r.window_end}}};
}

PointCloud sample_cloud(const System& sys, std::size_t n) {
  if (n > sys.config.budgets.max_depth) {
    throw Error(ErrorCode::DepthBudgetExceeded, "depth " + std::to_string(n) + " exceeds budgets.max_depth");
  }
  SampleOptions so;
  so.max_words = sys.config.budgets.max_words;
  return attractor_sample(n, sys.config.ifs, sys.automaton, so);
}

std::size_t kink_depth(const System& sys) {
  return sys.options.n.value_or(sys.uses_type_classes(sys.method()) ? 4096 : 14);
}

json kinks_json(const System& sys, double t_lo, double t_hi) {
  const std::size_t n = kink_depth(sys);
  const PartitionFunction pf = sys.partition_function(n);
  const auto kinks = detect_kink(pf, t_lo, t_hi, sys.options.grid, sys.options.threshold, sys.options.h);
  json list = json::array();
  for (const auto& k : kinks) list.push_back({{"t", k.t}, {"jump", k.jump}, {"n", n}});
  return {{"n", n},
          {"method", pf.method() == PartitionMethod::TypeClass ? "type-class" : "enumerate"},
          {"t_range", {t_lo, t_hi}},
          {"grid", sys.options.grid},
          {"threshold", sys.options.threshold},
          {"kinks", list}};
}

CommandOutput cmd_pressure(const System& sys) {
  const double t = sys.t(1.0);
  PressureEstimate est;
  if (!sys.options.depths.empty()) {
    for (std::size_t n : sys.options.depths) (void)sys.partition(n);
    est = pressure_upper(t, sys.options.depths, sys.automaton, sys.matrices(), sys.partition(0));
  } else {
    const std::size_t n = sys.depth(12);
    est = pressure_upper(t, std::vector<std::size_t>{n}, sys.automaton, sys.matrices(), sys.partition(n));
  }
  if (sys.options.D || sys.options.probe_depth) {
    const std::size_t m = sys.options.block.value_or(est.n_used);
    LowerAssumption a;
    if (sys.options.D) {
      a.D = *sys.options.D;
    } else {
      const QuasiMultiplicativityProbe probe(*sys.options.probe_depth, sys.automaton, sys.matrices());
      a = {probe.D(t), *sys.options.probe_depth};
    }
    const auto low = pressure_lower(t, m, a, sys.automaton, sys.matrices(), sys.partition(m));
    est.lower = std::min(*low.lower, est.upper);
    est.assumption = a;
    return {estimate_json(est, m), std::nullopt};
  }
  return {estimate_json(est), std::nullopt};
}

CommandOutput cmd_curve(const System& sys) {
  const std::size_t n = sys.depth(12);
  const double lo = sys.options.t_lo.value_or(0.0);
  const double hi = sys.options.t_hi.value_or(static_cast<double>(sys.config.dimension));
  if (sys.options.points < 2 || !(hi > lo)) throw Error(ErrorCode::InvalidArgument, "curve needs 2+ points on a nonempty range");
  const PartitionFunction pf = sys.partition_function(n);
  json rows = json::array();
  for (std::size_t i = 0; i < sys.options.points; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(sys.options.points - 1);
    rows.push_back({{"t", t}, {"upper", pf.pressure(t)}, {"n", n}});
  }
  return {{{"n", n}, {"points", rows}}, std::nullopt};
}

CommandOutput cmd_dimension(const System& sys) {
  const std::size_t n = sys.depth(16);
  const PartitionFunction pf = sys.partition_function(n);
  std::optional<LowerBoundRequest> lower;
  if (sys.options.lower) {
    lower = LowerBoundRequest{sys.options.block.value_or(8), sys.options.probe_depth.value_or(4)};
    (void)sys.partition(lower->block_depth, PartitionMethod::Enumerate);
  }
  const auto b = singularity_dimension(pf, sys.options.tol, lower, sys.partition(n, PartitionMethod::Enumerate));
  return {bracket_json(b), std::nullopt};
}

CommandOutput cmd_kink(const System& sys) {
  return {kinks_json(sys, sys.options.t_lo.value_or(0.0), sys.options.t_hi.value_or(1.0)), std::nullopt};
}

CommandOutput cmd_entropy(const System& sys) {
  const auto mu = make_measure(sys.config, sys.automaton);
  const std::size_t n = sys.depth(12);
  double finite = 0.0;
  if (sys.uses_type_classes(sys.method()) && dynamic_cast<const BernoulliMeasure*>(mu.get())) {
    finite = entropy_finite(*mu, sys.measure_partition_function(*mu, n));
  } else {
    (void)sys.partition(n, PartitionMethod::Enumerate);
    finite = entropy_finite(*mu, n, sys.automaton);
  }
  json closed = nullptr;
  if (mu->kind() == "bernoulli" || mu->kind() == "markov") closed = entropy_closed(*mu);
  return {{{"n", n}, {"finite", finite}, {"closed", closed}}, std::nullopt};
}

CommandOutput cmd_energy(const System& sys) {
  const auto mu = make_measure(sys.config, sys.automaton);
  const std::size_t n = sys.depth(12);
  const double t = sys.t(1.0);
  const auto pf = sys.measure_partition_function(*mu, n);
  return {{{"n", n}, {"t", t}, {"energy", energy_finite(*mu, t, pf)}}, std::nullopt};
}

CommandOutput cmd_lyapunov(const System& sys) {
  const auto mu = make_measure(sys.config, sys.automaton);
  const std::size_t n = sys.depth(12);
  const auto pf = sys.measure_partition_function(*mu, n);
  return {{{"n", n}, {"exponents", lyapunov(*mu, pf)}}, std::nullopt};
}

CommandOutput cmd_gap(const System& sys) {
  const auto mu = make_measure(sys.config, sys.automaton);
  const std::size_t n = sys.depth(12);
  const double t = sys.t(1.0);
  const auto pf = sys.measure_partition_function(*mu, n);
  return {{{"n", n}, {"t", t}, {"gap", equilibrium_gap(*mu, t, pf)}}, std::nullopt};
}

json gibbs_json(const GibbsReport& g) {
  json depths = json::array();
  for (const auto& d : g.depths) depths.push_back({{"n", d.n}, {"min_ratio", d.min_ratio}, {"max_ratio", d.max_ratio}});
  return {{"t", g.t}, {"P", g.P}, {"min_ratio", g.min_ratio}, {"max_ratio", g.max_ratio}, {"depths", depths}};
}

CommandOutput cmd_gibbs(const System& sys) {
  const auto mu = make_measure(sys.config, sys.automaton);
  const std::size_t n = sys.depth(12);
  PartitionMethod m = sys.method();
  if (m == PartitionMethod::Auto && mu->kind() != "bernoulli") m = PartitionMethod::Enumerate;
  const auto g = gibbs_ratios(*mu, sys.t(1.0), sys.options.P.value_or(0.0), n, sys.automaton, sys.matrices(),
                              sys.partition(n, m));
  json out = gibbs_json(g);
  out["max_depth"] = n;
  return {out, std::nullopt};
}

CommandOutput cmd_empirical(const System& sys) {
  const std::size_t n = sys.depth(12);
  const double t = sys.t(1.0);
  const PartitionFunction pf(sys.automaton, sys.matrices(), n, sys.partition(n, PartitionMethod::Enumerate));
  const auto cd = empirical_equilibrium(t, sys.options.k, pf, sys.options.averaged);
  json weights = json::array();
  const std::size_t kappa = cd.alphabet_size();
  for (std::size_t idx = 0; idx < cd.weights().size(); ++idx) {
    Word w(cd.depth());
    std::size_t rest = idx;
    for (std::size_t m = cd.depth(); m-- > 0;) {
      w[m] = static_cast<Letter>(rest % kappa);
      rest /= kappa;
    }
    weights.push_back({{"word", w}, {"weight", cd.weights()[idx]}});
  }
  json out = {{"n", n}, {"k", cd.depth()}, {"t", t}, {"averaged", sys.options.averaged}, {"weights", weights}};
  if (cd.depth() >= 2) {
    const auto c = check_consistency(cd);
    out["consistency"] = {{"consistent", c.consistent}, {"max_defect", c.max_defect}};
  } else {
    out["consistency"] = nullptr;
  }
  return {out, std::nullopt};
}

CommandOutput cmd_sample(const System& sys) {
  const std::size_t n = sys.depth(10);
  const PointCloud cloud = sample_cloud(sys, n);
  const std::string text = cloud_csv(cloud);
  if (!sys.options.csv) return {json::object(), text};
  write_file(*sys.options.csv, text);
  return {{{"n", n}, {"points", cloud.size()}, {"resolution", cloud.resolution}, {"csv", *sys.options.csv}},
          std::nullopt};
}

CommandOutput cmd_boxcount(const System& sys) {
  const std::size_t n = sys.depth(12);
  const PointCloud cloud = sample_cloud(sys, n);
  BoxCountOptions bo;
  bo.scales = sys.options.scales;
  const auto r = box_count(cloud, bo);
  if (sys.options.csv) {
    std::string text = "epsilon,count\n";
    for (std::size_t i = 0; i < r.scales.size(); ++i) text += csv_number(r.scales[i]) + "," + std::to_string(r.counts[i]) + "\n";
    write_file(*sys.options.csv, text);
  }
  json out = boxcount_json(r);
  out["n"] = n;
  out["points"] = cloud.size();
  out["resolution"] = cloud.resolution;
  return {out, std::nullopt};
}

CommandOutput cmd_cone(const System& sys) {
  const auto c = check_cone_condition(sys.matrices(), sys.options.theta, sys.options.beta);
  return {{{"theta", sys.options.theta}, {"beta", sys.options.beta}, {"holds", c.holds}, {"margin", c.margin}},
          std::nullopt};
}

CommandOutput cmd_probe(const System& sys) {
  const std::size_t m = sys.depth(6);
  if (m > sys.config.budgets.max_depth) throw Error(ErrorCode::DepthBudgetExceeded, "probe depth exceeds budgets.max_depth");
  const double t = sys.t(0.5);
  const QuasiMultiplicativityProbe probe(m, sys.automaton, sys.matrices());
  return {{{"t", t}, {"depth", m}, {"D", probe.D(t)}, {"pairs", probe.num_pairs()}, {"empirical", true}},
          std::nullopt};
}

// ---- fixture suites ----

json suite_not_unique(const CommandOptions& opts) {
  const Fixture fx = not_unique_fixture();
  const SystemConfig cfg = config_from_fixture(fx);
  const System sys(cfg, opts);
  const auto pf = sys.partition_function(20);
  const auto bracket = singularity_dimension(pf, 1e-10);
  // Exact root of the closed-form pressure; the Gibbs and variational checks need P(s) = 0.
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    (diagonal_pressure(mid, sys.matrices()) > 0.0 ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);

  const auto mu = std::make_shared<BernoulliMeasure>(*fx.bernoulli);
  const auto nu = std::make_shared<BernoulliMeasure>(std::vector<double>{fx.bernoulli->at(1), fx.bernoulli->at(0)});
  const MixtureMeasure eta({mu, nu}, {0.5, 0.5});
  PartitionOptions enumerate = sys.partition(12, PartitionMethod::Enumerate);
  const auto g_eta = gibbs_ratios(eta, s, 0.0, 12, sys.automaton, sys.matrices(), enumerate);
  const auto g_mu = gibbs_ratios(*mu, s, 0.0, 20, sys.automaton, sys.matrices(), sys.partition(20));

  const auto pf_gap = sys.partition_function(14);
  const auto pf_long = sys.partition_function(10000);
  const auto lyap = lyapunov(*mu, pf_long);
  const double h = entropy_closed(*mu);
  return {{"fixture", fx.name},
          {"summary", fx.summary},
          {"dimension", bracket_json(bracket)},
          {"closed_form_root", s},
          {"diagonal_pressure_at_root", diagonal_pressure(s, sys.matrices())},
          {"gibbs_mixture", {{"max_depth", 12}, {"min_ratio", g_eta.min_ratio}, {"max_ratio", g_eta.max_ratio}}},
          {"gibbs_mu", {{"max_depth", 20}, {"min_ratio", g_mu.min_ratio}, {"max_ratio", g_mu.max_ratio}}},
          {"gap_mu", {{"n", 14}, {"gap", equilibrium_gap(*mu, s, pf_gap)}}},
          {"gap_nu", {{"n", 14}, {"gap", equilibrium_gap(*nu, s, pf_gap)}}},
          {"variational",
           {{"n", pf_long.depth()}, {"entropy", h}, {"lyapunov", lyap}, {"h_plus_s_lambda1", h + s * lyap[0]}}}};
}

json suite_no_semiconformal(const CommandOptions& opts) {
  const Fixture fx = no_semiconformal_fixture();
  const SystemConfig cfg = config_from_fixture(fx);
  const System sys(cfg, opts);
  const auto bracket = singularity_dimension(sys.partition_function(16), 1e-10);
  const BernoulliMeasure uniform = BernoulliMeasure::uniform(2);
  const auto g = gibbs_ratios(uniform, 0.5, 0.0, 24, sys.automaton, sys.matrices(), sys.partition(24, PartitionMethod::Enumerate));
  json scaled = json::array();
  for (const auto& d : g.depths) {
    scaled.push_back({{"n", d.n}, {"min_ratio", d.min_ratio}, {"min_ratio_times_n_pow_s", d.min_ratio * std::sqrt(static_cast<double>(d.n))}});
  }
  json probes = json::array();
  for (std::size_t m = 2; m <= 6; ++m) {
    const QuasiMultiplicativityProbe probe(m, sys.automaton, sys.matrices());
    probes.push_back({{"depth", m}, {"D", probe.D(0.5)}, {"empirical", true}});
  }
  const auto cone = check_cone_condition(sys.matrices(), opts.theta, opts.beta);
  return {{"fixture", fx.name},
          {"summary", fx.summary},
          {"dimension", bracket_json(bracket)},
          {"gibbs_uniform", scaled},
          {"probe_D", probes},
          {"cone", {{"holds", cone.holds}, {"margin", cone.margin}}}};
}

json suite_nondifferentiable(const CommandOptions& opts) {
  const Fixture fx = nondifferentiable_fixture();
  const SystemConfig cfg = config_from_fixture(fx);
  const System sys(cfg, opts);
  const auto kinks = kinks_json(sys, 0.5, 1.0);
  const auto pf = sys.partition_function(kink_depth(sys));
  return {{"fixture", fx.name},
          {"summary", fx.summary},
          {"kink", kinks},
          {"derivative",
           {{"n", pf.depth()},
            {"t_0.6", pressure_derivative(pf, 0.6, Side::Right, opts.h)},
            {"t_0.95", pressure_derivative(pf, 0.95, Side::Right, opts.h)}}},
          {"diagonal_pressure_at_half", diagonal_pressure(0.5, sys.matrices())}};
}

json suite_tractable(const CommandOptions& opts) {
  const Fixture fx = tractable_fixture();
  const SystemConfig cfg = config_from_fixture(fx);
  const System sys(cfg, opts);
  const auto cone = check_cone_condition(sys.matrices(), opts.theta, opts.beta);
  const auto bracket = singularity_dimension(sys.partition_function(14), 1e-10);
  const PointCloud cloud = sample_cloud(sys, 12);
  const auto plane = hyperplane_check(cloud);
  const auto box = box_count(cloud);
  const auto incl = inclusion_check(cloud, cfg.ifs, 1e-9);
  return {{"fixture", fx.name},
          {"summary", fx.summary},
          {"cone", {{"holds", cone.holds}, {"margin", cone.margin}}},
          {"dimension", bracket_json(bracket)},
          {"hyperplane", {{"contained", plane.contained}, {"rank", plane.rank}, {"singular_values", plane.singular_values}}},
          {"boxcount", boxcount_json(box)},
          {"inclusion", {{"max_defect", incl.max_defect}, {"bound", incl.bound}, {"within", incl.within}}},
          {"dimension_gap", bracket.s_upper - box.slope}};
}

}  // namespace

std::vector<std::string_view> subcommand_names() {
  return {"pressure", "curve",     "dimension", "kink",   "entropy",    "energy",  "lyapunov", "gap",
          "gibbs",    "empirical-equilibrium",  "sample", "boxcount",   "cone-check", "probe-d", "example"};
}

CommandOutput run_command(std::string_view subcommand, const SystemConfig& config, const CommandOptions& options) {
  const System sys(config, options);
  if (subcommand == "pressure") return cmd_pressure(sys);
  if (subcommand == "curve") return cmd_curve(sys);
  if (subcommand == "dimension") return cmd_dimension(sys);
  if (subcommand == "kink") return cmd_kink(sys);
  if (subcommand == "entropy") return cmd_entropy(sys);
  if (subcommand == "energy") return cmd_energy(sys);
  if (subcommand == "lyapunov") return cmd_lyapunov(sys);
  if (subcommand == "gap") return cmd_gap(sys);
  if (subcommand == "gibbs") return cmd_gibbs(sys);
  if (subcommand == "empirical-equilibrium") return cmd_empirical(sys);
  if (subcommand == "sample") return cmd_sample(sys);
  if (subcommand == "boxcount") return cmd_boxcount(sys);
  if (subcommand == "cone-check") return cmd_cone(sys);
  if (subcommand == "probe-d") return cmd_probe(sys);
  throw Error(ErrorCode::UnknownSubcommand, "'" + std::string(subcommand) + "'");
}

nlohmann::json run_example(std::string_view fixture, const CommandOptions& options) {
  if (fixture == "not-unique") return suite_not_unique(options);
  if (fixture == "no-semiconformal") return suite_no_semiconformal(options);
  if (fixture == "nondifferentiable") return suite_nondifferentiable(options);
  if (fixture == "tractable") return suite_tractable(options);
  throw Error(ErrorCode::InvalidArgument, "unknown fixture '" + std::string(fixture) + "'");
}

nlohmann::json make_report(std::string_view command, const std::string& digest, nlohmann::json results,
                           double wall_ms) {
  return {{"command", command},
          {"digest", digest},
          {"results", std::move(results)},
          {"version", library_version()},
          {"wall_ms", wall_ms}};
}

std::string_view library_version() noexcept { return AFFDIM_VERSION; }

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DepthBudgetExceeded:
    case ErrorCode::CountOverflow:
      return 3;
    case ErrorCode::SingularMatrix:
    case ErrorCode::NumericFailure:
      return 4;
    default:
      return 2;
  }
}

}  // namespace affdim
