#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "affdim/linalg.hpp"
#include "affdim/symbolic.hpp"

namespace affdim {

enum class PartitionMethod {
  Auto,       // TypeClass when eligible, otherwise Enumerate
  Enumerate,  // depth-first traversal of K_n
  TypeClass,  // full shift with diagonal matrices: one row per letter-count vector
};

struct PartitionOptions {
  std::uint64_t max_words = std::uint64_t{1} << 24;
  // Above this many rows the spectra are streamed in chunks instead of cached.
  std::size_t cache_rows = std::size_t{1} << 21;
  unsigned threads = 1;
  PartitionMethod method = PartitionMethod::Enumerate;
};

/// Per-word log singular values over K_n, stored column-wise so that
/// log phi^t of every row is one axpy of two columns. Rows are in
/// lexicographic word order for the Enumerate route; for TypeClass each row
/// is a letter-count vector with its multinomial multiplicity.
class SpectrumTable {
 public:
  SpectrumTable() = default;
  explicit SpectrumTable(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return log_alpha_.empty() ? 0 : log_alpha_[0].size(); }
  bool has_multiplicity() const noexcept { return !log_mult_.empty(); }

  void append(const SingularSpectrum& s);
  void append(const SingularSpectrum& s, double log_multiplicity, std::vector<std::uint32_t> counts);
  void append(const SpectrumTable& other);
  void clear();

  /// log sum_rows mult * phi^t
  double log_sum_phi(double t) const;
  /// sum_rows weight[r] * log phi^t(row r); weights per row, multiplicity
  /// not applied.
  double weighted_log_phi(std::span<const double> weights, double t) const;
  /// sum_rows weight[r] * log alpha_l(row r), l in 1..d
  double weighted_log_alpha(std::span<const double> weights, std::size_t l) const;

  double log_phi_row(std::size_t row, double t) const;
  double log_alpha(std::size_t row, std::size_t l) const { return log_alpha_[l - 1][row]; }
  double log_multiplicity(std::size_t row) const { return log_mult_.empty() ? 0.0 : log_mult_[row]; }
  const std::vector<std::uint32_t>& letter_counts(std::size_t row) const { return counts_[row]; }

 private:
  void push_columns(const SingularSpectrum& s);

  std::size_t dim_ = 0;
  std::vector<std::vector<double>> cumulative_;  // [l] = sum of the l largest log alphas, l = 0..d
  std::vector<std::vector<double>> log_alpha_;   // [l-1] = log alpha_l
  std::vector<double> log_mult_;
  std::vector<std::vector<double>> lse_base_;  // [l] = log_mult + cumulative (l = 0..d-1)
  std::vector<std::vector<std::uint32_t>> counts_;
};

/// True when the TypeClass route applies: full shift, every matrix diagonal.
bool type_class_eligible(const SubshiftAutomaton& automaton, std::span<const Matrix> matrices);

SpectrumTable enumerate_spectra(std::size_t n, const SubshiftAutomaton& automaton,
                                std::span<const Matrix> matrices, const PartitionOptions& options = {});
SpectrumTable type_class_spectra(std::size_t n, std::span<const Matrix> matrices);

/// Streams the spectra of K_n in lexicographic order, `chunk` rows at a time.
void stream_spectra(std::size_t n, const SubshiftAutomaton& automaton, std::span<const Matrix> matrices,
                    std::size_t chunk, const std::function<void(const SpectrumTable&)>& sink);

/// t -> log sum_{i in K_n} phi^t(A_i) at a fixed depth. Spectra are computed
/// once (or streamed when K_n is larger than the cache) and reused across t.
class PartitionFunction {
 public:
  /// Throws EmptySubshift, DepthBudgetExceeded, InvalidArgument (n < 1).
  PartitionFunction(const SubshiftAutomaton& automaton, std::span<const Matrix> matrices, std::size_t n,
                    const PartitionOptions& options = {});

  std::size_t depth() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }
  PartitionMethod method() const noexcept { return method_; }
  const SpectrumTable* table() const noexcept { return cached_ ? &table_ : nullptr; }
  const SubshiftAutomaton& automaton() const noexcept { return *automaton_; }
  std::span<const Matrix> matrices() const noexcept { return matrices_; }

  double log_Z(double t) const;
  double pressure(double t) const { return log_Z(t) / static_cast<double>(n_); }
  /// Hands the rows to `sink` in order: the cached table once, or successive
  /// streamed chunks.
  void for_each_chunk(const std::function<void(const SpectrumTable&)>& sink) const;

 private:
  const SubshiftAutomaton* automaton_;
  std::vector<Matrix> matrices_;
  std::size_t n_;
  std::size_t dim_;
  PartitionMethod method_;
  bool cached_ = true;
  std::size_t chunk_ = 0;
  SpectrumTable table_;
};

struct PartitionSum {
  double t = 0.0;
  std::size_t n = 0;
  double log_Z = 0.0;
};

PartitionSum log_partition_sum(double t, std::size_t n, const SubshiftAutomaton& automaton,
                               std::span<const Matrix> matrices, const PartitionOptions& options = {});

/// The quasi-multiplicativity constant a lower bound rests on. Probed values
/// only hold for the probed word lengths.
struct LowerAssumption {
  double D = 1.0;
  std::size_t probe_depth = 0;  // 0 when D was supplied rather than probed
};

struct PressureEstimate {
  double t = 0.0;
  double upper = 0.0;
  std::size_t n_used = 0;
  std::optional<double> lower;
  std::optional<LowerAssumption> assumption;
};

/// min over the given depths of (1/n) log Z_n(t): an upper bound on P_K(t).
PressureEstimate pressure_upper(double t, std::span<const std::size_t> depths,
                                const SubshiftAutomaton& automaton, std::span<const Matrix> matrices,
                                const PartitionOptions& options = {});

/// (1/m)(log Z_m(t) - log D). Only valid if D bounds every word pair.
PressureEstimate pressure_lower(double t, std::size_t m, const LowerAssumption& assumption,
                                const SubshiftAutomaton& automaton, std::span<const Matrix> matrices,
                                const PartitionOptions& options = {});
PressureEstimate pressure_lower(double t, const PartitionFunction& block, const LowerAssumption& assumption);

struct LowerBoundRequest {
  std::size_t block_depth = 8;
  std::size_t probe_depth = 4;
};

struct DimensionBracket {
  double s_upper = 0.0;
  std::optional<double> s_lower;
  std::size_t n_used = 0;
  double tolerance = 0.0;
  std::optional<LowerAssumption> lower_assumption;  // probe depth; D varies with t
};

/// Bisection for the zero of the depth-n pressure on [0, T] with
/// T = log #K_1 / log(1/alpha_max) + d. s_upper is the right end of the
/// final bracket, so the depth-n pressure there is <= 0. Throws NonContractive.
DimensionBracket singularity_dimension(const PartitionFunction& pf, double tol,
                                       std::optional<LowerBoundRequest> lower = std::nullopt,
                                       const PartitionOptions& options = {});

/// max{log sum_i |A_i(0,0)|^t, log sum_i |A_i(1,1)|^t}, exact for the full
/// shift over diagonal 2x2 matrices and 0 <= t <= 1. Throws NotDiagonal,
/// DimensionMismatch, TOutOfRange.
double diagonal_pressure(double t, std::span<const Matrix> matrices);

enum class Side { Left, Right };

/// One-sided difference quotient of the depth-n pressure, Richardson-
/// extrapolated over h and h/2. Throws IntegerCrossing if an integer in
/// {1..d} lies strictly between t and t -/+ 2h.
double pressure_derivative(const PartitionFunction& pf, double t, Side side, double h = 1e-3);

struct Kink {
  double t = 0.0;
  double jump = 0.0;  // P'(t+) - P'(t-)
};

/// Scans a grid of one-sided derivatives on [t_lo, t_hi] for jumps above the
/// threshold. Heuristic: a smoothed kink at finite depth is found as a run of
/// grid cells whose combined derivative increase clears the threshold, then
/// localized by bisection on the derivative gap. Requires grid >= 16.
std::vector<Kink> detect_kink(const PartitionFunction& pf, double t_lo, double t_hi, std::size_t grid,
                              double jump_threshold, double h = 1e-3);

}  // namespace affdim
