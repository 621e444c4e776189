#include "affdim/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "affdim/error.hpp"
#include "affdim/kernels.hpp"

namespace affdim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_system(const SubshiftAutomaton& automaton, std::span<const Matrix> matrices) {
  if (matrices.size() != automaton.alphabet_size()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(automaton.alphabet_size()) +
                                                  " matrices, got " + std::to_string(matrices.size()));
  }
  for (const auto& m : matrices) {
    if (m.dim() == 0 || m.dim() != matrices[0].dim()) {
      throw Error(ErrorCode::DimensionMismatch, "matrices must share one nonzero dimension");
    }
  }
}

// Depth-first walk over the words of K_n below `start` (reached after the
// letters already folded into `prefix`), emitting one spectrum per leaf in
// lexicographic order.
template <class Emit>
void walk(const SubshiftAutomaton& automaton, std::span<const ScaledMatrix> scaled, std::int32_t start,
          const ScaledMatrix& prefix, std::size_t remaining, Emit&& emit) {
  if (remaining == 0) {
    emit(singular_spectrum(prefix));
    return;
  }
  const std::size_t k = automaton.alphabet_size();
  std::vector<ScaledMatrix> products(remaining + 1);
  std::vector<std::int32_t> nodes(remaining + 1);
  std::vector<Letter> letters(remaining + 1, 0);
  products[0] = prefix;
  nodes[0] = start;
  std::size_t depth = 0;
  letters[0] = 0;
  while (true) {
    // find the next live letter at this depth
    Letter a = letters[depth];
    while (a < k && automaton.next(nodes[depth], a) == SubshiftAutomaton::kNone) ++a;
    if (a == k) {
      if (depth == 0) return;
      --depth;
      ++letters[depth];
      continue;
    }
    letters[depth] = a;
    products[depth + 1] = products[depth] * scaled[a];
    if (depth + 1 == remaining) {
      emit(singular_spectrum(products[depth + 1]));
      ++letters[depth];
      continue;
    }
    nodes[depth + 1] = automaton.next(nodes[depth], a);
    ++depth;
    letters[depth] = 0;
  }
}

double log_binomial_rows(std::size_t n, std::size_t k) {
  // log C(n + k - 1, k - 1), the number of letter-count vectors
  return std::lgamma(static_cast<double>(n + k)) - std::lgamma(static_cast<double>(n + 1)) -
         std::lgamma(static_cast<double>(k));
}

}  // namespace

SpectrumTable::SpectrumTable(std::size_t dim)
    : dim_(dim), cumulative_(dim + 1), log_alpha_(dim) {}

void SpectrumTable::push_columns(const SingularSpectrum& s) {
  if (s.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "spectrum dimension differs from table");
  double acc = 0.0;
  cumulative_[0].push_back(0.0);
  for (std::size_t l = 0; l < dim_; ++l) {
    log_alpha_[l].push_back(s.log_alphas[l]);
    acc += s.log_alphas[l];
    cumulative_[l + 1].push_back(l + 1 == dim_ ? s.log_det : acc);
  }
}

void SpectrumTable::append(const SingularSpectrum& s) {
  if (has_multiplicity()) {
    throw Error(ErrorCode::InvalidArgument, "table carries multiplicities; append with counts");
  }
  push_columns(s);
}

void SpectrumTable::append(const SingularSpectrum& s, double log_multiplicity, std::vector<std::uint32_t> counts) {
  if (rows() > 0 && !has_multiplicity()) {
    throw Error(ErrorCode::InvalidArgument, "table has no multiplicities");
  }
  push_columns(s);
  if (lse_base_.empty()) lse_base_.resize(dim_);
  log_mult_.push_back(log_multiplicity);
  const std::size_t r = rows() - 1;
  for (std::size_t l = 0; l < dim_; ++l) lse_base_[l].push_back(log_multiplicity + cumulative_[l][r]);
  counts_.push_back(std::move(counts));
}

void SpectrumTable::append(const SpectrumTable& other) {
  if (other.dim_ != dim_) throw Error(ErrorCode::DimensionMismatch, "table dimensions differ");
  if (other.has_multiplicity() || has_multiplicity()) {
    throw Error(ErrorCode::InvalidArgument, "only plain tables can be concatenated");
  }
  for (std::size_t l = 0; l <= dim_; ++l) {
    cumulative_[l].insert(cumulative_[l].end(), other.cumulative_[l].begin(), other.cumulative_[l].end());
  }
  for (std::size_t l = 0; l < dim_; ++l) {
    log_alpha_[l].insert(log_alpha_[l].end(), other.log_alpha_[l].begin(), other.log_alpha_[l].end());
  }
}

void SpectrumTable::clear() {
  for (auto& c : cumulative_) c.clear();
  for (auto& c : log_alpha_) c.clear();
  for (auto& c : lse_base_) c.clear();
  log_mult_.clear();
  counts_.clear();
}

double SpectrumTable::log_sum_phi(double t) const {
  if (t < 0.0) throw Error(ErrorCode::NegativeT, "t = " + std::to_string(t));
  if (rows() == 0) return kNegInf;
  const auto& base_cols = has_multiplicity() ? lse_base_ : cumulative_;
  const double d = static_cast<double>(dim_);
  if (t >= d) {
    return kernels::axpy_log_sum_exp(base_cols[0], cumulative_[dim_], t / d);
  }
  const auto whole = static_cast<std::size_t>(std::floor(t));
  return kernels::axpy_log_sum_exp(base_cols[whole], log_alpha_[whole], t - static_cast<double>(whole));
}

double SpectrumTable::weighted_log_phi(std::span<const double> weights, double t) const {
  if (t < 0.0) throw Error(ErrorCode::NegativeT, "t = " + std::to_string(t));
  if (weights.size() != rows()) throw Error(ErrorCode::DimensionMismatch, "one weight per row expected");
  const double d = static_cast<double>(dim_);
  if (t >= d) return kernels::weighted_axpy_sum(weights, cumulative_[0], cumulative_[dim_], t / d);
  const auto whole = static_cast<std::size_t>(std::floor(t));
  return kernels::weighted_axpy_sum(weights, cumulative_[whole], log_alpha_[whole],
                                    t - static_cast<double>(whole));
}

double SpectrumTable::weighted_log_alpha(std::span<const double> weights, std::size_t l) const {
  if (l < 1 || l > dim_) throw Error(ErrorCode::InvalidArgument, "singular value index out of range");
  if (weights.size() != rows()) throw Error(ErrorCode::DimensionMismatch, "one weight per row expected");
  return kernels::weighted_axpy_sum(weights, cumulative_[0], log_alpha_[l - 1], 1.0);
}

double SpectrumTable::log_phi_row(std::size_t row, double t) const {
  if (t < 0.0) throw Error(ErrorCode::NegativeT, "t = " + std::to_string(t));
  const double d = static_cast<double>(dim_);
  if (t >= d) return (t / d) * cumulative_[dim_][row];
  const auto whole = static_cast<std::size_t>(std::floor(t));
  return cumulative_[whole][row] + (t - static_cast<double>(whole)) * log_alpha_[whole][row];
}

bool type_class_eligible(const SubshiftAutomaton& automaton, std::span<const Matrix> matrices) {
  if (!automaton.is_full_shift()) return false;
  return std::all_of(matrices.begin(), matrices.end(), [](const Matrix& m) { return m.is_diagonal(); });
}

SpectrumTable enumerate_spectra(std::size_t n, const SubshiftAutomaton& automaton,
                                std::span<const Matrix> matrices, const PartitionOptions& options) {
  check_system(automaton, matrices);
  const std::size_t d = matrices[0].dim();
  const auto scaled = to_scaled(matrices);
  const ScaledMatrix id = ScaledMatrix::from(Matrix::identity(d));
  const std::size_t k = automaton.alphabet_size();

  std::vector<Letter> first;
  for (Letter a = 0; a < k; ++a) {
    if (automaton.next(automaton.root(), a) != SubshiftAutomaton::kNone) first.push_back(a);
  }
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(first.size())));
  if (threads == 1 || n == 1) {
    SpectrumTable table(d);
    walk(automaton, scaled, automaton.root(), id, n, [&](const SingularSpectrum& s) { table.append(s); });
    return table;
  }

  // one subtree per first letter, concatenated in letter order
  std::vector<SpectrumTable> parts(first.size(), SpectrumTable(d));
  std::vector<std::exception_ptr> failures(first.size());
  auto work = [&](std::size_t begin) {
    for (std::size_t i = begin; i < first.size(); i += threads) {
      try {
        const Letter a = first[i];
        walk(automaton, scaled, automaton.next(automaton.root(), a), scaled[a], n - 1,
             [&](const SingularSpectrum& s) { parts[i].append(s); });
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  SpectrumTable table(d);
  for (const auto& p : parts) table.append(p);
  return table;
}

SpectrumTable type_class_spectra(std::size_t n, std::span<const Matrix> matrices) {
  if (matrices.empty()) throw Error(ErrorCode::InvalidArgument, "no matrices");
  const std::size_t d = matrices[0].dim();
  const std::size_t k = matrices.size();
  std::vector<std::vector<double>> log_diag(k, std::vector<double>(d));
  for (std::size_t i = 0; i < k; ++i) {
    if (!matrices[i].is_diagonal()) throw Error(ErrorCode::NotDiagonal, "map " + std::to_string(i));
    if (matrices[i].dim() != d) throw Error(ErrorCode::DimensionMismatch, "map " + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) {
      const double v = std::abs(matrices[i](j, j));
      if (v == 0.0) throw Error(ErrorCode::SingularMatrix, "map " + std::to_string(i));
      log_diag[i][j] = std::log(v);
    }
  }

  SpectrumTable table(d);
  std::vector<std::uint32_t> counts(k, 0);
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);
  SingularSpectrum s;
  s.log_alphas.resize(d);

  // letter-count vectors in lexicographic order of (c_0, c_1, ...)
  auto emit = [&] {
    double log_mult = log_n_fact;
    for (std::size_t i = 0; i < k; ++i) log_mult -= std::lgamma(static_cast<double>(counts[i]) + 1.0);
    s.log_det = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double e = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        if (counts[i] != 0) e += static_cast<double>(counts[i]) * log_diag[i][j];
      }
      s.log_alphas[j] = e;
      s.log_det += e;
    }
    std::sort(s.log_alphas.begin(), s.log_alphas.end(), std::greater<>());
    table.append(s, log_mult, counts);
  };
  auto fill = [&](auto&& self, std::size_t i, std::size_t left) -> void {
    if (i + 1 == k) {
      counts[i] = static_cast<std::uint32_t>(left);
      emit();
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[i] = static_cast<std::uint32_t>(c);
      self(self, i + 1, left - c);
    }
  };
  fill(fill, 0, n);
  return table;
}

void stream_spectra(std::size_t n, const SubshiftAutomaton& automaton, std::span<const Matrix> matrices,
                    std::size_t chunk, const std::function<void(const SpectrumTable&)>& sink) {
  check_system(automaton, matrices);
  if (chunk == 0) throw Error(ErrorCode::InvalidArgument, "chunk must be positive");
  const std::size_t d = matrices[0].dim();
  const auto scaled = to_scaled(matrices);
  SpectrumTable buffer(d);
  walk(automaton, scaled, automaton.root(), ScaledMatrix::from(Matrix::identity(d)), n,
       [&](const SingularSpectrum& s) {
         buffer.append(s);
         if (buffer.rows() == chunk) {
           sink(buffer);
           buffer.clear();
         }
       });
  if (buffer.rows() > 0) sink(buffer);
}

PartitionFunction::PartitionFunction(const SubshiftAutomaton& automaton, std::span<const Matrix> matrices,
                                     std::size_t n, const PartitionOptions& options)
    : automaton_(&automaton), matrices_(matrices.begin(), matrices.end()), n_(n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "depth n must be >= 1");
  check_system(automaton, matrices);
  dim_ = matrices[0].dim();

  method_ = options.method;
  if (method_ == PartitionMethod::Auto) {
    method_ = type_class_eligible(automaton, matrices) ? PartitionMethod::TypeClass : PartitionMethod::Enumerate;
  }
  if (method_ == PartitionMethod::TypeClass) {
    if (!type_class_eligible(automaton, matrices)) {
      throw Error(ErrorCode::InvalidArgument, "type classes need the full shift and diagonal matrices");
    }
    const double log_rows = log_binomial_rows(n, automaton.alphabet_size());
    if (log_rows > std::log(static_cast<double>(options.max_words)) + 1e-9) {
      throw Error(ErrorCode::DepthBudgetExceeded,
                  "n = " + std::to_string(n) + " needs more than " + std::to_string(options.max_words) + " rows");
    }
    table_ = type_class_spectra(n, matrices);
    return;
  }

  std::uint64_t words = 0;
  try {
    words = automaton.count(n);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::CountOverflow) throw;
    words = std::numeric_limits<std::uint64_t>::max();
  }
  if (words > options.max_words) {
    throw Error(ErrorCode::DepthBudgetExceeded, "#K_" + std::to_string(n) + " exceeds the budget of " +
                                                    std::to_string(options.max_words) + " words");
  }
  if (words <= options.cache_rows) {
    table_ = enumerate_spectra(n, automaton, matrices, options);
  } else {
    cached_ = false;
    chunk_ = std::size_t{1} << 16;
  }
}

double PartitionFunction::log_Z(double t) const {
  if (t < 0.0) throw Error(ErrorCode::NegativeT, "t = " + std::to_string(t));
  if (cached_) return table_.log_sum_phi(t);
  double acc = kNegInf;
  stream_spectra(n_, *automaton_, matrices_, chunk_,
                 [&](const SpectrumTable& part) { acc = kernels::log_add(acc, part.log_sum_phi(t)); });
  return acc;
}

void PartitionFunction::for_each_chunk(const std::function<void(const SpectrumTable&)>& sink) const {
  if (cached_) {
    sink(table_);
    return;
  }
  stream_spectra(n_, *automaton_, matrices_, chunk_, sink);
}

PartitionSum log_partition_sum(double t, std::size_t n, const SubshiftAutomaton& automaton,
                               std::span<const Matrix> matrices, const PartitionOptions& options) {
  if (t < 0.0) throw Error(ErrorCode::NegativeT, "t = " + std::to_string(t));
  const PartitionFunction pf(automaton, matrices, n, options);
  return {t, n, pf.log_Z(t)};
}

PressureEstimate pressure_upper(double t, std::span<const std::size_t> depths, const SubshiftAutomaton& automaton,
                                std::span<const Matrix> matrices, const PartitionOptions& options) {
  if (depths.empty()) throw Error(ErrorCode::InvalidArgument, "no depths given");
  PressureEstimate est;
  est.t = t;
  est.upper = std::numeric_limits<double>::infinity();
  for (std::size_t n : depths) {
    const PartitionFunction pf(automaton, matrices, n, options);
    const double p = pf.pressure(t);
    if (p < est.upper) {
      est.upper = p;
      est.n_used = n;
    }
  }
  return est;
}

PressureEstimate pressure_lower(double t, const PartitionFunction& block, const LowerAssumption& assumption) {
  if (!(assumption.D >= 1.0)) throw Error(ErrorCode::InvalidArgument, "D must be >= 1");
  const double log_Z = block.log_Z(t);
  const auto m = static_cast<double>(block.depth());
  PressureEstimate est;
  est.t = t;
  est.upper = log_Z / m;
  est.n_used = block.depth();
  est.lower = (log_Z - std::log(assumption.D)) / m;
  est.assumption = assumption;
  return est;
}

PressureEstimate pressure_lower(double t, std::size_t m, const LowerAssumption& assumption,
                                const SubshiftAutomaton& automaton, std::span<const Matrix> matrices,
                                const PartitionOptions& options) {
  const PartitionFunction block(automaton, matrices, m, options);
  return pressure_lower(t, block, assumption);
}

DimensionBracket singularity_dimension(const PartitionFunction& pf, double tol,
                                       std::optional<LowerBoundRequest> lower, const PartitionOptions& options) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  const auto bounds = contraction_bounds(pf.matrices());
  if (!(bounds.alpha_max < 1.0)) {
    throw Error(ErrorCode::NonContractive, "largest singular value " + std::to_string(bounds.alpha_max));
  }
  const double letters = static_cast<double>(pf.automaton().count(1));
  const double top = std::log(letters) / -std::log(bounds.alpha_max) + static_cast<double>(pf.dim());

  auto bisect = [&](auto&& f) {
    double lo = 0.0, hi = top;
    if (f(hi) >= 0.0) throw Error(ErrorCode::NumericFailure, "pressure not negative at the bracket end");
    if (f(lo) < 0.0) throw Error(ErrorCode::NumericFailure, "pressure negative at t = 0");
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (f(mid) >= 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return std::pair{lo, hi};
  };

  DimensionBracket out;
  out.n_used = pf.depth();
  out.tolerance = tol;
  out.s_upper = bisect([&](double t) { return pf.pressure(t); }).second;

  if (lower) {
    const PartitionFunction block(pf.automaton(), pf.matrices(), lower->block_depth, options);
    const QuasiMultiplicativityProbe probe(lower->probe_depth, pf.automaton(), pf.matrices());
    const auto m = static_cast<double>(lower->block_depth);
    const double s_lower =
        bisect([&](double t) { return (block.log_Z(t) - probe.log_D(t)) / m; }).first;
    out.s_lower = std::min(s_lower, out.s_upper);
    out.lower_assumption = LowerAssumption{probe.D(*out.s_lower), lower->probe_depth};
  }
  return out;
}

double diagonal_pressure(double t, std::span<const Matrix> matrices) {
  if (matrices.empty()) throw Error(ErrorCode::InvalidArgument, "no matrices");
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    if (matrices[i].dim() != 2) throw Error(ErrorCode::DimensionMismatch, "map " + std::to_string(i) + " is not 2x2");
    if (!matrices[i].is_diagonal()) throw Error(ErrorCode::NotDiagonal, "map " + std::to_string(i));
  }
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::TOutOfRange, "t = " + std::to_string(t) + " outside [0, 1]");
  double best = kNegInf;
  for (std::size_t j = 0; j < 2; ++j) {
    double acc = kNegInf;
    for (const auto& m : matrices) acc = kernels::log_add(acc, t * std::log(std::abs(m(j, j))));
    best = std::max(best, acc);
  }
  return best;
}

namespace {

bool crosses_integer(double t, Side side, double h, std::size_t d) {
  for (std::size_t k = 1; k <= d; ++k) {
    const auto kk = static_cast<double>(k);
    if (side == Side::Right && t < kk && kk < t + 2.0 * h) return true;
    if (side == Side::Left && t - 2.0 * h < kk && kk < t) return true;
  }
  return false;
}

}  // namespace

double pressure_derivative(const PartitionFunction& pf, double t, Side side, double h) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "t must be positive");
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "step h must be positive");
  if (side == Side::Left && t - h < 0.0) throw Error(ErrorCode::InvalidArgument, "left step below t = 0");
  if (crosses_integer(t, side, h, pf.dim())) {
    throw Error(ErrorCode::IntegerCrossing,
                "step of " + std::to_string(h) + " from t = " + std::to_string(t) + " crosses an integer");
  }
  const double p0 = pf.pressure(t);
  const double dir = side == Side::Right ? 1.0 : -1.0;
  const double coarse = dir * (pf.pressure(t + dir * h) - p0) / h;
  const double fine = dir * (pf.pressure(t + dir * 0.5 * h) - p0) / (0.5 * h);
  return 2.0 * fine - coarse;
}

namespace {

// Derivative at an interior grid point; uses whichever side stays clear of
// integers, right first.
double any_side_derivative(const PartitionFunction& pf, double t, double h) {
  if (!crosses_integer(t, Side::Right, h, pf.dim())) return pressure_derivative(pf, t, Side::Right, h);
  return pressure_derivative(pf, t, Side::Left, h);
}

}  // namespace

std::vector<Kink> detect_kink(const PartitionFunction& pf, double t_lo, double t_hi, std::size_t grid,
                              double jump_threshold, double h) {
  if (grid < 16) throw Error(ErrorCode::InvalidArgument, "grid needs at least 16 points");
  if (!(t_lo >= 0.0 && t_hi > t_lo)) throw Error(ErrorCode::InvalidArgument, "empty t range");
  if (!(jump_threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "jump threshold must be positive");

  const double spacing = (t_hi - t_lo) / static_cast<double>(grid);
  std::vector<double> ts(grid), ds(grid);
  for (std::size_t j = 0; j < grid; ++j) {
    ts[j] = t_lo + (static_cast<double>(j) + 0.5) * spacing;
    ds[j] = any_side_derivative(pf, ts[j], h);
  }

  const double floor = 0.25 * jump_threshold;
  std::vector<Kink> kinks;
  std::size_t j = 0;
  while (j + 1 < grid) {
    if (ds[j + 1] - ds[j] <= floor) {
      ++j;
      continue;
    }
    std::size_t end = j + 1;
    while (end + 1 < grid && ds[end + 1] - ds[end] > floor) ++end;
    const std::size_t begin = j;
    j = end;
    if (ds[end] - ds[begin] < jump_threshold) continue;

    // bisect toward the half carrying most of the gap
    double left = ts[begin], right = ts[end];
    double dl = ds[begin], dr = ds[end];
    for (int it = 0; it < 60 && right - left > 4.0 * h; ++it) {
      const double mid = 0.5 * (left + right);
      const double dm = any_side_derivative(pf, mid, h);
      const double gap = dr - dl;
      const double gl = dm - dl, gr = dr - dm;
      if (std::max(gl, gr) < std::max(jump_threshold, 0.75 * gap)) break;
      if (gl >= gr) {
        right = mid;
        dr = dm;
      } else {
        left = mid;
        dl = dm;
      }
    }
    const double centre = 0.5 * (left + right);

    // tangents one grid cell either side, outside the finite-depth smoothing
    const double a = std::max(t_lo + 0.25 * spacing, centre - spacing);
    const double b = std::min(t_hi - 0.25 * spacing, centre + spacing);
    const double da = any_side_derivative(pf, a, h);
    const double db = any_side_derivative(pf, b, h);
    double where = centre;
    if (db != da) {
      const double cross = (pf.pressure(b) - pf.pressure(a) + da * a - db * b) / (da - db);
      if (cross >= a && cross <= b) where = cross;
    }
    kinks.push_back({where, db - da});
  }
  return kinks;
}

}  // namespace affdim
