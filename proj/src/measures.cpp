#include "affdim/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "affdim/error.hpp"

namespace affdim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_letters(std::span<const Letter> w, std::size_t alphabet_size) {
  for (Letter a : w) {
    if (a >= alphabet_size) {
      throw Error(ErrorCode::LetterOutOfRange,
                  "letter " + std::to_string(a) + " outside alphabet of size " + std::to_string(alphabet_size));
    }
  }
}

void check_probability_vector(std::span<const double> p, double tol, const std::string& what) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, what + " has a negative entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw Error(ErrorCode::InvalidArgument, what + " sums to " + std::to_string(sum));
  }
}

double entropy_term(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

// Per-row probability mass of a partition function's table, and the log
// mass of a single word in that row (rows of a type-class table hold many
// words of equal mass).
struct RowMass {
  std::vector<double> mass;
  std::vector<double> log_word;
};

RowMass row_mass(const CylinderMeasure& mu, const PartitionFunction& pf) {
  const SpectrumTable* table = pf.table();
  if (table == nullptr) {
    throw Error(ErrorCode::DepthBudgetExceeded, "depth " + std::to_string(pf.depth()) + " is too large to cache");
  }
  if (mu.alphabet_size() != pf.automaton().alphabet_size()) {
    throw Error(ErrorCode::DimensionMismatch, "measure and subshift alphabets differ");
  }
  RowMass out;
  out.mass.reserve(table->rows());
  out.log_word.reserve(table->rows());
  if (pf.method() == PartitionMethod::TypeClass) {
    const auto* bernoulli = dynamic_cast<const BernoulliMeasure*>(&mu);
    if (bernoulli == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "type-class rows need a Bernoulli measure");
    }
    std::vector<double> log_p(bernoulli->p().size());
    for (std::size_t i = 0; i < log_p.size(); ++i) log_p[i] = std::log(bernoulli->p()[i]);
    for (std::size_t r = 0; r < table->rows(); ++r) {
      const auto& counts = table->letter_counts(r);
      double lw = 0.0;
      for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] != 0) lw += static_cast<double>(counts[i]) * log_p[i];
      }
      out.log_word.push_back(lw);
      out.mass.push_back(std::exp(table->log_multiplicity(r) + lw));
    }
    return out;
  }
  pf.automaton().for_each_word(pf.depth(), [&](std::span<const Letter> w) {
    const double p = mu.cylinder_prob(w);
    out.mass.push_back(p);
    out.log_word.push_back(p > 0.0 ? std::log(p) : kNegInf);
  });
  return out;
}

std::size_t int_pow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

BernoulliMeasure::BernoulliMeasure(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw Error(ErrorCode::InvalidArgument, "empty probability vector");
  check_probability_vector(p_, 1e-12, "probability vector");
  for (double x : p_) {
    if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "Bernoulli weights must be positive");
  }
}

BernoulliMeasure BernoulliMeasure::uniform(std::size_t alphabet_size) {
  return BernoulliMeasure(std::vector<double>(alphabet_size, 1.0 / static_cast<double>(alphabet_size)));
}

double BernoulliMeasure::cylinder_prob(std::span<const Letter> w) const {
  check_letters(w, p_.size());
  double prob = 1.0;
  for (Letter a : w) prob *= p_[a];
  return prob;
}

MarkovMeasure::MarkovMeasure(std::vector<std::vector<double>> transition, std::optional<std::vector<double>> stationary)
    : transition_(std::move(transition)) {
  const std::size_t k = transition_.size();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "empty transition matrix");
  for (std::size_t i = 0; i < k; ++i) {
    if (transition_[i].size() != k) throw Error(ErrorCode::DimensionMismatch, "transition matrix is not square");
    check_probability_vector(transition_[i], 1e-12, "transition row " + std::to_string(i));
  }

  if (stationary) {
    if (stationary->size() != k) throw Error(ErrorCode::DimensionMismatch, "stationary vector length");
    check_probability_vector(*stationary, 1e-12, "stationary vector");
    stationary_ = std::move(*stationary);
  } else {
    // solve pi (P - I) = 0 with the last equation replaced by sum(pi) = 1
    std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) a[i][j] = transition_[j][i] - (i == j ? 1.0 : 0.0);
    }
    for (std::size_t j = 0; j < k; ++j) a[k - 1][j] = 1.0;
    a[k - 1][k] = 1.0;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < k; ++r) {
        if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
      }
      if (std::abs(a[piv][c]) < 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "stationary vector is not unique; supply one");
      }
      std::swap(a[c], a[piv]);
      for (std::size_t r = 0; r < k; ++r) {
        if (r == c) continue;
        const double f = a[r][c] / a[c][c];
        for (std::size_t j = c; j <= k; ++j) a[r][j] -= f * a[c][j];
      }
    }
    stationary_.resize(k);
    for (std::size_t i = 0; i < k; ++i) stationary_[i] = std::max(0.0, a[i][k] / a[i][i]);
  }

  for (std::size_t j = 0; j < k; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += stationary_[i] * transition_[i][j];
    if (std::abs(acc - stationary_[j]) > 1e-10) {
      throw Error(ErrorCode::InvalidArgument, "vector is not stationary for the transition matrix");
    }
  }
}

double MarkovMeasure::cylinder_prob(std::span<const Letter> w) const {
  check_letters(w, transition_.size());
  if (w.empty()) return 1.0;
  double prob = stationary_[w[0]];
  for (std::size_t i = 1; i < w.size(); ++i) prob *= transition_[w[i - 1]][w[i]];
  return prob;
}

void MarkovMeasure::check_support(const SubshiftAutomaton& automaton) const {
  if (automaton.alphabet_size() != transition_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "measure and subshift alphabets differ");
  }
  if (automaton.memory() > 1) {
    throw Error(ErrorCode::InvalidArgument, "Markov measures need a subshift of memory at most 1");
  }
  const std::size_t k = transition_.size();
  for (Letter i = 0; i < k; ++i) {
    if (stationary_[i] > 0.0 && !automaton.is_allowed(Word{i})) {
      throw Error(ErrorCode::BadSubshift, "stationary mass on forbidden letter " + std::to_string(i));
    }
    for (Letter j = 0; j < k; ++j) {
      if (transition_[i][j] > 0.0 && !automaton.is_allowed(Word{i, j})) {
        throw Error(ErrorCode::BadSubshift,
                    "transition " + std::to_string(i) + "->" + std::to_string(j) + " leaves the subshift");
      }
    }
  }
}

MixtureMeasure::MixtureMeasure(std::vector<std::shared_ptr<const CylinderMeasure>> parts, std::vector<double> weights)
    : parts_(std::move(parts)), weights_(std::move(weights)) {
  if (parts_.empty() || parts_.size() != weights_.size()) {
    throw Error(ErrorCode::InvalidArgument, "one weight per mixture component expected");
  }
  check_probability_vector(weights_, 1e-12, "mixture weights");
  for (const auto& p : parts_) {
    if (!p || p->alphabet_size() != parts_.front()->alphabet_size()) {
      throw Error(ErrorCode::DimensionMismatch, "mixture components need a common alphabet");
    }
  }
}

double MixtureMeasure::cylinder_prob(std::span<const Letter> w) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < parts_.size(); ++i) acc += weights_[i] * parts_[i]->cylinder_prob(w);
  return acc;
}

PeriodicOrbitMeasure::PeriodicOrbitMeasure(std::size_t alphabet_size, Word period)
    : alphabet_size_(alphabet_size), period_(std::move(period)) {
  if (period_.empty()) throw Error(ErrorCode::InvalidArgument, "empty period");
  check_letters(period_, alphabet_size_);
}

double PeriodicOrbitMeasure::cylinder_prob(std::span<const Letter> w) const {
  check_letters(w, alphabet_size_);
  const std::size_t p = period_.size();
  std::size_t hits = 0;
  for (std::size_t shift = 0; shift < p; ++shift) {
    bool match = true;
    for (std::size_t m = 0; m < w.size() && match; ++m) match = w[m] == period_[(shift + m) % p];
    if (match) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(p);
}

CylinderDistribution::CylinderDistribution(std::size_t alphabet_size, std::size_t depth, std::vector<double> weights)
    : alphabet_size_(alphabet_size), depth_(depth), weights_(std::move(weights)) {
  if (alphabet_size_ == 0) throw Error(ErrorCode::InvalidArgument, "empty alphabet");
  if (weights_.size() != int_pow(alphabet_size_, depth_)) {
    throw Error(ErrorCode::DimensionMismatch, "table needs alphabet_size^depth weights");
  }
  check_probability_vector(weights_, 1e-9, "cylinder table");
}

CylinderDistribution CylinderDistribution::from_measure(const CylinderMeasure& mu, std::size_t depth) {
  const std::size_t k = mu.alphabet_size();
  if (std::pow(static_cast<double>(k), static_cast<double>(depth)) > static_cast<double>(std::size_t{1} << 24)) {
    throw Error(ErrorCode::DepthBudgetExceeded, "cylinder table too large");
  }
  const std::size_t size = int_pow(k, depth);
  std::vector<double> weights(size);
  Word w(depth);
  for (std::size_t idx = 0; idx < size; ++idx) {
    std::size_t rest = idx;
    for (std::size_t m = depth; m-- > 0;) {
      w[m] = static_cast<Letter>(rest % k);
      rest /= k;
    }
    weights[idx] = mu.cylinder_prob(w);
  }
  return CylinderDistribution(k, depth, std::move(weights));
}

std::size_t CylinderDistribution::index(std::span<const Letter> w) const {
  check_letters(w, alphabet_size_);
  std::size_t idx = 0;
  for (Letter a : w) idx = idx * alphabet_size_ + a;
  return idx;
}

double CylinderDistribution::cylinder_prob(std::span<const Letter> w) const {
  if (w.size() > depth_) {
    throw Error(ErrorCode::DepthExceeded,
                "word of length " + std::to_string(w.size()) + " exceeds table depth " + std::to_string(depth_));
  }
  const std::size_t block = int_pow(alphabet_size_, depth_ - w.size());
  const std::size_t first = index(w) * block;
  return std::accumulate(weights_.begin() + static_cast<std::ptrdiff_t>(first),
                         weights_.begin() + static_cast<std::ptrdiff_t>(first + block), 0.0);
}

double entropy_finite(const CylinderMeasure& mu, std::size_t n, const SubshiftAutomaton& automaton) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "depth n must be >= 1");
  if (mu.alphabet_size() != automaton.alphabet_size()) {
    throw Error(ErrorCode::DimensionMismatch, "measure and subshift alphabets differ");
  }
  double acc = 0.0;
  automaton.for_each_word(n, [&](std::span<const Letter> w) { acc += entropy_term(mu.cylinder_prob(w)); });
  return acc / static_cast<double>(n);
}

double entropy_finite(const CylinderMeasure& mu, const PartitionFunction& pf) {
  const RowMass rows = row_mass(mu, pf);
  double acc = 0.0;
  for (std::size_t r = 0; r < rows.mass.size(); ++r) {
    if (rows.mass[r] > 0.0) acc -= rows.mass[r] * rows.log_word[r];
  }
  return acc / static_cast<double>(pf.depth());
}

double entropy_closed(const CylinderMeasure& mu) {
  if (const auto* b = dynamic_cast<const BernoulliMeasure*>(&mu)) {
    double h = 0.0;
    for (double p : b->p()) h += entropy_term(p);
    return h;
  }
  if (const auto* m = dynamic_cast<const MarkovMeasure*>(&mu)) {
    double h = 0.0;
    const auto& pi = m->stationary();
    for (std::size_t i = 0; i < pi.size(); ++i) {
      for (double p : m->transition()[i]) h += pi[i] * entropy_term(p);
    }
    return h;
  }
  throw Error(ErrorCode::InvalidArgument, "no closed-form entropy for a " + mu.kind() + " measure");
}

double energy_finite(const CylinderMeasure& mu, double t, const PartitionFunction& pf) {
  const RowMass rows = row_mass(mu, pf);
  return pf.table()->weighted_log_phi(rows.mass, t) / static_cast<double>(pf.depth());
}

std::vector<double> lyapunov(const CylinderMeasure& mu, const PartitionFunction& pf) {
  const RowMass rows = row_mass(mu, pf);
  std::vector<double> out(pf.dim());
  for (std::size_t l = 1; l <= pf.dim(); ++l) {
    out[l - 1] = pf.table()->weighted_log_alpha(rows.mass, l) / static_cast<double>(pf.depth());
  }
  return out;
}

double equilibrium_gap(const CylinderMeasure& mu, double t, const PartitionFunction& pf) {
  RowMass rows = row_mass(mu, pf);
  const double total = std::accumulate(rows.mass.begin(), rows.mass.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "measure gives no mass to K_n");
  const double log_total = std::log(total);
  double neg_log = 0.0;
  for (std::size_t r = 0; r < rows.mass.size(); ++r) {
    rows.mass[r] /= total;
    if (rows.mass[r] > 0.0) neg_log -= rows.mass[r] * (rows.log_word[r] - log_total);
  }
  const double s_n = neg_log + pf.table()->weighted_log_phi(rows.mass, t);
  return (pf.log_Z(t) - s_n) / static_cast<double>(pf.depth());
}

GibbsReport gibbs_ratios(const CylinderMeasure& mu, double t, double P, std::size_t max_depth,
                         const SubshiftAutomaton& automaton, std::span<const Matrix> matrices,
                         const PartitionOptions& options) {
  if (max_depth < 1) throw Error(ErrorCode::InvalidArgument, "max depth must be >= 1");
  PartitionOptions opts = options;
  if (opts.method == PartitionMethod::Auto && dynamic_cast<const BernoulliMeasure*>(&mu) == nullptr) {
    opts.method = PartitionMethod::Enumerate;
  }
  GibbsReport report;
  report.t = t;
  report.P = P;
  report.min_ratio = std::numeric_limits<double>::infinity();
  report.max_ratio = 0.0;
  for (std::size_t n = 1; n <= max_depth; ++n) {
    const PartitionFunction pf(automaton, matrices, n, opts);
    GibbsDepth depth{n, std::numeric_limits<double>::infinity(), 0.0};
    auto record = [&](double log_word, double log_phi) {
      const double ratio = std::exp(log_word + static_cast<double>(n) * P - log_phi);
      depth.min_ratio = std::min(depth.min_ratio, ratio);
      depth.max_ratio = std::max(depth.max_ratio, ratio);
    };
    if (pf.table() != nullptr) {
      const RowMass rows = row_mass(mu, pf);
      for (std::size_t r = 0; r < rows.mass.size(); ++r) record(rows.log_word[r], pf.table()->log_phi_row(r, t));
    } else {
      if (mu.alphabet_size() != automaton.alphabet_size()) {
        throw Error(ErrorCode::DimensionMismatch, "measure and subshift alphabets differ");
      }
      WordStream words(automaton, n);
      Word w;
      pf.for_each_chunk([&](const SpectrumTable& part) {
        for (std::size_t r = 0; r < part.rows(); ++r) {
          words.next(w);
          const double p = mu.cylinder_prob(w);
          record(p > 0.0 ? std::log(p) : kNegInf, part.log_phi_row(r, t));
        }
      });
    }
    report.min_ratio = std::min(report.min_ratio, depth.min_ratio);
    report.max_ratio = std::max(report.max_ratio, depth.max_ratio);
    report.depths.push_back(depth);
  }
  return report;
}

CylinderDistribution empirical_equilibrium(double t, std::size_t k, const PartitionFunction& pf, bool averaged) {
  const std::size_t n = pf.depth();
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "window length must be >= 1");
  if (k > n) {
    throw Error(ErrorCode::WindowOverrun, "window " + std::to_string(k) + " longer than depth " + std::to_string(n));
  }
  if (pf.method() != PartitionMethod::Enumerate || pf.table() == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "empirical equilibrium needs an enumerated, cached partition function");
  }
  const SubshiftAutomaton& automaton = pf.automaton();
  const std::size_t alphabet = automaton.alphabet_size();
  const std::size_t windows = averaged ? n : 1;
  std::vector<double> weights(int_pow(alphabet, k), 0.0);
  const double log_Z = pf.log_Z(t);
  const double per_window = 1.0 / static_cast<double>(windows);

  std::size_t row = 0;
  Word extended;
  automaton.for_each_word(n, [&](std::span<const Letter> w) {
    const double nu = std::exp(pf.table()->log_phi_row(row++, t) - log_Z) * per_window;
    extended.assign(w.begin(), w.end());
    if (windows > 1 && k > 1) {
      const Word tail = automaton.least_continuation(w, k - 1);
      extended.insert(extended.end(), tail.begin(), tail.end());
    }
    for (std::size_t j = 0; j < windows; ++j) {
      std::size_t idx = 0;
      for (std::size_t m = 0; m < k; ++m) idx = idx * alphabet + extended[j + m];
      weights[idx] += nu;
    }
  });
  // absorb rounding so the table passes its own normalization check
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& x : weights) x /= total;
  return CylinderDistribution(alphabet, k, std::move(weights));
}

ConsistencyReport check_consistency(const CylinderDistribution& cd, double tolerance) {
  if (cd.depth() < 2) throw Error(ErrorCode::InvalidArgument, "consistency needs depth >= 2");
  const std::size_t k = cd.alphabet_size();
  const std::size_t shorter = int_pow(k, cd.depth() - 1);
  const auto& w = cd.weights();
  ConsistencyReport out;
  for (std::size_t u = 0; u < shorter; ++u) {
    double by_last = 0.0, by_first = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      by_last += w[u * k + a];
      by_first += w[a * shorter + u];
    }
    out.max_defect = std::max(out.max_defect, std::abs(by_last - by_first));
  }
  out.consistent = out.max_defect <= tolerance;
  return out;
}

}  // namespace affdim
