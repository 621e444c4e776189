#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affdim/linalg.hpp"
#include "affdim/pressure.hpp"
#include "affdim/symbolic.hpp"

namespace affdim {

/// A shift-invariant probability measure, known through its cylinder masses.
class CylinderMeasure {
 public:
  virtual ~CylinderMeasure() = default;
  virtual std::size_t alphabet_size() const = 0;
  /// mu([w]); the empty word has mass 1.
  virtual double cylinder_prob(std::span<const Letter> w) const = 0;
  virtual std::string kind() const = 0;
};

class BernoulliMeasure final : public CylinderMeasure {
 public:
  /// Throws InvalidArgument unless every p_i > 0 and the sum is 1 within 1e-12.
  explicit BernoulliMeasure(std::vector<double> p);
  static BernoulliMeasure uniform(std::size_t alphabet_size);

  std::size_t alphabet_size() const override { return p_.size(); }
  double cylinder_prob(std::span<const Letter> w) const override;
  std::string kind() const override { return "bernoulli"; }
  const std::vector<double>& p() const noexcept { return p_; }

 private:
  std::vector<double> p_;
};

class MarkovMeasure final : public CylinderMeasure {
 public:
  /// Row-stochastic transition matrix. Without a stationary vector one is
  /// solved for; throws InvalidArgument when it is not unique.
  explicit MarkovMeasure(std::vector<std::vector<double>> transition,
                         std::optional<std::vector<double>> stationary = std::nullopt);

  std::size_t alphabet_size() const override { return transition_.size(); }
  double cylinder_prob(std::span<const Letter> w) const override;
  std::string kind() const override { return "markov"; }
  const std::vector<std::vector<double>>& transition() const noexcept { return transition_; }
  const std::vector<double>& stationary() const noexcept { return stationary_; }

  /// Throws BadSubshift if a positive transition leads to a word outside K_2.
  void check_support(const SubshiftAutomaton& automaton) const;

 private:
  std::vector<std::vector<double>> transition_;
  std::vector<double> stationary_;
};

class MixtureMeasure final : public CylinderMeasure {
 public:
  MixtureMeasure(std::vector<std::shared_ptr<const CylinderMeasure>> parts, std::vector<double> weights);

  std::size_t alphabet_size() const override { return parts_.front()->alphabet_size(); }
  double cylinder_prob(std::span<const Letter> w) const override;
  std::string kind() const override { return "mixture"; }

 private:
  std::vector<std::shared_ptr<const CylinderMeasure>> parts_;
  std::vector<double> weights_;
};

/// Equal mass on each shift of the periodic point (period)^infinity.
class PeriodicOrbitMeasure final : public CylinderMeasure {
 public:
  PeriodicOrbitMeasure(std::size_t alphabet_size, Word period);

  std::size_t alphabet_size() const override { return alphabet_size_; }
  double cylinder_prob(std::span<const Letter> w) const override;
  std::string kind() const override { return "periodic"; }

 private:
  std::size_t alphabet_size_;
  Word period_;
};

/// Weights on all words of one length k, stored densely in base-alphabet
/// order (words sharing a prefix are contiguous). Shorter cylinders are
/// marginals over suffixes.
class CylinderDistribution final : public CylinderMeasure {
 public:
  CylinderDistribution(std::size_t alphabet_size, std::size_t depth, std::vector<double> weights);
  static CylinderDistribution from_measure(const CylinderMeasure& mu, std::size_t depth);

  std::size_t alphabet_size() const override { return alphabet_size_; }
  std::size_t depth() const noexcept { return depth_; }
  /// Throws DepthExceeded for |w| > depth.
  double cylinder_prob(std::span<const Letter> w) const override;
  std::string kind() const override { return "cylinder-table"; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t index(std::span<const Letter> w) const;

 private:
  std::size_t alphabet_size_;
  std::size_t depth_;
  std::vector<double> weights_;
};

/// (1/n) sum_{w in K_n} H(mu[w]) with H(x) = -x log x and H(0) = 0.
double entropy_finite(const CylinderMeasure& mu, std::size_t n, const SubshiftAutomaton& automaton);
/// Same sum over the rows of a partition function (uses its type classes
/// when it has them, which requires a Bernoulli measure).
double entropy_finite(const CylinderMeasure& mu, const PartitionFunction& pf);
/// Bernoulli and Markov only; throws InvalidArgument otherwise.
double entropy_closed(const CylinderMeasure& mu);

/// (1/n) sum_{w in K_n} mu[w] log phi^t(A_w) at the depth of pf.
double energy_finite(const CylinderMeasure& mu, double t, const PartitionFunction& pf);

/// lambda_l = energy(l) - energy(l-1) for l = 1..d, nonincreasing.
std::vector<double> lyapunov(const CylinderMeasure& mu, const PartitionFunction& pf);

/// (1/n)(log Z_n(t) - S_n) with S_n = sum mu_K[w](-log mu_K[w] + log phi^t(A_w))
/// where mu_K is mu restricted to K_n and renormalized. Never negative.
double equilibrium_gap(const CylinderMeasure& mu, double t, const PartitionFunction& pf);

struct GibbsDepth {
  std::size_t n = 0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

struct GibbsReport {
  double t = 0.0;
  double P = 0.0;
  std::vector<GibbsDepth> depths;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

/// Extremes of mu[w] / (exp(-nP) phi^t(A_w)) over K_n, per depth and overall.
GibbsReport gibbs_ratios(const CylinderMeasure& mu, double t, double P, std::size_t max_depth,
                         const SubshiftAutomaton& automaton, std::span<const Matrix> matrices,
                         const PartitionOptions& options = {});

/// Depth-k marginal of (1/n) sum_j nu_n o sigma^-j where nu_n puts mass
/// phi^t(A_w)/Z_n on w in K_n followed by its lexicographically least
/// continuation. With averaged = false only the j = 0 window is used.
/// pf must enumerate words. Throws WindowOverrun when k > n.
CylinderDistribution empirical_equilibrium(double t, std::size_t k, const PartitionFunction& pf,
                                           bool averaged = true);

/// Shift-consistency of a depth-k table: the marginal on k-1 letters by
/// dropping the last letter agrees with the one by dropping the first.
struct ConsistencyReport {
  bool consistent = false;
  double max_defect = 0.0;
};
ConsistencyReport check_consistency(const CylinderDistribution& cd, double tolerance = 1e-9);

}  // namespace affdim
