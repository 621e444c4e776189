#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "affdim/linalg.hpp"
#include "affdim/symbolic.hpp"

namespace affdim {

/// The maps x -> A_i x + a_i.
struct AffineIFS {
  std::vector<Matrix> matrices;
  std::vector<std::vector<double>> translations;

  std::size_t dim() const noexcept { return matrices.empty() ? 0 : matrices[0].dim(); }
  std::size_t size() const noexcept { return matrices.size(); }

  /// Throws DimensionMismatch or NonContractive (naming the map).
  void validate() const;
  /// max_i ||A_i||
  double alpha_max() const;
  /// max_i |a_i| / (1 - alpha_max): every projected point lies in this ball
  /// around the origin.
  double a_priori_radius() const;
};

/// f_{w_1} o ... o f_{w_n}(0), evaluated from the innermost map outward.
std::vector<double> project(std::span<const Letter> w, const AffineIFS& ifs);

struct CylinderImage {
  Word word;
  std::vector<double> anchor;  // f_w(0)
  double radius = 0.0;         // ||A_w|| * R0; the cylinder's image lies in this ball
};

CylinderImage cylinder_image(std::span<const Letter> w, const AffineIFS& ifs);

struct PointCloud {
  std::size_t dim = 0;
  std::size_t depth = 0;
  std::vector<double> coords;  // row-major, one point per row
  // Every point is within this distance of the set, and vice versa.
  double resolution = 0.0;

  std::size_t size() const noexcept { return dim == 0 ? 0 : coords.size() / dim; }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

struct SampleOptions {
  std::uint64_t max_words = std::uint64_t{1} << 24;
};

/// project(w) for every w in K_n, in lexicographic order. Throws
/// DepthBudgetExceeded.
PointCloud attractor_sample(std::size_t n, const AffineIFS& ifs, const SubshiftAutomaton& automaton,
                            const SampleOptions& options = {});

struct BoxCountOptions {
  /// Empty: the ladder 2^-k restricted to [4 * resolution, extent].
  std::vector<double> scales;
  /// Regression window as indices into the scale list, [first, last).
  /// Default: the middle half.
  std::optional<std::pair<std::size_t, std::size_t>> window;
};

struct BoxCountReport {
  std::vector<double> scales;  // decreasing
  std::vector<std::uint64_t> counts;
  std::size_t window_begin = 0;
  std::size_t window_end = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Occupied cells of the origin-anchored grid at each scale, and the least
/// squares slope of log N against log(1/eps). Throws ScaleTooFine for scales
/// below 4 * resolution, TooFewPoints for an empty cloud.
BoxCountReport box_count(const PointCloud& cloud, const BoxCountOptions& options = {});

struct HyperplaneReport {
  bool contained = false;
  std::size_t rank = 0;
  std::vector<double> singular_values;  // of the centred point matrix, nonincreasing
};

/// Affine rank of the cloud; singular values below 1e-8 of the largest count
/// as zero. Throws TooFewPoints for an empty cloud.
HyperplaneReport hyperplane_check(const PointCloud& cloud);

struct InclusionReport {
  double max_defect = 0.0;
  double bound = 0.0;
  bool within = false;
  std::size_t worst_point = 0;
};

/// max over x in the cloud of the distance to the nearest A_i y + a_i with y
/// in the cloud, against the bound tolerance + 2 alpha_max^n R0.
InclusionReport inclusion_check(const PointCloud& cloud, const AffineIFS& ifs, double tolerance);

}  // namespace affdim
